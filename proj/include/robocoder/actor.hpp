#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "robocoder/entity.hpp"
#include "robocoder/evaluator.hpp"
#include "robocoder/net.hpp"
#include "robocoder/program.hpp"
#include "robocoder/searcher.hpp"

namespace robocoder {

struct RelatedAction {
  std::string task_text;
  double score = 0.0;
  std::string program_text;  // canonical serialization

  bool operator==(const RelatedAction&) const = default;
};

struct PromptBundle {
  std::string system;
  std::vector<RelatedAction> related_actions;  // descending score
  std::string entity;
  std::string dof_section;
  std::string task;
  std::optional<std::string> feedback;  // rendered repair message
  std::vector<std::string> format_errors;  // parse errors of earlier replies in this iteration
  int attempt = 1;  // evaluator iteration this prompt belongs to (1-based)

  /// The user turn exactly as sent to a remote provider.
  std::string user_message() const;
  bool operator==(const PromptBundle&) const = default;
};

/// Loads data/prompts/actor_system.txt from `data_dir`.
std::string load_actor_system_prompt(const std::filesystem::path& data_dir);

/// Throws std::invalid_argument for an ExactMatch outcome or a record of
/// another entity.
PromptBundle build_prompt(const std::string& task, const SearchOutcome& outcome, const EntitySpec& entity,
                          const std::optional<FeedbackMessage>& feedback, const std::string& system, int attempt = 1);

class ActorProvider {
 public:
  virtual ~ActorProvider() = default;
  /// Raw provider text. Increments call_count once per call, also when the
  /// provider throws.
  std::string generate(const PromptBundle& prompt);
  std::size_t call_count() const { return calls_.load(); }
  virtual std::string describe() const = 0;

 protected:
  virtual std::string complete(const PromptBundle& prompt) = 0;

 private:
  std::atomic<std::size_t> calls_{0};
};

/// Conditions a scripted rule places on the prompt.
struct ScriptCondition {
  std::optional<int> min_attempt;
  std::optional<int> max_attempt;
  std::optional<bool> with_feedback;
  std::optional<std::size_t> min_format_errors;
  std::vector<std::string> requires_related;  // task texts that must be among the related actions

  bool matches(const PromptBundle& prompt) const;
};

struct ScriptRule {
  std::string entity;
  std::string task;
  ScriptCondition when;
  std::string response;
};

/// Replays fixture text chosen purely from prompt content: the first rule for
/// (entity, task) whose conditions hold wins. Deterministic and thread-safe.
class ScriptedProvider final : public ActorProvider {
 public:
  explicit ScriptedProvider(std::vector<ScriptRule> rules);
  /// Reads every *.jsonl file of `dir` in name order. Each line:
  /// {"entity", "task", "response" | "program", "when"?: {...}}.
  static std::vector<ScriptRule> rules_from_directory(const std::filesystem::path& dir);
  static std::vector<ScriptRule> parse_rules(std::string_view jsonl, const std::string& origin);

  std::string describe() const override { return "scripted"; }
  std::size_t rule_count() const { return rules_.size(); }

 protected:
  std::string complete(const PromptBundle& prompt) override;

 private:
  std::vector<ScriptRule> rules_;
};

/// Malformed replies for the first k-1 iterations of each (entity, task),
/// the fixture program from iteration k on. Only prompts without format
/// errors start a new iteration; parse retries inside an iteration see the
/// same behaviour as the prompt that triggered them.
class KthTryProvider final : public ActorProvider {
 public:
  KthTryProvider(std::map<std::pair<std::string, std::string>, std::string> fixtures, int k);
  std::string describe() const override { return "kth:" + std::to_string(k_); }
  int k() const { return k_; }

 protected:
  std::string complete(const PromptBundle& prompt) override;

 private:
  std::map<std::pair<std::string, std::string>, std::string> fixtures_;
  int k_;
  std::mutex mutex_;
  std::map<std::pair<std::string, std::string>, int> fresh_;
};

struct RemoteActorConfig {
  std::string endpoint;  // chat completions URL
  std::string model;
  std::string auth_env;
  double temperature = 0.0;
  std::optional<int> max_tokens;
  net::HttpOptions http;
};

/// Chat-completions client: system + user messages in, choices[0].message.content out.
class RemoteActorProvider final : public ActorProvider {
 public:
  explicit RemoteActorProvider(RemoteActorConfig config, net::ExchangeLog* log = nullptr);
  std::string describe() const override { return "remote/" + config_.model; }
  static nlohmann::json request_body(const RemoteActorConfig& config, const PromptBundle& prompt);

 protected:
  std::string complete(const PromptBundle& prompt) override;

 private:
  RemoteActorConfig config_;
  net::ExchangeLog* log_;
};

inline constexpr int kParseRetries = 2;

struct ActorFailure {
  std::string reason;  // last parse error, or the provider error
  bool provider_error = false;
};

struct ObtainResult {
  std::variant<ActionProgram, ActorFailure> outcome;
  std::size_t calls = 0;
  std::string last_response;

  bool ok() const { return std::holds_alternative<ActionProgram>(outcome); }
};

/// generate + parse_program, retrying up to kParseRetries extra times with the
/// parse error appended. Provider exceptions end the attempt as an ActorFailure.
ObtainResult obtain_program(const PromptBundle& prompt, const EntitySpec& entity, ActorProvider& provider);
ObtainResult obtain_program(const std::string& task, const SearchOutcome& outcome, const EntitySpec& entity,
                            const std::optional<FeedbackMessage>& feedback, ActorProvider& provider,
                            const std::string& system, int attempt = 1);

}  // namespace robocoder
