#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "robocoder/benchmark.hpp"
#include "robocoder/net.hpp"
#include "robocoder/program.hpp"
#include "robocoder/sim.hpp"

namespace robocoder {

struct Verdict {
  bool completed = false;
  std::string reasons;
  std::string solution;

  bool operator==(const Verdict&) const = default;
};

nlohmann::json verdict_to_json(const Verdict& v);
/// Strict: an object with boolean "completed" and string "reasons"/"solution".
std::optional<Verdict> verdict_from_json(const nlohmann::json& j);

/// Built-in judgment: sim errors map to rule-based hints, successful runs are
/// checked against the task predicate. Never throws.
Verdict evaluate_trace(const SimResult& result, const TaskSpec& task, const EntitySpec& entity);

/// Verdict for an actor reply that never yielded a parsable program.
Verdict actor_failure_verdict(const std::string& parse_error);

enum class FeedbackMode { Full, NoFeedback };

struct FeedbackMessage {
  std::string task;
  std::string reason;
  std::string solution;
  std::string rendered;
};

/// Throws std::logic_error for a completed verdict.
FeedbackMessage compose_feedback(const Verdict& verdict, const std::string& task, FeedbackMode mode = FeedbackMode::Full);

class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual Verdict evaluate(const SimResult& result, const ActionProgram& program, const TaskSpec& task,
                           const EntitySpec& entity) const = 0;
  virtual std::string describe() const = 0;
};

class TraceEvaluator final : public Evaluator {
 public:
  Verdict evaluate(const SimResult& result, const ActionProgram& program, const TaskSpec& task,
                   const EntitySpec& entity) const override;
  std::string describe() const override { return "trace"; }
};

struct RemoteEvaluatorConfig {
  std::string endpoint;  // chat completions URL
  std::string model;
  std::string auth_env;
  std::string system_prompt;
  net::HttpOptions http;
};

/// Externally rendered frame, sent as a data URL.
struct EvaluatorImage {
  std::string mime_type = "image/png";
  std::string bytes;
};

/// Sends keyframe pose summaries (or program and error message when the run
/// failed) to a chat endpoint and parses the verdict object from the reply.
/// Unparsable replies yield completed=false. Transport failures throw.
Verdict remote_evaluate(const SimResult& result, const ActionProgram& program, const TaskSpec& task,
                        const EntitySpec& entity, const RemoteEvaluatorConfig& config,
                        const std::vector<EvaluatorImage>& images = {}, net::ExchangeLog* log = nullptr);

/// User message body for the remote evaluator.
std::string evaluator_summary(const SimResult& result, const ActionProgram& program, const TaskSpec& task,
                              const EntitySpec& entity);

class RemoteEvaluator final : public Evaluator {
 public:
  explicit RemoteEvaluator(RemoteEvaluatorConfig config, net::ExchangeLog* log = nullptr);
  Verdict evaluate(const SimResult& result, const ActionProgram& program, const TaskSpec& task,
                   const EntitySpec& entity) const override;
  std::string describe() const override { return "remote/" + config_.model; }

 private:
  RemoteEvaluatorConfig config_;
  net::ExchangeLog* log_;
};

/// First balanced {...} in `text` that parses as JSON (code fences and prose allowed).
std::optional<nlohmann::json> extract_json_object(std::string_view text);

}  // namespace robocoder
