#include "robocoder/actor.hpp"

#include <algorithm>
#include <sstream>

#include "robocoder/text.hpp"

namespace robocoder {

namespace {

using nlohmann::json;

ScriptCondition parse_condition(const json& when, const std::string& where) {
  ScriptCondition c;
  if (!when.is_object()) throw std::runtime_error(where + ": 'when' must be an object");
  for (const auto& [key, value] : when.items()) {
    if (key == "min_attempt" && value.is_number_integer()) {
      c.min_attempt = value.get<int>();
    } else if (key == "max_attempt" && value.is_number_integer()) {
      c.max_attempt = value.get<int>();
    } else if (key == "with_feedback" && value.is_boolean()) {
      c.with_feedback = value.get<bool>();
    } else if (key == "min_format_errors" && value.is_number_unsigned()) {
      c.min_format_errors = value.get<std::size_t>();
    } else if (key == "requires_related" && value.is_array()) {
      for (const auto& t : value) {
        if (!t.is_string()) throw std::runtime_error(where + ": requires_related holds task texts");
        c.requires_related.push_back(t.get<std::string>());
      }
    } else {
      throw std::runtime_error(where + ": bad condition '" + key + "'");
    }
  }
  return c;
}

}  // namespace

std::string PromptBundle::user_message() const {
  std::ostringstream out;
  if (!related_actions.empty()) {
    out << "Related actions:\n";
    for (const auto& r : related_actions) {
      out << "### " << r.task_text << " (similarity " << text::fixed(r.score, 3) << ")\n" << r.program_text << '\n';
    }
    out << '\n';
  }
  out << "Degrees of freedom of " << entity << ":\n" << dof_section << '\n';
  out << "Task: " << task << '\n';
  if (feedback) out << '\n' << *feedback << '\n';
  if (!format_errors.empty()) {
    out << "\nYour previous reply could not be used:\n";
    for (const auto& e : format_errors) out << "- " << e << '\n';
    out << "Reply with exactly one action block.\n";
  }
  return out.str();
}

std::string load_actor_system_prompt(const std::filesystem::path& data_dir) {
  return read_text_file(data_dir / "prompts" / "actor_system.txt");
}

PromptBundle build_prompt(const std::string& task, const SearchOutcome& outcome, const EntitySpec& entity,
                          const std::optional<FeedbackMessage>& feedback, const std::string& system, int attempt) {
  if (outcome.kind == SearchKind::ExactMatch) throw std::invalid_argument("exact matches bypass the actor");
  PromptBundle p;
  p.system = system;
  p.entity = entity.name;
  p.dof_section = dof_description(entity);
  p.task = task;
  p.attempt = attempt;
  for (std::size_t i = 0; i < outcome.records.size(); ++i) {
    const auto& r = *outcome.records[i];
    if (r.entity != entity.name) {
      throw std::invalid_argument("related action '" + r.task_text + "' belongs to " + r.entity + ", not " + entity.name);
    }
    p.related_actions.push_back({r.task_text, outcome.scores.at(i), serialize_program(r.program)});
  }
  if (feedback) p.feedback = feedback->rendered;
  return p;
}

std::string ActorProvider::generate(const PromptBundle& prompt) {
  calls_.fetch_add(1);
  return complete(prompt);
}

bool ScriptCondition::matches(const PromptBundle& prompt) const {
  if (min_attempt && prompt.attempt < *min_attempt) return false;
  if (max_attempt && prompt.attempt > *max_attempt) return false;
  if (with_feedback && prompt.feedback.has_value() != *with_feedback) return false;
  if (min_format_errors && prompt.format_errors.size() < *min_format_errors) return false;
  for (const auto& needed : requires_related) {
    const bool present = std::any_of(prompt.related_actions.begin(), prompt.related_actions.end(),
                                     [&](const RelatedAction& r) { return r.task_text == needed; });
    if (!present) return false;
  }
  return true;
}

ScriptedProvider::ScriptedProvider(std::vector<ScriptRule> rules) : rules_(std::move(rules)) {}

std::vector<ScriptRule> ScriptedProvider::parse_rules(std::string_view jsonl, const std::string& origin) {
  std::vector<ScriptRule> rules;
  std::size_t line_no = 0;
  for (const auto raw : text::split(jsonl, '\n')) {
    ++line_no;
    const auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto where = origin + ":" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception&) {
      throw std::runtime_error(where + ": not valid JSON");
    }
    ScriptRule rule;
    if (!j.is_object() || !j.contains("entity") || !j.contains("task")) {
      throw std::runtime_error(where + ": rule needs 'entity' and 'task'");
    }
    rule.entity = j["entity"].get<std::string>();
    rule.task = j["task"].get<std::string>();
    if (j.contains("response") && j["response"].is_string()) {
      rule.response = j["response"].get<std::string>();
    } else if (j.contains("program") && j["program"].is_object()) {
      rule.response = j["program"].dump(2);
    } else {
      throw std::runtime_error(where + ": rule needs a 'response' string or a 'program' object");
    }
    if (j.contains("when")) rule.when = parse_condition(j["when"], where);
    rules.push_back(std::move(rule));
  }
  return rules;
}

std::vector<ScriptRule> ScriptedProvider::rules_from_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error("scripted fixture directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<ScriptRule> rules;
  for (const auto& f : files) {
    auto more = parse_rules(read_text_file(f), f.filename().string());
    rules.insert(rules.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
  }
  return rules;
}

std::string ScriptedProvider::complete(const PromptBundle& prompt) {
  for (const auto& rule : rules_) {
    if (rule.entity == prompt.entity && rule.task == prompt.task && rule.when.matches(prompt)) return rule.response;
  }
  return "I do not have a scripted answer for " + prompt.entity + ": " + prompt.task;
}

KthTryProvider::KthTryProvider(std::map<std::pair<std::string, std::string>, std::string> fixtures, int k)
    : fixtures_(std::move(fixtures)), k_(k) {
  if (k_ < 1) throw std::invalid_argument("k must be >= 1");
}

std::string KthTryProvider::complete(const PromptBundle& prompt) {
  const auto key = std::make_pair(prompt.entity, prompt.task);
  int fresh = 0;
  {
    std::lock_guard lock(mutex_);
    fresh = prompt.format_errors.empty() ? ++fresh_[key] : fresh_[key];
  }
  if (fresh < k_) return "Working on it (try " + std::to_string(fresh) + "), no code yet";
  const auto it = fixtures_.find(key);
  if (it == fixtures_.end()) return "no fixture program for " + prompt.entity + ": " + prompt.task;
  return it->second;
}

RemoteActorProvider::RemoteActorProvider(RemoteActorConfig config, net::ExchangeLog* log)
    : config_(std::move(config)), log_(log) {
  if (config_.endpoint.empty()) throw std::invalid_argument("remote actor needs an endpoint");
}

json RemoteActorProvider::request_body(const RemoteActorConfig& config, const PromptBundle& prompt) {
  json body = {{"model", config.model},
               {"temperature", config.temperature},
               {"messages",
                {{{"role", "system"}, {"content", prompt.system}}, {{"role", "user"}, {"content", prompt.user_message()}}}}};
  if (config.max_tokens) body["max_tokens"] = *config.max_tokens;
  return body;
}

std::string RemoteActorProvider::complete(const PromptBundle& prompt) {
  const auto body = net::post_json(config_.endpoint, request_body(config_, prompt), net::bearer_from_env(config_.auth_env),
                                   config_.http, log_);
  json response;
  try {
    response = json::parse(body);
  } catch (const json::exception&) {
    throw std::runtime_error("actor response is not JSON");
  }
  if (!response.contains("choices") || !response["choices"].is_array() || response["choices"].empty()) {
    throw std::runtime_error("actor response has no choices");
  }
  const auto& message = response["choices"][0].value("message", json::object());
  if (!message.contains("content") || !message["content"].is_string()) {
    throw std::runtime_error("actor response has no message content");
  }
  return message["content"].get<std::string>();
}

ObtainResult obtain_program(const PromptBundle& prompt, const EntitySpec& entity, ActorProvider& provider) {
  ObtainResult result;
  PromptBundle current = prompt;
  std::string last_error;
  for (int attempt = 0; attempt <= kParseRetries; ++attempt) {
    ++result.calls;
    try {
      result.last_response = provider.generate(current);
    } catch (const std::exception& e) {
      result.outcome = ActorFailure{std::string("provider error: ") + e.what(), true};
      return result;
    }
    auto parsed = parse_program(result.last_response, entity);
    if (auto* program = std::get_if<ActionProgram>(&parsed)) {
      result.outcome = std::move(*program);
      return result;
    }
    last_error = std::get<ParseError>(parsed).reason;
    current.format_errors.push_back(last_error);
  }
  result.outcome = ActorFailure{last_error, false};
  return result;
}

ObtainResult obtain_program(const std::string& task, const SearchOutcome& outcome, const EntitySpec& entity,
                            const std::optional<FeedbackMessage>& feedback, ActorProvider& provider,
                            const std::string& system, int attempt) {
  return obtain_program(build_prompt(task, outcome, entity, feedback, system, attempt), entity, provider);
}

}  // namespace robocoder
