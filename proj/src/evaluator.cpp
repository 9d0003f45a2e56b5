#include "robocoder/evaluator.hpp"

#include <sstream>
#include <stdexcept>

#include <httplib.h>

#include "robocoder/text.hpp"

namespace robocoder {

namespace {

using nlohmann::json;

constexpr const char* kUnparseable = "evaluator output unparseable";

std::string sim_error_hint(const SimError& error, const EntitySpec& entity) {
  switch (error.kind) {
    case SimErrorKind::InvalidDof:
      return "use only dof indices 0.." + std::to_string(entity.dof_count() == 0 ? 0 : entity.dof_count() - 1);
    case SimErrorKind::BadSpeed: return "give every dof a positive speed";
    case SimErrorKind::Timeout: return "reduce travel distance or raise speeds";
    case SimErrorKind::NonFinite: return "use finite numbers for every position and speed";
    case SimErrorKind::InvalidRepeat:
      return "set repeat to an integer between 1 and " + std::to_string(kMaxRepeat);
  }
  return "fix the action program";
}

std::size_t balanced_end(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i;
    }
  }
  return std::string_view::npos;
}

}  // namespace

json verdict_to_json(const Verdict& v) {
  return {{"completed", v.completed}, {"reasons", v.reasons}, {"solution", v.solution}};
}

std::optional<Verdict> verdict_from_json(const json& j) {
  if (!j.is_object() || !j.contains("completed") || !j["completed"].is_boolean()) return std::nullopt;
  Verdict v;
  v.completed = j["completed"].get<bool>();
  for (const auto* key : {"reasons", "solution"}) {
    if (!j.contains(key)) continue;
    if (!j[key].is_string()) return std::nullopt;
  }
  v.reasons = j.value("reasons", "");
  v.solution = j.value("solution", "");
  if (!v.completed) {
    if (v.reasons.empty()) v.reasons = "the evaluator gave no reason";
    if (v.solution.empty()) v.solution = "revise the action to better match the task";
  }
  return v;
}

Verdict evaluate_trace(const SimResult& result, const TaskSpec& task, const EntitySpec& entity) {
  if (!result.ok() || !result.trajectory) {
    if (!result.error) return {false, "simulation failed without an error message", "fix the action program"};
    return {false, result.error->message, sim_error_hint(*result.error, entity)};
  }
  const auto outcome = evaluate_predicate(task.predicate, *result.trajectory);
  if (outcome.holds) return {true, "all task conditions hold", ""};
  return {false, outcome.reason, outcome.solution};
}

Verdict actor_failure_verdict(const std::string& parse_error) {
  return {false, "actor output could not be parsed: " + parse_error,
          "reply with one action block holding initial_dof_position, speeds and state_destination"};
}

FeedbackMessage compose_feedback(const Verdict& verdict, const std::string& task, FeedbackMode mode) {
  if (verdict.completed) throw std::logic_error("feedback requested for a completed verdict");
  FeedbackMessage m{task, verdict.reasons, verdict.solution, {}};
  if (mode == FeedbackMode::NoFeedback) {
    m.rendered = "Your current action code does not fulfill the task: " + task + ". Please rewrite the action functions.";
  } else {
    m.rendered = "Your current action code does not fulfill the task: " + task + ". Here is the reason: " +
                 verdict.reasons + ". Here is the suggested solution: " + verdict.solution +
                 ". Please rewrite the action functions.";
  }
  return m;
}

Verdict TraceEvaluator::evaluate(const SimResult& result, const ActionProgram& /*program*/, const TaskSpec& task,
                                 const EntitySpec& entity) const {
  return evaluate_trace(result, task, entity);
}

std::optional<json> extract_json_object(std::string_view text) {
  for (std::size_t open = text.find('{'); open != std::string_view::npos; open = text.find('{', open + 1)) {
    const auto close = balanced_end(text, open);
    if (close == std::string_view::npos) continue;
    try {
      auto j = json::parse(text.substr(open, close - open + 1));
      if (j.is_object()) return j;
    } catch (const json::exception&) {
    }
  }
  return std::nullopt;
}

std::string evaluator_summary(const SimResult& result, const ActionProgram& program, const TaskSpec& task,
                              const EntitySpec& entity) {
  std::ostringstream out;
  out << "Entity: " << entity.name << "\nTask: " << task.text << '\n';
  if (!result.ok() || !result.trajectory) {
    out << "Environment returned 1.\nAction code:\n" << serialize_program(program) << "\nError: "
        << (result.error ? result.error->message : std::string("unknown")) << '\n';
    return out.str();
  }
  out << "Environment returned 0.\nDOFs:\n" << dof_description(entity);
  const auto& traj = *result.trajectory;
  const auto frames = keyframes(traj);
  out << "Keyframe poses (" << frames.size() << " frames, " << traj.step_count() << " steps):\n";
  for (std::size_t f = 0; f < frames.size(); ++f) {
    out << (f == 0 ? std::string("initial") : "state " + std::to_string(traj.keyframes[f - 1].state_index) +
                                                  " cycle " + std::to_string(traj.keyframes[f - 1].cycle_index) +
                                                  " step " + std::to_string(traj.keyframes[f - 1].step_index))
        << ':';
    for (std::size_t d = 0; d < frames[f].size(); ++d) out << ' ' << entity.dofs[d].name << '=' << text::fixed(frames[f][d], 3);
    out << '\n';
  }
  return out.str();
}

Verdict remote_evaluate(const SimResult& result, const ActionProgram& program, const TaskSpec& task,
                        const EntitySpec& entity, const RemoteEvaluatorConfig& config,
                        const std::vector<EvaluatorImage>& images, net::ExchangeLog* log) {
  json content = json::array();
  content.push_back({{"type", "text"}, {"text", evaluator_summary(result, program, task, entity)}});
  for (const auto& image : images) {
    const auto url = "data:" + image.mime_type + ";base64," + httplib::detail::base64_encode(image.bytes);
    content.push_back({{"type", "image_url"}, {"image_url", {{"url", url}}}});
  }
  json request = {{"model", config.model},
                  {"temperature", 0},
                  {"messages",
                   {{{"role", "system"}, {"content", config.system_prompt}}, {{"role", "user"}, {"content", content}}}}};
  const auto body = net::post_json(config.endpoint, request, net::bearer_from_env(config.auth_env), config.http, log);

  const Verdict unparseable{false, kUnparseable, "reply with a JSON object holding completed, reasons and solution"};
  json response;
  try {
    response = json::parse(body);
  } catch (const json::exception&) {
    return unparseable;
  }
  if (!response.contains("choices") || !response["choices"].is_array() || response["choices"].empty()) return unparseable;
  const auto& message = response["choices"][0].value("message", json::object());
  if (!message.contains("content") || !message["content"].is_string()) return unparseable;
  const auto object = extract_json_object(message["content"].get<std::string>());
  if (!object) return unparseable;
  const auto verdict = verdict_from_json(*object);
  return verdict ? *verdict : unparseable;
}

RemoteEvaluator::RemoteEvaluator(RemoteEvaluatorConfig config, net::ExchangeLog* log)
    : config_(std::move(config)), log_(log) {
  if (config_.endpoint.empty()) throw std::invalid_argument("remote evaluator needs an endpoint");
}

Verdict RemoteEvaluator::evaluate(const SimResult& result, const ActionProgram& program, const TaskSpec& task,
                                  const EntitySpec& entity) const {
  return remote_evaluate(result, program, task, entity, config_, {}, log_);
}

}  // namespace robocoder
