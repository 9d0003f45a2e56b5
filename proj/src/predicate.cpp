#include "robocoder/predicate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "robocoder/text.hpp"

namespace robocoder {

namespace {

using nlohmann::json;

struct AtomName {
  PredicateOp op;
  const char* name;
};

constexpr AtomName kOps[] = {
    {PredicateOp::FinalAt, "final_at"},   {PredicateOp::Reaches, "reaches"},
    {PredicateOp::Increases, "increases"}, {PredicateOp::Decreases, "decreases"},
    {PredicateOp::Monotonic, "monotonic"}, {PredicateOp::ReturnsToStart, "returns_to_start"},
    {PredicateOp::Oscillates, "oscillates"}, {PredicateOp::All, "all"},
    {PredicateOp::Any, "any"},             {PredicateOp::Seq, "seq"},
};

const char* op_name(PredicateOp op) {
  for (const auto& [o, name] : kOps) {
    if (o == op) return name;
  }
  return "?";
}

double number(const json& params, const char* key, const std::string& where) {
  if (!params.contains(key) || !params[key].is_number()) {
    throw PredicateError(where + ": missing numeric '" + key + "'");
  }
  const double v = params[key].get<double>();
  if (!std::isfinite(v)) throw PredicateError(where + ": '" + key + "' must be finite");
  return v;
}

const DofSpec& resolve_dof(const json& params, const EntitySpec& entity, const std::string& where) {
  if (!params.contains("dof")) throw PredicateError(where + ": missing 'dof'");
  const auto& d = params["dof"];
  if (d.is_string()) {
    const auto* dof = entity.find_dof(d.get<std::string>());
    if (dof == nullptr) {
      throw PredicateError(where + ": " + entity.name + " has no dof '" + d.get<std::string>() + "'");
    }
    return *dof;
  }
  if (d.is_number_integer()) {
    const auto i = d.get<long long>();
    if (i < 0 || static_cast<std::size_t>(i) >= entity.dof_count()) {
      throw PredicateError(where + ": dof index " + std::to_string(i) + " out of range for " + entity.name);
    }
    return entity.dofs[static_cast<std::size_t>(i)];
  }
  throw PredicateError(where + ": 'dof' must be a name or an index");
}

std::string label(const TaskPredicate& p) { return "dof " + std::to_string(p.dof) + " (" + p.dof_name + ")"; }

std::string num(double v) { return text::fixed(v, 2); }

std::string signed_num(double v) { return (v >= 0 ? "+" : "") + text::fixed(v, 2); }

PredicateOutcome pass(std::size_t witness) { return {true, witness, {}, {}}; }

PredicateOutcome fail(std::string reason, std::string solution) {
  return {false, 0, std::move(reason), std::move(solution)};
}

class Evaluator {
 public:
  explicit Evaluator(const Trajectory& t) : traj_(t) {}

  // Holds on [s, e] with a witness step >= min_w.
  PredicateOutcome eval(const TaskPredicate& p, std::size_t s, std::size_t e, std::size_t min_w) const {
    switch (p.op) {
      case PredicateOp::FinalAt: return final_at(p, s, e, min_w);
      case PredicateOp::Reaches: return reaches(p, s, e, min_w);
      case PredicateOp::Increases:
      case PredicateOp::Decreases: return net_change(p, s, e, min_w);
      case PredicateOp::Monotonic: return monotonic(p, s, e, min_w);
      case PredicateOp::ReturnsToStart: return returns(p, s, e, min_w);
      case PredicateOp::Oscillates: return oscillates(p, s, e, min_w);
      case PredicateOp::All: return all(p, s, e, min_w);
      case PredicateOp::Any: return any(p, s, e, min_w);
      case PredicateOp::Seq: return seq(p.children, 0, s, e, min_w);
    }
    return fail("unknown predicate", "fix the task predicate");
  }

 private:
  double x(std::size_t t, std::size_t dof) const { return traj_.poses[t][dof]; }

  PredicateOutcome final_at(const TaskPredicate& p, std::size_t s, std::size_t e, std::size_t min_w) const {
    (void)s;
    const double end = x(e, p.dof);
    if (std::abs(end - p.value) <= p.tolerance && e >= min_w) return pass(e);
    return fail(label(p) + " ends at " + num(end) + ", required " + num(p.value) + " within " + num(p.tolerance),
                "make the last state destination of dof " + std::to_string(p.dof) + " equal " + num(p.value));
  }

  PredicateOutcome reaches(const TaskPredicate& p, std::size_t s, std::size_t e, std::size_t min_w) const {
    double closest = std::numeric_limits<double>::infinity();
    double closest_value = x(s, p.dof);
    for (std::size_t t = std::max(s, min_w); t <= e; ++t) {
      const double d = std::abs(x(t, p.dof) - p.value);
      if (d <= p.tolerance) return pass(t);
      if (d < closest) {
        closest = d;
        closest_value = x(t, p.dof);
      }
    }
    return fail(label(p) + " never came within " + num(p.tolerance) + " of " + num(p.value) + " (closest " +
                    num(closest_value) + ")",
                "drive dof " + std::to_string(p.dof) + " to " + num(p.value) + " by adding it to a state destination");
  }

  PredicateOutcome net_change(const TaskPredicate& p, std::size_t s, std::size_t e, std::size_t min_w) const {
    const double sign = p.op == PredicateOp::Increases ? 1.0 : -1.0;
    const double start = x(s, p.dof);
    for (std::size_t t = std::max(s, min_w); t <= e; ++t) {
      if (sign * (x(t, p.dof) - start) >= p.amount) return pass(t);
    }
    const double observed = x(e, p.dof) - start;
    const double required = sign * p.amount;
    return fail(label(p) + " net change " + signed_num(observed) + ", required at least " + signed_num(required),
                std::string("set a state destination for dof ") + std::to_string(p.dof) + " at least " +
                    num(p.amount) + (sign > 0 ? " above" : " below") + " its initial position " + num(start));
  }

  PredicateOutcome monotonic(const TaskPredicate& p, std::size_t s, std::size_t e, std::size_t min_w) const {
    const char* word = p.direction > 0 ? "increasing" : "decreasing";
    const std::string solution = "move dof " + std::to_string(p.dof) + " in one direction only, with each state " +
                                 (p.direction > 0 ? "above" : "below") + " the previous one";
    for (std::size_t t = s + 1; t <= e; ++t) {
      const double step = p.direction * (x(t, p.dof) - x(t - 1, p.dof));
      if (step < 0.0) {
        return fail(label(p) + " is not monotonically " + word + ": it reverses at step " + std::to_string(t),
                    solution);
      }
    }
    const double net = x(e, p.dof) - x(s, p.dof);
    if (p.direction * net > 0.0 && e >= min_w) return pass(e);
    return fail(label(p) + " is not monotonically " + word + ": net change " + signed_num(net), solution);
  }

  PredicateOutcome returns(const TaskPredicate& p, std::size_t s, std::size_t e, std::size_t min_w) const {
    const double start = x(s, p.dof);
    bool departed = false;
    double furthest = 0.0;
    for (std::size_t t = s; t <= e; ++t) {
      const double d = std::abs(x(t, p.dof) - start);
      furthest = std::max(furthest, d);
      if (d > p.tolerance) {
        departed = true;
      } else if (departed && t >= min_w) {
        return pass(t);
      }
    }
    const std::string solution = "move dof " + std::to_string(p.dof) +
                                 " away and add a final state that brings it back to " + num(start);
    if (!departed) {
      return fail(label(p) + " never left its start " + num(start) + " by more than " + num(p.tolerance), solution);
    }
    return fail(label(p) + " left its start " + num(start) + " but ends at " + num(x(e, p.dof)) + ", required within " +
                    num(p.tolerance),
                solution);
  }

  PredicateOutcome oscillates(const TaskPredicate& p, std::size_t s, std::size_t e, std::size_t min_w) const {
    const int needed = 2 * p.cycles;
    int swings = 0;
    int dir = 0;
    double extreme = x(s, p.dof);
    for (std::size_t t = s; t <= e; ++t) {
      const double v = x(t, p.dof);
      if (dir == 0) {
        if (std::abs(v - extreme) >= p.amount) {
          dir = v > extreme ? 1 : -1;
          extreme = v;
          ++swings;
        }
      } else if (dir * (v - extreme) > 0.0) {
        extreme = v;
      } else if (dir * (extreme - v) >= p.amount) {
        dir = -dir;
        extreme = v;
        ++swings;
      }
      if (swings >= needed) {
        if (t >= min_w) return pass(t);
        if (min_w <= e) return pass(min_w);
        break;
      }
    }
    return fail(label(p) + " made " + std::to_string(swings) + " swings of at least " + num(p.amount) + ", required " +
                    std::to_string(needed) + " (" + std::to_string(p.cycles) + " cycles)",
                "alternate dof " + std::to_string(p.dof) + " between two destinations at least " + num(p.amount) +
                    " apart and repeat the states at least " + std::to_string(p.cycles) + " times");
  }

  PredicateOutcome all(const TaskPredicate& p, std::size_t s, std::size_t e, std::size_t min_w) const {
    std::size_t witness = s;
    for (const auto& child : p.children) {
      auto r = eval(child, s, e, min_w);
      if (!r.holds) return r;
      witness = std::max(witness, r.witness);
    }
    return pass(witness);
  }

  PredicateOutcome any(const TaskPredicate& p, std::size_t s, std::size_t e, std::size_t min_w) const {
    std::optional<PredicateOutcome> first_failure;
    std::optional<std::size_t> witness;
    for (const auto& child : p.children) {
      auto r = eval(child, s, e, min_w);
      if (r.holds) {
        witness = witness ? std::min(*witness, r.witness) : r.witness;
      } else if (!first_failure) {
        first_failure = std::move(r);
      }
    }
    if (witness) return pass(*witness);
    first_failure->reason = "no alternative holds; first: " + first_failure->reason;
    return *first_failure;
  }

  PredicateOutcome seq(const std::vector<TaskPredicate>& parts, std::size_t i, std::size_t s, std::size_t e,
                       std::size_t min_w) const {
    if (i + 1 == parts.size()) return eval(parts[i], s, e, min_w);
    std::optional<std::size_t> first_hold;
    for (std::size_t t1 = std::max(s, min_w); t1 <= e; ++t1) {
      const auto head = eval(parts[i], s, t1, min_w);
      if (!head.holds) continue;
      if (!first_hold) first_hold = t1;
      if (t1 == e) break;
      const auto rest = seq(parts, i + 1, t1, e, t1 + 1);
      if (rest.holds) return rest;
    }
    if (!first_hold) return eval(parts[i], s, e, min_w);
    if (*first_hold == e) {
      auto r = seq(parts, i + 1, e, e, e);
      r.holds = false;
      r.reason = "nothing follows step " + std::to_string(e) + (r.reason.empty() ? "" : ": " + r.reason);
      if (r.solution.empty()) r.solution = "add a later state for the next phase of the motion";
      return r;
    }
    auto r = seq(parts, i + 1, *first_hold, e, *first_hold + 1);
    r.reason = "after step " + std::to_string(*first_hold) + ", " + r.reason;
    return r;
  }

  const Trajectory& traj_;
};

TaskPredicate parse_node(const json& j, const EntitySpec& entity, const std::string& where) {
  if (!j.is_object() || j.size() != 1) throw PredicateError(where + ": expected an object with one operator key");
  const auto& [key, params] = *j.items().begin();
  TaskPredicate p;
  bool known = false;
  for (const auto& [op, name] : kOps) {
    if (key == name) {
      p.op = op;
      known = true;
    }
  }
  const std::string here = where + "/" + key;
  if (!known) throw PredicateError(here + ": unknown operator");

  if (!p.is_atom()) {
    if (!params.is_array() || params.empty()) throw PredicateError(here + ": expected a non-empty list");
    if (p.op == PredicateOp::Seq && params.size() < 2) throw PredicateError(here + ": needs at least two parts");
    for (std::size_t i = 0; i < params.size(); ++i) {
      p.children.push_back(parse_node(params[i], entity, here + "[" + std::to_string(i) + "]"));
    }
    return p;
  }

  if (!params.is_object()) throw PredicateError(here + ": expected an object of parameters");
  const auto& dof = resolve_dof(params, entity, here);
  p.dof = dof.index;
  p.dof_name = dof.name;
  switch (p.op) {
    case PredicateOp::FinalAt:
    case PredicateOp::Reaches:
      p.value = number(params, "value", here);
      p.tolerance = number(params, "tol", here);
      if (dof.limited && (p.value < dof.lower_limit - p.tolerance || p.value > dof.upper_limit + p.tolerance)) {
        throw PredicateError(here + ": value " + num(p.value) + " is outside the limits of " + dof.name);
      }
      break;
    case PredicateOp::ReturnsToStart:
      p.tolerance = number(params, "tol", here);
      break;
    case PredicateOp::Increases:
    case PredicateOp::Decreases:
      p.amount = number(params, "min_delta", here);
      if (!(p.amount > 0.0)) throw PredicateError(here + ": min_delta must be > 0");
      break;
    case PredicateOp::Monotonic: {
      const auto d = params.value("direction", std::string());
      if (d == "increasing") {
        p.direction = 1;
      } else if (d == "decreasing") {
        p.direction = -1;
      } else {
        throw PredicateError(here + ": direction must be 'increasing' or 'decreasing'");
      }
      break;
    }
    case PredicateOp::Oscillates:
      p.amount = number(params, "min_amplitude", here);
      if (!(p.amount > 0.0)) throw PredicateError(here + ": min_amplitude must be > 0");
      if (!params.contains("min_cycles") || !params["min_cycles"].is_number_integer() ||
          params["min_cycles"].get<long long>() < 1 || params["min_cycles"].get<long long>() > 1000) {
        throw PredicateError(here + ": min_cycles must be an integer in [1, 1000]");
      }
      p.cycles = params["min_cycles"].get<int>();
      break;
    default:
      break;
  }
  if ((p.op == PredicateOp::FinalAt || p.op == PredicateOp::Reaches || p.op == PredicateOp::ReturnsToStart) &&
      !(p.tolerance > 0.0)) {
    throw PredicateError(here + ": tol must be > 0");
  }
  return p;
}

void collect_dofs(const TaskPredicate& p, std::vector<std::size_t>& out) {
  if (p.is_atom()) {
    out.push_back(p.dof);
    return;
  }
  for (const auto& c : p.children) collect_dofs(c, out);
}

}  // namespace

TaskPredicate parse_predicate(const json& j, const EntitySpec& entity) { return parse_node(j, entity, "predicate"); }

json predicate_to_json(const TaskPredicate& p) {
  if (!p.is_atom()) {
    json list = json::array();
    for (const auto& c : p.children) list.push_back(predicate_to_json(c));
    return {{op_name(p.op), list}};
  }
  json params = {{"dof", p.dof_name}};
  switch (p.op) {
    case PredicateOp::FinalAt:
    case PredicateOp::Reaches:
      params["value"] = p.value;
      params["tol"] = p.tolerance;
      break;
    case PredicateOp::ReturnsToStart: params["tol"] = p.tolerance; break;
    case PredicateOp::Increases:
    case PredicateOp::Decreases: params["min_delta"] = p.amount; break;
    case PredicateOp::Monotonic: params["direction"] = p.direction > 0 ? "increasing" : "decreasing"; break;
    case PredicateOp::Oscillates:
      params["min_amplitude"] = p.amount;
      params["min_cycles"] = p.cycles;
      break;
    default: break;
  }
  return {{op_name(p.op), params}};
}

std::vector<std::size_t> predicate_dofs(const TaskPredicate& p) {
  std::vector<std::size_t> out;
  collect_dofs(p, out);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

PredicateOutcome evaluate_predicate(const TaskPredicate& p, const Trajectory& trajectory, std::size_t first,
                                    std::size_t last) {
  if (trajectory.poses.empty() || first > last || last >= trajectory.poses.size()) {
    return fail("empty trajectory window", "produce a program with at least one state destination");
  }
  for (const auto d : predicate_dofs(p)) {
    if (d >= trajectory.poses.front().size()) {
      return fail("predicate dof " + std::to_string(d) + " is missing from the trajectory",
                  "check the task predicate against the entity");
    }
  }
  return Evaluator(trajectory).eval(p, first, last, first);
}

PredicateOutcome evaluate_predicate(const TaskPredicate& p, const Trajectory& trajectory) {
  if (trajectory.poses.empty()) {
    return fail("empty trajectory", "produce a program with at least one state destination");
  }
  return evaluate_predicate(p, trajectory, 0, trajectory.poses.size() - 1);
}

}  // namespace robocoder
