#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "robocoder/entity.hpp"
#include "robocoder/sim.hpp"

namespace robocoder {

enum class PredicateOp {
  FinalAt,         // |x(end) - value| <= tol
  Reaches,         // some step with |x - value| <= tol
  Increases,       // x(end) - x(start) >= min_delta
  Decreases,       // x(start) - x(end) >= min_delta
  Monotonic,       // never reverses, non-zero net change in `direction`
  ReturnsToStart,  // leaves the tol band around x(start), later comes back
  Oscillates,      // >= 2*min_cycles swings of at least min_amplitude
  All,
  Any,
  Seq,             // children hold in order, each witness after the previous
};

/// Expression tree over trajectory atoms. DOF references are indices once
/// bound to an entity; `dof_name` is kept for messages.
struct TaskPredicate {
  PredicateOp op = PredicateOp::All;
  std::size_t dof = 0;
  std::string dof_name;
  double value = 0.0;      // FinalAt, Reaches
  double tolerance = 0.0;  // FinalAt, Reaches, ReturnsToStart
  double amount = 0.0;     // Increases/Decreases min_delta, Oscillates min_amplitude
  int direction = 1;       // Monotonic: +1 increasing, -1 decreasing
  int cycles = 0;          // Oscillates
  std::vector<TaskPredicate> children;

  bool is_atom() const { return op != PredicateOp::All && op != PredicateOp::Any && op != PredicateOp::Seq; }
};

class PredicateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses the JSON form, e.g. {"reaches": {"dof": "slider", "value": 1.0, "tol": 0.1}}
/// or {"all": [...]}. DOFs may be names or indices of `entity`. Throws PredicateError.
TaskPredicate parse_predicate(const nlohmann::json& j, const EntitySpec& entity);
nlohmann::json predicate_to_json(const TaskPredicate& p);

/// Every DOF index referenced by `p`.
std::vector<std::size_t> predicate_dofs(const TaskPredicate& p);

struct PredicateOutcome {
  bool holds = false;
  std::size_t witness = 0;  // step at which the predicate became true
  std::string reason;       // first failing atom, observed vs required
  std::string solution;     // remedy for that atom
};

/// Evaluates `p` over the pose window [first, last] of `trajectory`.
PredicateOutcome evaluate_predicate(const TaskPredicate& p, const Trajectory& trajectory, std::size_t first,
                                    std::size_t last);
PredicateOutcome evaluate_predicate(const TaskPredicate& p, const Trajectory& trajectory);

}  // namespace robocoder
