#include "robocoder/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "robocoder/text.hpp"

namespace robocoder {

namespace {

constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max() / 4;

struct Motion {
  std::size_t dof = 0;
  double start = 0.0;
  double target = 0.0;
  double step = 0.0;  // signed distance per step
  std::size_t steps = 0;
};

SimResult failure(SimErrorKind kind, std::string message) {
  SimResult result;
  result.return_code = 1;
  result.error = SimError{kind, std::move(message)};
  return result;
}

std::optional<SimResult> structural_error(const ActionProgram& program, const EntitySpec& entity,
                                          const SimConfig& config) {
  if (!config.valid()) return failure(SimErrorKind::NonFinite, "invalid simulator configuration");
  if (program.repeat < 1 || program.repeat > kMaxRepeat) {
    return failure(SimErrorKind::InvalidRepeat, "repeat " + std::to_string(program.repeat) + " outside [1," +
                                                    std::to_string(kMaxRepeat) + "]");
  }
  const auto n = static_cast<long long>(entity.dof_count());
  const auto bad_index = [&](long long dof) {
    return failure(SimErrorKind::InvalidDof,
                   "dof index " + std::to_string(dof) + " out of range [0," + std::to_string(n - 1) + "]");
  };
  for (const auto& [dof, value] : program.initial_positions) {
    if (dof < 0 || dof >= n) return bad_index(dof);
    if (!std::isfinite(value)) return failure(SimErrorKind::NonFinite, "non-finite initial position for dof " + std::to_string(dof));
  }
  for (const auto& [dof, speed] : program.speeds) {
    if (dof < 0 || dof >= n) return bad_index(dof);
    if (!std::isfinite(speed)) return failure(SimErrorKind::NonFinite, "non-finite speed for dof " + std::to_string(dof));
    if (speed <= 0) {
      return failure(SimErrorKind::BadSpeed,
                     "non-positive speed " + text::shortest(speed) + " for dof " + std::to_string(dof));
    }
  }
  for (std::size_t s = 0; s < program.states.size(); ++s) {
    for (const auto& [dof, value] : program.states[s]) {
      if (dof < 0 || dof >= n) return bad_index(dof);
      if (!std::isfinite(value)) {
        return failure(SimErrorKind::NonFinite,
                       "non-finite target for dof " + std::to_string(dof) + " in state " + std::to_string(s));
      }
    }
  }
  return std::nullopt;
}

Pose initial_pose(const ActionProgram& program, const EntitySpec& entity) {
  Pose pose = default_pose(entity);
  for (const auto& [dof, value] : program.initial_positions) {
    pose[static_cast<std::size_t>(dof)] = entity.dofs[static_cast<std::size_t>(dof)].clamp(value);
  }
  return pose;
}

std::vector<Motion> plan_state(const DofMap& state, const Pose& pose, const ActionProgram& program,
                               const EntitySpec& entity, const SimConfig& config) {
  std::vector<Motion> motions;
  motions.reserve(state.size());
  for (const auto& [dof, raw_target] : state) {
    const auto i = static_cast<std::size_t>(dof);
    Motion m;
    m.dof = i;
    m.start = pose[i];
    m.target = entity.dofs[i].clamp(raw_target);
    const double speed = program.speed_of(dof);
    m.steps = arrival_steps(std::fabs(m.target - m.start), speed, config);
    m.step = (m.target >= m.start ? 1.0 : -1.0) * speed * config.dt;
    motions.push_back(m);
  }
  return motions;
}

std::size_t state_duration(const std::vector<Motion>& motions) {
  std::size_t duration = 1;  // a state already satisfied still holds for one step
  for (const auto& m : motions) duration = std::max(duration, m.steps);
  return duration;
}

void settle(const std::vector<Motion>& motions, Pose& pose) {
  for (const auto& m : motions) {
    if (m.steps > 0) pose[m.dof] = m.target;
  }
}

double position_at(const Motion& m, std::size_t k) {
  if (m.steps == 0) return m.start;
  if (k >= m.steps) return m.target;
  const double p = m.start + static_cast<double>(k) * m.step;
  // Never overshoot: keeps limit safety independent of rounding.
  return m.target >= m.start ? std::min(p, m.target) : std::max(p, m.target);
}

}  // namespace

std::string_view to_string(SimErrorKind kind) {
  switch (kind) {
    case SimErrorKind::InvalidDof: return "InvalidDof";
    case SimErrorKind::BadSpeed: return "BadSpeed";
    case SimErrorKind::Timeout: return "Timeout";
    case SimErrorKind::NonFinite: return "NonFinite";
    case SimErrorKind::InvalidRepeat: return "InvalidRepeat";
  }
  return "Unknown";
}

std::size_t arrival_steps(double distance, double speed, const SimConfig& config) {
  if (distance <= config.tolerance) return 0;
  const double steps = std::ceil(distance / (speed * config.dt));
  if (!(steps < static_cast<double>(kUnbounded))) return kUnbounded;
  return static_cast<std::size_t>(steps);
}

std::optional<std::size_t> required_steps(const ActionProgram& program, const EntitySpec& entity,
                                          const SimConfig& config) {
  if (structural_error(program, entity, config)) return std::nullopt;
  Pose pose = initial_pose(program, entity);
  std::size_t total = 0;
  for (int cycle = 0; cycle < program.repeat; ++cycle) {
    for (const auto& state : program.states) {
      const auto motions = plan_state(state, pose, program, entity, config);
      total = std::min(kUnbounded, total + state_duration(motions));
      settle(motions, pose);
    }
  }
  return total;
}

SimResult simulate(const ActionProgram& program, const EntitySpec& entity, const SimConfig& config) {
  if (auto error = structural_error(program, entity, config)) return *error;

  const auto total = *required_steps(program, entity, config);
  if (total > config.max_steps) {
    return failure(SimErrorKind::Timeout, "program needs " + (total >= kUnbounded ? std::string("unbounded") : std::to_string(total)) +
                                              " steps, limit is " + std::to_string(config.max_steps));
  }

  Trajectory trajectory;
  trajectory.entity = entity.name;
  trajectory.poses.reserve(total + 1);
  Pose pose = initial_pose(program, entity);
  trajectory.poses.push_back(pose);

  for (int cycle = 0; cycle < program.repeat; ++cycle) {
    for (std::size_t s = 0; s < program.states.size(); ++s) {
      const auto motions = plan_state(program.states[s], pose, program, entity, config);
      const auto duration = state_duration(motions);
      for (std::size_t k = 1; k <= duration; ++k) {
        for (const auto& m : motions) pose[m.dof] = position_at(m, k);
        trajectory.poses.push_back(pose);
      }
      trajectory.keyframes.push_back(
          {trajectory.poses.size() - 1, s, static_cast<std::size_t>(cycle)});
    }
  }

  SimResult result;
  result.return_code = 0;
  result.trajectory = std::move(trajectory);
  return result;
}

std::vector<Pose> keyframes(const Trajectory& trajectory) {
  std::vector<Pose> out;
  if (trajectory.poses.empty()) return out;
  out.reserve(trajectory.keyframes.size() + 1);
  out.push_back(trajectory.poses.front());
  for (const auto& kf : trajectory.keyframes) out.push_back(trajectory.poses.at(kf.step_index));
  return out;
}

}  // namespace robocoder
