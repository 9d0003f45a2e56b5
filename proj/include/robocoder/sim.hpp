#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "robocoder/entity.hpp"
#include "robocoder/program.hpp"

namespace robocoder {

struct SimConfig {
  double dt = 1.0 / 60.0;
  // Distance under which a DOF counts as already at its destination.
  double tolerance = 1e-3;
  std::size_t max_steps = 5000;

  bool valid() const { return dt > 0 && tolerance > 0 && max_steps >= 1; }
};

struct Keyframe {
  std::size_t step_index = 0;
  std::size_t state_index = 0;
  std::size_t cycle_index = 0;

  bool operator==(const Keyframe&) const = default;
};

struct Trajectory {
  std::string entity;
  std::vector<Pose> poses;  // poses[0] is the applied initial pose
  std::vector<Keyframe> keyframes;

  std::size_t step_count() const { return poses.empty() ? 0 : poses.size() - 1; }

  bool operator==(const Trajectory&) const = default;
};

enum class SimErrorKind { InvalidDof, BadSpeed, Timeout, NonFinite, InvalidRepeat };

std::string_view to_string(SimErrorKind kind);

struct SimError {
  SimErrorKind kind = SimErrorKind::InvalidDof;
  std::string message;

  bool operator==(const SimError&) const = default;
};

/// Environment outcome: return code 0 carries a trajectory, 1 an error.
struct SimResult {
  int return_code = 0;
  std::optional<Trajectory> trajectory;
  std::optional<SimError> error;

  bool ok() const { return return_code == 0; }

  bool operator==(const SimResult&) const = default;
};

/// Steps a single DOF needs to cover `distance` at `speed`:
/// 0 when distance <= tolerance, otherwise ceil(distance / (speed * dt)).
std::size_t arrival_steps(double distance, double speed, const SimConfig& config);

/// Total steps the program needs, or nullopt when it is structurally invalid.
std::optional<std::size_t> required_steps(const ActionProgram& program, const EntitySpec& entity,
                                          const SimConfig& config);

/// Constant-rate kinematic execution of `program`. Never throws.
SimResult simulate(const ActionProgram& program, const EntitySpec& entity, const SimConfig& config = {});

/// Initial pose followed by the pose at every keyframe.
std::vector<Pose> keyframes(const Trajectory& trajectory);

}  // namespace robocoder
