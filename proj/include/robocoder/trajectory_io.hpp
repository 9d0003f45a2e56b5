#pragma once

#include <string>
#include <string_view>

#include "robocoder/sim.hpp"

namespace robocoder {

/// Text export used by `sim exec --trace` and the remote evaluator adapter:
///
///   # trajectory v1
///   # entity: Cartpole
///   # dt: 0.016666666666666666
///   # tolerance: 0.001
///   # max_steps: 5000
///   # dofs: 2
///   # keyframes: 120:0:0 ...      (step:state:cycle)
///   0.0 0.0                       (one pose per line)
std::string export_trajectory(const Trajectory& trajectory, const SimConfig& config);

struct LoadedTrajectory {
  Trajectory trajectory;
  SimConfig config;
};

/// Inverse of export_trajectory; throws std::runtime_error naming the line.
LoadedTrajectory import_trajectory(std::string_view text);

}  // namespace robocoder
