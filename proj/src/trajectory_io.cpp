#include "robocoder/trajectory_io.hpp"

#include <sstream>
#include <stdexcept>

#include "robocoder/text.hpp"

namespace robocoder {

namespace {

[[noreturn]] void bad_line(std::size_t line, const std::string& what) {
  throw std::runtime_error("trajectory line " + std::to_string(line) + ": " + what);
}

}  // namespace

std::string export_trajectory(const Trajectory& trajectory, const SimConfig& config) {
  std::ostringstream out;
  const std::size_t dofs = trajectory.poses.empty() ? 0 : trajectory.poses.front().size();
  out << "# trajectory v1\n";
  out << "# entity: " << trajectory.entity << '\n';
  out << "# dt: " << text::shortest(config.dt) << '\n';
  out << "# tolerance: " << text::shortest(config.tolerance) << '\n';
  out << "# max_steps: " << config.max_steps << '\n';
  out << "# dofs: " << dofs << '\n';
  out << "# keyframes:";
  for (const auto& kf : trajectory.keyframes) {
    out << ' ' << kf.step_index << ':' << kf.state_index << ':' << kf.cycle_index;
  }
  out << '\n';
  for (const auto& pose : trajectory.poses) {
    for (std::size_t i = 0; i < pose.size(); ++i) {
      if (i != 0) out << ' ';
      out << text::shortest(pose[i]);
    }
    out << '\n';
  }
  return out.str();
}

LoadedTrajectory import_trajectory(std::string_view source) {
  LoadedTrajectory loaded;
  std::size_t dofs = 0;
  bool have_magic = false;
  std::size_t line_no = 0;
  auto lines = text::split(source, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();

  for (const auto raw : lines) {
    ++line_no;
    const auto line = text::trim(raw);
    if (line.empty()) bad_line(line_no, "empty line");
    if (line.front() == '#') {
      const auto body = text::trim(line.substr(1));
      if (body == "trajectory v1") {
        have_magic = true;
        continue;
      }
      const auto colon = body.find(':');
      if (colon == std::string_view::npos) bad_line(line_no, "malformed header");
      const auto key = text::trim(body.substr(0, colon));
      const auto value = text::trim(body.substr(colon + 1));
      long long integer = 0;
      if (key == "entity") {
        loaded.trajectory.entity = std::string(value);
      } else if (key == "dt") {
        if (!text::parse_double(value, loaded.config.dt)) bad_line(line_no, "malformed dt");
      } else if (key == "tolerance") {
        if (!text::parse_double(value, loaded.config.tolerance)) bad_line(line_no, "malformed tolerance");
      } else if (key == "max_steps") {
        if (!text::parse_int(value, integer) || integer < 1) bad_line(line_no, "malformed max_steps");
        loaded.config.max_steps = static_cast<std::size_t>(integer);
      } else if (key == "dofs") {
        if (!text::parse_int(value, integer) || integer < 0) bad_line(line_no, "malformed dofs");
        dofs = static_cast<std::size_t>(integer);
      } else if (key == "keyframes") {
        std::istringstream in{std::string(value)};
        std::string token;
        while (in >> token) {
          const auto parts = text::split(token, ':');
          long long a = 0, b = 0, c = 0;
          if (parts.size() != 3 || !text::parse_int(parts[0], a) || !text::parse_int(parts[1], b) ||
              !text::parse_int(parts[2], c) || a < 0 || b < 0 || c < 0) {
            bad_line(line_no, "malformed keyframe '" + token + "'");
          }
          loaded.trajectory.keyframes.push_back(
              {static_cast<std::size_t>(a), static_cast<std::size_t>(b), static_cast<std::size_t>(c)});
        }
      } else {
        bad_line(line_no, "unknown header '" + std::string(key) + "'");
      }
      continue;
    }
    if (!have_magic) bad_line(line_no, "missing '# trajectory v1' header");
    Pose pose;
    std::istringstream in{std::string(line)};
    std::string token;
    while (in >> token) {
      double v = 0.0;
      if (token == "inf" || token == "-inf" || token == "nan") bad_line(line_no, "non-finite pose value");
      if (!text::parse_double(token, v)) bad_line(line_no, "malformed pose value '" + token + "'");
      pose.push_back(v);
    }
    if (pose.size() != dofs) bad_line(line_no, "expected " + std::to_string(dofs) + " values");
    loaded.trajectory.poses.push_back(std::move(pose));
  }
  if (!have_magic) bad_line(line_no, "missing '# trajectory v1' header");
  for (const auto& kf : loaded.trajectory.keyframes) {
    if (kf.step_index >= loaded.trajectory.poses.size()) bad_line(line_no, "keyframe beyond last pose");
  }
  return loaded;
}

}  // namespace robocoder
