#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "robocoder/benchmark.hpp"
#include "robocoder/entity.hpp"
#include "robocoder/program.hpp"

namespace robocoder::testing {

inline const EntityCatalog& catalog() {
  static const EntityCatalog c = EntityCatalog::load_directory(default_data_dir() / "entities");
  return c;
}

inline const EntitySpec& entity(std::string_view name) { return catalog().at(name); }

inline const std::vector<SeedSpec>& seeds() {
  static const auto s = load_seeds(default_data_dir() / "benchmark" / "seeds.jsonl", catalog());
  return s;
}

inline const std::vector<TaskSpec>& tasks() {
  static const auto t = load_benchmark(default_data_dir() / "benchmark" / "tasks.jsonl", catalog());
  return t;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("robocoder-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Random programs over any entity: in-range and out-of-range targets,
/// random speeds, occasional repeat > 1.
class ProgramGenerator {
 public:
  explicit ProgramGenerator(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  std::mt19937_64& rng() { return rng_; }

  double position(const DofSpec& dof) {
    const double span = dof.upper_limit - dof.lower_limit;
    // A quarter of the draws land outside the limits to exercise clamping.
    return uniform(dof.lower_limit - 0.25 * span - 0.1, dof.upper_limit + 0.25 * span + 0.1);
  }

  ActionProgram program(const EntitySpec& e) {
    ActionProgram p;
    const auto n = static_cast<int>(e.dof_count());
    for (int i = 0; i < n; ++i) {
      if (integer(0, 2) == 0) p.initial_positions[i] = position(e.dofs[static_cast<std::size_t>(i)]);
      if (integer(0, 1) == 0) p.speeds[i] = uniform(0.5, 6.0);
    }
    const int states = integer(0, 4);
    for (int s = 0; s < states; ++s) {
      DofMap state;
      const int touched = integer(1, std::min(n, 4));
      for (int t = 0; t < touched; ++t) {
        const int d = integer(0, n - 1);
        state[d] = position(e.dofs[static_cast<std::size_t>(d)]);
      }
      p.states.push_back(std::move(state));
    }
    p.repeat = integer(0, 5) == 0 ? integer(2, 4) : 1;
    return p;
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace robocoder::testing
