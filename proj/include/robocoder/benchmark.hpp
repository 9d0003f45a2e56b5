#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "robocoder/action_store.hpp"
#include "robocoder/entity.hpp"
#include "robocoder/predicate.hpp"

namespace robocoder {

struct TaskSpec {
  std::string id;  // unique, e.g. "anymal-07"
  std::string entity;
  std::string text;
  TaskPredicate predicate;
};

/// A shipped initial skill: its program plus the predicate it must satisfy.
struct SeedSpec {
  SeedFixture fixture;
  TaskPredicate predicate;
};

class BenchmarkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Expected task count per entity for the shipped benchmark.
const std::map<std::string, std::size_t, std::less<>>& expected_task_counts();
inline constexpr std::size_t kBenchmarkTaskCount = 80;
inline constexpr std::size_t kSeedCount = 24;

/// JSONL: {"id", "entity", "text", "predicate"} per line. Ids must be unique.
std::vector<TaskSpec> parse_tasks(std::string_view jsonl, const EntityCatalog& catalog);
/// parse_tasks plus the shipped per-entity counts. Throws BenchmarkError.
std::vector<TaskSpec> load_benchmark(const std::filesystem::path& path, const EntityCatalog& catalog);

/// JSONL: {"entity", "task_text", "program", "predicate"} per line.
std::vector<SeedSpec> load_seeds(const std::filesystem::path& path, const EntityCatalog& catalog);
std::vector<SeedFixture> seed_fixtures(const std::vector<SeedSpec>& seeds);

/// Texts that occur both as a seed and as a benchmark task of the same entity.
std::vector<std::string> lint_seed_overlap(const std::vector<SeedSpec>& seeds, const std::vector<TaskSpec>& tasks);

std::vector<TaskSpec> filter_entity(const std::vector<TaskSpec>& tasks, std::string_view entity);

}  // namespace robocoder
