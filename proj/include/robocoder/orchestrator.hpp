#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "robocoder/action_store.hpp"
#include "robocoder/actor.hpp"
#include "robocoder/benchmark.hpp"
#include "robocoder/embedder.hpp"
#include "robocoder/evaluator.hpp"
#include "robocoder/searcher.hpp"
#include "robocoder/sim.hpp"

namespace robocoder {

enum class UpdateMode { Serial, Parallel };
std::string_view to_string(UpdateMode mode);
std::optional<UpdateMode> parse_update_mode(std::string_view text);

struct RunConfig {
  int max_iterations = 5;
  UpdateMode mode = UpdateMode::Parallel;
  std::size_t concurrency = 4;
  FeedbackMode feedback = FeedbackMode::Full;
  SearcherConfig searcher;
  SimConfig sim;
  std::string run_id = "run";
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct Deps {
  const EntityCatalog& catalog;
  const Embedder& embedder;
  ActorProvider& actor;
  const Evaluator& evaluator;
  std::string actor_system;
  // Milliseconds stamped on learned records; wall clock when empty.
  std::function<std::int64_t()> clock;
  // When set, every commit is appended to this action log.
  std::optional<std::filesystem::path> store_log;
};

/// One actor iteration of one task.
struct IterationRecord {
  int iteration = 0;  // 1-based, the task's own attempt number
  SearchKind search_kind = SearchKind::Empty;
  std::vector<std::string> related;  // task texts shown to the actor
  std::uint64_t space_version = 0;   // version of the snapshot searched
  std::size_t actor_calls = 0;
  std::optional<std::string> actor_error;  // set when no program was obtained
  std::optional<int> return_code;
  Verdict verdict;
  std::optional<std::string> feedback;  // rendered message for the next attempt
};

enum class TaskStatus { PassedBySearch, PassedByActor, Failed };
std::string_view to_string(TaskStatus status);

struct TaskResult {
  std::string task_id;
  std::string entity;
  std::string text;
  TaskStatus status = TaskStatus::Failed;
  int pass_iteration = -1;  // 0 for a search hit, i for PassedByActor{i}, -1 when failed
  int iterations_used = 0;
  std::size_t actor_calls = 0;
  std::optional<ActionProgram> program;
  std::string matched_action;  // id of the reused record for a search hit
  std::vector<IterationRecord> attempts;
};

/// Execution order of actor iterations (the check/cross table).
struct ExecutionEvent {
  std::string task_id;
  int iteration = 0;
  bool completed = false;
  bool operator==(const ExecutionEvent&) const = default;
};

struct SpaceSize {
  std::uint64_t version = 0;
  std::size_t size = 0;
  std::size_t committed = 0;  // records in the commit that produced this version
  bool operator==(const SpaceSize&) const = default;
};

struct PhaseTimings {
  double search_s = 0.0;
  double actor_s = 0.0;
  double sim_s = 0.0;
  double eval_s = 0.0;
  double commit_s = 0.0;
  double solve_wall_s = 0.0;  // wall clock of the task loops, commits excluded
  double total_wall_s = 0.0;
};

struct RunReport {
  std::string run_id;
  UpdateMode mode = UpdateMode::Parallel;
  int max_iterations = 5;
  std::vector<std::string> entities;  // in first-seen order
  std::vector<TaskResult> results;    // task order
  std::vector<ExecutionEvent> events;
  // cumulative[entity][i] = tasks passed by iteration i, i = 0..N; "All" aggregates.
  std::map<std::string, std::vector<std::size_t>> cumulative;
  std::map<std::string, std::size_t> task_counts;
  std::vector<SpaceSize> space_sizes;
  std::size_t actor_calls = 0;
  PhaseTimings timings;

  double pass_rate(const std::string& entity, int iteration) const;
};

/// Algorithm 1 for one task against a fixed snapshot: search once, then up
/// to N actor iterations with feedback.
TaskResult solve_task(const TaskSpec& task, const SpaceView& view, const Deps& deps, const RunConfig& config,
                      PhaseTimings* timings = nullptr);

/// Tasks run one at a time; the space is updated after each task.
RunReport run_serial(const std::vector<TaskSpec>& tasks, ActionSpace& space, const Deps& deps, const RunConfig& config);

/// All unfinished tasks run one iteration per round against the frozen
/// snapshot; passed actions are committed once per round.
RunReport run_parallel(const std::vector<TaskSpec>& tasks, ActionSpace& space, const Deps& deps,
                       const RunConfig& config);

RunReport run(const std::vector<TaskSpec>& tasks, ActionSpace& space, const Deps& deps, const RunConfig& config);

}  // namespace robocoder
