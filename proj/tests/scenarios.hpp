#pragma once

// Hand-built orchestrator scenarios shared by the unit tests and the
// acceptance binary. Every task is a Cartpole "move the slider" variant
// judged by the trace evaluator, so pass/fail is decided by which scripted
// reply the provider picks.

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "robocoder/actor.hpp"
#include "robocoder/benchmark.hpp"
#include "robocoder/embedder.hpp"
#include "robocoder/evaluator.hpp"
#include "robocoder/orchestrator.hpp"
#include "robocoder/report.hpp"

namespace robocoder::scenarios {

// Slides the cart from 0 to 2.0; satisfies every task below.
inline const std::string kPassing = R"({"speeds": {"0": 1.0}, "state_destination": [{"0": 2.0}]})";
// Parses and runs but leaves the slider where it started.
inline const std::string kStill = R"({"speeds": {"1": 1.0}, "state_destination": [{"1": 0.3}]})";

inline TaskSpec slider_task(const EntityCatalog& catalog, const std::string& id, const std::string& text) {
  return {id, "Cartpole", text,
          parse_predicate(nlohmann::json::parse(R"({"increases": {"dof": 0, "min_delta": 0.5}})"),
                          catalog.at("Cartpole"))};
}

inline ScriptRule rule(const std::string& task, const std::string& response, ScriptCondition when = {}) {
  return {"Cartpole", task, std::move(when), response};
}

inline ScriptCondition from_attempt(int k) {
  ScriptCondition c;
  c.min_attempt = k;
  return c;
}

inline ScriptCondition fresh_with_related(const std::string& text) {
  ScriptCondition c;
  c.with_feedback = false;
  c.requires_related = {text};
  return c;
}

inline ScriptCondition with_related(const std::string& text) {
  ScriptCondition c;
  c.requires_related = {text};
  return c;
}

/// Task texts of the update-table scenario.
inline const std::string kTask1 = "right move the slider";
inline const std::string kTask2 = "right move the slider and then rotate the pole";
inline const std::string kTask3 = "rotate the pole and move the slider";

/// Task 1 passes on its first try, task 3 on its third. Task 2 passes only
/// from a fresh prompt that already lists task 3 as a related action, which
/// first happens at iteration 1 of a follow-up run.
inline std::vector<ScriptRule> table_rules() {
  return {rule(kTask1, kPassing),
          rule(kTask2, kPassing, fresh_with_related(kTask3)),
          rule(kTask2, kStill),
          rule(kTask3, kPassing, from_attempt(3)),
          rule(kTask3, kStill)};
}

inline std::vector<TaskSpec> table_tasks(const EntityCatalog& catalog) {
  return {slider_task(catalog, "task1", kTask1), slider_task(catalog, "task2", kTask2),
          slider_task(catalog, "task3", kTask3)};
}

/// Dependent task that needs the first task's skill in the snapshot.
inline const std::string kBase = "right move the slider";
inline const std::string kDependent = "right move the slider twice";

inline std::vector<ScriptRule> dependency_rules() {
  return {rule(kBase, kPassing), rule(kDependent, kPassing, with_related(kBase)), rule(kDependent, kStill)};
}

inline std::vector<TaskSpec> dependency_tasks(const EntityCatalog& catalog) {
  return {slider_task(catalog, "base", kBase), slider_task(catalog, "dependent", kDependent)};
}

/// Owns everything Deps points at. The clock is fixed so reports and store
/// logs are reproducible.
struct Harness {
  const EntityCatalog& catalog;
  LocalEmbedder embedder;
  TraceEvaluator evaluator;
  std::unique_ptr<ActorProvider> actor;

  Harness(const EntityCatalog& c, std::unique_ptr<ActorProvider> provider)
      : catalog(c), embedder(kDefaultEmbeddingDimension), actor(std::move(provider)) {}

  Deps deps() { return Deps{catalog, embedder, *actor, evaluator, "system", [] { return std::int64_t{1}; }, {}}; }
};

inline std::vector<ExecutionEvent> events(std::initializer_list<std::tuple<const char*, int, bool>> list) {
  std::vector<ExecutionEvent> out;
  for (const auto& [id, it, ok] : list) out.push_back({id, it, ok});
  return out;
}

/// Sizes must grow by exactly the number of novel texts passed in each commit.
inline bool growth_law_holds(const RunReport& report, const std::vector<std::size_t>& novel_per_commit) {
  if (report.space_sizes.size() != novel_per_commit.size() + 1) return false;
  for (std::size_t i = 1; i < report.space_sizes.size(); ++i) {
    const auto& prev = report.space_sizes[i - 1];
    const auto& cur = report.space_sizes[i];
    if (cur.version != prev.version + 1) return false;
    if (cur.size != prev.size + novel_per_commit[i - 1]) return false;
  }
  return true;
}

inline bool cumulative_monotone(const RunReport& report) {
  for (const auto& [entity, counts] : report.cumulative) {
    for (std::size_t i = 1; i < counts.size(); ++i) {
      if (counts[i] < counts[i - 1]) return false;
    }
  }
  return true;
}

}  // namespace robocoder::scenarios
