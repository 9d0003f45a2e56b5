#include <gtest/gtest.h>

#include <set>

#include "robocoder/orchestrator.hpp"
#include "robocoder/report.hpp"
#include "scenarios.hpp"
#include "support.hpp"

namespace robocoder {
namespace {

using namespace scenarios;
using testing::catalog;

std::unique_ptr<ActorProvider> scripted(std::vector<ScriptRule> rules) {
  return std::make_unique<ScriptedProvider>(std::move(rules));
}

std::unique_ptr<ActorProvider> kth(int k, const std::vector<TaskSpec>& tasks) {
  std::map<std::pair<std::string, std::string>, std::string> fixtures;
  for (const auto& t : tasks) fixtures[{t.entity, t.text}] = kPassing;
  return std::make_unique<KthTryProvider>(std::move(fixtures), k);
}

RunConfig config(UpdateMode mode, int n = 5) {
  RunConfig c;
  c.mode = mode;
  c.max_iterations = n;
  return c;
}

ActionSpace seeded_space() {
  static const LocalEmbedder embedder;
  return seed_initial_space(seed_fixtures(testing::seeds()), catalog(), embedder);
}

TEST(Scenario, FixtureTextsAreRelatedNotExact) {
  const LocalEmbedder e;
  for (const auto& [a, b] : {std::pair{kTask2, kTask3}, {kTask2, kTask1}, {kDependent, kBase}}) {
    const double c = cosine(e.embed(a), e.embed(b));
    EXPECT_GE(c, 0.5) << a << " / " << b;
    EXPECT_LT(c, 0.99) << a << " / " << b;
  }
}

TEST(SolveTask, SeedTaskHitsSearch) {
  Harness h(catalog(), scripted({}));
  const auto space = seeded_space();
  const auto& walk = *std::find_if(testing::seeds().begin(), testing::seeds().end(),
                                   [](const SeedSpec& s) { return s.fixture.task_text == "walk"; });
  const TaskSpec task{"walk", walk.fixture.entity, "walk", walk.predicate};
  const auto r = solve_task(task, space.snapshot(task.entity), h.deps(), config(UpdateMode::Parallel));
  EXPECT_EQ(r.status, TaskStatus::PassedBySearch);
  EXPECT_EQ(r.pass_iteration, 0);
  EXPECT_EQ(r.actor_calls, 0u);
  EXPECT_EQ(h.actor->call_count(), 0u);
  EXPECT_EQ(r.iterations_used, 0);
  EXPECT_EQ(r.matched_action, space.find(task.entity, "walk")->id);
}

TEST(SolveTask, FirstTry) {
  Harness h(catalog(), scripted({rule(kTask1, kPassing)}));
  const ActionSpace space;
  const auto r = solve_task(slider_task(catalog(), "t", kTask1), space.snapshot("Cartpole"), h.deps(),
                            config(UpdateMode::Parallel));
  EXPECT_EQ(r.status, TaskStatus::PassedByActor);
  EXPECT_EQ(r.pass_iteration, 1);
  EXPECT_EQ(r.iterations_used, 1);
  EXPECT_EQ(r.actor_calls, 1u);
  ASSERT_TRUE(r.program);
  EXPECT_EQ(serialize_program(*r.program), serialize_program(std::get<ActionProgram>(
                                                parse_program(kPassing, testing::entity("Cartpole")))));
}

TEST(SolveTask, KthTryLoopBound) {
  const auto task = slider_task(catalog(), "t", kTask1);
  const ActionSpace space;
  for (int k = 1; k <= 6; ++k) {
    for (int n = 1; n <= 6; ++n) {
      Harness h(catalog(), kth(k, {task}));
      const auto r = solve_task(task, space.snapshot("Cartpole"), h.deps(), config(UpdateMode::Parallel, n));
      if (k <= n) {
        EXPECT_EQ(r.status, TaskStatus::PassedByActor) << k << " " << n;
        EXPECT_EQ(r.pass_iteration, k);
        EXPECT_EQ(r.iterations_used, k);
      } else {
        EXPECT_EQ(r.status, TaskStatus::Failed) << k << " " << n;
        EXPECT_EQ(r.iterations_used, n);
        EXPECT_FALSE(r.program);
      }
      EXPECT_EQ(r.attempts.size(), static_cast<std::size_t>(r.iterations_used));
      EXPECT_LE(r.iterations_used, n);
    }
  }
}

TEST(SolveTask, FeedbackTextBetweenIterations) {
  const auto task = slider_task(catalog(), "t", kTask1);
  Harness h(catalog(), kth(3, {task}));
  const ActionSpace space;
  const auto r = solve_task(task, space.snapshot("Cartpole"), h.deps(), config(UpdateMode::Parallel));
  ASSERT_EQ(r.attempts.size(), 3u);
  for (int i = 0; i < 2; ++i) {
    const auto& a = r.attempts[static_cast<std::size_t>(i)];
    ASSERT_TRUE(a.feedback);
    EXPECT_EQ(*a.feedback, "Your current action code does not fulfill the task: " + kTask1 +
                               ". Here is the reason: " + a.verdict.reasons +
                               ". Here is the suggested solution: " + a.verdict.solution +
                               ". Please rewrite the action functions.");
    EXPECT_EQ(a.actor_calls, 3u);  // garbage plus two parse retries
  }
  EXPECT_FALSE(r.attempts[2].feedback);
  EXPECT_EQ(r.attempts[2].actor_calls, 1u);
}

TEST(SolveTask, NoFeedbackMode) {
  const auto task = slider_task(catalog(), "t", kTask1);
  Harness h(catalog(), scripted({rule(kTask1, kStill)}));
  auto c = config(UpdateMode::Parallel, 2);
  c.feedback = FeedbackMode::NoFeedback;
  const auto r = solve_task(task, ActionSpace{}.snapshot("Cartpole"), h.deps(), c);
  ASSERT_TRUE(r.attempts[0].feedback);
  EXPECT_EQ(*r.attempts[0].feedback,
            "Your current action code does not fulfill the task: " + kTask1 + ". Please rewrite the action functions.");
}

TEST(SolveTask, ProviderErrorConsumesIteration) {
  struct Broken final : ActorProvider {
    std::string describe() const override { return "broken"; }
    std::string complete(const PromptBundle&) override { throw std::runtime_error("down"); }
  };
  Harness h(catalog(), std::make_unique<Broken>());
  const auto r = solve_task(slider_task(catalog(), "t", kTask1), ActionSpace{}.snapshot("Cartpole"), h.deps(),
                            config(UpdateMode::Parallel, 3));
  EXPECT_EQ(r.status, TaskStatus::Failed);
  EXPECT_EQ(r.iterations_used, 3);
  EXPECT_EQ(r.actor_calls, 3u);
  ASSERT_TRUE(r.attempts[0].actor_error);
  EXPECT_NE(r.attempts[0].actor_error->find("down"), std::string::npos);
}

TEST(RunSerial, UpdateTable) {
  Harness h(catalog(), scripted(table_rules()));
  ActionSpace space;
  const auto report = run_serial(table_tasks(catalog()), space, h.deps(), config(UpdateMode::Serial));
  // task1 at 1, task2 exhausts 5, then task3 (which needs three tries).
  EXPECT_EQ(report.events, events({{"task1", 1, true}, {"task2", 1, false}, {"task2", 2, false}, {"task2", 3, false},
                                   {"task2", 4, false}, {"task2", 5, false}, {"task3", 1, false}, {"task3", 2, false},
                                   {"task3", 3, true}}));
  EXPECT_TRUE(growth_law_holds(report, {1, 0, 1}));
  EXPECT_EQ(space.size(), 2u);
}

TEST(RunParallel, UpdateTable) {
  Harness h(catalog(), scripted(table_rules()));
  ActionSpace space;
  const auto tasks = table_tasks(catalog());
  const auto first = run_parallel(tasks, space, h.deps(), config(UpdateMode::Parallel));
  EXPECT_EQ(first.events,
            events({{"task1", 1, true}, {"task2", 1, false}, {"task3", 1, false}, {"task2", 2, false},
                    {"task3", 2, false}, {"task2", 3, false}, {"task3", 3, true}, {"task2", 4, false},
                    {"task2", 5, false}}));
  EXPECT_TRUE(growth_law_holds(first, {1, 0, 1, 0, 0}));
  EXPECT_EQ(first.results[1].status, TaskStatus::Failed);

  // Follow-up run over the grown space: task2 passes at its first iteration.
  const auto second = run_parallel({tasks[1]}, space, h.deps(), config(UpdateMode::Parallel));
  EXPECT_EQ(second.events, events({{"task2", 1, true}}));
  EXPECT_EQ(second.results[0].pass_iteration, 1);
  EXPECT_EQ(space.size(), 3u);
}

TEST(CrossTask, ParallelWaitsForCommitSerialDoesNot) {
  const auto tasks = dependency_tasks(catalog());
  {
    Harness h(catalog(), scripted(dependency_rules()));
    ActionSpace space;
    const auto r = run_parallel(tasks, space, h.deps(), config(UpdateMode::Parallel));
    EXPECT_EQ(r.results[0].pass_iteration, 1);
    EXPECT_EQ(r.results[1].pass_iteration, 2);
    EXPECT_EQ(r.results[1].attempts[0].space_version, 0u);
    EXPECT_EQ(r.results[1].attempts[1].space_version, 1u);
  }
  {
    Harness h(catalog(), scripted(dependency_rules()));
    ActionSpace space;
    const auto r = run_serial(tasks, space, h.deps(), config(UpdateMode::Serial));
    EXPECT_EQ(r.results[0].pass_iteration, 1);
    EXPECT_EQ(r.results[1].pass_iteration, 1);
    EXPECT_EQ(r.results[1].attempts[0].related, std::vector<std::string>{kBase});
  }
}

TEST(Run, SingleTaskSerialEqualsParallel) {
  for (int k = 1; k <= 6; ++k) {
    const std::vector<TaskSpec> tasks = {slider_task(catalog(), "only", kTask1)};
    Harness a(catalog(), kth(k, tasks));
    Harness b(catalog(), kth(k, tasks));
    ActionSpace sa, sb;
    auto ca = config(UpdateMode::Serial);
    auto cb = config(UpdateMode::Parallel);
    ca.run_id = cb.run_id = "same";
    auto ra = report_to_json(run(tasks, sa, a.deps(), ca));
    auto rb = report_to_json(run(tasks, sb, b.deps(), cb));
    // Parallel commits once per round and serial once per task, so only the
    // version bookkeeping may differ.
    for (auto* r : {&ra, &rb}) {
      r->erase("mode");
      r->erase("space_sizes");
      for (auto& a : (*r)["results"][0]["attempts"]) a.erase("space_version");
    }
    EXPECT_EQ(ra, rb) << k;
    const auto* la = sa.find("Cartpole", kTask1);
    const auto* lb = sb.find("Cartpole", kTask1);
    ASSERT_EQ(la == nullptr, lb == nullptr);
    EXPECT_EQ(la == nullptr, k > 5);
    if (la) {
      EXPECT_EQ(la->program, lb->program);
    }
    EXPECT_EQ(sa.size(), sb.size());
  }
}

TEST(Run, SnapshotDiscipline) {
  Harness h(catalog(), scripted(table_rules()));
  ActionSpace space;
  const auto report = run_parallel(table_tasks(catalog()), space, h.deps(), config(UpdateMode::Parallel));
  for (const auto& r : report.results) {
    for (const auto& a : r.attempts) {
      // Round i searches the snapshot that the commit of round i-1 produced.
      EXPECT_EQ(a.space_version, static_cast<std::uint64_t>(a.iteration - 1)) << r.task_id;
    }
  }
  // task3 is learned at round 3, so task2 cannot see it before round 4.
  for (const auto& a : report.results[1].attempts) {
    const bool sees = std::find(a.related.begin(), a.related.end(), kTask3) != a.related.end();
    EXPECT_EQ(sees, a.iteration >= 4) << a.iteration;
  }
}

TEST(Run, AllExactMatch) {
  Harness h(catalog(), scripted({}));
  auto space = seeded_space();
  std::vector<TaskSpec> tasks;
  for (const auto& s : testing::seeds()) {
    tasks.push_back({"seed-" + std::to_string(tasks.size()), s.fixture.entity, s.fixture.task_text, s.predicate});
  }
  const auto report = run_parallel(tasks, space, h.deps(), config(UpdateMode::Parallel));
  EXPECT_EQ(report.actor_calls, 0u);
  EXPECT_DOUBLE_EQ(report.pass_rate("All", 0), 1.0);
  EXPECT_EQ(report.space_sizes.size(), 2u);
  EXPECT_EQ(space.size(), 24u);
}

TEST(Run, SecondRunNeedsNoActor) {
  for (const auto mode : {UpdateMode::Serial, UpdateMode::Parallel}) {
    Harness h(catalog(), scripted(table_rules()));
    ActionSpace space;
    std::vector<TaskSpec> tasks = table_tasks(catalog());
    tasks.erase(tasks.begin() + 1);  // keep only learnable tasks
    const auto a = run(tasks, space, h.deps(), config(mode));
    const auto calls = h.actor->call_count();
    const auto b = run(tasks, space, h.deps(), config(mode));
    EXPECT_GT(a.actor_calls, 0u);
    EXPECT_EQ(b.actor_calls, 0u);
    EXPECT_EQ(h.actor->call_count(), calls);
    for (const auto& r : b.results) EXPECT_EQ(r.status, TaskStatus::PassedBySearch);
  }
}

TEST(Run, FewerCallsWhenPartlyLearned) {
  Harness h(catalog(), scripted(table_rules()));
  ActionSpace space;
  const auto tasks = table_tasks(catalog());
  const auto a = run_parallel(tasks, space, h.deps(), config(UpdateMode::Parallel));
  const auto b = run_parallel(tasks, space, h.deps(), config(UpdateMode::Parallel));
  EXPECT_LT(b.actor_calls, a.actor_calls);
  EXPECT_DOUBLE_EQ(b.pass_rate("All", 1), 1.0);
}

TEST(Run, RecordsOfFailedTasksAreNotCommitted) {
  Harness h(catalog(), scripted({rule(kTask1, kStill)}));
  ActionSpace space;
  run_parallel({slider_task(catalog(), "t", kTask1)}, space, h.deps(), config(UpdateMode::Parallel));
  EXPECT_EQ(space.size(), 0u);
  EXPECT_EQ(space.version(), 5u);
}

TEST(Run, LearnedProvenance) {
  Harness h(catalog(), scripted(table_rules()));
  ActionSpace space;
  auto c = config(UpdateMode::Parallel);
  c.run_id = "r1";
  run_parallel(table_tasks(catalog()), space, h.deps(), c);
  const auto* rec = space.find("Cartpole", kTask3);
  ASSERT_NE(rec, nullptr);
  EXPECT_EQ(rec->provenance, Provenance::learned(3, "r1"));
  EXPECT_EQ(rec->created_at_ms, 1);
  EXPECT_EQ(rec->embedding, h.embedder.embed(kTask3));
}

TEST(Run, StoreLogMirrorsCommits) {
  testing::TempDir dir;
  Harness h(catalog(), scripted(table_rules()));
  ActionSpace space;
  auto deps = h.deps();
  deps.store_log = dir / "store.jsonl";
  store_log::save(space, *deps.store_log, h.embedder.describe());
  run_parallel(table_tasks(catalog()), space, deps, config(UpdateMode::Parallel));
  const auto loaded = store_log::load(*deps.store_log, catalog());
  EXPECT_TRUE(loaded.same_contents(space));
}

TEST(Run, InvalidConfig) {
  Harness h(catalog(), scripted({}));
  ActionSpace space;
  auto c = config(UpdateMode::Parallel, 0);
  EXPECT_THROW(run(table_tasks(catalog()), space, h.deps(), c), std::invalid_argument);
  c = config(UpdateMode::Parallel);
  c.concurrency = 0;
  EXPECT_THROW(run(table_tasks(catalog()), space, h.deps(), c), std::invalid_argument);
}

// Random suites of KthTry tasks: the budget law, monotone cumulative counts,
// the growth law and run-to-run determinism.
TEST(Run, RandomSuitesProperties) {
  std::mt19937_64 rng(99);
  const std::vector<std::string> verbs = {"right", "left", "quickly", "slowly", "gently", "far", "near", "again"};
  for (int trial = 0; trial < 40; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 5)(rng);
    const int k = std::uniform_int_distribution<int>(1, 6)(rng);
    const auto mode = trial % 2 ? UpdateMode::Serial : UpdateMode::Parallel;
    std::vector<TaskSpec> tasks;
    std::set<std::string> texts;
    const int count = std::uniform_int_distribution<int>(1, 6)(rng);
    for (int i = 0; i < count; ++i) {
      auto text = verbs[rng() % verbs.size()] + " move the slider " + verbs[rng() % verbs.size()];
      tasks.push_back(slider_task(catalog(), "t" + std::to_string(i), text));
      texts.insert(text);
    }
    auto one = [&] {
      Harness h(catalog(), kth(k, tasks));
      ActionSpace space;
      auto c = config(mode, n);
      c.concurrency = 3;
      return std::pair{run(tasks, space, h.deps(), c), space.size()};
    };
    const auto [a, size_a] = one();
    const auto [b, size_b] = one();
    EXPECT_EQ(report_to_json(a), report_to_json(b));
    EXPECT_EQ(size_a, size_b);
    EXPECT_TRUE(cumulative_monotone(a));
    std::set<std::string> learned;
    for (const auto& r : a.results) {
      EXPECT_LE(r.iterations_used, n);
      if (r.status == TaskStatus::PassedByActor) learned.insert(r.text);
    }
    EXPECT_EQ(size_a, learned.size());
    // Growth per commit equals the novel texts that commit carried.
    std::size_t total = 0;
    for (std::size_t i = 1; i < a.space_sizes.size(); ++i) {
      EXPECT_LE(a.space_sizes[i].size - a.space_sizes[i - 1].size, a.space_sizes[i].committed);
      total += a.space_sizes[i].size - a.space_sizes[i - 1].size;
    }
    EXPECT_EQ(total, learned.size());
  }
}

TEST(Run, CumulativeCounts) {
  Harness h(catalog(), scripted(table_rules()));
  ActionSpace space;
  const auto report = run_parallel(table_tasks(catalog()), space, h.deps(), config(UpdateMode::Parallel));
  EXPECT_EQ(report.cumulative.at("Cartpole"), (std::vector<std::size_t>{0, 1, 1, 2, 2, 2}));
  EXPECT_EQ(report.cumulative.at("All"), report.cumulative.at("Cartpole"));
  EXPECT_DOUBLE_EQ(report.pass_rate("Cartpole", 3), 2.0 / 3.0);
  EXPECT_EQ(report.task_counts.at("All"), 3u);
}

}  // namespace
}  // namespace robocoder
