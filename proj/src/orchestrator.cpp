#include "robocoder/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

namespace robocoder {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::int64_t wall_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

void add(PhaseTimings& into, const PhaseTimings& from) {
  into.search_s += from.search_s;
  into.actor_s += from.actor_s;
  into.sim_s += from.sim_s;
  into.eval_s += from.eval_s;
}

/// Mutable per-task state shared by the serial and parallel drivers.
struct TaskState {
  const TaskSpec* task = nullptr;
  const EntitySpec* entity = nullptr;
  TaskResult result;
  std::optional<FeedbackMessage> feedback;
  std::optional<Embedding> embedding;
  bool done = false;
  bool passed_this_round = false;
  PhaseTimings timings;
  std::vector<ExecutionEvent> round_events;
};

TaskState make_state(const TaskSpec& task, const Deps& deps) {
  TaskState s;
  s.task = &task;
  s.entity = deps.catalog.find(task.entity);
  if (s.entity == nullptr) throw std::invalid_argument("task " + task.id + " names unknown entity " + task.entity);
  s.result.task_id = task.id;
  s.result.entity = task.entity;
  s.result.text = task.text;
  return s;
}

SearchOutcome search(TaskState& s, const SpaceView& view, const Deps& deps, const RunConfig& config) {
  const auto start = Clock::now();
  if (!s.embedding) s.embedding = deps.embedder.embed(s.task->text);
  auto outcome = view.records.empty() ? SearchOutcome{} : select_actions(*s.embedding, view, config.searcher);
  s.timings.search_s += seconds_since(start);
  return outcome;
}

void finish_by_search(TaskState& s, const SearchOutcome& outcome) {
  s.result.status = TaskStatus::PassedBySearch;
  s.result.pass_iteration = 0;
  s.result.program = outcome.records.front()->program;
  s.result.matched_action = outcome.records.front()->id;
  s.done = true;
}

/// One actor iteration: prompt, generate, simulate, evaluate.
void iterate(TaskState& s, const SearchOutcome& outcome, std::uint64_t version, const Deps& deps,
             const RunConfig& config) {
  IterationRecord rec;
  rec.iteration = s.result.iterations_used + 1;
  rec.search_kind = outcome.kind;
  rec.space_version = version;
  for (const auto& r : outcome.records) rec.related.push_back(r->task_text);

  std::optional<ActionProgram> program;
  try {
    auto start = Clock::now();
    const auto prompt = build_prompt(s.task->text, outcome, *s.entity, s.feedback, deps.actor_system, rec.iteration);
    auto obtained = obtain_program(prompt, *s.entity, deps.actor);
    s.timings.actor_s += seconds_since(start);
    rec.actor_calls = obtained.calls;
    if (auto* p = std::get_if<ActionProgram>(&obtained.outcome)) {
      program = std::move(*p);
    } else {
      const auto& failure = std::get<ActorFailure>(obtained.outcome);
      rec.actor_error = failure.reason;
      rec.verdict = failure.provider_error
                        ? Verdict{false, failure.reason, "retry once the actor provider is reachable"}
                        : actor_failure_verdict(failure.reason);
    }
    if (program) {
      start = Clock::now();
      const auto sim = simulate(*program, *s.entity, config.sim);
      s.timings.sim_s += seconds_since(start);
      rec.return_code = sim.return_code;
      start = Clock::now();
      rec.verdict = deps.evaluator.evaluate(sim, *program, *s.task, *s.entity);
      s.timings.eval_s += seconds_since(start);
    }
  } catch (const std::exception& e) {
    rec.actor_error = std::string("iteration failed: ") + e.what();
    rec.verdict = Verdict{false, *rec.actor_error, "retry the iteration"};
  }

  s.result.actor_calls += rec.actor_calls;
  s.result.iterations_used = rec.iteration;
  s.round_events.push_back({s.task->id, rec.iteration, rec.verdict.completed});
  if (rec.verdict.completed) {
    s.result.status = TaskStatus::PassedByActor;
    s.result.pass_iteration = rec.iteration;
    s.result.program = std::move(program);
    s.done = true;
    s.passed_this_round = true;
  } else {
    auto fb = compose_feedback(rec.verdict, s.task->text, config.feedback);
    rec.feedback = fb.rendered;
    s.feedback = std::move(fb);
    if (rec.iteration >= config.max_iterations) {
      s.result.status = TaskStatus::Failed;
      s.done = true;
    }
  }
  s.result.attempts.push_back(std::move(rec));
}

ActionRecord learned_record(const TaskState& s, const Deps& deps, const RunConfig& config) {
  ActionRecord r;
  r.entity = s.task->entity;
  r.task_text = s.task->text;
  r.program = *s.result.program;
  r.embedding = s.embedding ? *s.embedding : deps.embedder.embed(s.task->text);
  r.provenance = Provenance::learned(s.result.pass_iteration, config.run_id);
  r.created_at_ms = deps.clock ? deps.clock() : wall_ms();
  return r;
}

void commit(ActionSpace& space, std::vector<ActionRecord> records, const Deps& deps, RunReport& report) {
  const auto start = Clock::now();
  const std::size_t count = records.size();
  const auto version = space.commit_passed(records, deps.catalog);
  if (deps.store_log) {
    for (auto& r : records) r.id = space.find(r.entity, r.task_text)->id;
    store_log::append_commit(*deps.store_log, records, version, space.dimension(), deps.embedder.describe());
  }
  report.space_sizes.push_back({version, space.size(), count});
  report.timings.commit_s += seconds_since(start);
}

RunReport start_report(const std::vector<TaskSpec>& tasks, const ActionSpace& space, const RunConfig& config) {
  config.validate();
  RunReport report;
  report.run_id = config.run_id;
  report.mode = config.mode;
  report.max_iterations = config.max_iterations;
  for (const auto& t : tasks) {
    if (std::find(report.entities.begin(), report.entities.end(), t.entity) == report.entities.end()) {
      report.entities.push_back(t.entity);
    }
    ++report.task_counts[t.entity];
  }
  report.task_counts["All"] = tasks.size();
  report.space_sizes.push_back({space.version(), space.size(), 0});
  return report;
}

void finish_report(RunReport& report, const std::vector<TaskState>& states, Clock::time_point started) {
  const auto n = static_cast<std::size_t>(report.max_iterations);
  for (const auto& e : report.entities) report.cumulative[e].assign(n + 1, 0);
  report.cumulative["All"].assign(n + 1, 0);
  for (const auto& s : states) {
    report.results.push_back(s.result);
    report.actor_calls += s.result.actor_calls;
    add(report.timings, s.timings);
    if (s.result.pass_iteration < 0) continue;
    for (auto i = static_cast<std::size_t>(s.result.pass_iteration); i <= n; ++i) {
      ++report.cumulative[s.result.entity][i];
      ++report.cumulative["All"][i];
    }
  }
  report.timings.total_wall_s = seconds_since(started);
}

template <typename T, typename Fn>
void for_each_parallel(std::vector<T>& items, std::size_t concurrency, Fn&& fn) {
  const std::size_t workers = std::min(concurrency, items.size());
  if (workers <= 1) {
    for (auto& item : items) fn(item);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < items.size(); i = next.fetch_add(1)) fn(items[i]);
    });
  }
  for (auto& t : threads) t.join();
}

/// Embeds the texts of tasks that have no embedding yet in one batch. On
/// failure the tasks stay unembedded and search() retries them one by one,
/// recording the error per task.
void embed_pending(const std::vector<TaskState*>& pool, const Deps& deps, PhaseTimings& timings) {
  std::vector<TaskState*> missing;
  std::vector<std::string> texts;
  for (auto* s : pool) {
    if (!s->embedding) {
      missing.push_back(s);
      texts.push_back(s->task->text);
    }
  }
  if (texts.empty()) return;
  const auto start = Clock::now();
  try {
    auto embeddings = deps.embedder.embed_batch(texts);
    if (embeddings.size() == missing.size()) {
      for (std::size_t i = 0; i < missing.size(); ++i) missing[i]->embedding = std::move(embeddings[i]);
    }
  } catch (const std::exception&) {
  }
  timings.search_s += seconds_since(start);
}

void record_search_failure(TaskState& s, const SpaceView& view, const RunConfig& config, const std::exception& e) {
  IterationRecord rec;
  rec.iteration = s.result.iterations_used + 1;
  rec.space_version = view.version;
  rec.actor_error = std::string("search failed: ") + e.what();
  rec.verdict = Verdict{false, *rec.actor_error, "retry the iteration"};
  s.result.iterations_used = rec.iteration;
  s.round_events.push_back({s.task->id, rec.iteration, false});
  s.feedback = compose_feedback(rec.verdict, s.task->text, config.feedback);
  rec.feedback = s.feedback->rendered;
  s.result.attempts.push_back(std::move(rec));
  if (s.result.iterations_used >= config.max_iterations) s.done = true;
}

struct ActorWork {
  TaskState* state = nullptr;
  SearchOutcome outcome;
  std::uint64_t version = 0;
};

}  // namespace

std::string_view to_string(UpdateMode mode) { return mode == UpdateMode::Serial ? "serial" : "parallel"; }

std::optional<UpdateMode> parse_update_mode(std::string_view text) {
  if (text == "serial") return UpdateMode::Serial;
  if (text == "parallel") return UpdateMode::Parallel;
  return std::nullopt;
}

std::string_view to_string(TaskStatus status) {
  switch (status) {
    case TaskStatus::PassedBySearch: return "PassedBySearch";
    case TaskStatus::PassedByActor: return "PassedByActor";
    case TaskStatus::Failed: return "Failed";
  }
  return "?";
}

void RunConfig::validate() const {
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  if (concurrency < 1) throw std::invalid_argument("concurrency must be >= 1");
  if (!searcher.valid()) throw std::invalid_argument("searcher thresholds must satisfy 0 <= lower < upper <= 1 and k >= 1");
  if (!sim.valid()) throw std::invalid_argument("simulator dt, tolerance and max_steps must be positive");
}

double RunReport::pass_rate(const std::string& entity, int iteration) const {
  const auto it = cumulative.find(entity);
  const auto total = task_counts.find(entity);
  if (it == cumulative.end() || total == task_counts.end() || total->second == 0) return 0.0;
  const auto i = static_cast<std::size_t>(std::clamp(iteration, 0, max_iterations));
  return static_cast<double>(it->second[i]) / static_cast<double>(total->second);
}

TaskResult solve_task(const TaskSpec& task, const SpaceView& view, const Deps& deps, const RunConfig& config,
                      PhaseTimings* timings) {
  config.validate();
  auto s = make_state(task, deps);
  const auto outcome = search(s, view, deps, config);
  if (outcome.kind == SearchKind::ExactMatch) {
    finish_by_search(s, outcome);
  } else {
    while (!s.done) iterate(s, outcome, view.version, deps, config);
  }
  if (timings) add(*timings, s.timings);
  return s.result;
}

RunReport run_serial(const std::vector<TaskSpec>& tasks, ActionSpace& space, const Deps& deps, const RunConfig& config) {
  const auto started = Clock::now();
  auto report = start_report(tasks, space, config);
  std::vector<TaskState> states;
  states.reserve(tasks.size());
  double commit_before = 0.0;
  const auto solve_start = Clock::now();
  for (const auto& task : tasks) {
    states.push_back(make_state(task, deps));
    auto& s = states.back();
    const auto view = space.snapshot(task.entity);
    const auto outcome = search(s, view, deps, config);
    if (outcome.kind == SearchKind::ExactMatch) {
      finish_by_search(s, outcome);
    } else {
      while (!s.done) iterate(s, outcome, view.version, deps, config);
    }
    for (auto& e : s.round_events) report.events.push_back(e);
    s.round_events.clear();
    std::vector<ActionRecord> passed;
    if (s.passed_this_round) passed.push_back(learned_record(s, deps, config));
    commit(space, std::move(passed), deps, report);
  }
  commit_before = report.timings.commit_s;
  report.timings.solve_wall_s = seconds_since(solve_start) - commit_before;
  finish_report(report, states, started);
  return report;
}

RunReport run_parallel(const std::vector<TaskSpec>& tasks, ActionSpace& space, const Deps& deps,
                       const RunConfig& config) {
  const auto started = Clock::now();
  auto report = start_report(tasks, space, config);
  std::vector<TaskState> states;
  states.reserve(tasks.size());
  for (const auto& task : tasks) states.push_back(make_state(task, deps));

  double solve_wall = 0.0;
  for (int round = 1; round <= config.max_iterations; ++round) {
    std::vector<TaskState*> pool;
    for (auto& s : states) {
      if (!s.done) pool.push_back(&s);
    }
    if (pool.empty()) break;

    std::map<std::string, SpaceView, std::less<>> views;
    for (const auto* s : pool) {
      if (!views.count(s->task->entity)) views.emplace(s->task->entity, space.snapshot(s->task->entity));
    }

    const auto round_start = Clock::now();
    embed_pending(pool, deps, report.timings);
    // Searches are cheap and pure; only tasks that need the actor go to workers.
    std::vector<ActorWork> work;
    for (auto* s : pool) {
      s->passed_this_round = false;
      const auto& view = views.at(s->task->entity);
      SearchOutcome outcome;
      try {
        outcome = search(*s, view, deps, config);
      } catch (const std::exception& e) {
        record_search_failure(*s, view, config, e);
        continue;
      }
      if (outcome.kind == SearchKind::ExactMatch) {
        if (s->result.iterations_used == 0) {
          finish_by_search(*s, outcome);
          continue;
        }
        // Reached only after actor attempts (e.g. a duplicate task text was
        // learned meanwhile): offer the match as an example instead.
        outcome.kind = SearchKind::Related;
      }
      work.push_back({s, std::move(outcome), view.version});
    }
    for_each_parallel(work, config.concurrency,
                      [&](ActorWork& w) { iterate(*w.state, w.outcome, w.version, deps, config); });
    solve_wall += seconds_since(round_start);

    std::vector<ActionRecord> passed;
    for (auto& s : states) {
      for (auto& e : s.round_events) report.events.push_back(e);
      s.round_events.clear();
      if (s.passed_this_round) {
        passed.push_back(learned_record(s, deps, config));
        s.passed_this_round = false;
      }
    }
    commit(space, std::move(passed), deps, report);
  }
  report.timings.solve_wall_s = solve_wall;
  finish_report(report, states, started);
  return report;
}

RunReport run(const std::vector<TaskSpec>& tasks, ActionSpace& space, const Deps& deps, const RunConfig& config) {
  return config.mode == UpdateMode::Serial ? run_serial(tasks, space, deps, config)
                                           : run_parallel(tasks, space, deps, config);
}

}  // namespace robocoder
