#include "robocoder/cli.hpp"

#include <sys/utsname.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "robocoder/action_store.hpp"
#include "robocoder/actor.hpp"
#include "robocoder/benchmark.hpp"
#include "robocoder/embedder.hpp"
#include "robocoder/evaluator.hpp"
#include "robocoder/orchestrator.hpp"
#include "robocoder/report.hpp"
#include "robocoder/searcher.hpp"
#include "robocoder/sim.hpp"
#include "robocoder/text.hpp"
#include "robocoder/trajectory_io.hpp"

namespace robocoder {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kToolVersion = "0.1.0";

/// Usage or configuration problem: exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GlobalOptions {
  std::uint64_t seed = 0;
  std::string data;
  std::string profiles;
};

struct RunOptions {
  std::vector<std::string> entities;
  std::string tasks_file;
  std::string mode = "parallel";
  int iterations = 5;
  std::size_t concurrency = 4;
  std::string provider = "scripted";
  std::string evaluator = "trace";
  std::string embedder = "local";
  std::size_t dimension = kDefaultEmbeddingDimension;
  std::string store = ".robocoder/store.jsonl";
  bool fresh_store = false;
  std::string out = "robocoder-out";
  bool no_feedback = false;
  std::string run_id;
  double upper = 0.99;
  double lower = 0.5;
  std::size_t k = 3;
  double dt = 1.0 / 60.0;
  double tolerance = 1e-3;
  std::size_t max_steps = 5000;
};

struct Context {
  fs::path data_dir;
  EntityCatalog catalog;
  json profiles = json::object();
};

Context make_context(const GlobalOptions& g) {
  Context c;
  c.data_dir = g.data.empty() ? default_data_dir() : fs::path(g.data);
  if (!fs::is_directory(c.data_dir / "entities")) {
    throw UsageError("data directory " + c.data_dir.string() + " has no entities/ folder");
  }
  c.catalog = EntityCatalog::load_directory(c.data_dir / "entities");
  fs::path profiles = g.profiles;
  if (profiles.empty() && fs::exists("robocoder-profiles.json")) profiles = "robocoder-profiles.json";
  if (!profiles.empty()) {
    try {
      c.profiles = json::parse(read_text_file(profiles));
    } catch (const json::exception& e) {
      throw UsageError(profiles.string() + ": " + e.what());
    }
    if (c.profiles.contains("profiles")) c.profiles = c.profiles["profiles"];
  }
  return c;
}

const EntitySpec& entity_arg(const Context& c, const std::string& name) {
  const auto* e = c.catalog.find(name);
  if (e == nullptr) throw UsageError("unknown entity '" + name + "' (known: " + text::join(c.catalog.names(), ", ") + ")");
  return *e;
}

const json& profile(const Context& c, const std::string& name) {
  if (!c.profiles.contains(name)) throw UsageError("no remote profile named '" + name + "' in the profiles file");
  return c.profiles[name];
}

net::HttpOptions http_options(const json& p) {
  net::HttpOptions o;
  if (p.contains("timeout_ms")) o.timeout = std::chrono::milliseconds(p["timeout_ms"].get<long long>());
  if (p.contains("retries")) o.retry.attempts = p["retries"].get<int>();
  return o;
}

std::unique_ptr<Embedder> make_cli_embedder(const Context& c, const RunOptions& o) {
  EmbedderConfig cfg;
  cfg.dimension = o.dimension;
  if (o.embedder == "local") return make_embedder(cfg);
  if (!text::starts_with_ci(o.embedder, "remote:")) throw UsageError("--embedder must be 'local' or 'remote:<profile>'");
  const auto& p = profile(c, o.embedder.substr(7));
  cfg.provider = EmbedderConfig::Provider::Remote;
  cfg.remote.endpoint = p.value("embedding_endpoint", p.value("endpoint", ""));
  cfg.remote.model = p.value("embedding_model", p.value("model", ""));
  cfg.remote.auth_env = p.value("auth_env", "");
  cfg.remote.max_in_flight = p.value("max_in_flight", 4);
  cfg.remote.http = http_options(p);
  return make_embedder(cfg);
}

std::map<std::pair<std::string, std::string>, std::string> load_solutions(const fs::path& path) {
  std::map<std::pair<std::string, std::string>, std::string> out;
  const auto content = read_text_file(path);
  for (const auto line : text::split(content, '\n')) {
    if (text::trim(line).empty()) continue;
    const auto j = json::parse(line);
    out[{j.at("entity").get<std::string>(), j.at("task").get<std::string>()}] = j.at("program").dump(2);
  }
  return out;
}

std::unique_ptr<ActorProvider> make_provider(const Context& c, const std::string& spec, net::ExchangeLog* log) {
  if (spec == "scripted") return std::make_unique<ScriptedProvider>(ScriptedProvider::rules_from_directory(c.data_dir / "scripted" / "benchmark"));
  if (text::starts_with_ci(spec, "scripted:")) {
    fs::path dir = spec.substr(9);
    if (!fs::is_directory(dir) && fs::is_directory(c.data_dir / dir)) dir = c.data_dir / dir;
    if (!fs::is_directory(dir)) throw UsageError("scripted fixture directory not found: " + dir.string());
    return std::make_unique<ScriptedProvider>(ScriptedProvider::rules_from_directory(dir));
  }
  if (text::starts_with_ci(spec, "kth:")) {
    const auto parts = text::split(std::string_view(spec).substr(4), ':');
    long long k = 0;
    if (parts.empty() || !text::parse_int(parts[0], k) || k < 1) throw UsageError("kth provider needs kth:<k>[:<solutions.jsonl>]");
    const fs::path file = parts.size() > 1 ? fs::path(std::string(spec.substr(5 + parts[0].size())))
                                           : c.data_dir / "benchmark" / "solutions.jsonl";
    return std::make_unique<KthTryProvider>(load_solutions(file), static_cast<int>(k));
  }
  if (text::starts_with_ci(spec, "remote:")) {
    const auto& p = profile(c, spec.substr(7));
    RemoteActorConfig cfg;
    cfg.endpoint = p.value("endpoint", "");
    cfg.model = p.value("model", "");
    cfg.auth_env = p.value("auth_env", "");
    cfg.temperature = p.value("temperature", 0.0);
    if (p.contains("max_tokens")) cfg.max_tokens = p["max_tokens"].get<int>();
    cfg.http = http_options(p);
    return std::make_unique<RemoteActorProvider>(cfg, log);
  }
  throw UsageError("unknown provider '" + spec + "' (use scripted[:<dir>], kth:<k>[:<file>] or remote:<profile>)");
}

std::unique_ptr<Evaluator> make_evaluator(const Context& c, const std::string& spec, net::ExchangeLog* log) {
  if (spec == "trace") return std::make_unique<TraceEvaluator>();
  if (text::starts_with_ci(spec, "remote:")) {
    const auto& p = profile(c, spec.substr(7));
    RemoteEvaluatorConfig cfg;
    cfg.endpoint = p.value("evaluator_endpoint", p.value("endpoint", ""));
    cfg.model = p.value("evaluator_model", p.value("model", ""));
    cfg.auth_env = p.value("auth_env", "");
    cfg.system_prompt = read_text_file(c.data_dir / "prompts" / "evaluator_system.txt");
    cfg.http = http_options(p);
    return std::make_unique<RemoteEvaluator>(cfg, log);
  }
  throw UsageError("unknown evaluator '" + spec + "' (use trace or remote:<profile>)");
}

std::vector<SeedSpec> shipped_seeds(const Context& c) {
  return load_seeds(c.data_dir / "benchmark" / "seeds.jsonl", c.catalog);
}

ActionSpace seeded_space(const Context& c, const Embedder& embedder) {
  return seed_initial_space(seed_fixtures(shipped_seeds(c)), c.catalog, embedder);
}

/// Loads the store, or seeds it (and writes the file) when missing or `fresh`.
ActionSpace open_store(const Context& c, const fs::path& path, bool fresh, const Embedder& embedder) {
  if (!fresh && fs::exists(path)) {
    auto space = store_log::load(path, c.catalog);
    if (space.dimension() != embedder.dimension()) {
      throw UsageError("store " + path.string() + " uses dimension " + std::to_string(space.dimension()) +
                       " but the embedder produces " + std::to_string(embedder.dimension()));
    }
    return space;
  }
  auto space = seeded_space(c, embedder);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  store_log::save(space, path, embedder.describe());
  return space;
}

RunConfig run_config(const RunOptions& o, const GlobalOptions& g) {
  RunConfig cfg;
  cfg.max_iterations = o.iterations;
  const auto mode = parse_update_mode(o.mode);
  if (!mode) throw UsageError("--mode must be serial or parallel");
  cfg.mode = *mode;
  cfg.concurrency = o.concurrency;
  cfg.feedback = o.no_feedback ? FeedbackMode::NoFeedback : FeedbackMode::Full;
  cfg.searcher = {o.upper, o.lower, o.k};
  cfg.sim = {o.dt, o.tolerance, o.max_steps};
  cfg.seed = g.seed;
  cfg.run_id = o.run_id.empty() ? "run-" + std::to_string(g.seed) : o.run_id;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

std::string iso_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

json environment_json(const Context& c) {
  utsname u{};
  uname(&u);
  return {{"tool_version", kToolVersion},
          {"compiler", __VERSION__},
          {"cplusplus", __cplusplus},
          {"os", std::string(u.sysname) + " " + u.release},
          {"machine", u.machine},
          {"hardware_concurrency", std::thread::hardware_concurrency()},
          {"data_dir", c.data_dir.string()},
          {"started_at", iso_now()}};
}

/// Keeps the global options and the `section.` options of a CLI11 config
/// dump, so reloading it does not activate other subcommands.
std::string config_section(const std::string& config_text, std::string_view section) {
  std::string kept;
  for (const auto line : text::split(config_text, '\n')) {
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) continue;
    const auto key = line.substr(0, eq);
    if (key.find('.') == std::string_view::npos || key.substr(0, section.size()) == section) {
      kept += std::string(line) + '\n';
    }
  }
  return kept;
}

/// `key=value` lines of a CLI11 config dump as a JSON object of strings.
json config_flags(const std::string& config_text) {
  json flags = json::object();
  for (const auto line : text::split(config_text, '\n')) {
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) continue;
    flags[std::string(text::trim(line.substr(0, eq)))] = std::string(text::trim(line.substr(eq + 1)));
  }
  return flags;
}

void print_summary(std::ostream& out, const RunReport& report) {
  const auto n = report.max_iterations;
  for (const auto& e : report.entities) {
    out << e << ": " << report.cumulative.at(e)[static_cast<std::size_t>(n)] << '/' << report.task_counts.at(e) << " ("
        << text::fixed(100.0 * report.pass_rate(e, n), 1) << "%)\n";
  }
  out << "All: " << report.cumulative.at("All")[static_cast<std::size_t>(n)] << '/' << report.task_counts.at("All")
      << " (" << text::fixed(100.0 * report.pass_rate("All", n), 1) << "%), actor calls " << report.actor_calls
      << ", store size " << report.space_sizes.back().size << '\n';
}

void add_run_options(CLI::App& cmd, RunOptions& o, bool bench) {
  if (bench) {
    cmd.add_option("--entity", o.entities, "Only run tasks of these entities (repeatable)");
    cmd.add_option("--tasks", o.tasks_file, "Task file (JSONL) instead of the shipped benchmark");
    cmd.add_option("--mode", o.mode, "Action space update strategy")->check(CLI::IsMember({"serial", "parallel"}))->capture_default_str();
    cmd.add_option("--concurrency", o.concurrency, "Tasks solved concurrently in parallel mode")->check(CLI::PositiveNumber)->capture_default_str();
    cmd.add_option("--out", o.out, "Output directory for report files")->capture_default_str();
    cmd.add_option("--run-id", o.run_id, "Run id stamped on learned actions (default run-<seed>)");
  }
  cmd.add_option("--iterations,-N", o.iterations, "Maximum actor iterations per task")->check(CLI::PositiveNumber)->capture_default_str();
  cmd.add_option("--provider", o.provider, "Actor: scripted[:<dir>], kth:<k>[:<file>] or remote:<profile>")->capture_default_str();
  cmd.add_option("--evaluator", o.evaluator, "Evaluator: trace or remote:<profile>")->capture_default_str();
  cmd.add_option("--embedder", o.embedder, "Embedder: local or remote:<profile>")->capture_default_str();
  cmd.add_option("--dim", o.dimension, "Embedding dimension")->check(CLI::PositiveNumber)->capture_default_str();
  cmd.add_option("--store", o.store, "Action store log")->capture_default_str();
  cmd.add_flag("--fresh-store", o.fresh_store, "Start from the seed-only action space");
  cmd.add_flag("--no-feedback", o.no_feedback, "Send the repair prompt without reason and solution");
  cmd.add_option("--upper", o.upper, "Exact-match threshold")->default_str(text::shortest(o.upper));
  cmd.add_option("--lower", o.lower, "Related-action threshold")->default_str(text::shortest(o.lower));
  cmd.add_option("--k", o.k, "Maximum related actions")->check(CLI::PositiveNumber)->capture_default_str();
  cmd.add_option("--dt", o.dt, "Simulator step in seconds")->default_str(text::shortest(o.dt));
  cmd.add_option("--tolerance", o.tolerance, "Arrival tolerance")->default_str(text::shortest(o.tolerance));
  cmd.add_option("--max-steps", o.max_steps, "Simulator step budget")->capture_default_str();
}

int bench_run(const GlobalOptions& g, const RunOptions& o, const std::string& config_text, std::ostream& out) {
  const auto ctx = make_context(g);
  const auto cfg = run_config(o, g);
  std::vector<TaskSpec> tasks;
  if (o.tasks_file.empty()) {
    tasks = load_benchmark(ctx.data_dir / "benchmark" / "tasks.jsonl", ctx.catalog);
  } else {
    tasks = parse_tasks(read_text_file(o.tasks_file), ctx.catalog);
  }
  if (!o.entities.empty()) {
    std::vector<TaskSpec> picked;
    for (const auto& e : o.entities) {
      entity_arg(ctx, e);
      for (auto& t : filter_entity(tasks, e)) picked.push_back(std::move(t));
    }
    tasks = std::move(picked);
  }
  if (tasks.empty()) throw UsageError("no tasks selected");

  fs::create_directories(o.out);
  net::ExchangeLog log(fs::path(o.out) / "exchanges.jsonl");
  auto embedder = make_cli_embedder(ctx, o);
  auto provider = make_provider(ctx, o.provider, &log);
  auto evaluator = make_evaluator(ctx, o.evaluator, &log);
  auto space = open_store(ctx, o.store, o.fresh_store, *embedder);
  const auto version_before = space.version();
  const auto size_before = space.size();

  Deps deps{ctx.catalog, *embedder, *provider, *evaluator, load_actor_system_prompt(ctx.data_dir), {}, fs::path(o.store)};
  const auto report = run(tasks, space, deps, cfg);
  write_report(report, o.out);

  json manifest = {{"command", "bench run"},
                   {"config", config_text},
                   {"flags", config_flags(config_text)},
                   {"resolved",
                    {{"run_id", cfg.run_id},
                     {"provider", provider->describe()},
                     {"evaluator", evaluator->describe()},
                     {"embedder", embedder->describe()},
                     {"tasks", tasks.size()},
                     {"store_version_before", version_before},
                     {"store_size_before", size_before},
                     {"store_version_after", space.version()},
                     {"store_size_after", space.size()}}},
                   {"environment", environment_json(ctx)}};
  write_text_file(fs::path(o.out) / "manifest.json", manifest.dump(2) + "\n");
  print_summary(out, report);
  out << "reports written to " << o.out << '\n';
  for (const auto& r : report.results) {
    if (r.status == TaskStatus::Failed) return kExitFailures;
  }
  return kExitOk;
}

std::optional<TaskSpec> find_known_task(const Context& c, const std::string& entity, const std::string& task) {
  for (const auto& t : parse_tasks(read_text_file(c.data_dir / "benchmark" / "tasks.jsonl"), c.catalog)) {
    if (t.entity == entity && t.text == task) return t;
  }
  for (const auto& s : shipped_seeds(c)) {
    if (s.fixture.entity == entity && s.fixture.task_text == task) return TaskSpec{"seed", entity, task, s.predicate};
  }
  return std::nullopt;
}

int task_solve(const GlobalOptions& g, const RunOptions& o, const std::string& entity_name, const std::string& task_text,
               const std::string& predicate_file, bool commit, std::ostream& out) {
  const auto ctx = make_context(g);
  const auto& entity = entity_arg(ctx, entity_name);
  auto cfg = run_config(o, g);
  std::optional<TaskSpec> task;
  if (!predicate_file.empty()) {
    json j;
    try {
      j = json::parse(read_text_file(predicate_file));
    } catch (const json::exception& e) {
      throw UsageError(predicate_file + ": " + e.what());
    }
    task = TaskSpec{"adhoc", entity.name, task_text, parse_predicate(j, entity)};
  } else {
    task = find_known_task(ctx, entity.name, task_text);
  }
  if (!task) {
    if (o.evaluator == "trace") {
      throw UsageError("no predicate known for this task; pass --predicate <file> or use --evaluator remote:<profile>");
    }
    task = TaskSpec{"adhoc", entity.name, task_text, TaskPredicate{}};
  }

  auto embedder = make_cli_embedder(ctx, o);
  auto provider = make_provider(ctx, o.provider, nullptr);
  auto evaluator = make_evaluator(ctx, o.evaluator, nullptr);
  auto space = open_store(ctx, o.store, o.fresh_store, *embedder);
  Deps deps{ctx.catalog, *embedder, *provider, *evaluator, load_actor_system_prompt(ctx.data_dir), {}, {}};
  const auto result = solve_task(*task, space.snapshot(entity.name), deps, cfg);

  out << "status " << to_string(result.status);
  if (result.status == TaskStatus::PassedByActor) out << " (iteration " << result.pass_iteration << ")";
  if (result.status == TaskStatus::PassedBySearch) out << " (" << result.matched_action << ")";
  out << "\nactor calls " << result.actor_calls << '\n';
  for (const auto& a : result.attempts) {
    out << "iteration " << a.iteration << ": " << (a.verdict.completed ? "completed" : "not completed");
    if (!a.verdict.completed) out << " - " << a.verdict.reasons;
    out << '\n';
  }
  if (result.program) out << serialize_program(*result.program) << '\n';
  if (result.status == TaskStatus::PassedByActor && commit) {
    ActionRecord r;
    r.entity = entity.name;
    r.task_text = task_text;
    r.program = *result.program;
    r.embedding = embedder->embed(task_text);
    r.provenance = Provenance::learned(result.pass_iteration, cfg.run_id);
    r.created_at_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::system_clock::now().time_since_epoch())
                          .count();
    const auto version = space.commit_passed({r}, ctx.catalog);
    r.id = space.find(r.entity, r.task_text)->id;
    store_log::append_commit(o.store, {r}, version, space.dimension(), embedder->describe());
    out << "committed " << r.id << '\n';
  }
  return result.status == TaskStatus::Failed ? kExitFailures : kExitOk;
}

int sim_exec(const GlobalOptions& g, const std::string& entity_name, const std::string& program_file, const SimConfig& sim,
             const std::string& export_file, std::ostream& out) {
  const auto ctx = make_context(g);
  const auto& entity = entity_arg(ctx, entity_name);
  auto parsed = parse_program(read_text_file(program_file), entity);
  if (const auto* err = std::get_if<ParseError>(&parsed)) throw UsageError(program_file + ": " + err->reason);
  const auto& program = std::get<ActionProgram>(parsed);
  if (!sim.valid()) throw UsageError("--dt, --tolerance and --max-steps must be positive");
  for (const auto& issue : validate_program(program, entity).issues) {
    out << (issue.severity == IssueSeverity::Error ? "error: " : "note: ") << issue.message << '\n';
  }
  const auto result = simulate(program, entity, sim);
  out << "return " << result.return_code << '\n';
  if (!result.ok()) {
    out << "error " << to_string(result.error->kind) << ": " << result.error->message << '\n';
    return kExitFailures;
  }
  const auto& traj = *result.trajectory;
  out << "steps " << traj.step_count() << '\n';
  for (const auto& kf : traj.keyframes) {
    out << "keyframe step " << kf.step_index << " state " << kf.state_index << " cycle " << kf.cycle_index << '\n';
  }
  out << "final";
  for (std::size_t d = 0; d < entity.dof_count(); ++d) {
    out << ' ' << entity.dofs[d].name << '=' << text::fixed(traj.poses.back()[d], 3);
  }
  out << '\n';
  if (!export_file.empty()) {
    write_text_file(export_file, export_trajectory(traj, sim));
    out << "trajectory written to " << export_file << '\n';
  }
  return kExitOk;
}

int store_inspect(const GlobalOptions& g, const RunOptions& o, const std::string& entity, std::ostream& out) {
  const auto ctx = make_context(g);
  if (!fs::exists(o.store)) throw UsageError("store " + o.store + " does not exist (run `store seed` first)");
  const auto space = store_log::load(o.store, ctx.catalog);
  out << "store " << o.store << " version " << space.version() << " dimension " << space.dimension() << " records "
      << space.size() << '\n';
  for (const auto& name : space.entities()) {
    if (!entity.empty() && name != entity) continue;
    const auto view = space.snapshot(name);
    out << name << " (" << view.records.size() << ")\n";
    for (const auto& r : view.records) {
      out << "  " << r->id << "  "
          << (r->provenance.kind == Provenance::Kind::Seed
                  ? std::string("seed")
                  : "learned " + r->provenance.run_id + " iteration " + std::to_string(r->provenance.iteration))
          << '\n';
    }
  }
  return kExitOk;
}

int store_seed(const GlobalOptions& g, const RunOptions& o, bool force, std::ostream& out) {
  const auto ctx = make_context(g);
  if (fs::exists(o.store) && !force) throw UsageError("store " + o.store + " exists; pass --force to overwrite");
  auto embedder = make_cli_embedder(ctx, o);
  const auto space = open_store(ctx, o.store, true, *embedder);
  out << "seeded " << o.store << " with " << space.size() << " actions\n";
  return kExitOk;
}

int search_query(const GlobalOptions& g, const RunOptions& o, const std::string& entity_name, const std::string& task,
                 bool all_scores, std::ostream& out) {
  const auto ctx = make_context(g);
  const auto& entity = entity_arg(ctx, entity_name);
  const SearcherConfig cfg{o.upper, o.lower, o.k};
  if (!cfg.valid()) throw UsageError("thresholds must satisfy 0 <= lower < upper <= 1 and k >= 1");
  auto embedder = make_cli_embedder(ctx, o);
  const auto space = fs::exists(o.store) && !o.fresh_store ? store_log::load(o.store, ctx.catalog) : seeded_space(ctx, *embedder);
  const auto view = space.snapshot(entity.name);
  const auto query = embedder->embed(task);
  const auto outcome = select_actions(query, view, cfg);
  out << "outcome " << to_string(outcome.kind) << '\n';
  for (std::size_t i = 0; i < outcome.records.size(); ++i) {
    out << text::fixed(outcome.scores[i], 4) << "  " << outcome.records[i]->task_text << "  [" << outcome.records[i]->id
        << "]\n";
  }
  if (all_scores) {
    out << "all scores:\n";
    for (const auto& r : view.records) out << text::fixed(cosine(query, r->embedding), 4) << "  " << r->task_text << '\n';
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"robocoder: skill learning for simulated entities with a growing action space", "robocoder"};
  app.set_config("--config", "", "Config file (TOML); command-line flags override it");
  app.set_version_flag("--version", kToolVersion);
  app.fallthrough();
  app.require_subcommand(1);
  app.footer(
      "Commands:\n"
      "  bench run [--entity E] [--mode serial|parallel] [-N n] [--provider P] [--store F] [--out D]\n"
      "  task solve <entity> <text>\n"
      "  sim exec <entity> <program-file>\n"
      "  store inspect\n"
      "  store seed\n"
      "  search query <entity> <text> [--k K] [--upper U] [--lower L]\n"
      "  report render <run-dir>\n"
      "\n"
      "Exit codes: 0 success, 1 run finished with failed tasks, 2 usage or configuration error.");

  GlobalOptions g;
  app.add_option("--seed", g.seed, "Random seed recorded in the manifest and passed to providers")->capture_default_str();
  app.add_option("--data", g.data, "Data directory (entities, benchmark, prompts)");
  app.add_option("--profiles", g.profiles, "JSON file with remote provider profiles");

  RunOptions o;
  auto* bench = app.add_subcommand("bench", "Benchmark runs");
  bench->require_subcommand(1);
  bench->fallthrough();
  auto* bench_run_cmd = bench->add_subcommand("run", "Run the benchmark (or a task file) and write reports");
  bench_run_cmd->fallthrough();
  add_run_options(*bench_run_cmd, o, true);

  auto* task = app.add_subcommand("task", "Single tasks");
  task->require_subcommand(1);
  task->fallthrough();
  auto* solve = task->add_subcommand("solve", "Solve one task and commit the learned action");
  solve->fallthrough();
  std::string solve_entity, solve_text, predicate_file;
  bool no_commit = false;
  solve->add_option("entity", solve_entity, "Entity name")->required();
  solve->add_option("text", solve_text, "Task text")->required();
  solve->add_option("--predicate", predicate_file, "Task predicate (JSON) for the trace evaluator");
  solve->add_flag("--no-commit", no_commit, "Do not add a passed action to the store");
  add_run_options(*solve, o, false);

  auto* sim = app.add_subcommand("sim", "Simulator");
  sim->require_subcommand(1);
  sim->fallthrough();
  auto* exec = sim->add_subcommand("exec", "Execute an action program and print the outcome");
  exec->fallthrough();
  std::string sim_entity, program_file, export_file;
  SimConfig sim_cfg;
  exec->add_option("entity", sim_entity, "Entity name")->required();
  exec->add_option("program", program_file, "Program file")->required()->check(CLI::ExistingFile);
  exec->add_option("--dt", sim_cfg.dt, "Simulator step in seconds")->default_str(text::shortest(sim_cfg.dt));
  exec->add_option("--tolerance", sim_cfg.tolerance, "Arrival tolerance")->default_str(text::shortest(sim_cfg.tolerance));
  exec->add_option("--max-steps", sim_cfg.max_steps, "Simulator step budget")->capture_default_str();
  exec->add_option("--export", export_file, "Write the trajectory to this file");

  auto* store = app.add_subcommand("store", "Action store");
  store->require_subcommand(1);
  store->fallthrough();
  auto* inspect = store->add_subcommand("inspect", "List the stored actions");
  inspect->fallthrough();
  std::string inspect_entity;
  inspect->add_option("--store", o.store, "Action store log")->capture_default_str();
  inspect->add_option("--entity", inspect_entity, "Only this entity");
  auto* seed = store->add_subcommand("seed", "Create the store from the shipped seed actions");
  seed->fallthrough();
  bool force = false;
  seed->add_option("--store", o.store, "Action store log")->capture_default_str();
  seed->add_option("--embedder", o.embedder, "Embedder: local or remote:<profile>")->capture_default_str();
  seed->add_option("--dim", o.dimension, "Embedding dimension")->check(CLI::PositiveNumber)->capture_default_str();
  seed->add_flag("--force", force, "Overwrite an existing store");

  auto* search = app.add_subcommand("search", "Action searcher");
  search->require_subcommand(1);
  search->fallthrough();
  auto* query = search->add_subcommand("query", "Score a task against the action space");
  query->fallthrough();
  std::string query_entity, query_text;
  bool all_scores = false;
  query->add_option("entity", query_entity, "Entity name")->required();
  query->add_option("text", query_text, "Task text")->required();
  query->add_option("--k", o.k, "Maximum related actions")->check(CLI::PositiveNumber)->capture_default_str();
  query->add_option("--upper", o.upper, "Exact-match threshold")->default_str(text::shortest(o.upper));
  query->add_option("--lower", o.lower, "Related-action threshold")->default_str(text::shortest(o.lower));
  query->add_option("--store", o.store, "Action store log (seed space when missing)")->capture_default_str();
  query->add_option("--embedder", o.embedder, "Embedder: local or remote:<profile>")->capture_default_str();
  query->add_option("--dim", o.dimension, "Embedding dimension")->check(CLI::PositiveNumber)->capture_default_str();
  query->add_flag("--fresh-store", o.fresh_store, "Search the seed-only action space");
  query->add_flag("--all", all_scores, "Also print the score of every action");

  auto* report = app.add_subcommand("report", "Reports");
  report->require_subcommand(1);
  report->fallthrough();
  auto* render = report->add_subcommand("render", "Re-render pass_rate.csv and pass_rate.svg from results.json");
  render->fallthrough();
  std::string run_dir;
  render->add_option("run-dir", run_dir, "Directory holding results.json")->required()->check(CLI::ExistingDirectory);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    // Help for the deepest subcommand that was reached.
    const CLI::App* deepest = &app;
    for (bool moved = true; moved;) {
      moved = false;
      for (const auto* sub : deepest->get_subcommands()) {
        deepest = sub;
        moved = true;
        break;
      }
    }
    err << deepest->help();
    return kExitUsage;
  }

  try {
    if (*bench_run_cmd) return bench_run(g, o, config_section(app.config_to_str(true, false), "bench.run."), out);
    if (*solve) return task_solve(g, o, solve_entity, solve_text, predicate_file, !no_commit, out);
    if (*exec) return sim_exec(g, sim_entity, program_file, sim_cfg, export_file, out);
    if (*inspect) return store_inspect(g, o, inspect_entity, out);
    if (*seed) return store_seed(g, o, force, out);
    if (*query) return search_query(g, o, query_entity, query_text, all_scores, out);
    if (*render) {
      render_report(run_dir);
      out << "rendered " << run_dir << '\n';
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const EntityConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const BenchmarkError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const StoreError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailures;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace robocoder
