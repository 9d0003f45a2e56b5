#include "robocoder/benchmark.hpp"

#include <set>

#include <nlohmann/json.hpp>

#include "robocoder/text.hpp"

namespace robocoder {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& origin, std::size_t line, const std::string& what) {
  throw BenchmarkError(origin + ":" + std::to_string(line) + ": " + what);
}

template <typename Fn>
void for_each_record(std::string_view jsonl, const std::string& origin, Fn&& fn) {
  std::size_t line_no = 0;
  for (const auto raw : text::split(jsonl, '\n')) {
    ++line_no;
    const auto line = text::trim(raw);
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception&) {
      bad(origin, line_no, "not valid JSON");
    }
    if (!j.is_object()) bad(origin, line_no, "expected an object");
    try {
      fn(j, line_no);
    } catch (const PredicateError& e) {
      bad(origin, line_no, e.what());
    } catch (const json::exception& e) {
      bad(origin, line_no, std::string("malformed record: ") + e.what());
    }
  }
}

const EntitySpec& entity_of(const json& j, const EntityCatalog& catalog, const std::string& origin, std::size_t line) {
  const auto name = j.at("entity").get<std::string>();
  const auto* entity = catalog.find(name);
  if (entity == nullptr) bad(origin, line, "unknown entity '" + name + "'");
  return *entity;
}

}  // namespace

const std::map<std::string, std::size_t, std::less<>>& expected_task_counts() {
  static const std::map<std::string, std::size_t, std::less<>> counts = {
      {"Human", 18}, {"Ant", 8}, {"Cartpole", 7}, {"SektionCabinet", 7},
      {"FrankaPanda", 17}, {"Kinova", 12}, {"Anymal", 11},
  };
  return counts;
}

std::vector<TaskSpec> parse_tasks(std::string_view jsonl, const EntityCatalog& catalog) {
  std::vector<TaskSpec> tasks;
  std::set<std::string> ids;
  const std::string origin = "tasks";
  for_each_record(jsonl, origin, [&](const json& j, std::size_t line) {
    TaskSpec t;
    t.id = j.at("id").get<std::string>();
    const auto& entity = entity_of(j, catalog, origin, line);
    t.entity = entity.name;
    t.text = j.at("text").get<std::string>();
    if (text::trim(t.text).empty()) bad(origin, line, "empty task text");
    if (!ids.insert(t.id).second) bad(origin, line, "duplicate task id '" + t.id + "'");
    t.predicate = parse_predicate(j.at("predicate"), entity);
    tasks.push_back(std::move(t));
  });
  return tasks;
}

std::vector<TaskSpec> load_benchmark(const std::filesystem::path& path, const EntityCatalog& catalog) {
  auto tasks = parse_tasks(read_text_file(path), catalog);
  if (tasks.size() != kBenchmarkTaskCount) {
    throw BenchmarkError(path.string() + ": expected " + std::to_string(kBenchmarkTaskCount) + " tasks, found " +
                         std::to_string(tasks.size()));
  }
  std::map<std::string, std::size_t, std::less<>> counts;
  for (const auto& t : tasks) ++counts[t.entity];
  for (const auto& [entity, expected] : expected_task_counts()) {
    const auto found = counts.count(entity) ? counts.at(entity) : 0;
    if (found != expected) {
      throw BenchmarkError(path.string() + ": expected " + std::to_string(expected) + " " + entity + " tasks, found " +
                           std::to_string(found));
    }
  }
  return tasks;
}

std::vector<SeedSpec> load_seeds(const std::filesystem::path& path, const EntityCatalog& catalog) {
  std::vector<SeedSpec> seeds;
  const std::string origin = path.filename().string();
  for_each_record(read_text_file(path), origin, [&](const json& j, std::size_t line) {
    SeedSpec s;
    const auto& entity = entity_of(j, catalog, origin, line);
    s.fixture.entity = entity.name;
    s.fixture.task_text = j.at("task_text").get<std::string>();
    const auto& program = j.at("program");
    auto parsed = parse_program(program.is_string() ? program.get<std::string>() : program.dump(), entity);
    if (const auto* err = std::get_if<ParseError>(&parsed)) bad(origin, line, "bad program: " + err->reason);
    s.fixture.program = std::get<ActionProgram>(std::move(parsed));
    s.predicate = parse_predicate(j.at("predicate"), entity);
    seeds.push_back(std::move(s));
  });
  return seeds;
}

std::vector<SeedFixture> seed_fixtures(const std::vector<SeedSpec>& seeds) {
  std::vector<SeedFixture> out;
  out.reserve(seeds.size());
  for (const auto& s : seeds) out.push_back(s.fixture);
  return out;
}

std::vector<std::string> lint_seed_overlap(const std::vector<SeedSpec>& seeds, const std::vector<TaskSpec>& tasks) {
  std::set<std::pair<std::string, std::string>> seed_keys;
  for (const auto& s : seeds) seed_keys.emplace(s.fixture.entity, s.fixture.task_text);
  std::vector<std::string> overlaps;
  for (const auto& t : tasks) {
    if (seed_keys.count({t.entity, t.text})) overlaps.push_back(t.entity + ": " + t.text);
  }
  return overlaps;
}

std::vector<TaskSpec> filter_entity(const std::vector<TaskSpec>& tasks, std::string_view entity) {
  std::vector<TaskSpec> out;
  for (const auto& t : tasks) {
    if (t.entity == entity) out.push_back(t);
  }
  return out;
}

}  // namespace robocoder
