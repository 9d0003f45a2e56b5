#include "robocoder/action_store.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "robocoder/sim.hpp"
#include "robocoder/text.hpp"

namespace robocoder {

namespace {

constexpr const char* kLogFormat = "robocoder-action-log";
constexpr int kLogVersion = 1;

std::string record_id(const std::string& entity, const std::string& task, std::uint64_t version) {
  return entity + "/" + slugify(task) + "@v" + std::to_string(version);
}

void check_record(const ActionRecord& record, const EntityCatalog& catalog, std::size_t dimension) {
  const auto* entity = catalog.find(record.entity);
  if (entity == nullptr) throw StoreError("record for unknown entity '" + record.entity + "'");
  if (text::trim(record.task_text).empty()) throw StoreError("record with empty task text for " + record.entity);
  if (record.embedding.dimension() != dimension) {
    throw StoreError("record '" + record.task_text + "' has embedding dimension " +
                     std::to_string(record.embedding.dimension()) + ", store uses " + std::to_string(dimension));
  }
  const auto report = validate_program(record.program, *entity);
  if (!report.ok) throw StoreError("record '" + record.task_text + "' fails validation: " + report.summary());
}

nlohmann::json provenance_json(const Provenance& p) {
  if (p.kind == Provenance::Kind::Seed) return {{"kind", "seed"}};
  return {{"kind", "learned"}, {"iteration", p.iteration}, {"run_id", p.run_id}};
}

nlohmann::json record_json(const ActionRecord& r) {
  return {{"id", r.id},
          {"entity", r.entity},
          {"task_text", r.task_text},
          {"program", serialize_program(r.program)},
          {"embedding", r.embedding.values},
          {"provenance", provenance_json(r.provenance)},
          {"created_at_ms", r.created_at_ms}};
}

nlohmann::json header_json(std::size_t dimension, const std::string& embedder_name) {
  return {{"format", kLogFormat}, {"format_version", kLogVersion}, {"dimension", dimension},
          {"embedder", embedder_name}};
}

[[noreturn]] void bad_line(std::size_t line, const std::string& what) {
  throw StoreError("action log line " + std::to_string(line) + ": " + what);
}

ActionRecord record_from_json(const nlohmann::json& j, const EntityCatalog& catalog, std::size_t line) {
  ActionRecord r;
  r.id = j.at("id").get<std::string>();
  r.entity = j.at("entity").get<std::string>();
  r.task_text = j.at("task_text").get<std::string>();
  const auto* entity = catalog.find(r.entity);
  if (entity == nullptr) bad_line(line, "unknown entity '" + r.entity + "'");
  auto parsed = parse_program(j.at("program").get<std::string>(), *entity);
  if (const auto* err = std::get_if<ParseError>(&parsed)) bad_line(line, "bad program: " + err->reason);
  r.program = std::get<ActionProgram>(std::move(parsed));
  r.embedding.values = j.at("embedding").get<std::vector<double>>();
  const auto& p = j.at("provenance");
  const auto kind = p.at("kind").get<std::string>();
  if (kind == "seed") {
    r.provenance = Provenance::seed();
  } else if (kind == "learned") {
    r.provenance = Provenance::learned(p.at("iteration").get<int>(), p.at("run_id").get<std::string>());
  } else {
    bad_line(line, "unknown provenance '" + kind + "'");
  }
  r.created_at_ms = j.at("created_at_ms").get<std::int64_t>();
  return r;
}

}  // namespace

std::string slugify(std::string_view text) {
  std::string out;
  bool dash = false;
  for (const char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      if (dash && !out.empty()) out += '-';
      out += static_cast<char>(std::tolower(u));
      dash = false;
    } else {
      dash = true;
    }
  }
  return out;
}

ActionSpace::ActionSpace(std::size_t dimension) : dimension_(dimension) {
  if (dimension_ == 0) throw std::invalid_argument("embedding dimension must be >= 1");
}

std::size_t ActionSpace::size() const {
  std::size_t n = 0;
  for (const auto& [name, partition] : partitions_) n += partition->size();
  return n;
}

std::size_t ActionSpace::size(std::string_view entity) const {
  const auto it = partitions_.find(entity);
  return it == partitions_.end() ? 0 : it->second->size();
}

std::vector<std::string> ActionSpace::entities() const {
  std::vector<std::string> out;
  for (const auto& [name, partition] : partitions_) out.push_back(name);
  return out;
}

SpaceView ActionSpace::snapshot(std::string_view entity) const {
  SpaceView view;
  view.entity = std::string(entity);
  view.version = version_;
  if (const auto it = partitions_.find(entity); it != partitions_.end()) {
    view.records = it->second->records;
    view.squared_norms = it->second->squared_norms;
  }
  return view;
}

const ActionRecord* ActionSpace::find(std::string_view entity, std::string_view task_text) const {
  const auto it = partitions_.find(entity);
  if (it == partitions_.end()) return nullptr;
  for (const auto& r : it->second->records) {
    if (r->task_text == task_text) return r.get();
  }
  return nullptr;
}

std::uint64_t ActionSpace::commit_passed(std::vector<ActionRecord> passed, const EntityCatalog& catalog) {
  for (const auto& r : passed) check_record(r, catalog, dimension_);
  const auto next = version_ + 1;
  for (auto& r : passed) r.id = record_id(r.entity, r.task_text, next);
  apply_commit(passed, next);
  return next;
}

void ActionSpace::apply_commit(const std::vector<ActionRecord>& records, std::uint64_t version) {
  std::map<std::string, Partition, std::less<>> touched;
  for (const auto& r : records) {
    auto it = touched.find(r.entity);
    if (it == touched.end()) {
      Partition base;
      if (const auto p = partitions_.find(r.entity); p != partitions_.end()) base = *p->second;
      it = touched.emplace(r.entity, std::move(base)).first;
    }
    auto& partition = it->second;
    auto rec = std::make_shared<const ActionRecord>(r);
    bool replaced = false;
    const double norm2 = squared_norm(rec->embedding.values);
    for (std::size_t i = 0; i < partition.records.size(); ++i) {
      if (partition.records[i]->task_text == r.task_text) {
        partition.records[i] = rec;
        partition.squared_norms[i] = norm2;
        replaced = true;
        break;
      }
    }
    if (!replaced) {
      partition.records.push_back(std::move(rec));
      partition.squared_norms.push_back(norm2);
    }
  }
  for (auto& [name, partition] : touched) {
    partitions_[name] = std::make_shared<const Partition>(std::move(partition));
  }
  version_ = version;
}

bool ActionSpace::same_contents(const ActionSpace& other) const {
  if (version_ != other.version_ || dimension_ != other.dimension_) return false;
  if (entities() != other.entities()) return false;
  for (const auto& [name, partition] : partitions_) {
    const auto& theirs = *other.partitions_.at(name);
    if (partition->size() != theirs.size()) return false;
    for (std::size_t i = 0; i < partition->size(); ++i) {
      if (!(*partition->records[i] == *theirs.records[i])) return false;
    }
  }
  return true;
}

ActionSpace seed_initial_space(const std::vector<SeedFixture>& fixtures, const EntityCatalog& catalog,
                               const Embedder& embedder) {
  ActionSpace space(embedder.dimension());
  std::vector<ActionRecord> records;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& f : fixtures) {
    const auto* entity = catalog.find(f.entity);
    if (entity == nullptr) throw StoreError("seed '" + f.task_text + "' names unknown entity '" + f.entity + "'");
    if (!seen.emplace(f.entity, f.task_text).second) {
      throw StoreError("duplicate seed '" + f.task_text + "' for " + f.entity);
    }
    const auto report = validate_program(f.program, *entity);
    if (!report.ok) throw StoreError("seed '" + f.task_text + "' fails validation: " + report.summary());
    const auto sim = simulate(f.program, *entity);
    if (!sim.ok()) throw StoreError("seed '" + f.task_text + "' does not simulate: " + sim.error->message);

    ActionRecord r;
    r.id = record_id(f.entity, f.task_text, 0);
    r.entity = f.entity;
    r.task_text = f.task_text;
    r.program = f.program;
    r.embedding = embedder.embed(f.task_text);
    r.provenance = Provenance::seed();
    r.created_at_ms = 0;
    records.push_back(std::move(r));
  }
  space.apply_commit(records, 0);
  return space;
}

std::vector<std::string> embedding_mismatches(const ActionSpace& space, const Embedder& embedder, double tolerance) {
  std::vector<std::string> out;
  for (const auto& entity : space.entities()) {
    for (const auto& r : space.snapshot(entity).records) {
      const auto fresh = embedder.embed(r->task_text);
      bool same = fresh.dimension() == r->embedding.dimension();
      for (std::size_t i = 0; same && i < fresh.dimension(); ++i) {
        same = std::abs(fresh.values[i] - r->embedding.values[i]) <= tolerance;
      }
      if (!same) out.push_back(r->entity + "/" + r->task_text);
    }
  }
  return out;
}

namespace store_log {

void save(const ActionSpace& space, const std::filesystem::path& path, const std::string& embedder_name) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw StoreError("cannot write " + path.string());
  out << header_json(space.dimension(), embedder_name).dump() << '\n';
  std::size_t count = 0;
  for (const auto& entity : space.entities()) {
    for (const auto& r : space.snapshot(entity).records) {
      out << nlohmann::json{{"type", "record"}, {"record", record_json(*r)}}.dump() << '\n';
      ++count;
    }
  }
  out << nlohmann::json{{"type", "commit"}, {"version", space.version()}, {"records", count}}.dump() << '\n';
  if (!out) throw StoreError("failed writing " + path.string());
}

void append_commit(const std::filesystem::path& path, const std::vector<ActionRecord>& records,
                   std::uint64_t version, std::size_t dimension, const std::string& embedder_name) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw StoreError("cannot append to " + path.string());
  if (fresh) out << header_json(dimension, embedder_name).dump() << '\n';
  for (const auto& r : records) out << nlohmann::json{{"type", "record"}, {"record", record_json(r)}}.dump() << '\n';
  out << nlohmann::json{{"type", "commit"}, {"version", version}, {"records", records.size()}}.dump() << '\n';
  out.flush();
  if (!out) throw StoreError("failed appending to " + path.string());
}

ActionSpace load_text(std::string_view source, const EntityCatalog& catalog) {
  auto lines = text::split(source, '\n');
  const bool terminated = !lines.empty() && lines.back().empty();
  if (terminated) lines.pop_back();
  if (lines.empty()) throw StoreError("action log line 1: missing header");

  std::optional<ActionSpace> space;
  std::vector<ActionRecord> pending;
  std::size_t pending_first_line = 0;
  bool any_commit = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (i + 1 == lines.size() && !terminated) bad_line(line_no, "truncated (no trailing newline)");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(lines[i]);
    } catch (const nlohmann::json::exception&) {
      bad_line(line_no, "not valid JSON");
    }
    try {
      if (i == 0) {
        if (!j.is_object() || j.value("format", "") != kLogFormat) bad_line(line_no, "missing header");
        if (j.at("format_version").get<int>() != kLogVersion) bad_line(line_no, "unsupported format version");
        space.emplace(j.at("dimension").get<std::size_t>());
        continue;
      }
      const auto type = j.at("type").get<std::string>();
      if (type == "record") {
        if (pending.empty()) pending_first_line = line_no;
        auto record = record_from_json(j.at("record"), catalog, line_no);
        try {
          check_record(record, catalog, space->dimension());
        } catch (const StoreError& e) {
          bad_line(line_no, e.what());
        }
        pending.push_back(std::move(record));
      } else if (type == "commit") {
        const auto version = j.at("version").get<std::uint64_t>();
        if (j.at("records").get<std::size_t>() != pending.size()) bad_line(line_no, "commit record count mismatch");
        if (any_commit && version <= space->version()) bad_line(line_no, "commit version does not increase");
        space->apply_commit(pending, version);
        pending.clear();
        any_commit = true;
      } else {
        bad_line(line_no, "unknown line type '" + type + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      bad_line(line_no, std::string("malformed entry: ") + e.what());
    }
  }
  if (!pending.empty()) bad_line(pending_first_line, "records without a closing commit");
  if (!any_commit) bad_line(lines.size(), "log holds no commit");
  return std::move(*space);
}

ActionSpace load(const std::filesystem::path& path, const EntityCatalog& catalog) {
  return load_text(read_text_file(path), catalog);
}

}  // namespace store_log

}  // namespace robocoder
