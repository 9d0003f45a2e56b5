#include "robocoder/entity.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "robocoder/text.hpp"

namespace robocoder {

namespace {

constexpr std::string_view kHeaderPrefix = "# entity:";

bool parse_limited(std::string_view value, bool& out) {
  const auto lowered = text::to_lower(text::trim(value));
  if (lowered == "yes" || lowered == "true" || lowered == "1") {
    out = true;
    return true;
  }
  if (lowered == "no" || lowered == "false" || lowered == "0") {
    out = false;
    return true;
  }
  return false;
}

double parse_number(std::string_view field, std::string_view what, std::size_t line) {
  double value = 0.0;
  if (!text::parse_double(field, value)) {
    throw EntityConfigError(line, "malformed " + std::string(what) + " '" + std::string(text::trim(field)) + "'");
  }
  return value;
}

std::string units(DofKind kind) { return kind == DofKind::Rotation ? "rad" : "m"; }

}  // namespace

std::string_view to_string(DofKind kind) {
  return kind == DofKind::Rotation ? "Rotation" : "Translation";
}

double DofSpec::clamp(double position) const {
  if (!limited) return position;
  return std::clamp(position, lower_limit, upper_limit);
}

const DofSpec* EntitySpec::find_dof(std::string_view dof_name) const {
  for (const auto& dof : dofs) {
    if (dof.name == dof_name) return &dof;
  }
  return nullptr;
}

EntityConfigError::EntityConfigError(std::size_t line, const std::string& message)
    : std::runtime_error("entity config line " + std::to_string(line) + ": " + message), line_(line) {}

const std::vector<std::string>& known_entity_names() {
  static const std::vector<std::string> names = {"Human",        "Ant",    "Cartpole", "SektionCabinet",
                                                 "FrankaPanda", "Kinova", "Anymal"};
  return names;
}

double centered_default(const DofSpec& dof) { return dof.limited ? dof.clamp(0.0) : 0.0; }

EntitySpec load_entity(std::string_view source) {
  EntitySpec entity;
  std::set<std::size_t> seen_indices;
  std::set<std::string> seen_names;
  std::size_t line_no = 0;
  bool have_header = false;

  for (const auto raw_line : text::split(source, '\n')) {
    ++line_no;
    const auto line = text::trim(raw_line);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (text::starts_with_ci(line, kHeaderPrefix)) {
        if (have_header) throw EntityConfigError(line_no, "duplicate entity header");
        entity.name = std::string(text::trim(line.substr(kHeaderPrefix.size())));
        if (entity.name.empty()) throw EntityConfigError(line_no, "empty entity name");
        have_header = true;
      }
      continue;
    }
    if (!have_header) throw EntityConfigError(line_no, "record before '# entity:' header");

    const auto fields = text::split(line, '|');
    if (fields.size() != 10 && fields.size() != 11) {
      throw EntityConfigError(line_no, "malformed record: expected 10 fields, got " + std::to_string(fields.size()));
    }

    DofSpec dof;
    long long index = 0;
    if (!text::parse_int(fields[0], index) || index < 0) {
      throw EntityConfigError(line_no, "malformed index '" + std::string(text::trim(fields[0])) + "'");
    }
    dof.index = static_cast<std::size_t>(index);
    dof.name = std::string(text::trim(fields[1]));
    if (dof.name.empty()) throw EntityConfigError(line_no, "empty dof name");

    const auto kind = text::to_lower(text::trim(fields[2]));
    if (kind == "rotation") {
      dof.kind = DofKind::Rotation;
    } else if (kind == "translation") {
      dof.kind = DofKind::Translation;
    } else {
      throw EntityConfigError(line_no, "unknown kind '" + std::string(text::trim(fields[2])) + "'");
    }

    dof.stiffness = parse_number(fields[3], "stiffness", line_no);
    dof.damping = parse_number(fields[4], "damping", line_no);
    dof.armature = parse_number(fields[5], "armature", line_no);
    if (!parse_limited(fields[6], dof.limited)) {
      throw EntityConfigError(line_no, "malformed limited flag '" + std::string(text::trim(fields[6])) + "'");
    }
    dof.lower_limit = parse_number(fields[7], "lower limit", line_no);
    dof.upper_limit = parse_number(fields[8], "upper limit", line_no);
    dof.default_position = parse_number(fields[9], "default", line_no);
    if (fields.size() == 11) dof.motion_note = std::string(text::trim(fields[10]));

    if (dof.stiffness < 0 || dof.damping < 0 || dof.armature < 0) {
      throw EntityConfigError(line_no, "stiffness, damping and armature must be non-negative");
    }
    if (dof.lower_limit > dof.upper_limit) {
      throw EntityConfigError(line_no, "lower limit " + text::fixed(dof.lower_limit, 2) + " exceeds upper limit " +
                                           text::fixed(dof.upper_limit, 2));
    }
    if (dof.limited && (dof.default_position < dof.lower_limit || dof.default_position > dof.upper_limit)) {
      throw EntityConfigError(line_no, "default position outside limits");
    }
    if (!seen_indices.insert(dof.index).second) {
      throw EntityConfigError(line_no, "duplicate index " + std::to_string(dof.index));
    }
    if (!seen_names.insert(dof.name).second) {
      throw EntityConfigError(line_no, "duplicate dof name '" + dof.name + "'");
    }
    entity.dofs.push_back(std::move(dof));
  }

  if (!have_header) throw EntityConfigError(line_no, "missing '# entity:' header");
  std::sort(entity.dofs.begin(), entity.dofs.end(),
            [](const DofSpec& a, const DofSpec& b) { return a.index < b.index; });
  for (std::size_t i = 0; i < entity.dofs.size(); ++i) {
    if (entity.dofs[i].index != i) {
      throw EntityConfigError(line_no, "dof indices are not contiguous: missing index " + std::to_string(i));
    }
  }
  return entity;
}

std::string serialize_entity(const EntitySpec& entity) {
  std::ostringstream out;
  out << kHeaderPrefix << ' ' << entity.name << '\n';
  out << "# index|name|kind|stiffness|damping|armature|limited|lower|upper|default|note\n";
  for (const auto& dof : entity.dofs) {
    out << dof.index << '|' << dof.name << '|' << to_string(dof.kind) << '|' << text::shortest(dof.stiffness) << '|'
        << text::shortest(dof.damping) << '|' << text::shortest(dof.armature) << '|' << (dof.limited ? "Yes" : "No")
        << '|' << text::shortest(dof.lower_limit) << '|' << text::shortest(dof.upper_limit) << '|'
        << text::shortest(dof.default_position);
    if (!dof.motion_note.empty()) out << '|' << dof.motion_note;
    out << '\n';
  }
  return out.str();
}

std::string dof_description(const EntitySpec& entity) {
  std::ostringstream out;
  for (const auto& dof : entity.dofs) {
    out << dof.index << ": " << dof.name << " (" << to_string(dof.kind) << "), limits [" << text::fixed(dof.lower_limit, 2)
        << ", " << text::fixed(dof.upper_limit, 2) << "] " << units(dof.kind);
    if (!dof.limited) out << " (unlimited, not enforced)";
    out << ", default " << text::fixed(dof.default_position, 2);
    if (!dof.motion_note.empty()) {
      out << "; " << dof.motion_note;
    } else if (dof.kind == DofKind::Rotation) {
      out << "; positive values rotate anticlockwise, negative clockwise";
    } else {
      out << "; positive values translate forward along the axis, negative backward";
    }
    out << '\n';
  }
  return out.str();
}

Pose default_pose(const EntitySpec& entity) {
  Pose pose;
  pose.reserve(entity.dofs.size());
  for (const auto& dof : entity.dofs) pose.push_back(dof.default_position);
  return pose;
}

EntityCatalog::EntityCatalog(std::vector<EntitySpec> entities) {
  for (auto& entity : entities) {
    auto name = entity.name;
    entities_.emplace(std::move(name), std::move(entity));
  }
}

EntityCatalog EntityCatalog::load_directory(const std::filesystem::path& dir) {
  std::vector<EntitySpec> entities;
  for (const auto& name : known_entity_names()) {
    const auto path = dir / (name + ".txt");
    EntitySpec entity;
    try {
      entity = load_entity(read_text_file(path));
    } catch (const EntityConfigError& e) {
      throw std::runtime_error(path.string() + ": " + e.what());
    }
    if (entity.name != name) {
      throw std::runtime_error(path.string() + ": header names entity '" + entity.name + "', expected '" + name + "'");
    }
    entities.push_back(std::move(entity));
  }
  return EntityCatalog(std::move(entities));
}

const EntitySpec* EntityCatalog::find(std::string_view name) const {
  const auto it = entities_.find(name);
  return it == entities_.end() ? nullptr : &it->second;
}

const EntitySpec& EntityCatalog::at(std::string_view name) const {
  const auto* entity = find(name);
  if (entity == nullptr) throw std::out_of_range("unknown entity '" + std::string(name) + "'");
  return *entity;
}

std::vector<std::string> EntityCatalog::names() const {
  std::vector<std::string> out;
  for (const auto& name : known_entity_names()) {
    if (entities_.count(name) != 0) out.push_back(name);
  }
  for (const auto& [name, entity] : entities_) {
    if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
  }
  return out;
}

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("ROBOCODER_DATA"); env != nullptr && *env != '\0') return env;
  return ROBOCODER_DATA_DIR;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace robocoder
