#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace robocoder {

enum class DofKind { Rotation, Translation };

std::string_view to_string(DofKind kind);

/// One controllable joint coordinate. Positions are radians for Rotation
/// and meters for Translation.
struct DofSpec {
  std::size_t index = 0;
  std::string name;
  DofKind kind = DofKind::Rotation;
  double stiffness = 0.0;
  double damping = 0.0;
  double armature = 0.0;
  bool limited = true;
  double lower_limit = 0.0;
  double upper_limit = 0.0;
  double default_position = 0.0;
  // Human-readable direction-of-motion hint shown to the actor.
  std::string motion_note;

  /// Clamps `position` into [lower, upper] for limited DOFs; identity otherwise.
  double clamp(double position) const;

  bool operator==(const DofSpec&) const = default;
};

using Pose = std::vector<double>;

struct EntitySpec {
  std::string name;
  std::vector<DofSpec> dofs;

  std::size_t dof_count() const { return dofs.size(); }
  const DofSpec* find_dof(std::string_view dof_name) const;

  bool operator==(const EntitySpec&) const = default;
};

class EntityConfigError : public std::runtime_error {
 public:
  EntityConfigError(std::size_t line, const std::string& message);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// The seven entity names, in the order the benchmark lists them.
const std::vector<std::string>& known_entity_names();

/// Parses an entity config. Header `# entity: <name>`, then one DOF per line:
/// `index|name|kind|stiffness|damping|armature|limited|lower|upper|default`.
/// An optional trailing 11th field carries the motion note. Lines starting with
/// `#` after the header are comments. Throws EntityConfigError.
EntitySpec load_entity(std::string_view source);

/// Inverse of load_entity.
std::string serialize_entity(const EntitySpec& entity);

/// One line per DOF (index order) for the actor prompt.
std::string dof_description(const EntitySpec& entity);

/// default_position of every DOF, index order.
Pose default_pose(const EntitySpec& entity);

/// clamp(0, lower, upper) for limited DOFs, 0 for unlimited ones.
double centered_default(const DofSpec& dof);

/// All shipped entities, keyed by name. Immutable after construction.
class EntityCatalog {
 public:
  EntityCatalog() = default;
  explicit EntityCatalog(std::vector<EntitySpec> entities);

  /// Loads `<dir>/<Name>.txt` for every known entity.
  static EntityCatalog load_directory(const std::filesystem::path& dir);

  const EntitySpec* find(std::string_view name) const;
  const EntitySpec& at(std::string_view name) const;
  std::vector<std::string> names() const;
  std::size_t size() const { return entities_.size(); }

 private:
  std::map<std::string, EntitySpec, std::less<>> entities_;
};

/// Default data directory (compiled in, overridable with ROBOCODER_DATA env var).
std::filesystem::path default_data_dir();

std::string read_text_file(const std::filesystem::path& path);

}  // namespace robocoder
