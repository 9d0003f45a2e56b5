#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "robocoder/entity.hpp"

namespace robocoder {

/// DOF index -> position (or speed). Indices are signed so that out-of-range
/// values written by a provider survive parsing and surface in validation.
using DofMap = std::map<long long, double>;

inline constexpr double kDefaultSpeed = 1.0;
inline constexpr int kMaxRepeat = 100;

/// The three-part action template: where every joint starts, how fast each
/// joint travels, and the ordered list of state destinations. `repeat` cycles
/// through the states to express gaits.
struct ActionProgram {
  DofMap initial_positions;
  DofMap speeds;
  std::vector<DofMap> states;
  int repeat = 1;

  /// Speed for `dof`, falling back to kDefaultSpeed when unset.
  double speed_of(long long dof) const;

  bool operator==(const ActionProgram&) const = default;
};

struct ParseError {
  std::string reason;
};

using ParseResult = std::variant<ActionProgram, ParseError>;

/// Extracts the first action block from arbitrary provider text. Accepts
/// JSON or the relaxed form (bare keys, trailing commas, `#`/`//` comments),
/// optionally inside code fences or prose. Map keys may be DOF indices or
/// DOF names of `entity`. Never throws.
ParseResult parse_program(std::string_view text, const EntitySpec& entity);

/// Canonical text: keys ordered, indices ascending, shortest round-trip numbers.
std::string serialize_program(const ActionProgram& program);

enum class IssueSeverity { Error, Clamped };

struct ValidationIssue {
  IssueSeverity severity = IssueSeverity::Error;
  long long dof_index = -1;
  std::string message;
};

struct ValidationReport {
  bool ok = true;
  std::vector<ValidationIssue> issues;

  std::string summary() const;
};

ValidationReport validate_program(const ActionProgram& program, const EntitySpec& entity);

}  // namespace robocoder
