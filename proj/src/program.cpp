#include "robocoder/program.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <optional>
#include <sstream>

#include "robocoder/text.hpp"

namespace robocoder {

namespace {

// Generic tree produced by the relaxed reader before it is interpreted as a
// program.
struct Value {
  enum class Type { Null, Bool, Number, String, Array, Object };
  Type type = Type::Null;
  double number = 0.0;
  bool boolean = false;
  bool integral = false;
  std::string string;
  std::vector<Value> items;
  std::vector<std::pair<std::string, Value>> members;
};

class SyntaxError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RelaxedReader {
 public:
  explicit RelaxedReader(std::string_view src) : src_(src) {}

  Value read_document() {
    Value v = read_value(0);
    return v;
  }

  std::size_t position() const { return pos_; }

 private:
  static constexpr int kMaxDepth = 64;

  [[noreturn]] void fail(const std::string& what) const {
    throw SyntaxError(what + " at offset " + std::to_string(pos_));
  }

  void skip_ws() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '#' || (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/')) {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '*') {
        const auto end = src_.find("*/", pos_ + 2);
        if (end == std::string_view::npos) fail("unterminated comment");
        pos_ = end + 2;
      } else {
        return;
      }
    }
  }

  char peek() {
    skip_ws();
    if (pos_ >= src_.size()) fail("unexpected end of block");
    return src_[pos_];
  }

  Value read_value(int depth) {
    if (depth > kMaxDepth) fail("nesting too deep");
    const char c = peek();
    if (c == '{') return read_object(depth);
    if (c == '[') return read_array(depth);
    if (c == '"' || c == '\'') {
      Value v;
      v.type = Value::Type::String;
      v.string = read_string();
      return v;
    }
    if (c == '-' || c == '+' || c == '.' || std::isdigit(static_cast<unsigned char>(c))) return read_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const auto word = read_identifier();
      return word_value(word);
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  Value word_value(const std::string& word) {
    Value v;
    const auto lowered = text::to_lower(word);
    if (lowered == "true") {
      v.type = Value::Type::Bool;
      v.boolean = true;
    } else if (lowered == "false") {
      v.type = Value::Type::Bool;
    } else if (lowered == "null" || lowered == "none") {
      v.type = Value::Type::Null;
    } else if (lowered == "inf" || lowered == "infinity") {
      v.type = Value::Type::Number;
      v.number = HUGE_VAL;
    } else if (lowered == "nan") {
      v.type = Value::Type::Number;
      v.number = std::nan("");
    } else {
      // Bare words stand for strings (DOF names used as keys or values).
      v.type = Value::Type::String;
      v.string = word;
    }
    return v;
  }

  std::string read_identifier() {
    const auto start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_' || src_[pos_] == '.')) {
      ++pos_;
    }
    return std::string(src_.substr(start, pos_ - start));
  }

  std::string read_string() {
    const char quote = src_[pos_++];
    std::string out;
    while (pos_ < src_.size()) {
      const char c = src_[pos_++];
      if (c == quote) return out;
      if (c == '\\') {
        if (pos_ >= src_.size()) break;
        const char e = src_[pos_++];
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case 'r': out += '\r'; break;
          default: out += e; break;
        }
      } else {
        out += c;
      }
    }
    fail("unterminated string");
  }

  Value read_number() {
    const auto start = pos_;
    if (src_[pos_] == '+' || src_[pos_] == '-') ++pos_;
    // Signed infinity written as a word, e.g. -inf.
    if (pos_ < src_.size() && std::isalpha(static_cast<unsigned char>(src_[pos_]))) {
      const bool negative = src_[start] == '-';
      Value v = word_value(read_identifier());
      if (v.type != Value::Type::Number) fail("malformed number");
      if (negative) v.number = -v.number;
      return v;
    }
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == 'e' || c == 'E') {
        ++pos_;
      } else if ((c == '+' || c == '-') && (src_[pos_ - 1] == 'e' || src_[pos_ - 1] == 'E')) {
        ++pos_;
      } else {
        break;
      }
    }
    std::string token(src_.substr(start, pos_ - start));
    if (!token.empty() && token.front() == '+') token.erase(0, 1);
    Value v;
    v.type = Value::Type::Number;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v.number);
    if (ec == std::errc::result_out_of_range) {
      v.number = std::strtod(token.c_str(), nullptr);
    } else if (ec != std::errc{} || ptr != token.data() + token.size()) {
      fail("malformed number '" + token + "'");
    }
    v.integral = token.find_first_of(".eE") == std::string::npos;
    return v;
  }

  Value read_array(int depth) {
    ++pos_;
    Value v;
    v.type = Value::Type::Array;
    for (;;) {
      if (peek() == ']') {
        ++pos_;
        return v;
      }
      v.items.push_back(read_value(depth + 1));
      const char c = peek();
      if (c == ',') {
        ++pos_;
      } else if (c != ']') {
        fail("expected ',' or ']'");
      }
    }
  }

  Value read_object(int depth) {
    ++pos_;
    Value v;
    v.type = Value::Type::Object;
    for (;;) {
      char c = peek();
      if (c == '}') {
        ++pos_;
        return v;
      }
      std::string key;
      if (c == '"' || c == '\'') {
        key = read_string();
      } else if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '+') {
        if (c == '-' || c == '+' || std::isdigit(static_cast<unsigned char>(c))) {
          const auto num = read_number();
          if (!num.integral || std::fabs(num.number) > 1e15) fail("non-integer key");
          key = std::to_string(static_cast<long long>(num.number));
        } else {
          key = read_identifier();
        }
      } else {
        fail(std::string("unexpected character '") + c + "' in object key");
      }
      if (peek() != ':') fail("expected ':' after key '" + key + "'");
      ++pos_;
      v.members.emplace_back(std::move(key), read_value(depth + 1));
      c = peek();
      if (c == ',') {
        ++pos_;
      } else if (c != '}') {
        fail("expected ',' or '}'");
      }
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

enum class Field { Initial, Speeds, States, Repeat };

std::optional<Field> field_for(std::string_view key) {
  const auto k = text::to_lower(key);
  if (k == "initial_dof_position" || k == "set_initial_dof_position" || k == "initial_dof_positions") return Field::Initial;
  if (k == "speeds" || k == "set_speeds") return Field::Speeds;
  if (k == "state_destination" || k == "set_state_destination" || k == "state_destinations") return Field::States;
  if (k == "repeat") return Field::Repeat;
  return std::nullopt;
}

constexpr std::array<std::string_view, 4> kProgramKeys = {"initial_dof_position", "speeds", "state_destination",
                                                          "repeat"};

bool mentions_program_key(std::string_view block) {
  for (const auto key : kProgramKeys) {
    if (block.find(key) != std::string_view::npos) return true;
  }
  return false;
}

class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

long long resolve_dof_key(const std::string& key, const EntitySpec& entity, std::string_view where) {
  long long index = 0;
  if (text::parse_int(key, index)) return index;
  if (const auto* dof = entity.find_dof(key)) return static_cast<long long>(dof->index);
  throw ShapeError("unknown dof '" + key + "' in " + std::string(where));
}

double number_of(const Value& v, std::string_view where) {
  if (v.type != Value::Type::Number) throw ShapeError(std::string(where) + " must be a number");
  return v.number;
}

DofMap read_dof_map(const Value& v, const EntitySpec& entity, std::string_view where) {
  DofMap out;
  if (v.type == Value::Type::Array) {
    // Positional form: one value per DOF index.
    for (std::size_t i = 0; i < v.items.size(); ++i) {
      out[static_cast<long long>(i)] = number_of(v.items[i], where);
    }
    return out;
  }
  if (v.type == Value::Type::Null) return out;
  if (v.type != Value::Type::Object) throw ShapeError(std::string(where) + " must map dof indices to numbers");
  for (const auto& [key, value] : v.members) {
    const auto index = resolve_dof_key(key, entity, where);
    if (!out.emplace(index, number_of(value, where)).second) {
      throw ShapeError("duplicate dof index " + std::to_string(index) + " in " + std::string(where));
    }
  }
  return out;
}

ActionProgram interpret(const Value& root, const EntitySpec& entity) {
  ActionProgram program;
  bool seen[4] = {false, false, false, false};
  for (const auto& [key, value] : root.members) {
    const auto field = field_for(key);
    if (!field) {
      throw ShapeError("unknown key '" + key + "' (expected initial_dof_position, speeds, state_destination, repeat)");
    }
    auto& flag = seen[static_cast<int>(*field)];
    if (flag) throw ShapeError("duplicate key '" + key + "'");
    flag = true;
    switch (*field) {
      case Field::Initial:
        program.initial_positions = read_dof_map(value, entity, "initial_dof_position");
        break;
      case Field::Speeds:
        program.speeds = read_dof_map(value, entity, "speeds");
        break;
      case Field::States:
        if (value.type == Value::Type::Object) {
          // A single state written without the enclosing list.
          program.states.push_back(read_dof_map(value, entity, "state_destination"));
        } else if (value.type == Value::Type::Array) {
          for (const auto& item : value.items) {
            if (item.type != Value::Type::Object) {
              throw ShapeError("state_destination must be a list of dof maps");
            }
            program.states.push_back(read_dof_map(item, entity, "state_destination"));
          }
        } else {
          throw ShapeError("state_destination must be a list of dof maps");
        }
        break;
      case Field::Repeat: {
        const double r = number_of(value, "repeat");
        if (!std::isfinite(r) || r != std::floor(r)) throw ShapeError("repeat must be an integer");
        if (r < 1 || r > kMaxRepeat) {
          throw ShapeError("repeat must be between 1 and " + std::to_string(kMaxRepeat));
        }
        program.repeat = static_cast<int>(r);
        break;
      }
    }
  }
  return program;
}

// End offset (exclusive) of the brace-balanced block starting at `open`,
// honouring quoted strings. nullopt when the block never closes.
std::optional<std::size_t> balanced_end(std::string_view text, std::size_t open) {
  int depth = 0;
  char quote = 0;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (quote != 0) {
      if (c == '\\') {
        ++i;
      } else if (c == quote) {
        quote = 0;
      }
      continue;
    }
    if (c == '"') {
      quote = c;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::nullopt;
}

}  // namespace

double ActionProgram::speed_of(long long dof) const {
  const auto it = speeds.find(dof);
  return it == speeds.end() ? kDefaultSpeed : it->second;
}

ParseResult parse_program(std::string_view text, const EntitySpec& entity) {
  std::optional<std::string> first_error;
  for (std::size_t open = text.find('{'); open != std::string_view::npos; open = text.find('{', open + 1)) {
    const auto end = balanced_end(text, open);
    if (!end) {
      if (!first_error && mentions_program_key(text.substr(open))) {
        first_error = "malformed action block: unterminated '{'";
      }
      continue;
    }
    const auto block = text.substr(open, *end - open);
    try {
      RelaxedReader reader(block);
      const Value root = reader.read_document();
      if (root.type != Value::Type::Object) continue;
      bool has_program_key = false;
      for (const auto& member : root.members) {
        if (field_for(member.first)) has_program_key = true;
      }
      if (!has_program_key) continue;
      return interpret(root, entity);
    } catch (const SyntaxError& e) {
      if (!first_error && mentions_program_key(block)) first_error = std::string("malformed action block: ") + e.what();
    } catch (const ShapeError& e) {
      return ParseError{std::string("malformed action block: ") + e.what()};
    }
  }
  if (first_error) return ParseError{*first_error};
  return ParseError{"no action block found"};
}

namespace {

void write_dof_map(std::ostringstream& out, const DofMap& map) {
  out << '{';
  bool first = true;
  for (const auto& [index, value] : map) {
    if (!first) out << ", ";
    first = false;
    out << '"' << index << "\": " << text::shortest(value);
  }
  out << '}';
}

}  // namespace

std::string serialize_program(const ActionProgram& program) {
  std::ostringstream out;
  out << "{\n  \"initial_dof_position\": ";
  write_dof_map(out, program.initial_positions);
  out << ",\n  \"speeds\": ";
  write_dof_map(out, program.speeds);
  out << ",\n  \"state_destination\": [";
  for (std::size_t i = 0; i < program.states.size(); ++i) {
    out << (i == 0 ? "\n    " : ",\n    ");
    write_dof_map(out, program.states[i]);
  }
  out << (program.states.empty() ? "]" : "\n  ]");
  out << ",\n  \"repeat\": " << program.repeat << "\n}\n";
  return out.str();
}

std::string ValidationReport::summary() const {
  std::string out;
  for (const auto& issue : issues) {
    if (!out.empty()) out += "; ";
    out += issue.message;
  }
  return out;
}

ValidationReport validate_program(const ActionProgram& program, const EntitySpec& entity) {
  ValidationReport report;
  const auto n = static_cast<long long>(entity.dof_count());
  const auto range = "[0," + std::to_string(n - 1) + "]";

  const auto error = [&](long long dof, std::string message) {
    report.ok = false;
    report.issues.push_back({IssueSeverity::Error, dof, std::move(message)});
  };

  const auto check_position = [&](long long dof, double value, std::string_view where) {
    if (dof < 0 || dof >= n) {
      error(dof, "dof index " + std::to_string(dof) + " out of range " + range);
      return;
    }
    if (!std::isfinite(value)) {
      error(dof, "non-finite " + std::string(where) + " for dof " + std::to_string(dof));
      return;
    }
    const auto& spec = entity.dofs[static_cast<std::size_t>(dof)];
    const double clamped = spec.clamp(value);
    if (clamped != value) {
      report.issues.push_back({IssueSeverity::Clamped, dof,
                               std::string(where) + " " + text::shortest(value) + " for dof " + std::to_string(dof) +
                                   " (" + spec.name + ") clamped to " + text::fixed(clamped, 2)});
    }
  };

  for (const auto& [dof, value] : program.initial_positions) check_position(dof, value, "initial position");
  for (const auto& [dof, speed] : program.speeds) {
    if (dof < 0 || dof >= n) {
      error(dof, "dof index " + std::to_string(dof) + " out of range " + range);
    } else if (!std::isfinite(speed)) {
      error(dof, "non-finite speed for dof " + std::to_string(dof));
    } else if (speed <= 0) {
      error(dof, "non-positive speed " + text::shortest(speed) + " for dof " + std::to_string(dof));
    }
  }
  for (const auto& state : program.states) {
    for (const auto& [dof, value] : state) check_position(dof, value, "target");
  }
  if (program.repeat < 1 || program.repeat > kMaxRepeat) {
    error(-1, "repeat " + std::to_string(program.repeat) + " outside [1," + std::to_string(kMaxRepeat) + "]");
  }
  return report;
}

}  // namespace robocoder
