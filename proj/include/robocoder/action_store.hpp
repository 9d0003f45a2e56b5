#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "robocoder/embedder.hpp"
#include "robocoder/entity.hpp"
#include "robocoder/program.hpp"

namespace robocoder {

struct Provenance {
  enum class Kind { Seed, Learned };
  Kind kind = Kind::Seed;
  int iteration = 0;   // Learned only
  std::string run_id;  // Learned only

  static Provenance seed() { return {}; }
  static Provenance learned(int iteration, std::string run_id) { return {Kind::Learned, iteration, std::move(run_id)}; }
  bool operator==(const Provenance&) const = default;
};

struct ActionRecord {
  std::string id;  // "<entity>/<slug>@v<version>"
  std::string entity;
  std::string task_text;
  ActionProgram program;
  Embedding embedding;
  Provenance provenance;
  std::int64_t created_at_ms = 0;  // 0 for seeds

  bool operator==(const ActionRecord&) const = default;
};

using RecordPtr = std::shared_ptr<const ActionRecord>;

/// Immutable per-entity view. Later commits never touch it.
struct SpaceView {
  std::string entity;
  std::uint64_t version = 0;
  std::vector<RecordPtr> records;  // insertion order
  // Squared embedding norms parallel to records, or empty when unknown.
  std::vector<double> squared_norms;
};

class StoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A skill shipped with the repository: task text plus its program.
struct SeedFixture {
  std::string entity;
  std::string task_text;
  ActionProgram program;
};

/// "raise your left arm" -> "raise-your-left-arm".
std::string slugify(std::string_view text);

/// Per-entity ordered action collections. Partitions are copy-on-write, so
/// snapshots stay valid (and unchanged) across commits. One writer at a time.
class ActionSpace {
 public:
  explicit ActionSpace(std::size_t dimension = kDefaultEmbeddingDimension);

  std::uint64_t version() const { return version_; }
  std::size_t dimension() const { return dimension_; }
  std::size_t size() const;
  std::size_t size(std::string_view entity) const;
  std::vector<std::string> entities() const;

  SpaceView snapshot(std::string_view entity) const;
  const ActionRecord* find(std::string_view entity, std::string_view task_text) const;

  /// Set union keyed by (entity, task_text): novel texts are appended, known
  /// ones replaced in place. Ids are restamped with the new version. All
  /// records are validated before any is applied. Version increments exactly
  /// once, also for an empty batch. Returns the new version.
  std::uint64_t commit_passed(std::vector<ActionRecord> passed, const EntityCatalog& catalog);

  /// Replay helper: applies records as-is and sets the version.
  void apply_commit(const std::vector<ActionRecord>& records, std::uint64_t version);

  bool same_contents(const ActionSpace& other) const;

 private:
  struct Partition {
    std::vector<RecordPtr> records;
    std::vector<double> squared_norms;
    std::size_t size() const { return records.size(); }
  };
  std::map<std::string, std::shared_ptr<const Partition>, std::less<>> partitions_;
  std::uint64_t version_ = 0;
  std::size_t dimension_;
};

/// Builds version 0 from the seed fixtures. Every program must validate and
/// simulate cleanly; throws StoreError naming the first bad fixture.
ActionSpace seed_initial_space(const std::vector<SeedFixture>& fixtures, const EntityCatalog& catalog,
                               const Embedder& embedder);

/// Task texts whose stored embedding differs from embedder.embed(task_text)
/// by more than `tolerance` in any coordinate.
std::vector<std::string> embedding_mismatches(const ActionSpace& space, const Embedder& embedder,
                                              double tolerance = 1e-12);

/// Append-only JSONL log. Line 1 is a header; then record lines, each commit
/// closed by a commit line carrying the new version.
namespace store_log {

/// Writes a compacted log: header plus one commit holding every record.
void save(const ActionSpace& space, const std::filesystem::path& path, const std::string& embedder_name);

/// Appends one commit (records then commit line). Creates the file with a
/// header when missing.
void append_commit(const std::filesystem::path& path, const std::vector<ActionRecord>& records,
                   std::uint64_t version, std::size_t dimension, const std::string& embedder_name);

/// Replays the log. Corrupt, truncated or unterminated content throws
/// StoreError naming the line.
ActionSpace load(const std::filesystem::path& path, const EntityCatalog& catalog);
ActionSpace load_text(std::string_view text, const EntityCatalog& catalog);

}  // namespace store_log

}  // namespace robocoder
