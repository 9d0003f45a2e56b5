#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "robocoder/action_store.hpp"
#include "robocoder/embedder.hpp"

namespace robocoder {

struct SearcherConfig {
  double upper_threshold = 0.99;  // above this a stored action is reused as-is
  double lower_threshold = 0.5;   // above this an action is offered as a related example
  std::size_t k = 3;

  bool valid() const {
    return 0.0 <= lower_threshold && lower_threshold < upper_threshold && upper_threshold <= 1.0 && k >= 1;
  }
};

enum class SearchKind { ExactMatch, Related, TemplateOnly, Empty };
std::string_view to_string(SearchKind kind);

/// For ExactMatch and TemplateOnly `indices` has one entry. Scores are
/// non-increasing and aligned with `indices`.
struct Selection {
  SearchKind kind = SearchKind::Empty;
  std::vector<std::size_t> indices;
  std::vector<double> scores;

  bool operator==(const Selection&) const = default;
};

struct SearchOutcome {
  SearchKind kind = SearchKind::Empty;
  std::vector<RecordPtr> records;
  std::vector<double> scores;
};

/// (a.b) / (|a||b|). Throws std::invalid_argument on dimension mismatch or
/// a zero-norm input.
double cosine(const Embedding& a, const Embedding& b);

/// Selection over precomputed scores, indexed in insertion order.
Selection select_by_scores(std::span<const double> scores, const SearcherConfig& config);

/// Scores every record of `view` against `query` and applies the selection rule.
SearchOutcome select_actions(const Embedding& query, const SpaceView& view, const SearcherConfig& config);

/// Embeds `task` first. Embedder errors propagate.
SearchOutcome select_actions(std::string_view task, const SpaceView& view, const SearcherConfig& config,
                             const Embedder& embedder);

}  // namespace robocoder
