#include "robocoder/searcher.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace robocoder {

namespace {

double cosine_with_norms(std::span<const double> a, double na, std::span<const double> b, double nb) {
  if (!(na > 0.0) || !(nb > 0.0)) throw std::invalid_argument("cosine of a zero-norm vector");
  return std::clamp(dot(a, b) / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

}  // namespace

std::string_view to_string(SearchKind kind) {
  switch (kind) {
    case SearchKind::ExactMatch: return "ExactMatch";
    case SearchKind::Related: return "Related";
    case SearchKind::TemplateOnly: return "TemplateOnly";
    case SearchKind::Empty: return "Empty";
  }
  return "?";
}

double cosine(const Embedding& a, const Embedding& b) {
  if (a.dimension() != b.dimension()) {
    throw std::invalid_argument("cosine of vectors with dimensions " + std::to_string(a.dimension()) + " and " +
                                std::to_string(b.dimension()));
  }
  return cosine_with_norms(a.values, squared_norm(a.values), b.values, squared_norm(b.values));
}

Selection select_by_scores(std::span<const double> scores, const SearcherConfig& config) {
  if (!config.valid()) throw std::invalid_argument("invalid searcher configuration");
  Selection out;
  if (scores.empty()) return out;

  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  if (scores[best] > config.upper_threshold) {
    out.kind = SearchKind::ExactMatch;
    out.indices = {best};
    out.scores = {scores[best]};
    return out;
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  for (const auto i : order) {
    if (out.indices.size() == config.k || !(scores[i] > config.lower_threshold)) break;
    out.indices.push_back(i);
    out.scores.push_back(scores[i]);
  }
  if (!out.indices.empty()) {
    out.kind = SearchKind::Related;
    return out;
  }
  out.kind = SearchKind::TemplateOnly;
  out.indices = {best};
  out.scores = {scores[best]};
  return out;
}

SearchOutcome select_actions(const Embedding& query, const SpaceView& view, const SearcherConfig& config) {
  const bool cached = view.squared_norms.size() == view.records.size();
  const double nq = squared_norm(query.values);
  std::vector<double> scores;
  scores.reserve(view.records.size());
  for (std::size_t i = 0; i < view.records.size(); ++i) {
    const auto& e = view.records[i]->embedding;
    if (e.dimension() != query.dimension()) {
      throw std::invalid_argument("cosine of vectors with dimensions " + std::to_string(query.dimension()) + " and " +
                                  std::to_string(e.dimension()));
    }
    scores.push_back(cosine_with_norms(query.values, nq, e.values, cached ? view.squared_norms[i] : squared_norm(e.values)));
  }
  const auto selection = select_by_scores(scores, config);
  SearchOutcome outcome;
  outcome.kind = selection.kind;
  outcome.scores = selection.scores;
  for (const auto i : selection.indices) outcome.records.push_back(view.records[i]);
  return outcome;
}

SearchOutcome select_actions(std::string_view task, const SpaceView& view, const SearcherConfig& config,
                             const Embedder& embedder) {
  if (!config.valid()) throw std::invalid_argument("invalid searcher configuration");
  if (view.records.empty()) return {};
  return select_actions(embedder.embed(task), view, config);
}

}  // namespace robocoder
