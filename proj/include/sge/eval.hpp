#pragma once

#include <algorithm>
#include <vector>

#include "sge/graph.hpp"
#include "sge/model.hpp"

namespace sge {

struct ScoredPair {
  double score = 0.0;
  bool positive = false;
};

// Mann-Whitney AUC via average ranks: probability a random positive outscores
// a random negative, ties counted 1/2. O(m log m).
inline double auc(std::vector<ScoredPair> pairs) {
  std::size_t n_pos = 0, n_neg = 0;
  for (const auto& pr : pairs) (pr.positive ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0)
    throw std::invalid_argument("auc: need at least one positive and one negative");
  std::sort(pairs.begin(), pairs.end(),
            [](const ScoredPair& a, const ScoredPair& b) { return a.score < b.score; });
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < pairs.size()) {
    std::size_t j = i;
    while (j < pairs.size() && pairs[j].score == pairs[i].score) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    for (std::size_t t = i; t < j; ++t)
      if (pairs[t].positive) rank_sum_pos += avg_rank;
    i = j;
  }
  const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) *
                                      static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

inline std::vector<ScoredPair> score_pairs(const Model& model, const Graph& g,
                                           const std::vector<LabeledPair>& pairs) {
  std::vector<ScoredPair> out;
  out.reserve(pairs.size());
  for (const auto& pr : pairs) {
    const Vec zi = model.encode(g, pr.i);
    const Vec zj = model.encode(g, pr.j);
    out.push_back({head_value(model.head, zi, zj), pr.positive});
  }
  return out;
}

// AUC of all positive pairs against zero-weight pairs: 1:1 uniform sample by
// default, or every zero-weight pair when exhaustive.
inline double reconstruction_auc(const Graph& g, const Model& model,
                                 std::uint64_t seed, bool exhaustive = false) {
  std::vector<LabeledPair> pairs;
  for (const auto& [i, j, w] : g.edges()) pairs.push_back({i, j, true});
  const std::size_t n_pos = pairs.size();
  if (n_pos == 0) throw std::invalid_argument("reconstruction_auc: graph has no links");
  if (exhaustive) {
    for (std::size_t i = 0; i < g.n; ++i)
      for (std::size_t j = i + 1; j < g.n; ++j)
        if (g.weight(i, j) == 0) pairs.push_back({i, j, false});
  } else {
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, g.n - 1);
    std::size_t guard = 0;
    std::size_t have = 0;
    while (have < n_pos) {
      if (++guard > 1000 * (n_pos + 1))
        throw std::runtime_error("reconstruction_auc: cannot sample negatives");
      const std::size_t i = pick(rng), j = pick(rng);
      if (i == j || g.weight(i, j) != 0) continue;
      pairs.push_back({std::min(i, j), std::max(i, j), false});
      ++have;
    }
  }
  return auc(score_pairs(model, g, pairs));
}

}  // namespace sge
