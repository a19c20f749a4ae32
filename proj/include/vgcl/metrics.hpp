#pragma once

#include <algorithm>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "vgcl/data_io.hpp"
#include "vgcl/graph.hpp"

namespace vgcl {

/// Top-K recommendations for a set of evaluation users; lists exclude each
/// user's train items and are item-local indices, best first.
struct RecommendationLists {
  std::vector<Index> users;
  std::vector<std::vector<Index>> items;  // aligned with users
};

using TruthMap = std::unordered_map<Index, std::vector<Index>>;

inline TruthMap singleton_truth(const std::unordered_map<Index, Index>& map) {
  TruthMap truth;
  truth.reserve(map.size());
  for (const auto& [u, i] : map) truth[u] = {i};
  return truth;
}

/// Mean over users of |top-K hits| / |relevant set|.
double recall_at_k(const RecommendationLists& recs, const TruthMap& truth,
                   int k);

/// Mean over users of DCG@K / IDCG@K with 1-indexed log2 positions.
double ndcg_at_k(const RecommendationLists& recs, const TruthMap& truth,
                 int k);

/// Long-tail item set: everything outside the smallest head of
/// most-popular items covering 20% of the item count (train popularity,
/// ties broken by item index).
std::unordered_set<Index> long_tail_set(const InteractionGraph& graph);

/// Mean over users of the long-tail fraction of the top-K list; empty
/// lists contribute 0.
double aplt_at_k(const RecommendationLists& recs,
                 const std::unordered_set<Index>& long_tail, int k);

struct CutoffMetrics {
  double recall = 0.0;
  double ndcg = 0.0;
  double aplt = 0.0;
};

struct EvalReport {
  std::vector<int> cutoffs;
  std::vector<CutoffMetrics> metrics;  // aligned with cutoffs
  Index n_eval_users = 0;

  std::string to_json() const;
};

/// Builds per-user top-K lists by descending inner-product score (train
/// items excluded, ties toward the lower item index).
template <typename Scalar>
RecommendationLists recommend(const DenseMatrix<Scalar>& emb,
                              const InteractionGraph& graph,
                              const std::vector<Index>& users, int k) {
  if (emb.cols() != graph.node_count())
    throw Error("embedding/graph node count mismatch");
  RecommendationLists recs;
  recs.users = users;
  recs.items.reserve(users.size());
  for (const Index u : users) {
    DenseVector<Scalar> scores =
        emb.middleCols(graph.n_users, graph.n_items).transpose() * emb.col(u);
    std::vector<Index> eligible;
    eligible.reserve(graph.n_items);
    for (Index i = 0; i < graph.n_items; ++i)
      if (!graph.has_edge(u, i)) eligible.push_back(i);
    const auto better = [&](Index a, Index b) {
      return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
    };
    const Index keep = std::min<Index>(k, static_cast<Index>(eligible.size()));
    std::partial_sort(eligible.begin(), eligible.begin() + keep,
                      eligible.end(), better);
    eligible.resize(keep);
    recs.items.push_back(std::move(eligible));
  }
  return recs;
}

/// Scores the test split at each cutoff.
template <typename Scalar>
EvalReport evaluate(const DenseMatrix<Scalar>& emb, const SplitDataset& split,
                    const InteractionGraph& graph, std::vector<int> cutoffs) {
  if (cutoffs.empty()) cutoffs = {10, 20};
  const int k_max = *std::max_element(cutoffs.begin(), cutoffs.end());
  const RecommendationLists recs =
      recommend(emb, graph, split.eval_users, k_max);
  const TruthMap truth = singleton_truth(split.test);
  const std::unordered_set<Index> tail = long_tail_set(graph);

  EvalReport report;
  report.cutoffs = cutoffs;
  report.n_eval_users = static_cast<Index>(split.eval_users.size());
  for (const int k : cutoffs)
    report.metrics.push_back({recall_at_k(recs, truth, k),
                              ndcg_at_k(recs, truth, k),
                              aplt_at_k(recs, tail, k)});
  return report;
}

}  // namespace vgcl
