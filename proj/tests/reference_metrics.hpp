#pragma once

// Brute-force reference implementations of the evaluation metrics, written
// straight from their definitions: selection by repeated maximum
// extraction, membership by linear scan, one user at a time. Kept separate
// from the library so the two paths stay independent.

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <vector>

#include "vgcl/graph.hpp"

namespace vgcl::testing {

struct ReferenceMetrics {
  double recall = 0.0, ndcg = 0.0, aplt = 0.0;
};

inline std::vector<Index> reference_list(const DenseMatrix<float>& emb,
                                         const InteractionGraph& g, Index user,
                                         int k) {
  std::vector<Index> remaining;
  for (Index i = 0; i < g.n_items; ++i) {
    bool train = false;
    for (const Index j : g.items_of_user[user])
      if (j == i) train = true;
    if (!train) remaining.push_back(i);
  }
  std::vector<Index> list;
  while (static_cast<int>(list.size()) < k && !remaining.empty()) {
    std::size_t best = 0;
    for (std::size_t n = 1; n < remaining.size(); ++n) {
      const float sb = emb.col(user).dot(emb.col(g.item_node(remaining[best])));
      const float sn = emb.col(user).dot(emb.col(g.item_node(remaining[n])));
      if (sn > sb || (sn == sb && remaining[n] < remaining[best])) best = n;
    }
    list.push_back(remaining[best]);
    remaining.erase(remaining.begin() + best);
  }
  return list;
}

inline ReferenceMetrics reference_metrics(
    const DenseMatrix<float>& emb, const InteractionGraph& g,
    const std::vector<Index>& eval_users,
    const std::unordered_map<Index, Index>& truth, int k) {
  std::vector<std::pair<Index, Index>> pop;  // (item, degree)
  for (Index i = 0; i < g.n_items; ++i) pop.emplace_back(i, g.item_degree(i));
  std::sort(pop.begin(), pop.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  const auto head = static_cast<std::size_t>(
      std::ceil(0.2 * static_cast<double>(g.n_items)));
  std::vector<bool> in_tail(g.n_items, false);
  for (std::size_t n = head; n < pop.size(); ++n) in_tail[pop[n].first] = true;

  ReferenceMetrics ref;
  for (const Index u : eval_users) {
    const auto list = reference_list(emb, g, u, k);
    const Index target = truth.at(u);
    bool hit = false;
    for (const Index i : list) hit = hit || i == target;
    ref.recall += hit ? 1.0 : 0.0;
    double dcg = 0.0;  // singleton truth: idcg == 1
    for (std::size_t pos = 0; pos < list.size(); ++pos)
      if (list[pos] == target)
        dcg += 1.0 / std::log2(static_cast<double>(pos) + 2.0);
    ref.ndcg += dcg;
    if (!list.empty()) {
      int tail_hits = 0;
      for (const Index i : list)
        if (in_tail[i]) ++tail_hits;
      ref.aplt +=
          static_cast<double>(tail_hits) / static_cast<double>(list.size());
    }
  }
  const double n = static_cast<double>(eval_users.size());
  return {ref.recall / n, ref.ndcg / n, ref.aplt / n};
}

}  // namespace vgcl::testing
