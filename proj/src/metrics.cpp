#include "vgcl/metrics.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace vgcl {
namespace {

const std::vector<Index>* truth_for(const TruthMap& truth, Index user) {
  const auto it = truth.find(user);
  return it == truth.end() || it->second.empty() ? nullptr : &it->second;
}

}  // namespace

double recall_at_k(const RecommendationLists& recs, const TruthMap& truth,
                   int k) {
  if (recs.users.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t n = 0; n < recs.users.size(); ++n) {
    const auto* relevant = truth_for(truth, recs.users[n]);
    if (!relevant) throw Error("recall_at_k: user without ground truth");
    const auto& list = recs.items[n];
    const std::size_t depth = std::min<std::size_t>(k, list.size());
    int hits = 0;
    for (std::size_t pos = 0; pos < depth; ++pos)
      if (std::find(relevant->begin(), relevant->end(), list[pos]) !=
          relevant->end())
        ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(relevant->size());
  }
  return sum / static_cast<double>(recs.users.size());
}

double ndcg_at_k(const RecommendationLists& recs, const TruthMap& truth,
                 int k) {
  if (recs.users.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t n = 0; n < recs.users.size(); ++n) {
    const auto* relevant = truth_for(truth, recs.users[n]);
    if (!relevant) throw Error("ndcg_at_k: user without ground truth");
    const auto& list = recs.items[n];
    const std::size_t depth = std::min<std::size_t>(k, list.size());
    double dcg = 0.0;
    for (std::size_t pos = 0; pos < depth; ++pos)
      if (std::find(relevant->begin(), relevant->end(), list[pos]) !=
          relevant->end())
        dcg += 1.0 / std::log2(static_cast<double>(pos) + 2.0);
    const std::size_t ideal =
        std::min<std::size_t>(k, relevant->size());
    double idcg = 0.0;
    for (std::size_t pos = 0; pos < ideal; ++pos)
      idcg += 1.0 / std::log2(static_cast<double>(pos) + 2.0);
    sum += idcg > 0.0 ? dcg / idcg : 0.0;
  }
  return sum / static_cast<double>(recs.users.size());
}

std::unordered_set<Index> long_tail_set(const InteractionGraph& graph) {
  const Index n = graph.n_items;
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    const Index da = graph.item_degree(a), db = graph.item_degree(b);
    return da != db ? da > db : a < b;  // most popular first
  });
  const auto head = static_cast<std::size_t>(
      std::ceil(0.2 * static_cast<double>(n)));
  std::unordered_set<Index> tail;
  for (std::size_t pos = head; pos < order.size(); ++pos)
    tail.insert(order[pos]);
  return tail;
}

double aplt_at_k(const RecommendationLists& recs,
                 const std::unordered_set<Index>& long_tail, int k) {
  if (recs.users.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& list : recs.items) {
    const std::size_t depth = std::min<std::size_t>(k, list.size());
    if (depth == 0) continue;  // empty list contributes 0
    int in_tail = 0;
    for (std::size_t pos = 0; pos < depth; ++pos)
      if (long_tail.count(list[pos])) ++in_tail;
    sum += static_cast<double>(in_tail) / static_cast<double>(depth);
  }
  return sum / static_cast<double>(recs.items.size());
}

std::string EvalReport::to_json() const {
  nlohmann::json cuts;
  for (std::size_t n = 0; n < cutoffs.size(); ++n)
    cuts[std::to_string(cutoffs[n])] = {{"recall", metrics[n].recall},
                                        {"ndcg", metrics[n].ndcg},
                                        {"aplt", metrics[n].aplt}};
  const nlohmann::json doc{{"n_eval_users", n_eval_users},
                           {"cutoffs", cuts}};
  return doc.dump(2);
}

}  // namespace vgcl
