#include "vgcl/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace vgcl {

bool InteractionGraph::has_edge(Index u, Index i) const {
  const auto& items = items_of_user[u];
  return std::binary_search(items.begin(), items.end(), i);
}

static void index_edges(InteractionGraph& g) {
  g.items_of_user.assign(g.n_users, {});
  g.users_of_item.assign(g.n_items, {});
  for (const auto& [u, i] : g.edges) {
    if (u < 0 || u >= g.n_users || i < 0 || i >= g.n_items)
      throw Error("edge endpoint out of range");
    g.items_of_user[u].push_back(i);
    g.users_of_item[i].push_back(u);
  }
  for (auto& v : g.items_of_user) std::sort(v.begin(), v.end());
  for (auto& v : g.users_of_item) std::sort(v.begin(), v.end());
}

InteractionGraph build_graph(const InteractionLog& log) {
  InteractionGraph g;
  g.n_users = log.n_users();
  g.n_items = log.n_items();
  g.edges.reserve(log.records.size());
  for (const auto& r : log.records) g.edges.emplace_back(r.user, r.item);
  index_edges(g);
  return g;
}

InteractionGraph make_graph(Index n_users, Index n_items,
                            std::vector<std::pair<Index, Index>> edges) {
  InteractionGraph g;
  g.n_users = n_users;
  g.n_items = n_items;
  g.edges = std::move(edges);
  index_edges(g);
  return g;
}

std::vector<Index> low_degree_users(const InteractionGraph& graph,
                                    double quantile) {
  if (!(quantile > 0.0) || quantile > 1.0)
    throw Error("quantile must lie in (0, 1]");
  if (graph.n_users == 0) throw Error("graph has no users");

  std::vector<Index> degrees(graph.n_users);
  for (Index u = 0; u < graph.n_users; ++u) degrees[u] = graph.user_degree(u);

  std::vector<Index> sorted = degrees;
  std::sort(sorted.begin(), sorted.end());
  // nearest-rank: smallest degree whose rank covers the quantile
  const auto rank = static_cast<std::size_t>(
      std::ceil(quantile * static_cast<double>(sorted.size())));
  const Index threshold = sorted[rank - 1];

  std::vector<Index> selected;
  for (Index u = 0; u < graph.n_users; ++u)
    if (degrees[u] <= threshold) selected.push_back(u);
  return selected;
}

AugmentedGraph merge_augmented(const InteractionGraph& graph,
                               const AugmentedEdgeSet& new_edges) {
  AugmentedGraph aug;
  aug.base = graph;
  aug.new_edges = new_edges;

  std::set<std::pair<Index, Index>> seen;
  aug.merged = graph;
  for (const auto& e : new_edges.edges) {
    if (e.user < 0 || e.user >= graph.n_users || e.item < 0 ||
        e.item >= graph.n_items)
      throw Error("augmented edge endpoint out of range");
    if (graph.has_edge(e.user, e.item) || !seen.insert({e.user, e.item}).second)
      throw Error("edge already observed: user " + std::to_string(e.user) +
                  ", item " + std::to_string(e.item));
    aug.merged.edges.emplace_back(e.user, e.item);
  }
  index_edges(aug.merged);
  return aug;
}

}  // namespace vgcl
