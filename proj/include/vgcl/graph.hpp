#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

#include "vgcl/data_io.hpp"

namespace vgcl {

/// Bipartite user-item interaction graph. Node indexing over the union is
/// fixed project-wide: users occupy [0, n_users), items occupy
/// [n_users, n_users + n_items). Item arguments and fields are item-local
/// indices unless a name says "node".
struct InteractionGraph {
  Index n_users = 0;
  Index n_items = 0;
  std::vector<std::pair<Index, Index>> edges;     // (user, item), insertion order
  std::vector<std::vector<Index>> items_of_user;  // sorted per user
  std::vector<std::vector<Index>> users_of_item;  // sorted per item

  Index node_count() const { return n_users + n_items; }
  Index item_node(Index item) const { return n_users + item; }
  Index user_degree(Index u) const {
    return static_cast<Index>(items_of_user[u].size());
  }
  Index item_degree(Index i) const {
    return static_cast<Index>(users_of_item[i].size());
  }
  bool has_edge(Index u, Index i) const;
};

InteractionGraph build_graph(const InteractionLog& log);

/// Raw assembly from an edge list; exposed for fixtures.
InteractionGraph make_graph(Index n_users, Index n_items,
                            std::vector<std::pair<Index, Index>> edges);

/// Users whose degree is at or below the nearest-rank quantile of the
/// user-degree multiset, ascending. quantile must lie in (0, 1].
std::vector<Index> low_degree_users(const InteractionGraph& graph,
                                    double quantile);

struct AugmentedGraph {
  InteractionGraph base;
  AugmentedEdgeSet new_edges;
  InteractionGraph merged;
};

/// Merges synthetic edges into the graph. Every new edge must be absent
/// from the base edge set (and not repeat within the new set).
AugmentedGraph merge_augmented(const InteractionGraph& graph,
                               const AugmentedEdgeSet& new_edges);

/// Symmetrically normalized adjacency over node indices, no self loops:
/// entry (u, n_users + i) = 1/sqrt(deg(u) * deg(i)) for every edge.
template <typename Scalar>
Eigen::SparseMatrix<Scalar> normalized_adjacency(const InteractionGraph& g) {
  using Triplet = Eigen::Triplet<Scalar>;
  std::vector<Triplet> triplets;
  triplets.reserve(2 * g.edges.size());
  for (const auto& [u, i] : g.edges) {
    const Scalar w = Scalar(1) /
                     std::sqrt(static_cast<Scalar>(g.user_degree(u)) *
                               static_cast<Scalar>(g.item_degree(i)));
    triplets.emplace_back(u, g.item_node(i), w);
    triplets.emplace_back(g.item_node(i), u, w);
  }
  Eigen::SparseMatrix<Scalar> adj(g.node_count(), g.node_count());
  adj.setFromTriplets(triplets.begin(), triplets.end());
  adj.makeCompressed();
  return adj;
}

}  // namespace vgcl
