#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/SparseCore>

#include "vgcl/graph.hpp"
#include "vgcl/rng.hpp"

namespace vgcl {

// Embedding matrices are dim x n_nodes, one column per node (users first,
// then items). Column-major storage keeps each node's vector contiguous and
// turns graph propagation into contiguous column AXPYs.

/// i.i.d. N(0, 0.1^2) entries, filled node by node; identical for identical
/// seeds regardless of platform.
template <typename Scalar>
DenseMatrix<Scalar> init_embeddings(Index n_nodes, Index dim,
                                    std::uint64_t seed) {
  if (dim < 1) throw Error("embedding dimension must be >= 1");
  DenseMatrix<Scalar> e(dim, n_nodes);
  Rng rng(seed);
  for (Index node = 0; node < n_nodes; ++node)
    for (Index d = 0; d < dim; ++d)
      e(d, node) = static_cast<Scalar>(0.1 * rng.normal());
  return e;
}

template <typename Scalar>
struct LayerStack {
  std::vector<DenseMatrix<Scalar>> layers;  // [E(0), E(1), ..., E(L)]

  Index depth() const { return static_cast<Index>(layers.size()) - 1; }
};

/// Plain linear propagation: layers[l] = A * layers[l-1]. No nonlinearity,
/// no self term. The adjacency is symmetric, so the column-per-node layout
/// computes E(l) = E(l-1) * A.
template <typename Scalar>
LayerStack<Scalar> propagate(const DenseMatrix<Scalar>& e0,
                             const Eigen::SparseMatrix<Scalar>& adj,
                             Index n_layers) {
  if (e0.cols() != adj.rows())
    throw Error("embedding/adjacency shape mismatch");
  LayerStack<Scalar> stack;
  stack.layers.reserve(n_layers + 1);
  stack.layers.push_back(e0);
  for (Index l = 1; l <= n_layers; ++l)
    stack.layers.push_back(stack.layers.back() * adj);
  return stack;
}

/// Elementwise mean of all layers, the layer-combination step of the
/// propagation formula.
template <typename Scalar>
DenseMatrix<Scalar> mean_pool(const LayerStack<Scalar>& stack) {
  if (stack.layers.empty()) throw Error("empty layer stack");
  DenseMatrix<Scalar> pooled = stack.layers.front();
  for (std::size_t l = 1; l < stack.layers.size(); ++l)
    pooled += stack.layers[l];
  pooled *= Scalar(1) / static_cast<Scalar>(stack.layers.size());
  return pooled;
}

template <typename Scalar>
const DenseMatrix<Scalar>& last_layer(const LayerStack<Scalar>& stack) {
  if (stack.layers.empty()) throw Error("empty layer stack");
  return stack.layers.back();
}

/// Inner-product preference score for (user, item-local index).
template <typename Scalar>
Scalar score(const DenseMatrix<Scalar>& emb, Index n_users, Index user,
             Index item) {
  const Index item_node = n_users + item;
  if (user < 0 || user >= n_users || item_node >= emb.cols() || item < 0)
    throw Error("score index out of range");
  return emb.col(user).dot(emb.col(item_node));
}

struct CandidateList {
  std::vector<Index> items;  // item-local indices, best first
  bool underfull = false;    // fewer than k eligible items existed
};

/// Top-k items the user has not interacted with, by descending score;
/// ties break toward the lower item index.
template <typename Scalar>
CandidateList top_k_candidates(const DenseMatrix<Scalar>& emb,
                               const InteractionGraph& graph, Index user,
                               Index k) {
  if (k < 1) throw Error("k must be >= 1");
  if (emb.cols() != graph.node_count())
    throw Error("embedding/graph node count mismatch");
  DenseVector<Scalar> scores =
      emb.middleCols(graph.n_users, graph.n_items).transpose() * emb.col(user);

  std::vector<Index> eligible;
  eligible.reserve(graph.n_items);
  for (Index i = 0; i < graph.n_items; ++i)
    if (!graph.has_edge(user, i)) eligible.push_back(i);

  const auto better = [&](Index a, Index b) {
    return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
  };
  CandidateList out;
  if (static_cast<Index>(eligible.size()) <= k) {
    out.underfull = static_cast<Index>(eligible.size()) < k;
    std::sort(eligible.begin(), eligible.end(), better);
    out.items = std::move(eligible);
    return out;
  }
  std::partial_sort(eligible.begin(), eligible.begin() + k, eligible.end(),
                    better);
  eligible.resize(k);
  out.items = std::move(eligible);
  return out;
}

/// Top-m users by cosine similarity to the given user (self excluded);
/// zero-norm embeddings sink to the bottom.
template <typename Scalar>
std::vector<Index> similar_users(const DenseMatrix<Scalar>& emb, Index n_users,
                                 Index user, Index m) {
  if (m < 1) throw Error("m must be >= 1");
  const DenseVector<Scalar> anchor = emb.col(user);
  const Scalar anchor_norm = anchor.norm();

  std::vector<Scalar> sim(n_users);
  for (Index v = 0; v < n_users; ++v) {
    const Scalar norm = emb.col(v).norm();
    sim[v] = (norm == Scalar(0) || anchor_norm == Scalar(0))
                 ? -std::numeric_limits<Scalar>::infinity()
                 : emb.col(v).dot(anchor) / (norm * anchor_norm);
  }
  std::vector<Index> order;
  order.reserve(n_users - 1);
  for (Index v = 0; v < n_users; ++v)
    if (v != user) order.push_back(v);
  const auto better = [&](Index a, Index b) {
    return sim[a] != sim[b] ? sim[a] > sim[b] : a < b;
  };
  const Index keep = std::min<Index>(m, static_cast<Index>(order.size()));
  std::partial_sort(order.begin(), order.begin() + keep, order.end(), better);
  order.resize(keep);
  return order;
}

}  // namespace vgcl
