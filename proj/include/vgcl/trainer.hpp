#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <vector>

#include "vgcl/adam.hpp"
#include "vgcl/embedding.hpp"
#include "vgcl/graph.hpp"
#include "vgcl/losses.hpp"
#include "vgcl/rng.hpp"

namespace vgcl {

struct TrainConfig {
  Index embedding_dim = 256;
  double learning_rate = 1e-3;
  int epochs = 100;
  int n_layers = 2;
  Index batch_size = 2048;
  double lambda = 0.05;  // contrastive weight
  double tau = 0.2;      // contrastive temperature
  std::uint64_t seed = 42;

  void validate() const {
    if (embedding_dim < 1) throw Error("trainer.d: must be >= 1");
    if (!(learning_rate > 0.0)) throw Error("trainer.learning_rate: must be > 0");
    if (epochs < 0) throw Error("trainer.epochs: must be >= 0");
    if (n_layers < 0) throw Error("trainer.layers: must be >= 0");
    if (batch_size < 1) throw Error("trainer.batch_size: must be >= 1");
    if (!(lambda > 0.0 && lambda < 1.0))
      throw Error("trainer.lambda: must lie in (0, 1)");
    if (!(tau > 0.0)) throw Error("trainer.tau: must be > 0");
  }
};

struct EpochStats {
  int epoch = 0;
  double bpr_loss = 0.0;
  double cl_loss = 0.0;
  double total = 0.0;
};

inline void write_metrics_line(std::ostream& out, const EpochStats& s) {
  out << "{\"epoch\":" << s.epoch << ",\"bpr_loss\":" << s.bpr_loss
      << ",\"cl_loss\":" << s.cl_loss << ",\"total\":" << s.total << "}\n";
}

/// Uniform positive edge plus one rejection-sampled negative per positive.
/// Throws if negatives cannot be found within the retry budget (users
/// interacting with every item are skipped and resampled).
inline TripleBatch sample_batch(const InteractionGraph& graph,
                                Index batch_size, Rng& rng) {
  if (graph.edges.empty()) throw Error("cannot sample from an edgeless graph");
  if (graph.n_items < 2) throw Error("negative sampling needs >= 2 items");

  TripleBatch batch;
  batch.triples.reserve(batch_size);
  for (Index k = 0; k < batch_size; ++k) {
    Triple t;
    bool found = false;
    for (int edge_try = 0; edge_try < 64 && !found; ++edge_try) {
      const auto& [u, i] =
          graph.edges[rng.below(static_cast<std::uint64_t>(graph.edges.size()))];
      if (graph.user_degree(u) >= graph.n_items) continue;  // nothing to reject to
      for (int neg_try = 0; neg_try < 64; ++neg_try) {
        const Index j = static_cast<Index>(
            rng.below(static_cast<std::uint64_t>(graph.n_items)));
        if (!graph.has_edge(u, j)) {
          t = {u, i, j};
          found = true;
          break;
        }
      }
    }
    if (!found) throw Error("negative sampling failed: retry budget exhausted");
    batch.triples.push_back(t);
  }
  batch.nodes = batch_nodes(batch.triples, graph.n_users);
  return batch;
}

namespace detail {

/// Scatters column gradients into a full-width buffer.
template <typename Scalar>
void scatter_columns(DenseMatrix<Scalar>& full, const std::vector<Index>& nodes,
                     const DenseMatrix<Scalar>& cols, Scalar scale = Scalar(1)) {
  for (std::size_t k = 0; k < nodes.size(); ++k)
    full.col(nodes[k]) += scale * cols.col(static_cast<Index>(k));
}

template <typename Scalar>
struct StepGradient {
  Scalar bpr = Scalar(0);
  Scalar cl = Scalar(0);
  DenseMatrix<Scalar> grad;  // w.r.t. the shared embedding table
};

/// Ranking loss on the layer-mean representations, differentiated back
/// through the propagation: dE0 = (1/(L+1)) sum_l G A^l with G the loss
/// gradient at the pooled representations (A is symmetric).
template <typename Scalar>
StepGradient<Scalar> pooled_ranking_gradient(
    const DenseMatrix<Scalar>& e0, const Eigen::SparseMatrix<Scalar>& adj,
    int n_layers, Index n_users, const TripleBatch& batch) {
  const auto stack = propagate(e0, adj, n_layers);
  const DenseMatrix<Scalar> pooled = mean_pool(stack);
  const LossGrad<Scalar> bpr = bpr_loss(pooled, n_users, batch);

  StepGradient<Scalar> out;
  out.bpr = bpr.value;
  out.grad = DenseMatrix<Scalar>::Zero(e0.rows(), e0.cols());
  scatter_columns(out.grad, bpr.nodes, bpr.grads);
  for (int l = 1; l <= n_layers; ++l) {
    DenseMatrix<Scalar> propagated = out.grad * adj;
    out.grad.setZero();
    scatter_columns(out.grad, bpr.nodes, bpr.grads);
    out.grad += propagated;
  }
  out.grad *= Scalar(1) / static_cast<Scalar>(n_layers + 1);
  return out;
}

/// One two-view step: ranking loss on the last augmented layer plus the
/// weighted contrastive loss between the two layer-mean views, all from
/// the one shared table. Backward pass per view via the Horner form
///   sum_l U A^l (+ A^L G_rank on the augmented view).
template <typename Scalar>
StepGradient<Scalar> two_view_gradient(const DenseMatrix<Scalar>& e0,
                                       const Eigen::SparseMatrix<Scalar>& adj_aug,
                                       const Eigen::SparseMatrix<Scalar>& adj_org,
                                       int n_layers, Index n_users,
                                       const TripleBatch& batch, Scalar lambda,
                                       Scalar tau) {
  const auto stack_aug = propagate(e0, adj_aug, n_layers);
  const auto stack_org = propagate(e0, adj_org, n_layers);
  const DenseMatrix<Scalar>& ranking_view = last_layer(stack_aug);
  const DenseMatrix<Scalar> pooled_aug = mean_pool(stack_aug);
  const DenseMatrix<Scalar> pooled_org = mean_pool(stack_org);

  const LossGrad<Scalar> bpr = bpr_loss(ranking_view, n_users, batch);

  const Index b = static_cast<Index>(batch.nodes.size());
  DenseMatrix<Scalar> view_aug(e0.rows(), b), view_org(e0.rows(), b);
  for (Index k = 0; k < b; ++k) {
    view_aug.col(k) = pooled_aug.col(batch.nodes[k]);
    view_org.col(k) = pooled_org.col(batch.nodes[k]);
  }
  const InfoNceGrad<Scalar> nce = info_nce_loss(view_aug, view_org, tau);

  StepGradient<Scalar> out;
  out.bpr = bpr.value;
  out.cl = nce.value;
  const Scalar cl_scale = lambda / static_cast<Scalar>(n_layers + 1);

  DenseMatrix<Scalar> back_aug =
      DenseMatrix<Scalar>::Zero(e0.rows(), e0.cols());
  scatter_columns(back_aug, batch.nodes, nce.grad_aug, cl_scale);
  scatter_columns(back_aug, bpr.nodes, bpr.grads);
  for (int l = 1; l <= n_layers; ++l) {
    DenseMatrix<Scalar> propagated = back_aug * adj_aug;
    back_aug.setZero();
    scatter_columns(back_aug, batch.nodes, nce.grad_aug, cl_scale);
    back_aug += propagated;
  }

  DenseMatrix<Scalar> back_org =
      DenseMatrix<Scalar>::Zero(e0.rows(), e0.cols());
  scatter_columns(back_org, batch.nodes, nce.grad_org, cl_scale);
  for (int l = 1; l <= n_layers; ++l) {
    DenseMatrix<Scalar> propagated = back_org * adj_org;
    back_org.setZero();
    scatter_columns(back_org, batch.nodes, nce.grad_org, cl_scale);
    back_org += propagated;
  }

  out.grad = std::move(back_aug);
  out.grad += back_org;
  return out;
}

}  // namespace detail

/// Baseline training: pairwise ranking loss on the layer-mean
/// representations of the single graph; returns the layer-mean embeddings
/// after the final epoch.
template <typename Scalar>
DenseMatrix<Scalar> train_vanilla(const InteractionGraph& graph,
                                  const TrainConfig& cfg,
                                  std::vector<EpochStats>* stats_out = nullptr,
                                  std::ostream* metrics_out = nullptr) {
  cfg.validate();
  const auto adj = normalized_adjacency<Scalar>(graph);
  DenseMatrix<Scalar> e0 =
      init_embeddings<Scalar>(graph.node_count(), cfg.embedding_dim, cfg.seed);
  AdamOptimizer<Scalar> adam(e0.rows(), e0.cols(),
                             static_cast<Scalar>(cfg.learning_rate));
  Rng rng(cfg.seed);

  const Index steps =
      (static_cast<Index>(graph.edges.size()) + cfg.batch_size - 1) /
      cfg.batch_size;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double epoch_bpr = 0.0;
    for (Index step = 0; step < steps; ++step) {
      const TripleBatch batch = sample_batch(graph, cfg.batch_size, rng);
      const auto result = detail::pooled_ranking_gradient(
          e0, adj, cfg.n_layers, graph.n_users, batch);
      if (!std::isfinite(static_cast<double>(result.bpr)))
        throw Error("training diverged: non-finite loss at epoch " +
                    std::to_string(epoch));
      epoch_bpr += static_cast<double>(result.bpr);
      adam.step(e0, result.grad);
    }
    const EpochStats stats{epoch, epoch_bpr / static_cast<double>(steps), 0.0,
                           epoch_bpr / static_cast<double>(steps)};
    if (stats_out) stats_out->push_back(stats);
    if (metrics_out) write_metrics_line(*metrics_out, stats);
  }
  return mean_pool(propagate(e0, adj, cfg.n_layers));
}

/// Two-view training on a shared embedding table: the ranking loss reads
/// the last layer of the augmented-graph propagation, the contrastive loss
/// aligns the layer-mean representations of the augmented and original
/// graphs over the batch's nodes. Returns the last augmented layer.
template <typename Scalar>
DenseMatrix<Scalar> train_votegcl(const InteractionGraph& graph,
                                  const AugmentedGraph& aug,
                                  const TrainConfig& cfg,
                                  std::vector<EpochStats>* stats_out = nullptr,
                                  std::ostream* metrics_out = nullptr,
                                  DenseMatrix<Scalar>* e0_out = nullptr) {
  cfg.validate();
  if (aug.merged.n_users != graph.n_users ||
      aug.merged.n_items != graph.n_items)
    throw Error("augmented graph does not extend the original graph");

  const auto adj_org = normalized_adjacency<Scalar>(graph);
  const auto adj_aug = normalized_adjacency<Scalar>(aug.merged);
  DenseMatrix<Scalar> e0 =
      init_embeddings<Scalar>(graph.node_count(), cfg.embedding_dim, cfg.seed);
  AdamOptimizer<Scalar> adam(e0.rows(), e0.cols(),
                             static_cast<Scalar>(cfg.learning_rate));
  Rng rng(cfg.seed);

  // Batches are drawn from the original interaction set; the synthetic
  // edges only shape the propagation structure.
  const Index steps =
      (static_cast<Index>(graph.edges.size()) + cfg.batch_size - 1) /
      cfg.batch_size;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double epoch_bpr = 0.0, epoch_cl = 0.0;
    for (Index step = 0; step < steps; ++step) {
      const TripleBatch batch = sample_batch(graph, cfg.batch_size, rng);
      const auto result = detail::two_view_gradient(
          e0, adj_aug, adj_org, cfg.n_layers, graph.n_users, batch,
          static_cast<Scalar>(cfg.lambda), static_cast<Scalar>(cfg.tau));
      const double total = static_cast<double>(
          total_loss(result.bpr, result.cl, static_cast<Scalar>(cfg.lambda)));
      if (!std::isfinite(total))
        throw Error("training diverged: non-finite loss at epoch " +
                    std::to_string(epoch));
      epoch_bpr += static_cast<double>(result.bpr);
      epoch_cl += static_cast<double>(result.cl);
      adam.step(e0, result.grad);
    }
    const double denom = static_cast<double>(steps);
    const EpochStats stats{epoch, epoch_bpr / denom, epoch_cl / denom,
                           (epoch_bpr + cfg.lambda * epoch_cl) / denom};
    if (stats_out) stats_out->push_back(stats);
    if (metrics_out) write_metrics_line(*metrics_out, stats);
  }
  if (e0_out) *e0_out = e0;
  return last_layer(propagate(e0, adj_aug, cfg.n_layers));
}

}  // namespace vgcl
