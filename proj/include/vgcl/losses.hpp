#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <utility>
#include <vector>

#include "vgcl/common.hpp"
#include "vgcl/rng.hpp"

namespace vgcl {

struct Triple {
  Index user = 0;
  Index pos_item = 0;  // item-local
  Index neg_item = 0;  // item-local
};

struct TripleBatch {
  std::vector<Triple> triples;
  std::vector<Index> nodes;  // distinct node indices in the batch, ascending
};

/// Builds the sorted distinct node set of a triple list.
inline std::vector<Index> batch_nodes(const std::vector<Triple>& triples,
                                      Index n_users) {
  std::vector<Index> nodes;
  nodes.reserve(triples.size() * 3);
  for (const auto& t : triples) {
    nodes.push_back(t.user);
    nodes.push_back(n_users + t.pos_item);
    nodes.push_back(n_users + t.neg_item);
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  return nodes;
}

template <typename Scalar>
Scalar stable_softplus(Scalar x) {  // log(1 + e^x) without overflow
  return x > Scalar(0) ? x + std::log1p(std::exp(-x))
                       : std::log1p(std::exp(x));
}

template <typename Scalar>
Scalar stable_sigmoid(Scalar x) {
  if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

/// Loss value plus gradients for the rows it touches; grads.col(k) is the
/// gradient w.r.t. the embedding column nodes[k].
template <typename Scalar>
struct LossGrad {
  Scalar value = Scalar(0);
  std::vector<Index> nodes;
  DenseMatrix<Scalar> grads;  // dim x nodes.size()
};

/// Pairwise ranking loss, summed over triples:
///   sum -log sigmoid(y_ui - y_uj), evaluated as softplus(-(y_ui - y_uj)).
template <typename Scalar>
LossGrad<Scalar> bpr_loss(const DenseMatrix<Scalar>& emb, Index n_users,
                          const TripleBatch& batch) {
  LossGrad<Scalar> out;
  out.nodes = batch.nodes.empty() ? batch_nodes(batch.triples, n_users)
                                  : batch.nodes;
  out.grads = DenseMatrix<Scalar>::Zero(emb.rows(), out.nodes.size());

  std::unordered_map<Index, Index> slot;
  slot.reserve(out.nodes.size());
  for (std::size_t k = 0; k < out.nodes.size(); ++k)
    slot[out.nodes[k]] = static_cast<Index>(k);

  for (const auto& t : batch.triples) {
    const Index iu = t.user;
    const Index ip = n_users + t.pos_item;
    const Index in = n_users + t.neg_item;
    const Scalar margin =
        emb.col(iu).dot(emb.col(ip)) - emb.col(iu).dot(emb.col(in));
    out.value += stable_softplus(-margin);
    const Scalar coeff = -stable_sigmoid(-margin);  // d loss / d margin
    out.grads.col(slot[iu]) += coeff * (emb.col(ip) - emb.col(in));
    out.grads.col(slot[ip]) += coeff * emb.col(iu);
    out.grads.col(slot[in]) -= coeff * emb.col(iu);
  }
  return out;
}

template <typename Scalar>
struct InfoNceGrad {
  Scalar value = Scalar(0);
  DenseMatrix<Scalar> grad_aug;  // w.r.t. the raw (unnormalized) inputs
  DenseMatrix<Scalar> grad_org;
};

namespace detail {

template <typename Scalar>
DenseMatrix<Scalar> l2_normalize_columns(const DenseMatrix<Scalar>& m,
                                         DenseVector<Scalar>& norms) {
  norms.resize(m.cols());
  DenseMatrix<Scalar> z(m.rows(), m.cols());
  for (Index c = 0; c < m.cols(); ++c) {
    const Scalar n = m.col(c).norm();
    if (!(n > Scalar(0))) throw Error("degenerate embedding: zero norm in contrastive batch");
    norms[c] = n;
    z.col(c) = m.col(c) / n;
  }
  return z;
}

/// Cross-view similarity logits S(i, j) = z_i . z_org_j / tau.
template <typename Scalar>
DenseMatrix<Scalar> similarity_logits(const DenseMatrix<Scalar>& z_aug,
                                      const DenseMatrix<Scalar>& z_org,
                                      Scalar tau) {
  return (z_aug.transpose() * z_org) / tau;
}

}  // namespace detail

/// Contrastive alignment loss between two views:
///   sum_i [ -S(i,i) + log sum_j exp(S(i,j)) ]
/// with the denominator including j = i. Inputs are raw view columns for
/// the batch nodes; L2 normalization happens inside, and the returned
/// gradients are w.r.t. the raw inputs.
template <typename Scalar>
InfoNceGrad<Scalar> info_nce_loss(const DenseMatrix<Scalar>& aug,
                                  const DenseMatrix<Scalar>& org, Scalar tau) {
  if (aug.rows() != org.rows() || aug.cols() != org.cols())
    throw Error("contrastive views must have identical shapes");
  if (aug.cols() == 0) throw Error("empty contrastive batch");
  if (!(tau > Scalar(0))) throw Error("temperature must be positive");

  DenseVector<Scalar> norm_aug, norm_org;
  const DenseMatrix<Scalar> z_aug = detail::l2_normalize_columns(aug, norm_aug);
  const DenseMatrix<Scalar> z_org = detail::l2_normalize_columns(org, norm_org);
  const DenseMatrix<Scalar> logits =
      detail::similarity_logits(z_aug, z_org, tau);
  const Index b = logits.rows();

  InfoNceGrad<Scalar> out;
  const DenseVector<Scalar> row_max = logits.rowwise().maxCoeff();
  DenseMatrix<Scalar> softmax =
      (logits.colwise() - row_max).array().exp().matrix();
  const DenseVector<Scalar> denom = softmax.rowwise().sum();
  for (Index i = 0; i < b; ++i)
    out.value += row_max[i] + std::log(denom[i]) - logits(i, i);
  softmax.array().colwise() /= denom.array();

  // d loss / d logits = softmax - I
  DenseMatrix<Scalar>& dlogits = softmax;
  dlogits.diagonal().array() -= Scalar(1);
  const DenseMatrix<Scalar> dz_aug = z_org * dlogits.transpose() / tau;
  const DenseMatrix<Scalar> dz_org = z_aug * dlogits / tau;

  // back through z = e / |e|:  de = (dz - (z . dz) z) / |e|
  out.grad_aug.resize(aug.rows(), aug.cols());
  out.grad_org.resize(org.rows(), org.cols());
  for (Index c = 0; c < aug.cols(); ++c) {
    out.grad_aug.col(c) =
        (dz_aug.col(c) - z_aug.col(c).dot(dz_aug.col(c)) * z_aug.col(c)) /
        norm_aug[c];
    out.grad_org.col(c) =
        (dz_org.col(c) - z_org.col(c).dot(dz_org.col(c)) * z_org.col(c)) /
        norm_org[c];
  }
  return out;
}

/// Variant whose denominator excludes the positive pair (j != i); exposed
/// so the relation between the two forms can be checked directly.
/// Requires a batch of at least 2.
template <typename Scalar>
Scalar info_nce_value_excluding_self(const DenseMatrix<Scalar>& aug,
                                     const DenseMatrix<Scalar>& org,
                                     Scalar tau) {
  if (aug.cols() < 2)
    throw Error("self-excluding contrastive loss needs a batch of >= 2");
  DenseVector<Scalar> norm_aug, norm_org;
  const DenseMatrix<Scalar> z_aug = detail::l2_normalize_columns(aug, norm_aug);
  const DenseMatrix<Scalar> z_org = detail::l2_normalize_columns(org, norm_org);
  const DenseMatrix<Scalar> logits =
      detail::similarity_logits(z_aug, z_org, tau);

  Scalar value = Scalar(0);
  for (Index i = 0; i < logits.rows(); ++i) {
    Scalar row_max = -std::numeric_limits<Scalar>::infinity();
    for (Index j = 0; j < logits.cols(); ++j)
      if (j != i) row_max = std::max(row_max, logits(i, j));
    Scalar denom = Scalar(0);
    for (Index j = 0; j < logits.cols(); ++j)
      if (j != i) denom += std::exp(logits(i, j) - row_max);
    value += row_max + std::log(denom) - logits(i, i);
  }
  return value;
}

/// Overall objective: recommendation loss plus weighted contrastive loss.
template <typename Scalar>
Scalar total_loss(Scalar bpr, Scalar contrastive, Scalar lambda) {
  return bpr + lambda * contrastive;
}

/// Central-difference gradient validation on selected coordinates.
/// `loss_fn` maps an embedding matrix to (value, dense gradient of the same
/// shape). Returns the maximum relative error over the coordinates.
template <typename Scalar, typename LossFn>
double finite_difference_check(
    const LossFn& loss_fn, const DenseMatrix<Scalar>& emb, double eps,
    const std::vector<std::pair<Index, Index>>& coords) {
  if (eps < 1e-6 || eps > 1e-3)
    throw Error("finite-difference step must lie in [1e-6, 1e-3]");
  const auto [value, grad] = loss_fn(emb);
  (void)value;

  double worst = 0.0;
  DenseMatrix<Scalar> perturbed = emb;
  for (const auto& [r, c] : coords) {
    const Scalar saved = perturbed(r, c);
    perturbed(r, c) = saved + static_cast<Scalar>(eps);
    const double up = static_cast<double>(loss_fn(perturbed).first);
    perturbed(r, c) = saved - static_cast<Scalar>(eps);
    const double down = static_cast<double>(loss_fn(perturbed).first);
    perturbed(r, c) = saved;

    const double numeric = (up - down) / (2.0 * eps);
    const double analytic = static_cast<double>(grad(r, c));
    const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-8});
    worst = std::max(worst, std::abs(numeric - analytic) / scale);
  }
  return worst;
}

}  // namespace vgcl
