#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "vgcl/embedding.hpp"
#include "vgcl/losses.hpp"

using namespace vgcl;

namespace {

/// Scatters per-node gradients into a dense matrix for the FD harness.
DenseMatrix<double> densify(const LossGrad<double>& lg, Index rows,
                            Index cols) {
  DenseMatrix<double> full = DenseMatrix<double>::Zero(rows, cols);
  for (std::size_t k = 0; k < lg.nodes.size(); ++k)
    full.col(lg.nodes[k]) = lg.grads.col(static_cast<Index>(k));
  return full;
}

TripleBatch make_batch(std::vector<Triple> triples, Index n_users) {
  TripleBatch batch;
  batch.triples = std::move(triples);
  batch.nodes = batch_nodes(batch.triples, n_users);
  return batch;
}

std::vector<std::pair<Index, Index>> coords_in(const std::vector<Index>& nodes,
                                               Index dim, int count,
                                               std::mt19937_64& gen) {
  std::vector<std::pair<Index, Index>> coords;
  std::uniform_int_distribution<std::size_t> pick_node(0, nodes.size() - 1);
  std::uniform_int_distribution<Index> pick_dim(0, dim - 1);
  for (int c = 0; c < count; ++c)
    coords.emplace_back(pick_dim(gen), nodes[pick_node(gen)]);
  return coords;
}

}  // namespace

TEST_CASE("bpr_loss closed-form values") {
  // one user, two items; margins arranged by hand
  DenseMatrix<double> emb = DenseMatrix<double>::Zero(2, 3);
  const auto batch = make_batch({{0, 0, 1}}, 1);

  SUBCASE("equal scores cost ln 2") {
    const auto lg = bpr_loss(emb, 1, batch);
    CHECK(lg.value == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("unit margin costs softplus(-1)") {
    emb.col(0) << 1.0, 0.0;
    emb.col(1) << 1.0, 0.0;  // y_ui = 1
    emb.col(2) << 0.0, 1.0;  // y_uj = 0
    const auto lg = bpr_loss(emb, 1, batch);
    CHECK(lg.value ==
          doctest::Approx(std::log1p(std::exp(-1.0))).epsilon(1e-12));
    CHECK(lg.value == doctest::Approx(0.3132617).epsilon(1e-6));
  }
  SUBCASE("saturated margin neither overflows nor costs anything") {
    emb.col(0) << 40.0, 0.0;
    emb.col(1) << 1.0, 0.0;  // y_ui = 40
    emb.col(2) << 0.0, 1.0;  // y_uj = 0
    const auto lg = bpr_loss(emb, 1, batch);
    CHECK(lg.value < 1e-12);
    CHECK(std::isfinite(lg.value));
  }
  SUBCASE("loss sums over triples") {
    const auto one = bpr_loss(emb, 1, batch);
    const auto twice = bpr_loss(emb, 1, make_batch({{0, 0, 1}, {0, 0, 1}}, 1));
    CHECK(twice.value == doctest::Approx(2.0 * one.value).epsilon(1e-12));
  }
}

TEST_CASE("bpr gradient is exactly zero at the symmetric saddle") {
  DenseMatrix<double> emb(3, 3);
  emb.col(0) << 0.3, -0.7, 1.1;  // user
  emb.col(1) << 0.5, 0.25, -1.0;
  emb.col(2) = emb.col(1);  // identical positive and negative item
  const auto lg = bpr_loss(emb, 1, make_batch({{0, 0, 1}}, 1));
  const Index user_slot = static_cast<Index>(
      std::find(lg.nodes.begin(), lg.nodes.end(), 0) - lg.nodes.begin());
  CHECK(lg.grads.col(user_slot).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("bpr gradients match central finite differences") {
  std::mt19937_64 gen(2024);
  for (int round = 0; round < 10; ++round) {
    const Index n_users = 4, n_items = 6, dim = 5;
    auto emb = init_embeddings<double>(n_users + n_items, dim, 100 + round);
    std::uniform_int_distribution<Index> user(0, n_users - 1),
        item(0, n_items - 1);
    std::vector<Triple> triples;
    for (int t = 0; t < 5; ++t) {
      const Index i = item(gen);
      Index j = item(gen);
      while (j == i) j = item(gen);
      triples.push_back({user(gen), i, j});
    }
    const auto batch = make_batch(triples, n_users);

    const auto loss_fn = [&](const DenseMatrix<double>& e) {
      const auto lg = bpr_loss(e, n_users, batch);
      return std::make_pair(lg.value, densify(lg, e.rows(), e.cols()));
    };
    const auto coords = coords_in(batch.nodes, dim, 50, gen);
    CHECK(finite_difference_check(loss_fn, emb, 1e-5, coords) < 1e-4);
  }
}

TEST_CASE("info_nce closed-form values") {
  SUBCASE("batch of one with matching views is exactly zero") {
    DenseMatrix<double> z(3, 1);
    z.col(0) << 0.2, -0.4, 1.0;
    const auto got = info_nce_loss(z, z, 0.37);
    CHECK(got.value == 0.0);
  }
  SUBCASE("orthogonal pair at tau=1") {
    DenseMatrix<double> z(2, 2);
    z.col(0) << 1.0, 0.0;
    z.col(1) << 0.0, 1.0;
    const auto got = info_nce_loss(z, z, 1.0);
    const double expected = 2.0 * (-1.0 + std::log(std::exp(1.0) + 1.0));
    CHECK(got.value == doctest::Approx(expected).epsilon(1e-12));
    CHECK(got.value == doctest::Approx(0.6265234).epsilon(1e-6));
  }
  SUBCASE("value is invariant to batch reordering") {
    const auto aug = init_embeddings<double>(6, 4, 8);
    const auto org = init_embeddings<double>(6, 4, 9);
    const double base = info_nce_loss(aug, org, 0.2).value;
    std::vector<Index> perm{3, 0, 5, 1, 4, 2};
    DenseMatrix<double> aug2(4, 6), org2(4, 6);
    for (Index c = 0; c < 6; ++c) {
      aug2.col(c) = aug.col(perm[c]);
      org2.col(c) = org.col(perm[c]);
    }
    CHECK(info_nce_loss(aug2, org2, 0.2).value ==
          doctest::Approx(base).epsilon(1e-12));
  }
  SUBCASE("zero-norm column rejected") {
    DenseMatrix<double> z = DenseMatrix<double>::Zero(3, 2);
    z.col(0) << 1.0, 0.0, 0.0;
    CHECK_THROWS_WITH_AS(info_nce_loss(z, z, 0.2),
                         doctest::Contains("degenerate"), Error);
  }
}

TEST_CASE("inputs are normalized before entering the contrastive loss") {
  // scaling a column must not change the loss (z = e/|e|)
  auto aug = init_embeddings<double>(5, 4, 21);
  const auto org = init_embeddings<double>(5, 4, 22);
  const double base = info_nce_loss(aug, org, 0.2).value;
  aug.col(2) *= 37.5;
  CHECK(info_nce_loss(aug, org, 0.2).value ==
        doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("relation between the two contrastive forms") {
  // including-self minus excluding-self equals the direct log-ratio sum
  for (int round = 0; round < 5; ++round) {
    const auto aug = init_embeddings<double>(4 + round, 5, 300 + round);
    const auto org = init_embeddings<double>(4 + round, 5, 400 + round);
    const double tau = 0.2;
    const double with_self = info_nce_loss(aug, org, tau).value;
    const double without_self = info_nce_value_excluding_self(aug, org, tau);

    DenseVector<double> na, no;
    DenseMatrix<double> za(aug.rows(), aug.cols()), zo(org.rows(), org.cols());
    for (Index c = 0; c < aug.cols(); ++c) {
      za.col(c) = aug.col(c) / aug.col(c).norm();
      zo.col(c) = org.col(c) / org.col(c).norm();
    }
    const DenseMatrix<double> s = (za.transpose() * zo) / tau;
    double expected_diff = 0.0;
    for (Index i = 0; i < s.rows(); ++i) {
      double full = 0.0, excl = 0.0;
      for (Index j = 0; j < s.cols(); ++j) {
        full += std::exp(s(i, j));
        if (j != i) excl += std::exp(s(i, j));
      }
      expected_diff += std::log(full) - std::log(excl);
    }
    CHECK(with_self - without_self ==
          doctest::Approx(expected_diff).epsilon(1e-9));
  }
}

TEST_CASE("info_nce gradients match central finite differences") {
  std::mt19937_64 gen(77);
  for (int round = 0; round < 10; ++round) {
    const Index b = 4, dim = 5;
    const auto aug = init_embeddings<double>(b, dim, 500 + round);
    const auto org = init_embeddings<double>(b, dim, 600 + round);
    const double tau = 0.2;

    std::vector<Index> all_cols(b);
    for (Index c = 0; c < b; ++c) all_cols[c] = c;
    const auto coords = coords_in(all_cols, dim, 25, gen);

    const auto wrt_aug = [&](const DenseMatrix<double>& e) {
      const auto got = info_nce_loss(e, org, tau);
      return std::make_pair(got.value, got.grad_aug);
    };
    CHECK(finite_difference_check(wrt_aug, aug, 1e-5, coords) < 1e-4);

    const auto wrt_org = [&](const DenseMatrix<double>& e) {
      const auto got = info_nce_loss(aug, e, tau);
      return std::make_pair(got.value, got.grad_org);
    };
    CHECK(finite_difference_check(wrt_org, org, 1e-5, coords) < 1e-4);
  }
}

TEST_CASE("total_loss") {
  CHECK(total_loss(1.0, 2.0, 0.1) == doctest::Approx(1.2).epsilon(1e-15));
  CHECK(total_loss(3.5, 0.0, 0.7) == 3.5);
  // decomposition is exact (dyadic fixtures avoid representation rounding)
  for (double lambda : {0.25, 0.5, 0.75})
    CHECK(total_loss(2.25, 1.75, lambda) - 2.25 == lambda * 1.75);
  // monotone in the contrastive term
  CHECK(total_loss(1.0, 3.0, 0.2) >= total_loss(1.0, 2.0, 0.2));
}

TEST_CASE("finite_difference_check validates its step domain") {
  const auto emb = init_embeddings<double>(2, 2, 1);
  const auto fn = [](const DenseMatrix<double>& e) {
    return std::make_pair(e.squaredNorm(), DenseMatrix<double>(2.0 * e));
  };
  CHECK_THROWS_AS(finite_difference_check(fn, emb, 1e-7, {{0, 0}}), Error);
  CHECK(finite_difference_check(fn, emb, 1e-4, {{0, 0}, {1, 1}}) < 1e-7);
}
