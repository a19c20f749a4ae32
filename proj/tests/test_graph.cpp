#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "test_util.hpp"
#include "vgcl/graph.hpp"

using namespace vgcl;

namespace {

/// Dense reference adjacency built straight from the definition.
DenseMatrix<double> dense_adjacency(const InteractionGraph& g) {
  DenseMatrix<double> a = DenseMatrix<double>::Zero(g.node_count(),
                                                    g.node_count());
  for (const auto& [u, i] : g.edges) {
    const double w =
        1.0 / std::sqrt(static_cast<double>(g.user_degree(u)) *
                        static_cast<double>(g.item_degree(i)));
    a(u, g.item_node(i)) = w;
    a(g.item_node(i), u) = w;
  }
  return a;
}

InteractionGraph random_graph(std::mt19937_64& gen, Index max_users = 8,
                              Index max_items = 8) {
  std::uniform_int_distribution<Index> users(1, max_users), items(1, max_items);
  const Index nu = users(gen), ni = items(gen);
  std::vector<std::pair<Index, Index>> edges;
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (Index u = 0; u < nu; ++u)
    for (Index i = 0; i < ni; ++i)
      if (coin(gen) < 0.4) edges.emplace_back(u, i);
  if (edges.empty()) edges.emplace_back(0, 0);
  return make_graph(nu, ni, std::move(edges));
}

}  // namespace

TEST_CASE("build_graph basics") {
  SUBCASE("one user, one item") {
    auto g = make_graph(1, 1, {{0, 0}});
    CHECK(g.edges.size() == 1);
    CHECK(g.user_degree(0) == 1);
    CHECK(g.item_degree(0) == 1);
  }
  SUBCASE("two users share an item") {
    auto g = make_graph(2, 1, {{0, 0}, {1, 0}});
    CHECK(g.item_degree(0) == 2);
    CHECK(g.user_degree(0) == 1);
    CHECK(g.user_degree(1) == 1);
  }
  SUBCASE("empty log yields zero edges") {
    auto g = make_graph(2, 2, {});
    CHECK(g.edges.empty());
    CHECK(g.user_degree(1) == 0);
  }
}

TEST_CASE("build_graph from a log keeps id-table dimensions") {
  vgcl::testing::TempDir dir;
  const auto path = vgcl::testing::write_file(dir, "log.tsv",
                                              "u1\ta\t5.0\t1\n"
                                              "u1\tb\t5.0\t2\n"
                                              "u2\ta\t5.0\t3\n");
  const InteractionLog log = load_interactions(path);
  const InteractionGraph g = build_graph(log);
  CHECK(g.n_users == 2);
  CHECK(g.n_items == 2);
  CHECK(g.edges.size() == 3);
  CHECK(g.has_edge(log.users.lookup("u1"), log.items.lookup("b")));
  CHECK_FALSE(g.has_edge(log.users.lookup("u2"), log.items.lookup("b")));
}

TEST_CASE("normalized adjacency entries") {
  SUBCASE("single edge of degree 1/1 gives weight 1") {
    auto g = make_graph(1, 1, {{0, 0}});
    auto adj = normalized_adjacency<double>(g);
    CHECK(adj.coeff(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(adj.coeff(1, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(adj.coeff(0, 0) == 0.0);
  }
  SUBCASE("degree 2 item against degree 1 user gives 1/sqrt(2)") {
    auto g = make_graph(2, 1, {{0, 0}, {1, 0}});
    auto adj = normalized_adjacency<double>(g);
    CHECK(adj.coeff(0, 2) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  }
  SUBCASE("isolated user row is empty") {
    auto g = make_graph(2, 1, {{0, 0}});
    auto adj = normalized_adjacency<double>(g);
    for (Index c = 0; c < adj.cols(); ++c) CHECK(adj.coeff(1, c) == 0.0);
  }
}

TEST_CASE("normalized adjacency matches the dense definition on random graphs") {
  std::mt19937_64 gen(42);
  for (int trial = 0; trial < 30; ++trial) {
    const InteractionGraph g = random_graph(gen);
    const auto sparse = normalized_adjacency<double>(g);
    const DenseMatrix<double> dense = dense_adjacency(g);
    const DenseMatrix<double> got = DenseMatrix<double>(sparse);
    CHECK((got - dense).cwiseAbs().maxCoeff() == 0.0);
    // symmetry and zero diagonal
    CHECK((got - got.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(got.diagonal().cwiseAbs().maxCoeff() == 0.0);
    // row sums against the handwritten formula
    for (Index u = 0; u < g.n_users; ++u) {
      double expected = 0.0;
      for (const Index i : g.items_of_user[u])
        expected += 1.0 / std::sqrt(static_cast<double>(g.user_degree(u)) *
                                    static_cast<double>(g.item_degree(i)));
      CHECK(got.row(u).sum() == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("low_degree_users nearest-rank selection") {
  SUBCASE("worked example: degrees 1,1,2,5,8,9,10,12 at q=0.25") {
    std::vector<std::pair<Index, Index>> edges;
    const std::vector<int> degrees{1, 1, 2, 5, 8, 9, 10, 12};
    Index item = 0;
    for (Index u = 0; u < 8; ++u)
      for (int d = 0; d < degrees[u]; ++d) edges.emplace_back(u, item++);
    auto g = make_graph(8, item, edges);
    const auto selected = low_degree_users(g, 0.25);
    CHECK(selected == std::vector<Index>{0, 1});

    // brute-force cross-check of the nearest-rank threshold
    std::vector<int> sorted = degrees;
    std::sort(sorted.begin(), sorted.end());
    const int threshold = sorted[static_cast<std::size_t>(
                                     std::ceil(0.25 * sorted.size())) - 1];
    for (Index u = 0; u < 8; ++u) {
      const bool in = std::find(selected.begin(), selected.end(), u) !=
                      selected.end();
      CHECK(in == (degrees[u] <= threshold));
    }
  }
  SUBCASE("equal degrees select everyone at any quantile") {
    auto g = make_graph(3, 3, {{0, 0}, {1, 1}, {2, 2}});
    for (double q : {0.1, 0.5, 1.0})
      CHECK(low_degree_users(g, q).size() == 3);
  }
  SUBCASE("q = 1 selects all users") {
    auto g = make_graph(3, 4, {{0, 0}, {0, 1}, {0, 2}, {1, 0}, {2, 3}});
    CHECK(low_degree_users(g, 1.0).size() == 3);
  }
  SUBCASE("quantile domain") {
    auto g = make_graph(1, 1, {{0, 0}});
    CHECK_THROWS_AS(low_degree_users(g, 0.0), Error);
    CHECK_THROWS_AS(low_degree_users(g, 1.5), Error);
  }
}

TEST_CASE("low_degree_users is monotone in the quantile") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 20; ++trial) {
    const InteractionGraph g = random_graph(gen);
    const auto small = low_degree_users(g, 0.25);
    const auto large = low_degree_users(g, 0.75);
    for (const Index u : small)
      CHECK(std::find(large.begin(), large.end(), u) != large.end());
  }
}

TEST_CASE("merge_augmented") {
  auto g = make_graph(2, 2, {{0, 0}, {1, 0}});

  SUBCASE("empty merge is the identity") {
    const AugmentedGraph aug = merge_augmented(g, {});
    CHECK(aug.merged.edges == g.edges);
    const auto a = normalized_adjacency<double>(g);
    const auto b = normalized_adjacency<double>(aug.merged);
    CHECK((DenseMatrix<double>(a) - DenseMatrix<double>(b))
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }

  SUBCASE("new edge updates degrees and normalization") {
    // 3-node instance: user0-item0 exists; add user0-item1
    auto base = make_graph(1, 2, {{0, 0}});
    AugmentedEdgeSet fresh;
    fresh.edges.push_back({0, 1, 1.0f, 4});
    const AugmentedGraph aug = merge_augmented(base, fresh);
    CHECK(aug.merged.user_degree(0) == 2);
    CHECK(aug.merged.item_degree(1) == 1);
    const auto adj = normalized_adjacency<double>(aug.merged);
    // recomputed by hand: deg(u)=2, deg(i)=1 -> 1/sqrt(2)
    CHECK(adj.coeff(0, 1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
    CHECK(adj.coeff(0, 2) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
    // base edges all survive
    for (const auto& e : base.edges)
      CHECK(std::find(aug.merged.edges.begin(), aug.merged.edges.end(), e) !=
            aug.merged.edges.end());
  }

  SUBCASE("duplicating an observed edge fails") {
    AugmentedEdgeSet dup;
    dup.edges.push_back({0, 0, 1.0f, 4});
    CHECK_THROWS_WITH_AS(merge_augmented(g, dup),
                         doctest::Contains("already observed"), Error);
  }

  SUBCASE("duplicate within the new set fails") {
    AugmentedEdgeSet dup;
    dup.edges.push_back({0, 1, 1.0f, 4});
    dup.edges.push_back({0, 1, 0.5f, 2});
    CHECK_THROWS_AS(merge_augmented(g, dup), Error);
  }
}

TEST_CASE("merge preserves the base edge set on random graphs") {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 10; ++trial) {
    const InteractionGraph g = random_graph(gen, 5, 6);
    AugmentedEdgeSet fresh;
    for (Index u = 0; u < g.n_users; ++u)
      for (Index i = 0; i < g.n_items; ++i)
        if (!g.has_edge(u, i) && fresh.edges.size() < 3)
          fresh.edges.push_back({u, i, 0.5f, 1});
    const AugmentedGraph aug = merge_augmented(g, fresh);
    CHECK(aug.merged.edges.size() == g.edges.size() + fresh.edges.size());
    for (const auto& [u, i] : g.edges) CHECK(aug.merged.has_edge(u, i));
  }
}
