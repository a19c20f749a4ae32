#pragma once

#include <vector>

#include "vgcl/common.hpp"
#include "vgcl/rng.hpp"

namespace vgcl {

/// A rank assignment over K candidate slots: ranks[slot] is the 0-indexed
/// rank (0 = most preferred). Always bijective.
struct Permutation {
  std::vector<int> ranks;

  int size() const { return static_cast<int>(ranks.size()); }
  bool is_valid() const;

  friend bool operator==(const Permutation&, const Permutation&) = default;
};

Permutation identity_permutation(int k);

/// Number of discordant pairs between two rankings of the same slots.
int kendall_tau(const Permutation& a, const Permutation& b);

/// Reciprocal-rank aggregate over N rankings:
///   scores[slot] = sum_n 1 / (rank_n(slot) + 1).
/// Accumulated per rank value in a fixed order, so the result is
/// bit-identical under any reordering of the input list.
struct RrfScores {
  std::vector<double> scores;
  int votes = 0;
};

RrfScores rrf_scores(const std::vector<Permutation>& perms);

/// The p slots with the highest aggregate scores, descending; ties keep
/// the earlier candidate slot (slots are positions in the retrieval order).
std::vector<int> select_top_p(const RrfScores& scores, int p);

/// Score-aggregation concentration bound parameters: n_votes independent
/// rankings, expected rank gap mu between the worse and the better item,
/// and the score function's range [lower, upper].
struct BoundParams {
  int n_votes = 1;
  double mu = 0.0;
  double lower = 0.0;  // A
  double upper = 1.0;  // B
};

/// exp(-N mu^2 / (2 (B-A)^2)), clamped to <= 1. Requires mu > 0.
double hoeffding_bound(const BoundParams& params);

/// Distribution over rankings with density proportional to
/// exp(-theta * kendall_tau(sigma, center)).
struct MallowsModel {
  Permutation center;
  double theta = 0.0;
};

/// Exact sampling by repeated insertion.
Permutation mallows_sample(const MallowsModel& model, Rng& rng);

/// Monte-Carlo estimate of E[rank(slot_j) - rank(slot_k)].
double estimate_rank_gap(const MallowsModel& model, int slot_j, int slot_k,
                         int n_samples, Rng& rng);

/// Monte-Carlo estimate of E[g(rank(slot_better)) - g(rank(slot_worse))]
/// with g(r) = 1/(r+1): the mean per-vote score gap, which is the quantity
/// the Hoeffding argument actually concentrates. Positive exactly when the
/// rank gap of (slot_worse, slot_better) is positive, but generally much
/// smaller in magnitude than the rank gap.
double estimate_score_gap(const MallowsModel& model, int slot_worse,
                          int slot_better, int n_samples, Rng& rng);

/// Fraction of trials in which the worse slot's N-vote aggregate strictly
/// exceeds the better slot's.
double empirical_misrank_rate(const MallowsModel& model, int slot_worse,
                              int slot_better, int n_votes, int trials,
                              Rng& rng);

}  // namespace vgcl
