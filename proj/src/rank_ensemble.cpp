#include "vgcl/rank_ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vgcl {

bool Permutation::is_valid() const {
  std::vector<bool> seen(ranks.size(), false);
  for (int r : ranks) {
    if (r < 0 || r >= size() || seen[r]) return false;
    seen[r] = true;
  }
  return !ranks.empty();
}

Permutation identity_permutation(int k) {
  Permutation p;
  p.ranks.resize(k);
  std::iota(p.ranks.begin(), p.ranks.end(), 0);
  return p;
}

int kendall_tau(const Permutation& a, const Permutation& b) {
  if (a.size() != b.size()) throw Error("kendall_tau: size mismatch");
  int discordant = 0;
  for (int s = 0; s < a.size(); ++s)
    for (int t = s + 1; t < a.size(); ++t)
      if ((a.ranks[s] < a.ranks[t]) != (b.ranks[s] < b.ranks[t])) ++discordant;
  return discordant;
}

RrfScores rrf_scores(const std::vector<Permutation>& perms) {
  if (perms.empty()) throw Error("rrf_scores: no permutations");
  const int k = perms.front().size();
  for (const auto& p : perms) {
    if (p.size() != k) throw Error("rrf_scores: mixed permutation sizes");
    if (!p.is_valid()) throw Error("rrf_scores: non-bijective permutation");
  }

  // Count rank occurrences per slot, then fold with the reciprocal weights
  // in rank order. Summation order is independent of the input order.
  std::vector<int> counts(static_cast<std::size_t>(k) * k, 0);
  for (const auto& p : perms)
    for (int slot = 0; slot < k; ++slot)
      ++counts[static_cast<std::size_t>(slot) * k + p.ranks[slot]];

  RrfScores out;
  out.votes = static_cast<int>(perms.size());
  out.scores.resize(k);
  for (int slot = 0; slot < k; ++slot) {
    double s = 0.0;
    for (int r = 0; r < k; ++r)
      s += static_cast<double>(counts[static_cast<std::size_t>(slot) * k + r]) /
           static_cast<double>(r + 1);
    out.scores[slot] = s;
  }
  return out;
}

std::vector<int> select_top_p(const RrfScores& scores, int p) {
  const int k = static_cast<int>(scores.scores.size());
  if (p < 1 || p > k) throw Error("select_top_p: p must lie in [1, K]");
  std::vector<int> slots(k);
  std::iota(slots.begin(), slots.end(), 0);
  std::sort(slots.begin(), slots.end(), [&](int a, int b) {
    return scores.scores[a] != scores.scores[b]
               ? scores.scores[a] > scores.scores[b]
               : a < b;
  });
  slots.resize(p);
  return slots;
}

double hoeffding_bound(const BoundParams& params) {
  if (params.n_votes < 1) throw Error("hoeffding_bound: need at least 1 vote");
  if (!(params.upper > params.lower))
    throw Error("hoeffding_bound: score range is empty");
  if (!(params.mu > 0.0))
    throw Error("theorem inapplicable: expected rank gap must be positive");
  const double range = params.upper - params.lower;
  const double exponent =
      -static_cast<double>(params.n_votes) * params.mu * params.mu /
      (2.0 * range * range);
  return std::min(1.0, std::exp(exponent));
}

Permutation mallows_sample(const MallowsModel& model, Rng& rng) {
  if (!model.center.is_valid()) throw Error("mallows_sample: invalid center");
  if (!(model.theta >= 0.0) || !std::isfinite(model.theta))
    throw Error("mallows_sample: dispersion must be finite and >= 0");
  const int k = model.center.size();

  // Slots in the center's preference order.
  std::vector<int> by_rank(k);
  for (int slot = 0; slot < k; ++slot) by_rank[model.center.ranks[slot]] = slot;

  const double q = std::exp(-model.theta);
  std::vector<int> inserted;  // current partial ranking, best first
  inserted.reserve(k);
  for (int i = 0; i < k; ++i) {
    // Insert the i-th preferred slot; adding j inversions has weight q^j.
    int inversions;
    if (q >= 1.0) {
      inversions = static_cast<int>(rng.below(i + 1));
    } else {
      const double total = (1.0 - std::pow(q, i + 1)) / (1.0 - q);
      double u = rng.uniform() * total;
      inversions = i;  // fp-leftover fallback: the least likely bucket
      double weight = 1.0;
      for (int j = 0; j <= i; ++j, weight *= q) {
        if (u < weight) {
          inversions = j;
          break;
        }
        u -= weight;
      }
    }
    inserted.insert(inserted.end() - inversions, by_rank[i]);
  }

  Permutation out;
  out.ranks.resize(k);
  for (int pos = 0; pos < k; ++pos) out.ranks[inserted[pos]] = pos;
  return out;
}

double estimate_rank_gap(const MallowsModel& model, int slot_j, int slot_k,
                         int n_samples, Rng& rng) {
  if (n_samples < 1) throw Error("estimate_rank_gap: need >= 1 sample");
  long long sum = 0;
  for (int s = 0; s < n_samples; ++s) {
    const Permutation perm = mallows_sample(model, rng);
    sum += perm.ranks[slot_j] - perm.ranks[slot_k];
  }
  return static_cast<double>(sum) / static_cast<double>(n_samples);
}

double estimate_score_gap(const MallowsModel& model, int slot_worse,
                          int slot_better, int n_samples, Rng& rng) {
  if (n_samples < 1) throw Error("estimate_score_gap: need >= 1 sample");
  double sum = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    const Permutation perm = mallows_sample(model, rng);
    sum += 1.0 / (perm.ranks[slot_better] + 1) -
           1.0 / (perm.ranks[slot_worse] + 1);
  }
  return sum / static_cast<double>(n_samples);
}

double empirical_misrank_rate(const MallowsModel& model, int slot_worse,
                              int slot_better, int n_votes, int trials,
                              Rng& rng) {
  if (n_votes < 1 || trials < 1)
    throw Error("empirical_misrank_rate: votes and trials must be >= 1");
  int misranked = 0;
  std::vector<Permutation> perms(n_votes);
  for (int t = 0; t < trials; ++t) {
    for (int n = 0; n < n_votes; ++n) perms[n] = mallows_sample(model, rng);
    const RrfScores s = rrf_scores(perms);
    if (s.scores[slot_worse] > s.scores[slot_better]) ++misranked;
  }
  return static_cast<double>(misranked) / static_cast<double>(trials);
}

}  // namespace vgcl
