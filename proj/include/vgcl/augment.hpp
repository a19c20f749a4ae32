#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vgcl/backend.hpp"
#include "vgcl/data_io.hpp"
#include "vgcl/graph.hpp"

namespace vgcl {

struct AugmentationConfig {
  double quantile = 0.25;   // degree quantile selecting target users
  int candidates = 10;      // K
  int votes = 8;            // N independent rerankings
  int edges_per_user = 1;   // p
  int parallelism = 1;
  PromptMode prompt_mode = PromptMode::kFewShot;
  bool include_reasoning = true;
  int fewshot_items = 3;    // graded answers shown in the reference example
  std::uint64_t seed = 7;
  RerankBackend backend;

  void validate() const {
    if (!(quantile > 0.0) || quantile > 1.0)
      throw Error("augment.quantile: must lie in (0, 1]");
    if (candidates < 1) throw Error("augment.candidates: must be >= 1");
    if (votes < 1) throw Error("augment.votes: must be >= 1");
    if (edges_per_user < 1 || edges_per_user > candidates)
      throw Error("augment.top_p: must lie in [1, candidates]");
    if (parallelism < 1) throw Error("augment.parallelism: must be >= 1");
    if (const auto* remote = std::get_if<RemoteBackend>(&backend))
      remote->validate();
  }
};

/// Full aggregation detail for one user: the retrieved candidates, their
/// reciprocal-rank aggregates and the score-sorted order.
struct UserAggregate {
  std::vector<Index> candidates;  // item-local, retrieval order
  std::vector<double> scores;     // aligned with candidates
  std::vector<int> order;         // candidate slots, best first
  int votes_used = 0;
};

struct SkipEntry {
  Index user = 0;
  std::string reason;
};

struct AugmentationResult {
  AugmentedEdgeSet edges;          // sorted by (user, item)
  std::vector<SkipEntry> skipped;  // sorted by user
};

/// Assembles the rerank request for one user (history, candidates and the
/// reference example from the most similar user). Returns nullopt with a
/// reason if the user cannot be processed.
std::optional<RerankRequest> build_rerank_request(
    Index user, const DenseMatrix<float>& retrieval_emb,
    const InteractionGraph& graph, const InteractionLog& train_log,
    const Catalog& catalog, const AugmentationConfig& cfg,
    std::string* skip_reason);

/// Runs up to N rerankings for one user and aggregates them. Requires a
/// majority (ceil(N/2)) of successful rerankings, otherwise the user is
/// skipped with a reason carrying the last backend error.
std::optional<UserAggregate> aggregate_user(
    Index user, const DenseMatrix<float>& retrieval_emb,
    const InteractionGraph& graph, const InteractionLog& train_log,
    const Catalog& catalog, const AugmentationConfig& cfg, Rng rng,
    std::string* skip_reason);

/// Top-p synthetic edges for one user (empty plus a reason on skip).
std::vector<AugmentedEdge> augment_user(
    Index user, const DenseMatrix<float>& retrieval_emb,
    const InteractionGraph& graph, const InteractionLog& train_log,
    const Catalog& catalog, const AugmentationConfig& cfg, Rng rng,
    std::string* skip_reason);

/// Applies augment_user to every user at or below the degree quantile.
/// Deterministic in (config seed, backend); user order and parallel
/// schedule cannot change the result.
AugmentationResult run_augmentation(const InteractionGraph& graph,
                                    const DenseMatrix<float>& retrieval_emb,
                                    const InteractionLog& train_log,
                                    const Catalog& catalog,
                                    const AugmentationConfig& cfg);

void write_skip_report(const std::vector<SkipEntry>& skipped,
                       const IdTable& users, const std::string& path);

}  // namespace vgcl
