#include "vgcl/augment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <thread>

#include "vgcl/embedding.hpp"

namespace vgcl {
namespace {

/// A user's train records, chronological (timestamp, then file order).
std::vector<const InteractionRecord*> chronological_records(
    const InteractionLog& log, Index user) {
  std::vector<const InteractionRecord*> recs;
  for (const auto& r : log.records)
    if (r.user == user) recs.push_back(&r);
  std::sort(recs.begin(), recs.end(),
            [](const InteractionRecord* a, const InteractionRecord* b) {
              return a->timestamp != b->timestamp ? a->timestamp < b->timestamp
                                                  : a->line < b->line;
            });
  return recs;
}

bool history_entries(const InteractionLog& log, const Catalog& catalog,
                     const std::vector<const InteractionRecord*>& recs,
                     std::vector<HistoryEntry>* out, std::string* missing) {
  for (const auto* r : recs) {
    const std::string& id = log.items.names[r->item];
    const CatalogEntry* entry = catalog.find(id);
    if (!entry) {
      if (missing) *missing = id;
      return false;
    }
    out->push_back({entry->title, entry->year, entry->genres, r->rating});
  }
  return true;
}

}  // namespace

std::optional<RerankRequest> build_rerank_request(
    Index user, const DenseMatrix<float>& retrieval_emb,
    const InteractionGraph& graph, const InteractionLog& train_log,
    const Catalog& catalog, const AugmentationConfig& cfg,
    std::string* skip_reason) {
  const auto fail = [&](std::string why) -> std::optional<RerankRequest> {
    if (skip_reason) *skip_reason = std::move(why);
    return std::nullopt;
  };

  const CandidateList cands =
      top_k_candidates(retrieval_emb, graph, user, cfg.candidates);
  if (cands.items.empty()) return fail("no eligible candidate items");

  RerankRequest req;
  req.user = user;
  req.candidate_items = cands.items;
  req.mode = cfg.prompt_mode;
  req.include_reasoning = cfg.include_reasoning;

  const auto own_records = chronological_records(train_log, user);
  if (own_records.empty()) return fail("user has no train history");
  std::string missing;
  if (!history_entries(train_log, catalog, own_records, &req.history, &missing))
    return fail("missing catalog entry for item '" + missing + "'");

  for (const Index item : cands.items) {
    const CatalogEntry* entry = catalog.find(train_log.items.names[item]);
    if (!entry)
      return fail("missing catalog entry for item '" +
                  train_log.items.names[item] + "'");
    req.candidates.push_back({entry->title, entry->year, entry->genres});
  }

  if (req.mode == PromptMode::kFewShot) {
    const auto similar =
        similar_users(retrieval_emb, graph.n_users, user, 1);
    FewShotExample example;
    bool have_example = false;
    if (!similar.empty()) {
      const auto sim_records = chronological_records(train_log, similar[0]);
      std::vector<HistoryEntry> sim_history;
      if (!sim_records.empty() &&
          history_entries(train_log, catalog, sim_records, &sim_history,
                          nullptr)) {
        example.history = sim_history;
        const std::size_t take =
            std::min<std::size_t>(cfg.fewshot_items, sim_history.size());
        example.rated_items.assign(sim_history.end() - take,
                                   sim_history.end());
        have_example = true;
      }
    }
    if (have_example)
      req.fewshot = std::move(example);
    else
      req.mode = PromptMode::kZeroShot;  // no usable similar user
  }
  return req;
}

std::optional<UserAggregate> aggregate_user(
    Index user, const DenseMatrix<float>& retrieval_emb,
    const InteractionGraph& graph, const InteractionLog& train_log,
    const Catalog& catalog, const AugmentationConfig& cfg, Rng rng,
    std::string* skip_reason) {
  const auto request = build_rerank_request(user, retrieval_emb, graph,
                                            train_log, catalog, cfg,
                                            skip_reason);
  if (!request) return std::nullopt;
  const int k = static_cast<int>(request->candidate_items.size());
  if (std::holds_alternative<RemoteBackend>(cfg.backend) && k < 2) {
    if (skip_reason) *skip_reason = "fewer than 2 candidates for remote reranking";
    return std::nullopt;
  }

  std::vector<Permutation> perms;
  perms.reserve(cfg.votes);
  std::string last_error = "no rerank attempted";
  for (int vote = 0; vote < cfg.votes; ++vote) {
    Rng vote_rng = rng.fork(static_cast<std::uint64_t>(vote));
    RerankOutcome outcome = rerank_once(cfg.backend, *request, vote_rng);
    if (outcome.ok())
      perms.push_back(std::move(*outcome.perm));
    else
      last_error = outcome.error;
  }
  const int quorum = (cfg.votes + 1) / 2;
  if (static_cast<int>(perms.size()) < quorum) {
    if (skip_reason)
      *skip_reason = "quorum not met (" + std::to_string(perms.size()) + "/" +
                     std::to_string(cfg.votes) + " rerankings; last error: " +
                     last_error + ")";
    return std::nullopt;
  }

  const RrfScores scores = rrf_scores(perms);
  UserAggregate agg;
  agg.candidates = request->candidate_items;
  agg.scores = scores.scores;
  agg.order = select_top_p(scores, k);
  agg.votes_used = scores.votes;
  return agg;
}

std::vector<AugmentedEdge> augment_user(
    Index user, const DenseMatrix<float>& retrieval_emb,
    const InteractionGraph& graph, const InteractionLog& train_log,
    const Catalog& catalog, const AugmentationConfig& cfg, Rng rng,
    std::string* skip_reason) {
  const auto agg = aggregate_user(user, retrieval_emb, graph, train_log,
                                  catalog, cfg, std::move(rng), skip_reason);
  if (!agg) return {};
  std::vector<AugmentedEdge> edges;
  const int take = std::min<int>(cfg.edges_per_user,
                                 static_cast<int>(agg->order.size()));
  for (int n = 0; n < take; ++n) {
    const int slot = agg->order[n];
    edges.push_back({user, agg->candidates[slot],
                     static_cast<float>(agg->scores[slot]), agg->votes_used});
  }
  return edges;
}

AugmentationResult run_augmentation(const InteractionGraph& graph,
                                    const DenseMatrix<float>& retrieval_emb,
                                    const InteractionLog& train_log,
                                    const Catalog& catalog,
                                    const AugmentationConfig& cfg) {
  cfg.validate();
  const std::vector<Index> targets = low_degree_users(graph, cfg.quantile);
  const Rng master(cfg.seed);

  std::vector<std::vector<AugmentedEdge>> edges_per_target(targets.size());
  std::vector<std::optional<SkipEntry>> skip_per_target(targets.size());

  const auto process = [&](std::size_t t) {
    const Index user = targets[t];
    std::string reason;
    auto edges = augment_user(user, retrieval_emb, graph, train_log, catalog,
                              cfg, master.fork(static_cast<std::uint64_t>(user)),
                              &reason);
    if (edges.empty())
      skip_per_target[t] = SkipEntry{user, reason};
    else
      edges_per_target[t] = std::move(edges);
  };

  const int workers =
      std::min<int>(cfg.parallelism, static_cast<int>(targets.size()));
  if (workers <= 1) {
    for (std::size_t t = 0; t < targets.size(); ++t) process(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t t = next.fetch_add(1); t < targets.size();
             t = next.fetch_add(1))
          process(t);
      });
    for (auto& th : pool) th.join();
  }

  AugmentationResult result;
  for (auto& edges : edges_per_target)
    result.edges.edges.insert(result.edges.edges.end(), edges.begin(),
                              edges.end());
  std::sort(result.edges.edges.begin(), result.edges.edges.end(),
            [](const AugmentedEdge& a, const AugmentedEdge& b) {
              return a.user != b.user ? a.user < b.user : a.item < b.item;
            });
  for (auto& skip : skip_per_target)
    if (skip) result.skipped.push_back(std::move(*skip));
  return result;
}

void write_skip_report(const std::vector<SkipEntry>& skipped,
                       const IdTable& users, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write skip report: " + path);
  out << "user_id\treason\n";
  for (const auto& s : skipped)
    out << users.names[s.user] << '\t' << s.reason << '\n';
  if (!out) throw Error("write failed: " + path);
}

}  // namespace vgcl
