#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <variant>

#include "vgcl/prompt.hpp"
#include "vgcl/rank_ensemble.hpp"
#include "vgcl/rng.hpp"

namespace vgcl {

/// Local stand-in for a stochastic reranker: draws rankings around an ideal
/// order. The ideal order is the request's candidate order, except that a
/// user's oracle item (when configured and retrieved) is moved to the front.
struct SimulatorBackend {
  double theta = 0.0;
  std::unordered_map<Index, Index> oracle_first;  // user -> item-local index
};

/// Chat-completion style HTTP backend. POSTs
///   {"model": ..., "messages": [{"role": "user", "content": prompt}],
///    "temperature": ...}
/// and reads the reply text at `text_path` (a JSON pointer). The API key is
/// taken from the VGCL_API_KEY environment variable when present.
struct RemoteBackend {
  std::string endpoint;  // e.g. http://localhost:8080/v1/chat/completions
  std::string model;
  double temperature = 1.0;
  int timeout_s = 30;
  int max_retries = 3;
  std::string text_path = "/choices/0/message/content";

  void validate() const {
    if (endpoint.empty()) throw Error("backend.endpoint: must be non-empty");
    if (model.empty()) throw Error("backend.model: must be non-empty");
    if (max_retries < 1) throw Error("backend.max_retries: must be >= 1");
  }
};

using RerankBackend = std::variant<SimulatorBackend, RemoteBackend>;

struct RerankOutcome {
  std::optional<Permutation> perm;
  std::string error;  // last failure when perm is empty

  bool ok() const { return perm.has_value(); }
};

/// The simulator's center permutation for a request.
Permutation simulator_center(const SimulatorBackend& backend,
                             const RerankRequest& request);

/// One independent reranking. Remote backends retry transport and parse
/// failures up to max_retries attempts and carry the last error out.
RerankOutcome rerank_once(const RerankBackend& backend,
                          const RerankRequest& request, Rng& rng);

}  // namespace vgcl
