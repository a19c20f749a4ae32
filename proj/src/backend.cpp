#include "vgcl/backend.hpp"

#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

namespace vgcl {
namespace {

using nlohmann::json;

struct ParsedUrl {
  std::string host_port;  // scheme://host:port
  std::string path;
};

ParsedUrl split_url(const std::string& endpoint) {
  const std::size_t scheme = endpoint.find("://");
  if (scheme == std::string::npos)
    throw Error("backend.endpoint: expected scheme://host[:port]/path");
  const std::size_t slash = endpoint.find('/', scheme + 3);
  if (slash == std::string::npos) return {endpoint, "/"};
  return {endpoint.substr(0, slash), endpoint.substr(slash)};
}

RerankOutcome rerank_remote(const RemoteBackend& backend,
                            const RerankRequest& request) {
  backend.validate();
  const std::string prompt = build_prompt(request);
  const ParsedUrl url = split_url(backend.endpoint);

  json body{{"model", backend.model},
            {"messages", json::array({json{{"role", "user"},
                                           {"content", prompt}}})},
            {"temperature", backend.temperature}};
  const std::string payload = body.dump();

  httplib::Client client(url.host_port);
  client.set_connection_timeout(backend.timeout_s, 0);
  client.set_read_timeout(backend.timeout_s, 0);
  httplib::Headers headers;
  if (const char* key = std::getenv("VGCL_API_KEY"); key && *key)
    headers.emplace("Authorization", std::string("Bearer ") + key);

  RerankOutcome outcome;
  const int k = static_cast<int>(request.candidates.size());
  for (int attempt = 1; attempt <= backend.max_retries; ++attempt) {
    auto res = client.Post(url.path, headers, payload, "application/json");
    if (!res) {
      outcome.error = "transport: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      outcome.error = "http status " + std::to_string(res->status);
      continue;
    }
    std::string text;
    try {
      const json reply = json::parse(res->body);
      text = reply.at(json::json_pointer(backend.text_path)).get<std::string>();
    } catch (const std::exception& e) {
      outcome.error = std::string("response shape: ") + e.what();
      continue;
    }
    ParseResult parsed = parse_permutation(text, k);
    if (parsed.ok()) {
      outcome.perm = std::move(parsed.perm);
      outcome.error.clear();
      return outcome;
    }
    outcome.error = std::string(parse_error_name(parsed.error)) + ": " +
                    parsed.detail;
  }
  return outcome;
}

}  // namespace

Permutation simulator_center(const SimulatorBackend& backend,
                             const RerankRequest& request) {
  const int k = static_cast<int>(request.candidate_items.size());
  if (k < 1) throw Error("simulator_center: request has no candidates");

  int oracle_slot = -1;
  if (request.user >= 0) {
    const auto it = backend.oracle_first.find(request.user);
    if (it != backend.oracle_first.end()) {
      for (int s = 0; s < k; ++s)
        if (request.candidate_items[s] == it->second) {
          oracle_slot = s;
          break;
        }
    }
  }

  Permutation center;
  center.ranks.resize(k);
  if (oracle_slot < 0) return identity_permutation(k);
  center.ranks[oracle_slot] = 0;
  int rank = 1;
  for (int s = 0; s < k; ++s)
    if (s != oracle_slot) center.ranks[s] = rank++;
  return center;
}

RerankOutcome rerank_once(const RerankBackend& backend,
                          const RerankRequest& request, Rng& rng) {
  if (const auto* sim = std::get_if<SimulatorBackend>(&backend)) {
    RerankOutcome out;
    const MallowsModel model{simulator_center(*sim, request), sim->theta};
    out.perm = mallows_sample(model, rng);
    return out;
  }
  return rerank_remote(std::get<RemoteBackend>(backend), request);
}

}  // namespace vgcl
