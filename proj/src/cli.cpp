#include "vgcl/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vgcl/augment.hpp"
#include "vgcl/data_io.hpp"
#include "vgcl/graph.hpp"
#include "vgcl/metrics.hpp"
#include "vgcl/rank_ensemble.hpp"
#include "vgcl/trainer.hpp"

namespace vgcl {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file: " + path);
  try {
    return json::parse(in, nullptr, /*allow_exceptions=*/true,
                       /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw Error("config parse error in " + path + ": " + e.what());
  }
}

/// Typed field access with a field-path diagnostic on violations.
template <typename T>
T config_field(const json& root, const std::string& section,
               const std::string& key, T fallback) {
  if (!root.contains(section)) return fallback;
  const json& sec = root.at(section);
  if (!sec.is_object()) throw Error(section + ": expected an object");
  if (!sec.contains(key)) return fallback;
  try {
    return sec.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(section + "." + key + ": unexpected type");
  }
}

std::vector<int> parse_int_list(const std::string& csv,
                                const std::string& flag) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw Error(flag + ": malformed integer list '" + csv + "'");
    }
  }
  if (out.empty()) throw Error(flag + ": empty list");
  return out;
}

fs::path prepare_out_dir(const std::string& out_dir) {
  if (out_dir.empty()) throw Error("--out-dir is required");
  fs::create_directories(out_dir);
  return fs::path(out_dir);
}

struct DatasetArgs {
  std::string train_path, users_path, items_path;

  void add_flags(CLI::App* cmd) {
    cmd->add_option("--train", train_path, "train interactions TSV")
        ->required();
    cmd->add_option("--users", users_path, "user id table TSV")->required();
    cmd->add_option("--items", items_path, "item id table TSV")->required();
  }

  InteractionLog load() const {
    return load_interactions_with_tables(train_path,
                                         read_id_table(users_path),
                                         read_id_table(items_path));
  }
};

TrainConfig trainer_from_config(const json& cfg) {
  TrainConfig tc;
  tc.embedding_dim = config_field<Index>(cfg, "trainer", "d", tc.embedding_dim);
  tc.learning_rate =
      config_field<double>(cfg, "trainer", "learning_rate", tc.learning_rate);
  tc.epochs = config_field<int>(cfg, "trainer", "epochs", tc.epochs);
  tc.n_layers = config_field<int>(cfg, "trainer", "layers", tc.n_layers);
  tc.batch_size =
      config_field<Index>(cfg, "trainer", "batch_size", tc.batch_size);
  tc.lambda = config_field<double>(cfg, "trainer", "lambda", tc.lambda);
  tc.tau = config_field<double>(cfg, "trainer", "tau", tc.tau);
  tc.seed = config_field<std::uint64_t>(cfg, "trainer", "seed", tc.seed);
  return tc;
}

RerankBackend backend_from_config(const json& cfg, const std::string& kind_flag,
                                  double theta_flag) {
  std::string kind = kind_flag;
  if (kind.empty()) {
    if (cfg.contains("augment") && cfg.at("augment").contains("backend"))
      kind = config_field<std::string>(cfg.at("augment"), "backend", "kind",
                                       "simulator");
    else
      kind = "simulator";
  }
  const json backend_cfg =
      cfg.contains("augment") && cfg.at("augment").contains("backend")
          ? cfg.at("augment").at("backend")
          : json::object();

  if (kind == "simulator") {
    SimulatorBackend sim;
    sim.theta = theta_flag >= 0.0
                    ? theta_flag
                    : backend_cfg.value("theta", 1.0);
    return sim;
  }
  if (kind == "remote_llm") {
    RemoteBackend remote;
    remote.endpoint = backend_cfg.value("endpoint", "");
    remote.model = backend_cfg.value("model", "");
    remote.temperature = backend_cfg.value("temperature", remote.temperature);
    remote.timeout_s = backend_cfg.value("timeout_s", remote.timeout_s);
    remote.max_retries = backend_cfg.value("max_retries", remote.max_retries);
    remote.text_path = backend_cfg.value("text_path", remote.text_path);
    remote.validate();
    return remote;
  }
  throw Error("augment.backend.kind: unknown backend '" + kind + "'");
}

int cmd_split(const std::string& input, const std::string& out_dir) {
  const InteractionLog log = load_interactions(input);
  const SplitDataset split = leave_one_out_split(log);
  const fs::path out = prepare_out_dir(out_dir);
  write_interactions(split.train, (out / "train.tsv").string());
  write_pair_map(split.validation, log.users, log.items,
                 (out / "val.tsv").string());
  write_pair_map(split.test, log.users, log.items, (out / "test.tsv").string());
  write_id_table(log.users, (out / "users.tsv").string());
  write_id_table(log.items, (out / "items.tsv").string());
  std::cout << "split: " << split.train.records.size() << " train records, "
            << split.eval_users.size() << " eval users -> " << out.string()
            << "\n";
  return 0;
}

int cmd_train(const DatasetArgs& data, const std::string& mode,
              const std::string& augmented_path, const TrainConfig& tc,
              const std::string& out_dir) {
  if (mode != "vanilla" && mode != "votegcl")
    throw Error("--mode: expected 'vanilla' or 'votegcl'");
  if (mode == "votegcl" && augmented_path.empty())
    throw Error("train --mode votegcl requires --augmented <edges.tsv>");

  const InteractionLog train_log = data.load();
  const InteractionGraph graph = build_graph(train_log);
  const fs::path out = prepare_out_dir(out_dir);
  std::ofstream metrics((out / "train_metrics.jsonl").string());
  if (!metrics) throw Error("cannot write training metrics log");

  DenseMatrix<float> emb;
  if (mode == "vanilla") {
    emb = train_vanilla<float>(graph, tc, nullptr, &metrics);
  } else {
    const AugmentedEdgeSet edges = read_augmented_edges(
        augmented_path, train_log.users, train_log.items);
    const AugmentedGraph aug = merge_augmented(graph, edges);
    emb = train_votegcl<float>(graph, aug, tc, nullptr, &metrics);
  }
  save_embeddings(emb, (out / "embeddings.bin").string());
  std::cout << "train: mode=" << mode << " epochs=" << tc.epochs
            << " -> " << (out / "embeddings.bin").string() << "\n";
  return 0;
}

int cmd_augment(const DatasetArgs& data, const std::string& metadata_path,
                const std::string& embeddings_path,
                const AugmentationConfig& cfg, const std::string& out_dir) {
  const InteractionLog train_log = data.load();
  const InteractionGraph graph = build_graph(train_log);
  const Catalog catalog = load_catalog(metadata_path);
  const DenseMatrix<float> emb = load_embeddings(embeddings_path);
  if (emb.cols() != graph.node_count())
    throw Error("--embeddings: node count does not match the graph");

  const AugmentationResult result =
      run_augmentation(graph, emb, train_log, catalog, cfg);
  const fs::path out = prepare_out_dir(out_dir);
  write_augmented_edges(result.edges, train_log.users, train_log.items,
                        (out / "augmented_edges.tsv").string());
  write_skip_report(result.skipped, train_log.users,
                    (out / "skip_report.tsv").string());
  std::cout << "augment: " << result.edges.edges.size() << " edges, "
            << result.skipped.size() << " users skipped -> " << out.string()
            << "\n";
  return 0;
}

int cmd_eval(const DatasetArgs& data, const std::string& test_path,
             const std::string& embeddings_path, const std::string& cutoffs_csv,
             const std::string& out_dir) {
  const InteractionLog train_log = data.load();
  const InteractionGraph graph = build_graph(train_log);
  const DenseMatrix<float> emb = load_embeddings(embeddings_path);
  if (emb.cols() != graph.node_count())
    throw Error("--embeddings: node count does not match the graph");

  SplitDataset split;
  split.train = train_log;
  split.test = read_pair_map(test_path, train_log.users, train_log.items);
  for (const auto& [u, _] : split.test) split.eval_users.push_back(u);
  std::sort(split.eval_users.begin(), split.eval_users.end());

  const EvalReport report =
      evaluate(emb, split, graph, parse_int_list(cutoffs_csv, "--cutoffs"));
  const std::string doc = report.to_json();
  const fs::path out = prepare_out_dir(out_dir);
  std::ofstream file((out / "eval.json").string());
  file << doc << "\n";
  if (!file) throw Error("cannot write eval report");
  std::cout << doc << "\n";
  return 0;
}

int cmd_verify_bound(int k, const std::vector<int>& votes, double theta,
                     int trials, int samples, int pair_pos,
                     std::uint64_t seed, const std::string& out_dir) {
  if (k < 2) throw Error("--k: need at least 2 candidates");
  if (pair_pos < 0) pair_pos = k / 2 - 1;  // middle adjacent pair
  if (pair_pos + 1 >= k) throw Error("--pair-pos: adjacent pair out of range");

  const MallowsModel model{identity_permutation(k), theta};
  const int slot_better = pair_pos;     // ranked higher by the center
  const int slot_worse = pair_pos + 1;

  Rng rng(seed);
  const double mu_hat =
      estimate_rank_gap(model, slot_worse, slot_better, samples, rng);

  std::ostringstream tsv;
  tsv << "# N\ttheta\tmu_hat\tempirical_rate\tbound\n";
  char line[160];
  for (const int n : votes) {
    const double rate =
        empirical_misrank_rate(model, slot_worse, slot_better, n, trials, rng);
    const double bound =
        hoeffding_bound({n, mu_hat, 1.0 / static_cast<double>(k), 1.0});
    std::snprintf(line, sizeof(line), "%d\t%g\t%.6f\t%.6f\t%.6g\n", n, theta,
                  mu_hat, rate, bound);
    tsv << line;
  }
  std::cout << tsv.str();
  if (!out_dir.empty()) {
    const fs::path out = prepare_out_dir(out_dir);
    std::ofstream file((out / "bound.tsv").string());
    file << tsv.str();
    if (!file) throw Error("cannot write bound TSV");
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"graph recommender with majority-vote reranking augmentation"};
  app.require_subcommand(1);

  // ---- split ----
  auto* split = app.add_subcommand("split", "leave-one-out split of a log");
  std::string split_input, split_out;
  split->add_option("--input", split_input, "interactions TSV")->required();
  split->add_option("--out-dir", split_out, "output directory")->required();

  // ---- train ----
  auto* train = app.add_subcommand("train", "train embeddings");
  DatasetArgs train_data;
  train_data.add_flags(train);
  std::string train_mode = "vanilla", train_aug, train_out, train_cfg_path;
  TrainConfig tc_flags;
  auto* opt_mode = train->add_option("--mode", train_mode, "vanilla | votegcl");
  train->add_option("--augmented", train_aug, "augmented edges TSV (votegcl)");
  train->add_option("--out-dir", train_out)->required();
  train->add_option("--config", train_cfg_path, "JSON config");
  auto* opt_d = train->add_option("--dim", tc_flags.embedding_dim);
  auto* opt_lr = train->add_option("--lr", tc_flags.learning_rate);
  auto* opt_epochs = train->add_option("--epochs", tc_flags.epochs);
  auto* opt_layers = train->add_option("--layers", tc_flags.n_layers);
  auto* opt_batch = train->add_option("--batch-size", tc_flags.batch_size);
  auto* opt_lambda = train->add_option("--lambda", tc_flags.lambda);
  auto* opt_tau = train->add_option("--tau", tc_flags.tau);
  auto* opt_seed = train->add_option("--seed", tc_flags.seed);

  // ---- augment ----
  auto* augment = app.add_subcommand("augment", "synthesize edges");
  DatasetArgs aug_data;
  aug_data.add_flags(augment);
  std::string aug_metadata, aug_emb, aug_out, aug_cfg_path, aug_backend_kind;
  double aug_theta = -1.0;
  AugmentationConfig ac_flags;
  augment->add_option("--metadata", aug_metadata, "item metadata TSV")
      ->required();
  augment->add_option("--embeddings", aug_emb, "retrieval embeddings")
      ->required();
  augment->add_option("--out-dir", aug_out)->required();
  augment->add_option("--config", aug_cfg_path, "JSON config");
  auto* opt_q = augment->add_option("--quantile", ac_flags.quantile);
  auto* opt_k = augment->add_option("--candidates", ac_flags.candidates);
  auto* opt_votes = augment->add_option("--votes", ac_flags.votes);
  auto* opt_p = augment->add_option("--top-p", ac_flags.edges_per_user);
  auto* opt_par = augment->add_option("--parallelism", ac_flags.parallelism);
  auto* opt_aseed = augment->add_option("--seed", ac_flags.seed);
  augment->add_option("--backend", aug_backend_kind,
                      "simulator | remote_llm");
  augment->add_option("--theta", aug_theta, "simulator dispersion");
  bool aug_zero_shot = false, aug_no_reasoning = false;
  augment->add_flag("--zero-shot", aug_zero_shot);
  augment->add_flag("--no-reasoning", aug_no_reasoning);

  // ---- eval ----
  auto* eval = app.add_subcommand("eval", "score the test split");
  DatasetArgs eval_data;
  eval_data.add_flags(eval);
  std::string eval_test, eval_emb, eval_out, eval_cutoffs = "10,20";
  eval->add_option("--test", eval_test, "test map TSV")->required();
  eval->add_option("--embeddings", eval_emb)->required();
  eval->add_option("--out-dir", eval_out)->required();
  eval->add_option("--cutoffs", eval_cutoffs, "comma-separated K values");

  // ---- verify-bound ----
  auto* verify = app.add_subcommand(
      "verify-bound", "Monte-Carlo check of the aggregation bound");
  int vb_k = 10, vb_trials = 10000, vb_samples = 200000, vb_pair = -1;
  double vb_theta = 0.3;
  std::uint64_t vb_seed = 1;
  std::string vb_votes = "1,2,4,8,16,32", vb_out;
  verify->add_option("--k", vb_k, "candidate count");
  verify->add_option("--votes", vb_votes, "comma-separated ensemble sizes");
  verify->add_option("--theta", vb_theta, "dispersion");
  verify->add_option("--trials", vb_trials);
  verify->add_option("--samples", vb_samples, "samples for the rank-gap mean");
  verify->add_option("--pair-pos", vb_pair,
                     "position of the adjacent pair (default: middle)");
  verify->add_option("--seed", vb_seed);
  verify->add_option("--out-dir", vb_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (split->parsed()) return cmd_split(split_input, split_out);

    if (train->parsed()) {
      const json cfg = load_config(train_cfg_path);
      TrainConfig tc = trainer_from_config(cfg);
      if (!*opt_mode)  // flags win over config
        train_mode = config_field<std::string>(cfg, "trainer", "mode",
                                               train_mode);
      if (*opt_d) tc.embedding_dim = tc_flags.embedding_dim;
      if (*opt_lr) tc.learning_rate = tc_flags.learning_rate;
      if (*opt_epochs) tc.epochs = tc_flags.epochs;
      if (*opt_layers) tc.n_layers = tc_flags.n_layers;
      if (*opt_batch) tc.batch_size = tc_flags.batch_size;
      if (*opt_lambda) tc.lambda = tc_flags.lambda;
      if (*opt_tau) tc.tau = tc_flags.tau;
      if (*opt_seed) tc.seed = tc_flags.seed;
      tc.validate();
      return cmd_train(train_data, train_mode, train_aug, tc, train_out);
    }

    if (augment->parsed()) {
      const json cfg = load_config(aug_cfg_path);
      AugmentationConfig ac;
      ac.quantile = config_field<double>(cfg, "augment", "quantile", ac.quantile);
      ac.candidates = config_field<int>(cfg, "augment", "candidates", ac.candidates);
      ac.votes = config_field<int>(cfg, "augment", "votes", ac.votes);
      ac.edges_per_user = config_field<int>(cfg, "augment", "top_p", ac.edges_per_user);
      ac.parallelism = config_field<int>(cfg, "augment", "parallelism", ac.parallelism);
      ac.seed = config_field<std::uint64_t>(cfg, "augment", "seed", ac.seed);
      if (*opt_q) ac.quantile = ac_flags.quantile;
      if (*opt_k) ac.candidates = ac_flags.candidates;
      if (*opt_votes) ac.votes = ac_flags.votes;
      if (*opt_p) ac.edges_per_user = ac_flags.edges_per_user;
      if (*opt_par) ac.parallelism = ac_flags.parallelism;
      if (*opt_aseed) ac.seed = ac_flags.seed;
      if (aug_zero_shot) ac.prompt_mode = PromptMode::kZeroShot;
      if (aug_no_reasoning) ac.include_reasoning = false;
      ac.backend = backend_from_config(cfg, aug_backend_kind, aug_theta);
      ac.validate();
      return cmd_augment(aug_data, aug_metadata, aug_emb, ac, aug_out);
    }

    if (eval->parsed())
      return cmd_eval(eval_data, eval_test, eval_emb, eval_cutoffs, eval_out);

    if (verify->parsed())
      return cmd_verify_bound(vb_k, parse_int_list(vb_votes, "--votes"),
                              vb_theta, vb_trials, vb_samples, vb_pair,
                              vb_seed, vb_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace vgcl
