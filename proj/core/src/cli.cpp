#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "qrw/harness.hpp"
#include "qrw/jsonio.hpp"

namespace qrw {
namespace {

namespace fs = std::filesystem;

struct CliArgs {
  // synth
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_path;
  // mine
  std::string logs_dir;
  double tau_short = 2.4;
  double tau_valid = 10.0;
  double tau_long = 30.0;
  std::string verifier = "reference";
  std::string report_path;
  // build-oracle
  int window_days = 180;
  // train
  std::string dataset_path;
  std::string oracle_path;
  bool seed_set = false;
  // build-index
  int k = 50;
  int head_min_clicks = 5;
  // serve-sim
  std::string params_path;
  std::string index_path;
  std::string docs_path;
  std::string latency_path;
  std::string requests_path;
  double relevance_threshold = 0.0;
  // ab
  double reformulate_prob = 0.7;
  // policy eval
  std::string query;
  std::string context_path;
};

int run_synth(const CliArgs& a) {
  SimConfig cfg = a.config_path.empty() ? SimConfig{} : load_sim_config(a.config_path);
  const LogCorpus corpus = synthesize_logs(cfg, a.seed);
  write_logs(corpus, a.out_path);
  std::size_t impressions = 0;
  for (const auto& s : corpus.sessions) impressions += s.impressions.size();
  std::cout << "wrote " << corpus.sessions.size() << " sessions (" << impressions
            << " impressions), " << corpus.docs.size() << " docs, "
            << corpus.ground_truth.size() << " planted events to " << a.out_path << "\n";
  return 0;
}

int run_mine(const CliArgs& a) {
  MiningThresholds t{a.tau_short, a.tau_valid, a.tau_long};
  t.validate();
  if (a.verifier != "reference") {
    throw ConfigError("unknown verifier '" + a.verifier + "' (available: reference)");
  }
  const LogCorpus corpus = ingest_logs(a.logs_dir);
  const ReferenceIntentVerifier verifier;
  MiningReport report;
  const auto dataset = build_dataset(corpus, t, verifier, &report);
  write_dataset(dataset, a.out_path);
  if (!a.report_path.empty()) write_text_file(a.report_path, report.to_json());
  std::cout << report.to_json() << "\n";
  return 0;
}

int run_build_oracle(const CliArgs& a) {
  const LogCorpus corpus = ingest_logs(a.logs_dir);
  const RewardOracle oracle = RewardOracle::build(corpus, a.window_days);
  oracle.save_tsv(a.out_path);
  std::cout << "wrote " << oracle.size() << " query stats to " << a.out_path << "\n";
  return 0;
}

int run_train(const CliArgs& a) {
  const auto dataset = read_dataset(a.dataset_path);
  const RewardOracle oracle = RewardOracle::load_tsv(a.oracle_path);
  TrainConfig cfg = a.config_path.empty() ? TrainConfig{} : load_train_config(a.config_path);
  if (a.seed_set) cfg.seed = a.seed;
  auto [params, report] = train(dataset, oracle, cfg);
  params.save_tsv(a.out_path);
  if (!a.report_path.empty()) write_text_file(a.report_path, report.to_json());
  const double final_sft = report.sft_losses.empty() ? 0.0 : report.sft_losses.back();
  std::cout << "trained on " << dataset.size() << " samples (skipped "
            << report.skipped_samples << "); final sft loss " << final_sft;
  if (!report.grpo.empty()) {
    std::cout << ", final mean reward " << report.grpo.back().mean_reward;
  }
  std::cout << "; params -> " << a.out_path << "\n";
  return 0;
}

int run_build_index(const CliArgs& a) {
  const LogCorpus corpus = ingest_logs(a.logs_dir);
  BuildConfig cfg;
  cfg.k = a.k;
  cfg.head_min_clicks = a.head_min_clicks;
  const FakeIndex index = FakeIndex::build(corpus, cfg);
  index.save(a.out_path);
  std::cout << "wrote " << index.size() << " entries (k=" << cfg.k << ") to " << a.out_path
            << "\n";
  return 0;
}

int run_serve_sim(const CliArgs& a) {
  const PolicyParams params = PolicyParams::load_tsv(a.params_path);
  const FakeIndex index = FakeIndex::load(a.index_path);
  const RewardOracle oracle = RewardOracle::load_tsv(a.oracle_path);
  const DocStore docstore(read_docs_file(a.docs_path));
  const LatencyModel lat = a.latency_path.empty() ? LatencyModel{} : load_latency(a.latency_path);
  const auto requests = read_requests(a.requests_path);

  ServeOptions opts;
  opts.relevance_threshold = a.relevance_threshold;
  std::ostringstream out;
  std::size_t fused = 0;
  for (const auto& req : requests) {
    const FusionResult result = serve(req, params, index, oracle, docstore, lat, opts);
    if (result.rewrite_used) ++fused;
    out << fusion_result_to_json_line(req, result) << '\n';
  }
  write_text_file(a.out_path, out.str());
  std::cout << "served " << requests.size() << " requests (" << fused
            << " with fused rewrites) -> " << a.out_path << "\n";
  return 0;
}

int run_ab(const CliArgs& a) {
  SimConfig sim = a.config_path.empty() ? SimConfig{} : load_sim_config(a.config_path);
  AbBehavior behavior;
  behavior.reformulate_prob = a.reformulate_prob;
  behavior.relevance_threshold = a.relevance_threshold;
  if (!a.latency_path.empty()) behavior.latency = load_latency(a.latency_path);
  const ABReport report = run_ab_pipeline(sim, a.seed, MiningThresholds{}, TrainConfig{},
                                          BuildConfig{}, behavior);
  std::cout << report.to_json() << "\n";
  std::cout << report.tsv_line() << "\n";
  if (!a.out_path.empty()) write_text_file(a.out_path, report.to_json() + "\n");
  return 0;
}

int run_metrics(const CliArgs& a) {
  MiningThresholds t{a.tau_short, a.tau_valid, a.tau_long};
  t.validate();
  const LogCorpus corpus = ingest_logs(a.logs_dir);
  std::cout << metrics_to_json(compute_metrics(corpus.sessions, t)) << "\n";
  return 0;
}

int run_policy_eval(const CliArgs& a) {
  const PolicyParams params = PolicyParams::load_tsv(a.params_path);
  const UserContext ctx = a.context_path.empty()
                              ? UserContext{}
                              : context_from_json_string(read_text_file(a.context_path));
  const RewardOracle oracle =
      a.oracle_path.empty() ? RewardOracle{} : RewardOracle::load_tsv(a.oracle_path);
  const PolicyDistribution dist = policy_distribution(params, a.query, ctx, oracle);
  const std::size_t top = dist.argmax();
  for (std::size_t i = 0; i < dist.candidates.size(); ++i) {
    std::cout << (i == top ? "* " : "  ");
    std::cout.precision(6);
    std::cout << std::fixed << dist.probs[i] << "  " << dist.candidates[i].text << "\n";
    std::cout.unsetf(std::ios::fixed);
  }
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Personalized demand-aware query rewriting pipeline"};
  app.require_subcommand(1);
  CliArgs a;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic log corpus");
  synth->add_option("--config", a.config_path, "SimConfig JSON file");
  synth->add_option("--seed", a.seed, "RNG seed")->default_val(0);
  synth->add_option("--out", a.out_path, "Output log directory")->required();

  // Every subcommand takes --seed; deterministic ones accept and ignore it.
  auto* mine = app.add_subcommand("mine", "Mine rewrite/reject training samples");
  mine->add_option("--seed", a.seed, "Unused; mining is deterministic");
  mine->add_option("--logs", a.logs_dir, "Log directory")->required();
  mine->add_option("--tau-short", a.tau_short)->default_val(2.4);
  mine->add_option("--tau-valid", a.tau_valid)->default_val(10.0);
  mine->add_option("--tau-long", a.tau_long)->default_val(30.0);
  mine->add_option("--verifier", a.verifier, "Intent verifier")->default_val("reference");
  mine->add_option("--out", a.out_path, "Dataset JSONL path")->required();
  mine->add_option("--report", a.report_path, "Mining report JSON path");

  auto* oracle = app.add_subcommand("build-oracle", "Build the Freq/CTR reward oracle");
  oracle->add_option("--seed", a.seed, "Unused; the oracle build is deterministic");
  oracle->add_option("--logs", a.logs_dir, "Log directory")->required();
  oracle->add_option("--window-days", a.window_days)->default_val(180);
  oracle->add_option("--out", a.out_path, "Oracle TSV path")->required();

  auto* train_cmd = app.add_subcommand("train", "SFT + GRPO policy training");
  train_cmd->add_option("--dataset", a.dataset_path, "Dataset JSONL")->required();
  train_cmd->add_option("--oracle", a.oracle_path, "Oracle TSV")->required();
  train_cmd->add_option("--config", a.config_path, "TrainConfig JSON");
  auto* train_seed = train_cmd->add_option("--seed", a.seed, "Override config seed");
  train_cmd->add_option("--out", a.out_path, "Params TSV path")->required();
  train_cmd->add_option("--report", a.report_path, "Train report JSON path");

  auto* index = app.add_subcommand("build-index", "Build the fake-recall index");
  index->add_option("--seed", a.seed, "Unused; the index build is deterministic");
  index->add_option("--logs", a.logs_dir, "Log directory")->required();
  index->add_option("--k", a.k)->default_val(50);
  index->add_option("--head-min-clicks", a.head_min_clicks)->default_val(5);
  index->add_option("--out", a.out_path, "Index binary path")->required();

  auto* serve_sim = app.add_subcommand("serve-sim", "Serve requests under the simulated clock");
  serve_sim->add_option("--seed", a.seed, "Unused; serving is deterministic");
  serve_sim->add_option("--params", a.params_path)->required();
  serve_sim->add_option("--index", a.index_path)->required();
  serve_sim->add_option("--oracle", a.oracle_path)->required();
  serve_sim->add_option("--docs", a.docs_path, "Doc catalog JSONL")->required();
  serve_sim->add_option("--latency", a.latency_path, "LatencyModel JSON");
  serve_sim->add_option("--requests", a.requests_path)->required();
  serve_sim->add_option("--relevance-threshold", a.relevance_threshold)->default_val(0.0);
  serve_sim->add_option("--out", a.out_path, "Results JSONL path")->required();

  auto* ab = app.add_subcommand("ab", "Full pipeline + paired simulated A/B");
  ab->add_option("--config", a.config_path, "SimConfig JSON");
  ab->add_option("--seed", a.seed)->default_val(1);
  ab->add_option("--latency", a.latency_path, "LatencyModel JSON");
  ab->add_option("--reformulate-prob", a.reformulate_prob)->default_val(0.7);
  ab->add_option("--relevance-threshold", a.relevance_threshold)->default_val(0.0);
  ab->add_option("--out", a.out_path, "Report JSON path");

  auto* metrics = app.add_subcommand("metrics", "Compute metrics over a log directory");
  metrics->add_option("--seed", a.seed, "Unused; metrics are deterministic");
  metrics->add_option("--logs", a.logs_dir, "Log directory")->required();
  metrics->add_option("--tau-short", a.tau_short)->default_val(2.4);
  metrics->add_option("--tau-valid", a.tau_valid)->default_val(10.0);
  metrics->add_option("--tau-long", a.tau_long)->default_val(30.0);

  auto* policy = app.add_subcommand("policy", "Policy utilities");
  auto* eval = policy->add_subcommand("eval", "Print the rewrite distribution for a query");
  eval->add_option("--seed", a.seed, "Unused; evaluation is deterministic");
  eval->add_option("--params", a.params_path)->required();
  eval->add_option("--query", a.query)->required();
  eval->add_option("--context", a.context_path, "UserContext JSON file");
  eval->add_option("--oracle", a.oracle_path, "Oracle TSV (optional)");
  policy->require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    // CLI11 reports help with exit 0; everything else is a usage error.
    return code == 0 ? 0 : 2;
  }

  a.seed_set = train_seed->count() > 0;

  try {
    if (synth->parsed()) return run_synth(a);
    if (mine->parsed()) return run_mine(a);
    if (oracle->parsed()) return run_build_oracle(a);
    if (train_cmd->parsed()) return run_train(a);
    if (index->parsed()) return run_build_index(a);
    if (serve_sim->parsed()) return run_serve_sim(a);
    if (ab->parsed()) return run_ab(a);
    if (metrics->parsed()) return run_metrics(a);
    if (policy->parsed()) return run_policy_eval(a);
  } catch (const Error& e) {
    std::cerr << "error: " << e.category() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace qrw
