#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qrw/fakeindex.hpp"
#include "qrw/mining.hpp"
#include "qrw/serving.hpp"
#include "qrw/synth.hpp"
#include "qrw/trainer.hpp"

namespace qrw {

struct Metrics {
  std::uint64_t vv_gt10 = 0;         // plays with dwell > tau_valid
  double reformulation_rate = 0.0;   // see compute_metrics
  double index_hit_rate = 0.0;       // rewrite attempts that hit the index

  bool operator==(const Metrics&) const = default;
};

// vv_gt10 counts interactions with dwell > tau_valid across all impressions.
// reformulation_rate is the fraction of impressions that have an in-session
// successor whose own max dwell was below tau_short, over all impressions
// with an in-session successor (0 when there are none). index_hit_rate is
// not derivable from sessions and stays 0 here.
Metrics compute_metrics(const std::vector<SessionRecord>& sessions,
                        const MiningThresholds& t = {});

std::string metrics_to_json(const Metrics& m);

// Everything the treatment arm serves from, bundled with the users whose
// logs built it so train/test disjointness is checkable.
struct AbArtifacts {
  PolicyParams params;
  FakeIndex index;
  RewardOracle oracle;
  DocStore docstore;
  std::set<std::string> train_users;
  MiningThresholds thresholds;
  RewardParams reward_params;
};

struct AbBehavior {
  double reformulate_prob = 0.7;  // dissatisfied users retry with this chance
  LatencyModel latency;
  double relevance_threshold = 0.0;
};

struct ABReport {
  Metrics control;
  Metrics treatment;
  std::optional<double> vv_gt10_delta;             // (t - c) / c when c > 0
  std::optional<double> reformulation_rate_delta;  // likewise
  std::uint64_t seed = 0;
  SimConfig sim;
  AbBehavior behavior;

  std::string to_json() const;
  std::string tsv_line() const;  // seed, vv deltas, rates — one scripting row
};

bool operator==(const ABReport& a, const ABReport& b);

// Paired simulated A/B over a fresh test population (user ids "t####",
// disjoint from the artifacts' train users by contract). Both arms consume
// the same primary request stream and the same reaction randomness; the
// control arm serves with the rewrite path disabled. The synthetic user
// dwells > 10s iff a returned doc matches their latent topic, otherwise
// dwells < 2.4s and retries once (with probability reformulate_prob) using
// their intent term.
ABReport simulate_ab(const SimConfig& sim, const AbArtifacts& artifacts, std::uint64_t seed,
                     const AbBehavior& behavior = {});

// Mines, trains and indexes a corpus into a servable artifact bundle.
AbArtifacts build_artifacts(const LogCorpus& train_corpus, const MiningThresholds& t = {},
                            const TrainConfig& tcfg = {}, const BuildConfig& icfg = {});

// synth -> mine -> train -> index -> simulate_ab, with substream seeds
// derived from `seed`.
ABReport run_ab_pipeline(const SimConfig& sim, std::uint64_t seed,
                         const MiningThresholds& t = {}, const TrainConfig& tcfg = {},
                         const BuildConfig& icfg = {}, const AbBehavior& behavior = {});

// Subcommands: synth | mine | build-oracle | train | build-index |
// serve-sim | ab | metrics | policy eval. Exit 0 on success, 1 on
// categorized runtime errors, 2 on usage errors.
int cli_main(int argc, const char* const* argv);

}  // namespace qrw
