#pragma once

#include <cstdint>
#include <string>

#include "qrw/logstore.hpp"

namespace qrw {

struct DwellRange {
  double lo = 0.0;
  double hi = 0.0;
};

// Synthetic world: `topics` latent topics, each with one primary intent
// term. Each topic owns one ambiguous base word that appears only in a few
// of its own "distractor" doc titles. A user with latent topic t issues the
// base owned by topic (t+1) mod T, so the dominant meaning of their
// ambiguous query belongs to someone else's topic.
//
// Session shapes:
//   planted   [browse, q_orig, q_next]  the rewrite event to be mined
//   satisfied [browse, long-dwell]      ends the session; mined as reject
//   casual    [browse, browse]          neutral filler
//
// Dwell ranges are chosen so that only planted pairs satisfy the mining
// temporal constraints: browse dwells sit strictly between tau_short and
// tau_valid, failed dwells below tau_short, success dwells between
// tau_valid and tau_long, satisfied dwells above tau_long.
struct SimConfig {
  int users = 100;
  int topics = 6;                 // 1..12 (built-in vocabulary size)
  int sessions_per_user = 3;
  int docs_per_topic = 30;
  int distractor_docs_per_base = 3;
  double ambiguity_rate = 0.2;    // fraction of each user's sessions planted
  double satisfied_rate = 0.5;    // chance a non-planted session ends satisfied

  DwellRange browse_dwell{3.0, 9.5};
  DwellRange failed_dwell{0.2, 2.3};
  DwellRange success_dwell{10.5, 28.0};
  DwellRange satisfied_dwell{30.5, 90.0};

  double start_ts = 1700000000.0;
  double within_session_gap_s = 60.0;
  double between_session_gap_s = 7200.0;

  int regions = 4;
};

// Deterministic for a fixed seed; byte-identical corpora across runs.
// Throws ConfigError on invalid configs (zero users/topics, inverted dwell
// ranges, ambiguity without at least two topics).
LogCorpus synthesize_logs(const SimConfig& config, std::uint64_t seed);

SimConfig sim_config_from_json_string(const std::string& json_text);
SimConfig load_sim_config(const std::string& path);

// Vocabulary accessors shared with the A/B user model.
namespace synthvocab {
int max_topics();
std::string topic_name(int topic);
std::string primary_intent(int topic);
std::string intent_term(int topic, int k);  // k in [0,3)
std::string ambiguous_base(int topic);      // base owned by `topic`
// The ambiguous query a user of topic t issues: base of topic (t+1) mod T.
std::string ambiguous_query_for_user(int topic, int total_topics);
std::string browse_query(int topic);
std::string satisfied_query(int topic);
std::string casual_query(int topic, int k);
}  // namespace synthvocab

}  // namespace qrw
