#include "qrw/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "qrw/jsonio.hpp"
#include "qrw/rng.hpp"

namespace qrw {
namespace {

std::string pad4(int n) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d", n);
  return buf;
}

constexpr std::uint64_t kTagPlan = 0x706c616eULL;   // session plan draws
constexpr std::uint64_t kTagDwell = 0x6477656cULL;  // dwell draws
constexpr std::uint64_t kTagRetry = 0x72747279ULL;  // retry decision

}  // namespace

Metrics compute_metrics(const std::vector<SessionRecord>& sessions, const MiningThresholds& t) {
  t.validate();
  Metrics m;
  std::uint64_t followed = 0;
  std::uint64_t followed_after_short = 0;
  for (const auto& s : sessions) {
    for (std::size_t i = 0; i < s.impressions.size(); ++i) {
      const auto& imp = s.impressions[i];
      for (const auto& it : imp.interactions) {
        if (it.dwell_s > t.tau_valid) ++m.vv_gt10;
      }
      if (i + 1 < s.impressions.size()) {
        ++followed;
        if (max_dwell(imp) < t.tau_short) ++followed_after_short;
      }
    }
  }
  m.reformulation_rate =
      followed ? static_cast<double>(followed_after_short) / static_cast<double>(followed)
               : 0.0;
  return m;
}

std::string metrics_to_json(const Metrics& m) {
  nlohmann::ordered_json j;
  j["vv_gt10"] = m.vv_gt10;
  j["reformulation_rate"] = m.reformulation_rate;
  j["index_hit_rate"] = m.index_hit_rate;
  return j.dump();
}

namespace {

struct ArmState {
  std::vector<SessionRecord> sessions;
  std::uint64_t rewrite_attempts = 0;
  std::uint64_t rewrite_hits = 0;
};

struct PlannedRequest {
  std::string query;
  bool allow_retry = false;  // ambiguous requests retry on dissatisfaction
};

// Serves one request in one arm, applies the user reaction, and appends the
// resulting impression. Returns true when the user was satisfied.
bool play_request(const SimConfig& sim, const AbArtifacts& art, const AbBehavior& behavior,
                  bool treatment_arm, const std::string& user_id, int topic,
                  const std::string& region, const PlannedRequest& pr, std::uint64_t seed,
                  int user, int session, int step, double* ts,
                  std::vector<ImpressionRecord>* history, SessionRecord* session_out,
                  ArmState* arm) {
  SearchRequest req;
  req.query = pr.query;
  req.request_id = user_id + "-s" + std::to_string(session) + "-r" + std::to_string(step);
  req.context = build_context_from_history(
      *history, [&](const std::string& id) { return art.docstore.find(id); });

  if (treatment_arm) {
    const PolicyDistribution dist =
        policy_distribution(art.params, req.query, req.context, art.oracle);
    const Candidate& top = dist.candidates[dist.argmax()];
    if (!top.is_reject() && !top.is_identity()) {
      ++arm->rewrite_attempts;
      if (art.index.lookup(top.text)) ++arm->rewrite_hits;
    }
  }

  ServeOptions opts;
  opts.enable_rewrite = treatment_arm;
  opts.relevance_threshold = behavior.relevance_threshold;
  const FusionResult result =
      serve(req, art.params, art.index, art.oracle, art.docstore, behavior.latency, opts);
  if (result.docs.empty()) {
    throw ContractError("A/B simulation produced an empty result list for '" + pr.query + "'");
  }

  const std::string topic_label = synthvocab::topic_name(topic);
  const FusedDoc* match = nullptr;
  for (const auto& d : result.docs) {
    const VideoDoc* doc = art.docstore.find(d.doc_id);
    if (doc && doc->topic == topic_label) {
      match = &d;
      break;
    }
  }

  ImpressionRecord imp;
  imp.user_id = user_id;
  imp.ts = *ts;
  imp.query = pr.query;
  imp.region = region;
  for (const auto& d : result.docs) imp.results.push_back(d.doc_id);
  *ts += sim.within_session_gap_s;

  Rng dwell_rng(mix_seed(seed, kTagDwell,
                         static_cast<std::uint64_t>(user) << 20 |
                             static_cast<std::uint64_t>(session) << 8 |
                             static_cast<std::uint64_t>(step)));
  const bool satisfied = match != nullptr;
  if (satisfied) {
    imp.interactions.push_back(
        {match->doc_id, dwell_rng.uniform(sim.success_dwell.lo, sim.success_dwell.hi), true});
  } else {
    imp.interactions.push_back(
        {result.docs.front().doc_id,
         dwell_rng.uniform(sim.failed_dwell.lo, sim.failed_dwell.hi), false});
  }

  history->push_back(imp);
  session_out->impressions.push_back(std::move(imp));
  return satisfied;
}

}  // namespace

ABReport simulate_ab(const SimConfig& sim, const AbArtifacts& artifacts, std::uint64_t seed,
                     const AbBehavior& behavior) {
  if (sim.users <= 0 || sim.topics <= 0 || sim.topics > synthvocab::max_topics()) {
    throw ConfigError("simulate_ab: invalid users/topics");
  }
  if (sim.ambiguity_rate > 0.0 && sim.topics < 2) {
    throw ConfigError("simulate_ab: ambiguity requires at least two topics");
  }
  if (behavior.reformulate_prob < 0.0 || behavior.reformulate_prob > 1.0) {
    throw ConfigError("simulate_ab: reformulate_prob must lie in [0, 1]");
  }
  behavior.latency.validate();

  const int plants_per_user =
      sim.ambiguity_rate > 0.0
          ? std::min<int>(sim.sessions_per_user,
                          static_cast<int>(std::ceil(
                              sim.ambiguity_rate * sim.sessions_per_user - 1e-9)))
          : 0;

  ArmState arms[2];  // [0] control, [1] treatment

  for (int u = 0; u < sim.users; ++u) {
    const std::string user_id = "t" + pad4(u);
    if (artifacts.train_users.count(user_id)) {
      throw ContractError("train/test user overlap: " + user_id);
    }
    const int topic = u % sim.topics;
    const std::string region = "region-" + std::to_string(u % std::max(1, sim.regions));

    std::vector<ImpressionRecord> histories[2];
    double ts[2] = {sim.start_ts + u, sim.start_ts + u};

    for (int s = 0; s < sim.sessions_per_user; ++s) {
      Rng plan_rng(mix_seed(seed, kTagPlan, static_cast<std::uint64_t>(u),
                            static_cast<std::uint64_t>(s)));
      const bool planted = s < plants_per_user;
      const bool satisfied_session = !planted && plan_rng.bernoulli(sim.satisfied_rate);
      const int casual_pick = static_cast<int>(plan_rng.below(10));

      // The primary request stream is identical for both arms.
      std::vector<PlannedRequest> plan;
      plan.push_back({synthvocab::browse_query(topic), false});
      if (planted) {
        plan.push_back({synthvocab::ambiguous_query_for_user(topic, sim.topics), true});
      } else if (satisfied_session) {
        plan.push_back({synthvocab::satisfied_query(topic), false});
      } else {
        plan.push_back({synthvocab::casual_query(topic, casual_pick), false});
      }

      for (int arm = 0; arm < 2; ++arm) {
        SessionRecord session;
        session.user_id = user_id;
        session.session_id = user_id + "-s" + std::to_string(s);
        int step = 0;
        for (const auto& pr : plan) {
          const bool ok =
              play_request(sim, artifacts, behavior, arm == 1, user_id, topic, region, pr,
                           seed, u, s, step, &ts[arm], &histories[arm], &session, &arms[arm]);
          if (!ok && pr.allow_retry) {
            // Paired draw: both arms consult the same coin for this step.
            Rng retry_rng(mix_seed(seed, kTagRetry,
                                   static_cast<std::uint64_t>(u) << 20 |
                                       static_cast<std::uint64_t>(s) << 8 |
                                       static_cast<std::uint64_t>(step)));
            if (retry_rng.bernoulli(behavior.reformulate_prob)) {
              const PlannedRequest retry{
                  pr.query + " " + synthvocab::primary_intent(topic), false};
              ++step;
              play_request(sim, artifacts, behavior, arm == 1, user_id, topic, region, retry,
                           seed, u, s, step, &ts[arm], &histories[arm], &session, &arms[arm]);
            }
          }
          ++step;
        }
        arms[arm].sessions.push_back(std::move(session));
        ts[arm] += sim.between_session_gap_s;
      }
    }
  }

  ABReport report;
  report.seed = seed;
  report.sim = sim;
  report.behavior = behavior;
  report.control = compute_metrics(arms[0].sessions, artifacts.thresholds);
  report.treatment = compute_metrics(arms[1].sessions, artifacts.thresholds);
  report.control.index_hit_rate =
      arms[0].rewrite_attempts
          ? static_cast<double>(arms[0].rewrite_hits) / arms[0].rewrite_attempts
          : 0.0;
  report.treatment.index_hit_rate =
      arms[1].rewrite_attempts
          ? static_cast<double>(arms[1].rewrite_hits) / arms[1].rewrite_attempts
          : 0.0;
  if (report.control.vv_gt10 > 0) {
    report.vv_gt10_delta = (static_cast<double>(report.treatment.vv_gt10) -
                            static_cast<double>(report.control.vv_gt10)) /
                           static_cast<double>(report.control.vv_gt10);
  }
  if (report.control.reformulation_rate > 0.0) {
    report.reformulation_rate_delta =
        (report.treatment.reformulation_rate - report.control.reformulation_rate) /
        report.control.reformulation_rate;
  }
  return report;
}

AbArtifacts build_artifacts(const LogCorpus& train_corpus, const MiningThresholds& t,
                            const TrainConfig& tcfg, const BuildConfig& icfg) {
  AbArtifacts art;
  art.thresholds = t;
  art.reward_params = tcfg.reward;
  const ReferenceIntentVerifier verifier;
  const auto dataset = build_dataset(train_corpus, t, verifier);
  art.oracle = RewardOracle::build(train_corpus);
  auto [params, report] = train(dataset, art.oracle, tcfg);
  art.params = params;
  art.index = FakeIndex::build(train_corpus, icfg);
  art.docstore = DocStore(train_corpus.docs);
  for (const auto& s : train_corpus.sessions) art.train_users.insert(s.user_id);
  return art;
}

ABReport run_ab_pipeline(const SimConfig& sim, std::uint64_t seed, const MiningThresholds& t,
                         const TrainConfig& tcfg, const BuildConfig& icfg,
                         const AbBehavior& behavior) {
  const LogCorpus train_corpus = synthesize_logs(sim, mix_seed(seed, 1));
  TrainConfig cfg = tcfg;
  cfg.seed = mix_seed(seed, 2);
  AbArtifacts artifacts = build_artifacts(train_corpus, t, cfg, icfg);
  ABReport report = simulate_ab(sim, artifacts, mix_seed(seed, 3), behavior);
  report.seed = seed;
  return report;
}

bool operator==(const ABReport& a, const ABReport& b) {
  return a.control == b.control && a.treatment == b.treatment &&
         a.vv_gt10_delta == b.vv_gt10_delta &&
         a.reformulation_rate_delta == b.reformulation_rate_delta && a.seed == b.seed;
}

std::string ABReport::to_json() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["control"] = nlohmann::ordered_json::parse(metrics_to_json(control));
  j["treatment"] = nlohmann::ordered_json::parse(metrics_to_json(treatment));
  j["deltas"]["vv_gt10"] =
      vv_gt10_delta ? nlohmann::ordered_json(*vv_gt10_delta) : nlohmann::ordered_json(nullptr);
  j["deltas"]["reformulation_rate"] = reformulation_rate_delta
                                          ? nlohmann::ordered_json(*reformulation_rate_delta)
                                          : nlohmann::ordered_json(nullptr);
  j["config"]["users"] = sim.users;
  j["config"]["topics"] = sim.topics;
  j["config"]["sessions_per_user"] = sim.sessions_per_user;
  j["config"]["docs_per_topic"] = sim.docs_per_topic;
  j["config"]["ambiguity_rate"] = sim.ambiguity_rate;
  j["config"]["satisfied_rate"] = sim.satisfied_rate;
  j["config"]["reformulate_prob"] = behavior.reformulate_prob;
  j["config"]["relevance_threshold"] = behavior.relevance_threshold;
  j["config"]["latency"] = nlohmann::ordered_json::parse(latency_to_json_string(behavior.latency));
  return j.dump(2);
}

std::string ABReport::tsv_line() const {
  std::ostringstream out;
  out.precision(10);
  out << seed << '\t' << control.vv_gt10 << '\t' << treatment.vv_gt10 << '\t'
      << (vv_gt10_delta ? std::to_string(*vv_gt10_delta) : "na") << '\t'
      << control.reformulation_rate << '\t' << treatment.reformulation_rate << '\t'
      << (reformulation_rate_delta ? std::to_string(*reformulation_rate_delta) : "na") << '\t'
      << treatment.index_hit_rate;
  return out.str();
}

}  // namespace qrw
