#include "qrw/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "qrw/jsonio.hpp"
#include "qrw/rng.hpp"

namespace qrw {
namespace {

constexpr int kMaxTopics = 12;

constexpr std::array<const char*, kMaxTopics> kTopics = {
    "cooking",   "fitness", "travel",   "music",    "gaming",  "finance",
    "gardening", "astronomy", "chess",  "painting", "cycling", "photography"};

constexpr std::array<std::array<const char*, 3>, kMaxTopics> kIntents = {{
    {"airfryer", "sourdough", "meal"},
    {"kettlebell", "stretching", "cardio"},
    {"itinerary", "hostel", "packing"},
    {"guitar", "vinyl", "concert"},
    {"speedrun", "modding", "builds"},
    {"budgeting", "dividend", "etf"},
    {"tomato", "compost", "pruning"},
    {"telescope", "nebula", "eclipse"},
    {"openings", "endgame", "tactics"},
    {"watercolor", "acrylic", "portrait"},
    {"gravel", "derailleur", "touring"},
    {"lens", "lightroom", "exposure"},
}};

constexpr std::array<const char*, kMaxTopics> kBases = {
    "mercury", "jaguar", "python", "turkey", "apollo", "phoenix",
    "delta",   "orion",  "atlas",  "comet",  "nova",   "zephyr"};

constexpr std::array<const char*, 10> kFillers = {
    "guide", "review", "basics", "tips",  "ideas",
    "daily", "studio", "club",   "notes", "live"};

std::string pad4(int n) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d", n);
  return buf;
}

double draw_dwell(Rng& rng, const DwellRange& r) { return rng.uniform(r.lo, r.hi); }

struct World {
  SimConfig cfg;
  std::vector<VideoDoc> docs;
  // Per topic: doc indexes whose titles carry the primary intent, and the
  // distractor docs carrying the topic's ambiguous base.
  std::vector<std::vector<std::size_t>> intent_docs;
  std::vector<std::vector<std::size_t>> base_docs;
  std::vector<std::vector<std::size_t>> topic_docs;
};

World build_world(const SimConfig& cfg) {
  World w;
  w.cfg = cfg;
  w.intent_docs.resize(cfg.topics);
  w.base_docs.resize(cfg.topics);
  w.topic_docs.resize(cfg.topics);
  for (int t = 0; t < cfg.topics; ++t) {
    for (int j = 0; j < cfg.docs_per_topic; ++j) {
      const int global = t * cfg.docs_per_topic + j;
      const std::string intent = kIntents[t][j % 3];
      VideoDoc d;
      d.doc_id = "v" + pad4(global);
      d.topic = kTopics[t];
      const bool distractor = j < cfg.distractor_docs_per_base;
      d.title.clear();
      if (distractor) d.title += std::string(kBases[t]) + " ";
      d.title += intent + " " + kTopics[t] + " " + kFillers[j % kFillers.size()] + " " +
                 std::to_string(j);
      d.tags.insert(kTopics[t]);
      d.tags.insert(intent);
      if (distractor) d.tags.insert(kBases[t]);
      const std::size_t idx = w.docs.size();
      w.docs.push_back(std::move(d));
      w.topic_docs[t].push_back(idx);
      if (j % 3 == 0) w.intent_docs[t].push_back(idx);
      if (distractor) w.base_docs[t].push_back(idx);
    }
  }
  return w;
}

std::vector<std::string> pick_results(const World& w, const std::vector<std::size_t>& pool,
                                      std::size_t first, std::size_t count) {
  std::vector<std::string> out;
  if (pool.empty()) return out;
  for (std::size_t k = 0; k < count && k < pool.size(); ++k) {
    out.push_back(w.docs[pool[(first + k) % pool.size()]].doc_id);
  }
  return out;
}

}  // namespace

namespace synthvocab {

int max_topics() { return kMaxTopics; }
std::string topic_name(int topic) { return kTopics.at(topic); }
std::string primary_intent(int topic) { return kIntents.at(topic)[0]; }
std::string intent_term(int topic, int k) { return kIntents.at(topic).at(k); }
std::string ambiguous_base(int topic) { return kBases.at(topic); }

std::string ambiguous_query_for_user(int topic, int total_topics) {
  return kBases.at((topic + 1) % total_topics);
}

std::string browse_query(int topic) { return std::string(kTopics.at(topic)) + " videos"; }

std::string satisfied_query(int topic) {
  return primary_intent(topic) + " " + kTopics.at(topic);
}

std::string casual_query(int topic, int k) {
  return std::string(kTopics.at(topic)) + " " +
         kFillers[static_cast<std::size_t>(k) % kFillers.size()];
}

}  // namespace synthvocab

LogCorpus synthesize_logs(const SimConfig& cfg, std::uint64_t seed) {
  if (cfg.users <= 0 || cfg.topics <= 0) {
    throw ConfigError("synth: users and topics must be positive");
  }
  if (cfg.topics > kMaxTopics) {
    throw ConfigError("synth: at most " + std::to_string(kMaxTopics) + " topics");
  }
  if (cfg.ambiguity_rate < 0.0 || cfg.ambiguity_rate > 1.0 || cfg.satisfied_rate < 0.0 ||
      cfg.satisfied_rate > 1.0) {
    throw ConfigError("synth: rates must lie in [0, 1]");
  }
  if (cfg.ambiguity_rate > 0.0 && cfg.topics < 2) {
    throw ConfigError("synth: ambiguity requires at least two topics");
  }
  if (cfg.sessions_per_user <= 0 || cfg.docs_per_topic <= 0) {
    throw ConfigError("synth: sessions_per_user and docs_per_topic must be positive");
  }
  if (cfg.distractor_docs_per_base < 1 || cfg.distractor_docs_per_base > cfg.docs_per_topic) {
    throw ConfigError("synth: distractor_docs_per_base out of range");
  }
  for (const DwellRange* r :
       {&cfg.browse_dwell, &cfg.failed_dwell, &cfg.success_dwell, &cfg.satisfied_dwell}) {
    if (!(r->lo >= 0.0 && r->lo <= r->hi)) throw ConfigError("synth: bad dwell range");
  }
  if (cfg.within_session_gap_s <= 0.0 ||
      cfg.between_session_gap_s <= cfg.within_session_gap_s) {
    throw ConfigError("synth: session gaps must satisfy 0 < within < between");
  }

  const World w = build_world(cfg);
  LogCorpus corpus;
  corpus.docs = w.docs;

  // Each user gets ceil(rate * sessions) planted sessions, placed first, so
  // every user (and thus topic) contributes rewrite events whenever the rate
  // is positive.
  const int plants_per_user =
      cfg.ambiguity_rate > 0.0
          ? std::min<int>(cfg.sessions_per_user,
                          static_cast<int>(std::ceil(cfg.ambiguity_rate *
                                                         cfg.sessions_per_user -
                                                     1e-9)))
          : 0;

  for (int u = 0; u < cfg.users; ++u) {
    const std::string user_id = "u" + pad4(u);
    const int topic = u % cfg.topics;
    const std::string region = "region-" + std::to_string(u % std::max(1, cfg.regions));
    const std::string intent = synthvocab::primary_intent(topic);
    double ts = cfg.start_ts + static_cast<double>(u);

    for (int s = 0; s < cfg.sessions_per_user; ++s) {
      Rng rng(mix_seed(seed, static_cast<std::uint64_t>(u), static_cast<std::uint64_t>(s)));
      const std::string session_id = user_id + "-s" + std::to_string(s);
      const bool planted = s < plants_per_user;
      const bool satisfied = !planted && rng.bernoulli(cfg.satisfied_rate);

      const auto push = [&](std::string query, std::vector<std::string> results,
                            std::vector<Interaction> inter) {
        ImpressionRecord imp;
        imp.user_id = user_id;
        imp.ts = ts;
        imp.query = std::move(query);
        imp.region = region;
        imp.results = std::move(results);
        imp.interactions = std::move(inter);
        ts += cfg.within_session_gap_s;
        if (corpus.sessions.empty() || corpus.sessions.back().session_id != session_id) {
          SessionRecord sr;
          sr.session_id = session_id;
          sr.user_id = user_id;
          corpus.sessions.push_back(std::move(sr));
        }
        corpus.sessions.back().impressions.push_back(std::move(imp));
      };

      // Every session opens with a browse that watches a primary-intent doc,
      // keeping that intent inside the context window for later impressions.
      {
        auto results = pick_results(w, w.topic_docs[topic], rng.below(16), 5);
        std::vector<std::string> with_intent = results;
        const std::string intent_doc =
            w.docs[w.intent_docs[topic][rng.below(w.intent_docs[topic].size())]].doc_id;
        if (std::find(with_intent.begin(), with_intent.end(), intent_doc) ==
            with_intent.end()) {
          with_intent.insert(with_intent.begin(), intent_doc);
        }
        std::vector<Interaction> inter{
            {intent_doc, draw_dwell(rng, cfg.browse_dwell), true}};
        push(synthvocab::browse_query(topic), std::move(with_intent), std::move(inter));
      }

      if (planted) {
        const std::string q_orig = synthvocab::ambiguous_query_for_user(topic, cfg.topics);
        const std::string q_next = q_orig + " " + intent;
        const int wrong_topic = (topic + 1) % cfg.topics;

        // Failed original: shown the dominant (wrong) meaning, barely dwells.
        auto wrong_results = pick_results(w, w.base_docs[wrong_topic], 0,
                                          w.base_docs[wrong_topic].size());
        const double orig_ts = ts;
        std::vector<Interaction> orig_inter{
            {wrong_results.front(), draw_dwell(rng, cfg.failed_dwell), false}};
        push(q_orig, std::move(wrong_results), std::move(orig_inter));

        // Successful reformulation: own-topic intent docs, long dwell, click.
        auto good_results = pick_results(w, w.intent_docs[topic], rng.below(8), 5);
        const double next_ts = ts;
        std::vector<Interaction> next_inter{
            {good_results.front(), draw_dwell(rng, cfg.success_dwell), true}};
        push(q_next, std::move(good_results), std::move(next_inter));

        PlantedEvent ev;
        ev.user_id = user_id;
        ev.session_id = session_id;
        ev.q_orig = q_orig;
        ev.q_next = q_next;
        ev.q_orig_ts = orig_ts;
        ev.q_next_ts = next_ts;
        ev.gain_term = intent;
        corpus.ground_truth.push_back(std::move(ev));
      } else if (satisfied) {
        auto results = pick_results(w, w.intent_docs[topic], rng.below(8), 5);
        std::vector<Interaction> inter{
            {results.front(), draw_dwell(rng, cfg.satisfied_dwell), true}};
        push(synthvocab::satisfied_query(topic), std::move(results), std::move(inter));
      } else {
        auto results = pick_results(w, w.topic_docs[topic], rng.below(16), 5);
        std::vector<Interaction> inter{
            {results.front(), draw_dwell(rng, cfg.browse_dwell), rng.bernoulli(0.5)}};
        push(std::string(kTopics[topic]) + " " + kFillers[rng.below(kFillers.size())],
             std::move(results), std::move(inter));
      }

      ts += cfg.between_session_gap_s;
    }
  }

  corpus.validate();
  return corpus;
}

SimConfig sim_config_from_json_string(const std::string& json_text) {
  SimConfig cfg;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("sim config: ") + e.what());
  }
  cfg.users = j.value("users", cfg.users);
  cfg.topics = j.value("topics", cfg.topics);
  cfg.sessions_per_user = j.value("sessions_per_user", cfg.sessions_per_user);
  cfg.docs_per_topic = j.value("docs_per_topic", cfg.docs_per_topic);
  cfg.distractor_docs_per_base =
      j.value("distractor_docs_per_base", cfg.distractor_docs_per_base);
  cfg.ambiguity_rate = j.value("ambiguity_rate", cfg.ambiguity_rate);
  cfg.satisfied_rate = j.value("satisfied_rate", cfg.satisfied_rate);
  const auto range = [&](const char* key, DwellRange fallback) {
    if (!j.contains(key)) return fallback;
    const auto& r = j.at(key);
    return DwellRange{r.at(0).get<double>(), r.at(1).get<double>()};
  };
  cfg.browse_dwell = range("browse_dwell", cfg.browse_dwell);
  cfg.failed_dwell = range("failed_dwell", cfg.failed_dwell);
  cfg.success_dwell = range("success_dwell", cfg.success_dwell);
  cfg.satisfied_dwell = range("satisfied_dwell", cfg.satisfied_dwell);
  cfg.start_ts = j.value("start_ts", cfg.start_ts);
  cfg.within_session_gap_s = j.value("within_session_gap_s", cfg.within_session_gap_s);
  cfg.between_session_gap_s = j.value("between_session_gap_s", cfg.between_session_gap_s);
  cfg.regions = j.value("regions", cfg.regions);
  return cfg;
}

SimConfig load_sim_config(const std::string& path) {
  return sim_config_from_json_string(read_text_file(path));
}

}  // namespace qrw
