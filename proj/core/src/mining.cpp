#include "qrw/mining.hpp"

#include <algorithm>
#include <sstream>

#include "json_convert.hpp"
#include "qrw/jsonio.hpp"

namespace qrw {

VerifyOutcome ReferenceIntentVerifier::verify(const UserContext& context,
                                              const std::string& q_orig,
                                              const std::string& q_next) const {
  const auto orig_terms = tokenize_terms(q_orig);
  const auto next_terms = tokenize_terms(q_next);
  std::set<std::string> gain;
  for (const auto& t : next_terms) {
    if (!orig_terms.count(t)) gain.insert(t);
  }
  if (gain.empty()) return VerifyOutcome::kNegative;  // vacuous rewrite
  const auto ctx_terms = context_term_set(context);
  for (const auto& t : gain) {
    if (!ctx_terms.count(t)) return VerifyOutcome::kNegative;
  }
  return VerifyOutcome::kPositive;
}

std::string MiningReport::to_json() const {
  nlohmann::ordered_json j;
  j["candidates"] = candidates;
  j["step1_rejected"] = step1_rejected;
  j["step2_rejected"] = step2_rejected;
  j["positives"] = positives;
  j["negatives"] = negatives;
  j["verifier_dropped"] = verifier_dropped;
  j["drop_reasons"] = drop_reasons;
  return j.dump(2);
}

std::vector<RewritePair> mine_candidates(const LogCorpus& corpus, const MiningThresholds& t,
                                         const ContextWindows& windows) {
  t.validate();
  std::vector<RewritePair> pairs;
  for (const auto& s : corpus.sessions) {
    for (std::size_t i = 0; i + 1 < s.impressions.size(); ++i) {
      const auto& orig = s.impressions[i];
      const auto& next = s.impressions[i + 1];
      if (!(max_dwell(orig) < t.tau_short)) continue;
      if (!(max_dwell(next) > t.tau_valid)) continue;
      if (orig.query == next.query) continue;

      RewritePair p;
      p.q_orig = orig.query;
      p.q_next = next.query;
      p.session_id = s.session_id;
      p.user_id = s.user_id;
      p.q_orig_ts = orig.ts;
      p.q_next_ts = next.ts;
      const auto orig_terms = tokenize_terms(orig.query);
      for (const auto& term : tokenize_terms(next.query)) {
        if (!orig_terms.count(term)) p.gain_terms.insert(term);
      }
      p.context = build_context(corpus, s.user_id, orig.ts, windows);
      pairs.push_back(std::move(p));
    }
  }
  return pairs;
}

bool context_overlap_filter(const RewritePair& pair, const UserContext& context) {
  if (pair.gain_terms.empty()) return false;
  const auto ctx_terms = context_term_set(context);
  return terms_intersect(pair.gain_terms, ctx_terms);
}

VerifyOutcome verify_intent(const RewritePair& pair, const IntentVerifier& verifier) {
  return verifier.verify(pair.context, pair.q_orig, pair.q_next);
}

std::vector<TrainingSample> mine_negatives(const LogCorpus& corpus, const MiningThresholds& t,
                                           const ContextWindows& windows) {
  t.validate();
  std::vector<TrainingSample> out;
  for (const auto& s : corpus.sessions) {
    if (s.impressions.empty()) continue;
    const auto& last = s.impressions.back();
    if (!(max_dwell(last) > t.tau_long)) continue;
    TrainingSample sample;
    sample.context = build_context(corpus, s.user_id, last.ts, windows);
    sample.q_orig = last.query;
    sample.target = kRejectToken;
    sample.session_id = s.session_id;
    sample.ts = last.ts;
    out.push_back(std::move(sample));
  }
  return out;
}

std::vector<TrainingSample> build_dataset(const LogCorpus& corpus, const MiningThresholds& t,
                                          const IntentVerifier& verifier,
                                          MiningReport* report, const ContextWindows& windows) {
  MiningReport local;
  MiningReport& rep = report ? *report : local;
  rep = MiningReport{};

  std::vector<TrainingSample> dataset;
  for (auto& pair : mine_candidates(corpus, t, windows)) {
    ++rep.candidates;
    if (!context_overlap_filter(pair, pair.context)) {
      ++rep.step1_rejected;
      continue;
    }
    VerifyOutcome outcome;
    try {
      outcome = verify_intent(pair, verifier);
    } catch (const VerificationError& e) {
      ++rep.verifier_dropped;
      ++rep.step2_rejected;  // keeps candidates == step1 + step2 + positives
      rep.drop_reasons.push_back(pair.session_id + ": " + e.what());
      continue;
    }
    if (outcome != VerifyOutcome::kPositive) {
      ++rep.step2_rejected;
      continue;
    }
    ++rep.positives;
    TrainingSample sample;
    sample.context = std::move(pair.context);
    sample.q_orig = std::move(pair.q_orig);
    sample.target = std::move(pair.q_next);
    sample.session_id = std::move(pair.session_id);
    sample.ts = pair.q_orig_ts;
    dataset.push_back(std::move(sample));
  }

  auto negatives = mine_negatives(corpus, t, windows);
  rep.negatives = negatives.size();
  dataset.insert(dataset.end(), std::make_move_iterator(negatives.begin()),
                 std::make_move_iterator(negatives.end()));

  std::sort(dataset.begin(), dataset.end(), [](const auto& a, const auto& b) {
    if (a.session_id != b.session_id) return a.session_id < b.session_id;
    return a.ts < b.ts;
  });
  return dataset;
}

void write_dataset(const std::vector<TrainingSample>& dataset, const std::string& path) {
  std::ostringstream out;
  for (const auto& s : dataset) {
    nlohmann::ordered_json j;
    j["context"] = detail::context_to_json(s.context);
    j["q_orig"] = s.q_orig;
    j["target"] = s.target;
    j["session_id"] = s.session_id;
    j["ts"] = s.ts;
    out << j.dump() << '\n';
  }
  write_text_file(path, out.str());
}

std::vector<TrainingSample> read_dataset(const std::string& path) {
  std::vector<TrainingSample> dataset;
  detail::for_each_line(path, [&](const std::string& line, std::size_t n) {
    const auto j = detail::parse_line(line, path, n);
    try {
      TrainingSample s;
      s.context = detail::context_from_json(j.at("context"));
      s.q_orig = j.at("q_orig").get<std::string>();
      s.target = j.at("target").get<std::string>();
      s.session_id = j.value("session_id", std::string{});
      s.ts = j.value("ts", 0.0);
      if (s.target.empty()) {
        throw ParseError(path + ":" + std::to_string(n) + ": empty target");
      }
      dataset.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(n) + ": " + e.what());
    }
  });
  return dataset;
}

}  // namespace qrw
