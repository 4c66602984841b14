#include "qrw/policy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "qrw/jsonio.hpp"
#include "qrw/mining.hpp"
#include "qrw/rng.hpp"
#include "qrw/text.hpp"

namespace qrw {
namespace {

// Context terms in recency order: video titles/tags first (that is where
// demand evidence lives), then past queries.
std::vector<std::string> context_terms_by_recency(const UserContext& ctx) {
  std::vector<std::string> stream;
  std::unordered_set<std::string> seen;
  const auto add = [&](const std::string& term) {
    if (seen.insert(term).second) stream.push_back(term);
  };
  for (const auto& v : ctx.h_video) {
    for (const auto& tok : query_tokens(v.title)) add(tok);
    for (const auto& tag : v.tags) {
      for (const auto& tok : query_tokens(tag)) add(tok);
    }
  }
  for (const auto& q : ctx.h_query) {
    for (const auto& tok : query_tokens(q)) add(tok);
  }
  return stream;
}

double logsumexp(const std::vector<double>& logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (double l : logits) s += std::exp(l - m);
  return m + std::log(s);
}

}  // namespace

double dot(const FeatureVec& a, const FeatureVec& b) {
  double s = 0.0;
  for (int i = 0; i < kFeatureDim; ++i) s += a[i] * b[i];
  return s;
}

std::vector<Candidate> generate_candidates(const std::string& q, const UserContext& ctx,
                                           const RewardOracle& oracle) {
  if (q.empty()) throw ContractError("generate_candidates: query must be non-empty");
  const std::string q_norm = normalize_query(q);
  const auto q_terms = tokenize_terms(q);

  std::vector<Candidate> out;
  std::unordered_set<std::string> seen;
  const auto add = [&](std::string text, Provenance prov) {
    if (seen.insert(text).second) out.push_back(Candidate{std::move(text), prov});
  };

  add(q_norm, Provenance::kIdentity);
  add(kRejectToken, Provenance::kReject);

  int appended = 0;
  for (const auto& term : context_terms_by_recency(ctx)) {
    if (appended >= 20) break;
    if (q_terms.count(term)) continue;
    add(q_norm + " " + term, Provenance::kContextTermAppend);
    ++appended;
  }

  for (const auto& hq : ctx.h_query) {
    const std::string hq_norm = normalize_query(hq);
    if (hq_norm.empty() || !oracle.in_vocabulary(hq_norm)) continue;
    if (!terms_intersect(tokenize_terms(hq), q_terms)) continue;
    add(hq_norm, Provenance::kContextQuery);
  }
  return out;
}

FeatureVec featurize(const Candidate& cand, const std::string& q, const UserContext& ctx,
                     const RewardOracle& oracle) {
  FeatureVec f{};
  f[0] = 1.0;  // bias
  if (cand.is_reject()) {
    f[1] = 1.0;
    return f;  // the reject action is featureless beyond its flag
  }
  f[2] = cand.is_identity() ? 1.0 : 0.0;
  if (const QueryStats* s = oracle.stats(cand.text)) {
    f[3] = 1.0;
    f[4] = std::min(std::log(static_cast<double>(s->freq)), kLnFreqCap);
    f[5] = s->ctr;
  }
  const auto q_terms = tokenize_terms(q);
  std::set<std::string> gain;
  for (const auto& t : tokenize_terms(cand.text)) {
    if (!q_terms.count(t)) gain.insert(t);
  }
  if (!gain.empty()) {
    const auto ctx_terms = context_term_set(ctx);
    std::size_t hits = 0;
    for (const auto& t : gain) hits += ctx_terms.count(t);
    f[6] = static_cast<double>(hits) / static_cast<double>(gain.size());
  }
  const double delta = static_cast<double>(cand.text.size()) -
                       static_cast<double>(normalize_query(q).size());
  f[7] = std::clamp(delta / 20.0, -1.0, 1.0);
  return f;
}

CandidateSet analyze_candidates(const std::string& q, const UserContext& ctx,
                                const RewardOracle& oracle) {
  CandidateSet set;
  set.query = normalize_query(q);
  set.candidates = generate_candidates(q, ctx, oracle);

  // Inline featurize with the per-query work hoisted out of the loop.
  const auto q_terms = tokenize_terms(q);
  const auto ctx_terms = context_term_set(ctx);
  const double q_len = static_cast<double>(set.query.size());
  set.features.reserve(set.candidates.size());
  for (const auto& cand : set.candidates) {
    FeatureVec f{};
    f[0] = 1.0;
    if (cand.is_reject()) {
      f[1] = 1.0;
      set.features.push_back(f);
      continue;
    }
    f[2] = cand.is_identity() ? 1.0 : 0.0;
    if (const QueryStats* s = oracle.stats(cand.text)) {
      f[3] = 1.0;
      f[4] = std::min(std::log(static_cast<double>(s->freq)), kLnFreqCap);
      f[5] = s->ctr;
    }
    std::set<std::string> gain;
    for (const auto& t : tokenize_terms(cand.text)) {
      if (!q_terms.count(t)) gain.insert(t);
    }
    if (!gain.empty()) {
      std::size_t hits = 0;
      for (const auto& t : gain) hits += ctx_terms.count(t);
      f[6] = static_cast<double>(hits) / static_cast<double>(gain.size());
    }
    f[7] = std::clamp((static_cast<double>(cand.text.size()) - q_len) / 20.0, -1.0, 1.0);
    set.features.push_back(f);
  }
  return set;
}

std::size_t CandidateSet::index_of(const std::string& text) const {
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].text == text) return i;
  }
  throw ContractError("candidate '" + text + "' not in candidate set");
}

bool CandidateSet::contains(const std::string& text) const {
  return std::any_of(candidates.begin(), candidates.end(),
                     [&](const Candidate& c) { return c.text == text; });
}

PolicyDistribution distribution_over(const PolicyParams& params, const CandidateSet& set) {
  if (set.candidates.empty()) throw ContractError("empty candidate set");
  std::vector<double> logits(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) logits[i] = dot(params.theta, set.features[i]);
  const double m = *std::max_element(logits.begin(), logits.end());
  PolicyDistribution dist;
  dist.candidates = set.candidates;
  dist.probs.resize(set.size());
  double total = 0.0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    dist.probs[i] = std::exp(logits[i] - m);
    total += dist.probs[i];
  }
  for (double& p : dist.probs) p /= total;
  return dist;
}

PolicyDistribution policy_distribution(const PolicyParams& params, const std::string& q,
                                       const UserContext& ctx, const RewardOracle& oracle) {
  return distribution_over(params, analyze_candidates(q, ctx, oracle));
}

std::size_t PolicyDistribution::argmax() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return best;
}

std::vector<std::size_t> sample_group_indices(const PolicyDistribution& dist,
                                              std::uint64_t rng_seed, int group_size) {
  if (group_size < 2) throw ConfigError("group_size must be >= 2");
  Rng rng(rng_seed);
  std::vector<std::size_t> draws(static_cast<std::size_t>(group_size));
  for (auto& d : draws) {
    const double u = rng.uniform();
    double acc = 0.0;
    d = dist.probs.size() - 1;
    for (std::size_t i = 0; i < dist.probs.size(); ++i) {
      acc += dist.probs[i];
      if (u < acc) {
        d = i;
        break;
      }
    }
  }
  return draws;
}

std::vector<Candidate> sample_group(const PolicyDistribution& dist, std::uint64_t rng_seed,
                                    int group_size) {
  std::vector<Candidate> out;
  for (std::size_t i : sample_group_indices(dist, rng_seed, group_size)) {
    out.push_back(dist.candidates[i]);
  }
  return out;
}

LogProbGrad logprob_and_grad_at(const PolicyParams& params, const CandidateSet& set,
                                std::size_t chosen_index) {
  if (chosen_index >= set.size()) throw ContractError("chosen index out of range");
  std::vector<double> logits(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) logits[i] = dot(params.theta, set.features[i]);
  const double lse = logsumexp(logits);

  LogProbGrad out;
  out.logp = logits[chosen_index] - lse;
  FeatureVec mean{};
  for (std::size_t i = 0; i < set.size(); ++i) {
    const double p = std::exp(logits[i] - lse);
    for (int k = 0; k < kFeatureDim; ++k) mean[k] += p * set.features[i][k];
  }
  for (int k = 0; k < kFeatureDim; ++k) out.grad[k] = set.features[chosen_index][k] - mean[k];
  return out;
}

LogProbGrad logprob_and_grad(const PolicyParams& params, const std::string& q,
                             const UserContext& ctx, const RewardOracle& oracle,
                             const Candidate& chosen) {
  const CandidateSet set = analyze_candidates(q, ctx, oracle);
  return logprob_and_grad_at(params, set, set.index_of(chosen.text));
}

void PolicyParams::save_tsv(const std::string& path) const {
  std::ostringstream out;
  out.precision(17);
  for (int i = 0; i < kFeatureDim; ++i) {
    out << kFeatureNames[i] << '\t' << theta[i] << '\n';
  }
  write_text_file(path, out.str());
}

PolicyParams PolicyParams::load_tsv(const std::string& path) {
  PolicyParams params;
  std::array<bool, kFeatureDim> seen{};
  std::istringstream in(read_text_file(path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected name\\tweight");
    }
    const std::string name = line.substr(0, tab);
    const auto it = std::find_if(kFeatureNames.begin(), kFeatureNames.end(),
                                 [&](const char* n) { return name == n; });
    if (it == kFeatureNames.end()) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": unknown feature '" + name + "'");
    }
    const auto idx = std::distance(kFeatureNames.begin(), it);
    try {
      params.theta[static_cast<std::size_t>(idx)] = std::stod(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": bad weight");
    }
    seen[static_cast<std::size_t>(idx)] = true;
  }
  for (int i = 0; i < kFeatureDim; ++i) {
    if (!seen[static_cast<std::size_t>(i)]) {
      throw ParseError(path + ": missing feature '" + std::string(kFeatureNames[i]) + "'");
    }
  }
  return params;
}

}  // namespace qrw
