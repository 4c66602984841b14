#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "qrw/logstore.hpp"
#include "qrw/reward.hpp"

namespace qrw {

inline constexpr int kFeatureDim = 8;
using FeatureVec = std::array<double, kFeatureDim>;

// Fixed feature layout; params files are keyed by these names.
inline constexpr std::array<const char*, kFeatureDim> kFeatureNames = {
    "bias",
    "is_reject",
    "is_identity",
    "in_vocab",
    "ln_freq_capped",
    "ctr",
    "gain_terms_in_context_frac",
    "char_len_delta_norm",
};

inline constexpr double kLnFreqCap = 15.0;

enum class Provenance { kIdentity, kContextTermAppend, kContextQuery, kReject };

struct Candidate {
  std::string text;  // normalized query text, or kRejectToken verbatim
  Provenance provenance = Provenance::kIdentity;

  bool is_reject() const { return provenance == Provenance::kReject; }
  bool is_identity() const { return provenance == Provenance::kIdentity; }
  bool operator==(const Candidate&) const = default;
};

struct PolicyParams {
  FeatureVec theta{};

  void save_tsv(const std::string& path) const;
  static PolicyParams load_tsv(const std::string& path);

  bool operator==(const PolicyParams&) const = default;
};

struct PolicyDistribution {
  std::vector<Candidate> candidates;
  std::vector<double> probs;  // simplex aligned with candidates, all > 0

  // Highest-probability candidate; ties resolve to the lowest index, so
  // serving stays deterministic.
  std::size_t argmax() const;
};

// Candidates with their (theta-independent) features, computed once so
// training loops can reuse them across parameter updates.
struct CandidateSet {
  std::string query;  // normalized original query
  std::vector<Candidate> candidates;
  std::vector<FeatureVec> features;

  std::size_t size() const { return candidates.size(); }
  // Index of a candidate with this exact text; throws ContractError if absent.
  std::size_t index_of(const std::string& text) const;
  bool contains(const std::string& text) const;
};

// Deterministic, ordered, deduplicated by text:
//   1. identity (the normalized original query)
//   2. the reject token
//   3. q + " " + term, for the first 20 distinct context terms not already
//      in q (h_video titles/tags first, then h_query, most recent first)
//   4. in-vocabulary h_query entries sharing at least one term with q
std::vector<Candidate> generate_candidates(const std::string& q, const UserContext& ctx,
                                           const RewardOracle& oracle);

CandidateSet analyze_candidates(const std::string& q, const UserContext& ctx,
                                const RewardOracle& oracle);

FeatureVec featurize(const Candidate& cand, const std::string& q, const UserContext& ctx,
                     const RewardOracle& oracle);

// probs[i] proportional to exp(theta . features[i]), max-subtracted for
// numerical stability.
PolicyDistribution distribution_over(const PolicyParams& params, const CandidateSet& set);
PolicyDistribution policy_distribution(const PolicyParams& params, const std::string& q,
                                       const UserContext& ctx, const RewardOracle& oracle);

// IID draws with replacement; deterministic for a fixed seed. group_size
// must be >= 2 (the GRPO advantage needs a nondegenerate group).
std::vector<std::size_t> sample_group_indices(const PolicyDistribution& dist,
                                              std::uint64_t rng_seed, int group_size);
std::vector<Candidate> sample_group(const PolicyDistribution& dist, std::uint64_t rng_seed,
                                    int group_size);

struct LogProbGrad {
  double logp = 0.0;
  FeatureVec grad{};  // phi(chosen) - E_pi[phi]
};

LogProbGrad logprob_and_grad_at(const PolicyParams& params, const CandidateSet& set,
                                std::size_t chosen_index);
LogProbGrad logprob_and_grad(const PolicyParams& params, const std::string& q,
                             const UserContext& ctx, const RewardOracle& oracle,
                             const Candidate& chosen);

double dot(const FeatureVec& a, const FeatureVec& b);

}  // namespace qrw
