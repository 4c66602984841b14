#pragma once

#include <string>
#include <unordered_map>

#include "qrw/logstore.hpp"

namespace qrw {

struct QueryStats {
  std::uint64_t freq = 0;  // impression count, >= 1 for stored entries
  double ctr = 0.0;        // clicked impressions / impressions, in [0, 1]

  bool operator==(const QueryStats&) const = default;
};

struct RewardParams {
  double lambda1 = 1.0;    // weight on ln(freq)
  double lambda2 = 2.0;    // weight on ctr (upweighted: ctr is bounded)
  double r_penalty = -1.0; // out-of-vocabulary reward, < 0

  void validate() const {
    if (!(r_penalty < 0.0)) throw ConfigError("r_penalty must be negative");
  }
};

// Per-query Freq/CTR statistics over a trailing window of the corpus;
// membership defines the valid-query set gating the reward.
class RewardOracle {
 public:
  RewardOracle() = default;

  // freq = impressions of the normalized query inside the trailing window
  // (anchored at the newest impression); an impression counts as clicked
  // when any of its interactions clicked.
  static RewardOracle build(const LogCorpus& corpus, int window_days = 180);

  bool in_vocabulary(const std::string& query) const;

  // In-vocabulary: lambda1 * ln(freq) + lambda2 * ctr; otherwise r_penalty.
  double reward(const std::string& query, const RewardParams& p = {}) const;

  const QueryStats* stats(const std::string& query) const;
  std::size_t size() const { return stats_.size(); }
  int window_days() const { return window_days_; }

  // Sorted TSV: query \t freq \t ctr.
  void save_tsv(const std::string& path) const;
  static RewardOracle load_tsv(const std::string& path);

  bool operator==(const RewardOracle&) const = default;

 private:
  std::unordered_map<std::string, QueryStats> stats_;
  int window_days_ = 180;
};

}  // namespace qrw
