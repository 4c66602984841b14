#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "qrw/logstore.hpp"
#include "qrw/text.hpp"

namespace qrw {

// Distinguished policy output meaning "do not rewrite".
inline constexpr const char* kRejectToken = "<reject>";

struct MiningThresholds {
  double tau_short = 2.4;  // failure on origin: max dwell strictly below
  double tau_valid = 10.0; // success on next: max dwell strictly above
  double tau_long = 30.0;  // satisfaction: max dwell strictly above

  void validate() const {
    if (!(0.0 < tau_short && tau_short < tau_valid && tau_valid <= tau_long)) {
      throw ConfigError("thresholds must satisfy 0 < tau_short < tau_valid <= tau_long");
    }
  }
};

// An adjacent (Q_orig, Q_next) pair that met the temporal constraints.
// context is the user state strictly before q_orig.
struct RewritePair {
  UserContext context;
  std::string q_orig;
  std::string q_next;
  std::string session_id;
  std::string user_id;
  std::set<std::string> gain_terms;  // Terms(q_next) \ Terms(q_orig)
  double q_orig_ts = 0.0;
  double q_next_ts = 0.0;
};

struct TrainingSample {
  UserContext context;
  std::string q_orig;
  std::string target;  // rewrite text, or kRejectToken
  std::string session_id;
  double ts = 0.0;

  bool is_reject() const { return target == kRejectToken; }
  bool operator==(const TrainingSample&) const = default;
};

enum class VerifyOutcome { kPositive, kNegative };

// Step-2 verifier. The reference implementation is deterministic; an
// external teacher can be plugged in behind this interface and may throw
// VerificationError, in which case the sample is dropped and counted.
class IntentVerifier {
 public:
  virtual ~IntentVerifier() = default;
  virtual VerifyOutcome verify(const UserContext& context, const std::string& q_orig,
                               const std::string& q_next) const = 0;
};

// Positive iff the gain term set is nonempty and every gain term appears in
// the context term set (strict reading of "explicitly appear").
class ReferenceIntentVerifier final : public IntentVerifier {
 public:
  VerifyOutcome verify(const UserContext& context, const std::string& q_orig,
                       const std::string& q_next) const override;
};

struct MiningReport {
  std::size_t candidates = 0;
  std::size_t step1_rejected = 0;
  std::size_t step2_rejected = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t verifier_dropped = 0;
  std::vector<std::string> drop_reasons;

  std::string to_json() const;
};

// Adjacent in-session pairs with max dwell on q_orig strictly below
// tau_short, on q_next strictly above tau_valid, and differing query text.
std::vector<RewritePair> mine_candidates(const LogCorpus& corpus, const MiningThresholds& t,
                                         const ContextWindows& windows = {});

// Step 1: at least one gain term appears in the context.
bool context_overlap_filter(const RewritePair& pair, const UserContext& context);

VerifyOutcome verify_intent(const RewritePair& pair, const IntentVerifier& verifier);

// Final impressions of their session with max dwell strictly above tau_long
// become (C_u, Q_orig) -> <reject> samples.
std::vector<TrainingSample> mine_negatives(const LogCorpus& corpus, const MiningThresholds& t,
                                           const ContextWindows& windows = {});

// Verified positives plus negatives, ordered by (session_id, timestamp).
std::vector<TrainingSample> build_dataset(const LogCorpus& corpus, const MiningThresholds& t,
                                          const IntentVerifier& verifier,
                                          MiningReport* report = nullptr,
                                          const ContextWindows& windows = {});

// Dataset JSONL: {context:{h_query[],h_video[],geo}, q_orig, target}.
void write_dataset(const std::vector<TrainingSample>& dataset, const std::string& path);
std::vector<TrainingSample> read_dataset(const std::string& path);

}  // namespace qrw
