#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "qrw/errors.hpp"

namespace qrw {

struct VideoDoc {
  std::string doc_id;
  std::string title;               // non-empty
  std::set<std::string> tags;
  std::string topic;               // latent label; synthetic corpora only

  bool operator==(const VideoDoc&) const = default;
};

struct Interaction {
  std::string doc_id;
  double dwell_s = 0.0;            // fractional seconds, >= 0
  bool clicked = false;

  bool operator==(const Interaction&) const = default;
};

// One search issuance: the query, what was shown, what was consumed.
struct ImpressionRecord {
  std::string user_id;
  double ts = 0.0;                 // seconds since epoch
  std::string query;
  std::string region;              // opaque tag
  std::vector<std::string> results;        // non-empty, ordered
  std::vector<Interaction> interactions;   // every doc_id must be in results

  bool operator==(const ImpressionRecord&) const = default;
};

// Longest dwell across the impression's interactions; 0 when there are none.
double max_dwell(const ImpressionRecord& imp);

struct SessionRecord {
  std::string session_id;
  std::string user_id;
  std::vector<ImpressionRecord> impressions;  // time-ordered

  bool operator==(const SessionRecord&) const = default;
};

struct VideoSummary {
  std::string title;
  std::vector<std::string> tags;   // sorted

  bool operator==(const VideoSummary&) const = default;
};

// C_u: the state conditioning a rewrite decision. Both lists are
// most-recent-first and capped by ContextWindows.
struct UserContext {
  std::vector<std::string> h_query;
  std::vector<VideoSummary> h_video;
  std::string geo;

  bool operator==(const UserContext&) const = default;
};

struct ContextWindows {
  int h_query = 10;
  int h_video = 20;
};

// A reformulation event the synthetic generator planted; mining must
// recover exactly these on synthetic corpora.
struct PlantedEvent {
  std::string user_id;
  std::string session_id;
  std::string q_orig;
  std::string q_next;
  double q_orig_ts = 0.0;
  double q_next_ts = 0.0;
  std::string gain_term;

  bool operator==(const PlantedEvent&) const = default;
};

struct LogCorpus {
  std::vector<SessionRecord> sessions;
  std::vector<VideoDoc> docs;
  std::vector<PlantedEvent> ground_truth;  // synthetic corpora only

  bool operator==(const LogCorpus& other) const {
    return sessions == other.sessions && docs == other.docs &&
           ground_truth == other.ground_truth;
  }

  const VideoDoc* find_doc(const std::string& doc_id) const;

  // Checks every documented invariant; throws IntegrityError on the first
  // violation.
  void validate() const;

 private:
  mutable std::unordered_map<std::string, std::size_t> doc_index_;  // lazy
};

inline constexpr double kDefaultSessionGapS = 1800.0;

// Per-user time-ordered partition; a new session starts whenever the gap to
// the previous impression is >= gap_timeout_s. Users are emitted in
// lexicographic order, sessions in time order, ids "<user>-s<k>".
std::vector<SessionRecord> sessionize(std::vector<ImpressionRecord> records,
                                      double gap_timeout_s = kDefaultSessionGapS);

// Reads impressions.jsonl + docs.jsonl (+ ground_truth.jsonl when present)
// from a directory, validates referential integrity and sessionizes.
LogCorpus ingest_logs(const std::string& dir, double gap_timeout_s = kDefaultSessionGapS);

// Inverse of ingest_logs; writes deterministic bytes (docs sorted by id,
// impressions in user/time order, fixed key order).
void write_logs(const LogCorpus& corpus, const std::string& dir);

// User state strictly before `before_ts`: most recent queries and watched
// videos (any interaction with dwell > 0), scanning the user's impressions
// across all their sessions. `geo` is taken from the most recent impression
// before the cutoff (empty if none).
UserContext build_context(const LogCorpus& corpus, const std::string& user_id,
                          double before_ts, const ContextWindows& windows = {});

// Same windows over an already-collected, time-ordered history.
using DocLookup = std::function<const VideoDoc*(const std::string&)>;
UserContext build_context_from_history(const std::vector<ImpressionRecord>& history,
                                       const DocLookup& find_doc,
                                       const ContextWindows& windows = {});

// All terms a context supports: h_query tokens plus h_video title tokens
// and tags.
std::set<std::string> context_term_set(const UserContext& ctx);

}  // namespace qrw
