#pragma once

#include <string>
#include <vector>

#include "qrw/logstore.hpp"

namespace qrw {

// Log directory layout (all JSON-Lines):
//   impressions.jsonl   {user_id, ts, query, region, results[],
//                        interactions[{doc_id, dwell_s, clicked}]}
//   docs.jsonl          {doc_id, title, tags[], topic?}
//   ground_truth.jsonl  planted events; optional, synthetic corpora only
inline constexpr const char* kImpressionsFile = "impressions.jsonl";
inline constexpr const char* kDocsFile = "docs.jsonl";
inline constexpr const char* kGroundTruthFile = "ground_truth.jsonl";

struct RawLogs {
  std::vector<ImpressionRecord> impressions;
  std::vector<VideoDoc> docs;
  std::vector<PlantedEvent> ground_truth;
};

// Parses the directory; malformed lines raise ParseError naming file and
// line number. Missing ground_truth.jsonl is fine; missing impressions or
// docs files raise IoError.
RawLogs read_log_dir(const std::string& dir);

// Deterministic inverse: docs sorted by doc_id, impressions flattened in
// session order, fixed JSON key order, shortest round-trip doubles.
void write_log_dir(const LogCorpus& corpus, const std::string& dir);

std::vector<ImpressionRecord> flatten_impressions(const std::vector<SessionRecord>& sessions);

// Reads a standalone doc catalog (docs.jsonl schema).
std::vector<VideoDoc> read_docs_file(const std::string& path);

// Context wire format: {"h_query": [..], "h_video": [{"title","tags"}], "geo"}.
UserContext context_from_json_string(const std::string& json_text);
std::string context_to_json_string(const UserContext& ctx);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace qrw
