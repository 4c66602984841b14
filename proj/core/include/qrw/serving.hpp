#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "qrw/fakeindex.hpp"
#include "qrw/logstore.hpp"
#include "qrw/policy.hpp"

namespace qrw {

struct SearchRequest {
  std::string query;  // non-empty
  UserContext context;
  std::string request_id;
};

// Declared per-stage costs (ms) for the simulated clock. Latency claims are
// asserted on this model, not on wall time.
struct LatencyModel {
  double traditional_recall_ms = 120.0;
  double llm_inference_ms = 80.0;
  double index_lookup_ms = 1.0;
  double relevance_filter_ms = 5.0;
  double fusion_ms = 2.0;

  void validate() const {
    for (double v : {traditional_recall_ms, llm_inference_ms, index_lookup_ms,
                     relevance_filter_ms, fusion_ms}) {
      if (!(v >= 0.0)) throw ConfigError("latency stages must be >= 0");
    }
  }
  // Rewrite-path cost; the path contributes only when this finishes at or
  // before the main path.
  double rewrite_path_ms() const {
    return llm_inference_ms + index_lookup_ms + relevance_filter_ms;
  }
};

LatencyModel latency_from_json_string(const std::string& json_text);
LatencyModel load_latency(const std::string& path);
std::string latency_to_json_string(const LatencyModel& lat);

enum class DocSource { kMain, kFake };

struct FusedDoc {
  std::string doc_id;
  DocSource source = DocSource::kMain;
  double score = 0.0;

  bool operator==(const FusedDoc&) const = default;
};

struct FusionResult {
  std::vector<FusedDoc> docs;              // main docs first, no duplicates
  std::optional<std::string> rewrite_used; // set iff fake docs were fused
  double e2e_latency_ms = 0.0;

  bool operator==(const FusionResult&) const = default;
};

// Term-match baseline retriever over the doc catalog (inverted index on
// title + tag terms).
class DocStore {
 public:
  DocStore() = default;
  explicit DocStore(std::vector<VideoDoc> docs);

  // Count of shared terms between the query and title+tags, descending,
  // doc_id ascending tiebreak; zero-overlap docs are not returned.
  std::vector<ScoredDoc> traditional_recall(const std::string& q, std::size_t top_n = 100) const;

  const VideoDoc* find(const std::string& doc_id) const;
  const std::vector<VideoDoc>& docs() const { return docs_; }

 private:
  std::vector<VideoDoc> docs_;
  std::unordered_map<std::string, std::vector<std::size_t>> postings_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

inline std::vector<ScoredDoc> traditional_recall(const std::string& q, const DocStore& store,
                                                 std::size_t top_n = 100) {
  return store.traditional_recall(q, top_n);
}

struct RewriteRecall {
  std::string rewrite;
  std::vector<ScoredDoc> docs;
};

// Argmax decode; identity and reject yield no rewrite, as does an index
// miss.
std::optional<RewriteRecall> rewrite_path(const SearchRequest& req, const PolicyParams& params,
                                          const FakeIndex& index, const RewardOracle& oracle);

// Keeps docs whose term Jaccard with q_orig reaches the threshold OR that
// share at least one term with it; threshold 0 keeps everything.
std::vector<ScoredDoc> relevance_filter(const std::string& q_orig,
                                        const std::vector<ScoredDoc>& docs, double threshold,
                                        const DocStore& store);

// Main docs first in their order, then fake docs not already present.
std::vector<FusedDoc> fuse(const std::vector<ScoredDoc>& main_docs,
                           const std::vector<ScoredDoc>& fake_docs);

struct ServeOptions {
  bool enable_rewrite = true;
  double relevance_threshold = 0.0;
};

// Simulated timeline: both paths start at t=0. The rewrite path is dropped
// when it would outlast traditional recall, so
// e2e = traditional_recall + fusion whether or not it contributed.
FusionResult serve(const SearchRequest& req, const PolicyParams& params, const FakeIndex& index,
                   const RewardOracle& oracle, const DocStore& docstore,
                   const LatencyModel& lat, const ServeOptions& opts = {});

// Requests JSONL: {"request_id", "query", "context": {...}}.
std::vector<SearchRequest> read_requests(const std::string& path);
void write_requests(const std::vector<SearchRequest>& reqs, const std::string& path);
std::string fusion_result_to_json_line(const SearchRequest& req, const FusionResult& result);

}  // namespace qrw
