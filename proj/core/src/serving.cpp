#include "qrw/serving.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "json_convert.hpp"
#include "qrw/jsonio.hpp"
#include "qrw/mining.hpp"
#include "qrw/text.hpp"

namespace qrw {

DocStore::DocStore(std::vector<VideoDoc> docs) : docs_(std::move(docs)) {
  for (std::size_t i = 0; i < docs_.size(); ++i) {
    by_id_[docs_[i].doc_id] = i;
    std::set<std::string> terms = tokenize_terms(docs_[i].title);
    for (const auto& tag : docs_[i].tags) {
      const auto tag_terms = tokenize_terms(tag);
      terms.insert(tag_terms.begin(), tag_terms.end());
    }
    for (const auto& t : terms) postings_[t].push_back(i);
  }
}

const VideoDoc* DocStore::find(const std::string& doc_id) const {
  const auto it = by_id_.find(doc_id);
  return it == by_id_.end() ? nullptr : &docs_[it->second];
}

std::vector<ScoredDoc> DocStore::traditional_recall(const std::string& q,
                                                    std::size_t top_n) const {
  std::unordered_map<std::size_t, int> overlap;
  for (const auto& term : tokenize_terms(q)) {
    const auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    for (std::size_t idx : it->second) ++overlap[idx];
  }
  std::vector<std::pair<std::size_t, int>> hits(overlap.begin(), overlap.end());
  std::sort(hits.begin(), hits.end(), [&](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return docs_[a.first].doc_id < docs_[b.first].doc_id;
  });
  if (hits.size() > top_n) hits.resize(top_n);
  std::vector<ScoredDoc> out;
  out.reserve(hits.size());
  for (const auto& [idx, score] : hits) {
    out.push_back({docs_[idx].doc_id, static_cast<double>(score)});
  }
  return out;
}

std::optional<RewriteRecall> rewrite_path(const SearchRequest& req, const PolicyParams& params,
                                          const FakeIndex& index, const RewardOracle& oracle) {
  const PolicyDistribution dist = policy_distribution(params, req.query, req.context, oracle);
  const Candidate& top = dist.candidates[dist.argmax()];
  if (top.is_reject() || top.is_identity()) return std::nullopt;
  auto docs = index.lookup(top.text);
  if (!docs) return std::nullopt;
  return RewriteRecall{top.text, std::move(*docs)};
}

std::vector<ScoredDoc> relevance_filter(const std::string& q_orig,
                                        const std::vector<ScoredDoc>& docs, double threshold,
                                        const DocStore& store) {
  if (threshold < 0.0 || threshold > 1.0) {
    throw ConfigError("relevance threshold must lie in [0, 1]");
  }
  const auto q_terms = tokenize_terms(q_orig);
  std::vector<ScoredDoc> kept;
  kept.reserve(docs.size());
  for (const auto& d : docs) {
    const VideoDoc* doc = store.find(d.doc_id);
    std::set<std::string> doc_terms;
    if (doc) {
      doc_terms = tokenize_terms(doc->title);
      for (const auto& tag : doc->tags) {
        const auto tt = tokenize_terms(tag);
        doc_terms.insert(tt.begin(), tt.end());
      }
    }
    const bool shares = terms_intersect(q_terms, doc_terms);
    if (jaccard(q_terms, doc_terms) >= threshold || shares) kept.push_back(d);
  }
  return kept;
}

std::vector<FusedDoc> fuse(const std::vector<ScoredDoc>& main_docs,
                           const std::vector<ScoredDoc>& fake_docs) {
  std::vector<FusedDoc> out;
  out.reserve(main_docs.size() + fake_docs.size());
  std::unordered_set<std::string> seen;
  for (const auto& d : main_docs) {
    if (seen.insert(d.doc_id).second) out.push_back({d.doc_id, DocSource::kMain, d.score});
  }
  for (const auto& d : fake_docs) {
    if (seen.insert(d.doc_id).second) out.push_back({d.doc_id, DocSource::kFake, d.score});
  }
  return out;
}

FusionResult serve(const SearchRequest& req, const PolicyParams& params, const FakeIndex& index,
                   const RewardOracle& oracle, const DocStore& docstore,
                   const LatencyModel& lat, const ServeOptions& opts) {
  if (req.query.empty()) throw ContractError("serve: query must be non-empty");
  lat.validate();

  const auto main_docs = docstore.traditional_recall(req.query);

  // Rewrite path runs alongside; it is dropped when it would finish after
  // the main path, which is what keeps e2e independent of it.
  std::vector<ScoredDoc> fake_docs;
  std::optional<std::string> rewrite;
  if (opts.enable_rewrite && lat.rewrite_path_ms() <= lat.traditional_recall_ms) {
    if (auto rr = rewrite_path(req, params, index, oracle)) {
      fake_docs = relevance_filter(req.query, rr->docs, opts.relevance_threshold, docstore);
      rewrite = std::move(rr->rewrite);
    }
  }

  FusionResult result;
  result.docs = fuse(main_docs, fake_docs);
  const bool fused_fake = std::any_of(result.docs.begin(), result.docs.end(),
                                      [](const FusedDoc& d) { return d.source == DocSource::kFake; });
  if (fused_fake) result.rewrite_used = rewrite;
  result.e2e_latency_ms = lat.traditional_recall_ms + lat.fusion_ms;
  return result;
}

LatencyModel latency_from_json_string(const std::string& json_text) {
  LatencyModel lat;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("latency json: ") + e.what());
  }
  lat.traditional_recall_ms = j.value("traditional_recall_ms", lat.traditional_recall_ms);
  lat.llm_inference_ms = j.value("llm_inference_ms", lat.llm_inference_ms);
  lat.index_lookup_ms = j.value("index_lookup_ms", lat.index_lookup_ms);
  lat.relevance_filter_ms = j.value("relevance_filter_ms", lat.relevance_filter_ms);
  lat.fusion_ms = j.value("fusion_ms", lat.fusion_ms);
  lat.validate();
  return lat;
}

LatencyModel load_latency(const std::string& path) {
  return latency_from_json_string(read_text_file(path));
}

std::string latency_to_json_string(const LatencyModel& lat) {
  nlohmann::ordered_json j;
  j["traditional_recall_ms"] = lat.traditional_recall_ms;
  j["llm_inference_ms"] = lat.llm_inference_ms;
  j["index_lookup_ms"] = lat.index_lookup_ms;
  j["relevance_filter_ms"] = lat.relevance_filter_ms;
  j["fusion_ms"] = lat.fusion_ms;
  return j.dump();
}

std::vector<SearchRequest> read_requests(const std::string& path) {
  std::vector<SearchRequest> reqs;
  detail::for_each_line(path, [&](const std::string& line, std::size_t n) {
    const auto j = detail::parse_line(line, path, n);
    try {
      SearchRequest r;
      r.request_id = j.value("request_id", std::to_string(n));
      r.query = j.at("query").get<std::string>();
      if (j.contains("context")) r.context = detail::context_from_json(j.at("context"));
      if (r.query.empty()) throw ParseError(path + ":" + std::to_string(n) + ": empty query");
      reqs.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(n) + ": " + e.what());
    }
  });
  return reqs;
}

void write_requests(const std::vector<SearchRequest>& reqs, const std::string& path) {
  std::ostringstream out;
  for (const auto& r : reqs) {
    nlohmann::ordered_json j;
    j["request_id"] = r.request_id;
    j["query"] = r.query;
    j["context"] = detail::context_to_json(r.context);
    out << j.dump() << '\n';
  }
  write_text_file(path, out.str());
}

std::string fusion_result_to_json_line(const SearchRequest& req, const FusionResult& result) {
  nlohmann::ordered_json j;
  j["request_id"] = req.request_id;
  j["query"] = req.query;
  if (result.rewrite_used) {
    j["rewrite_used"] = *result.rewrite_used;
  } else {
    j["rewrite_used"] = nullptr;
  }
  j["e2e_latency_ms"] = result.e2e_latency_ms;
  nlohmann::ordered_json docs = nlohmann::ordered_json::array();
  for (const auto& d : result.docs) {
    docs.push_back({{"doc_id", d.doc_id},
                    {"source", d.source == DocSource::kMain ? "main" : "fake"},
                    {"score", d.score}});
  }
  j["docs"] = std::move(docs);
  return j.dump();
}

}  // namespace qrw
