#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "qrw/logstore.hpp"

namespace qrw {

enum class EntrySource : std::uint8_t { kInteraction = 0, kRetrieval = 1 };

struct ScoredDoc {
  std::string doc_id;
  double score = 0.0;

  bool operator==(const ScoredDoc&) const = default;
};

struct IndexEntry {
  std::vector<ScoredDoc> docs;  // descending score, doc_id tiebreak, size <= k
  EntrySource source = EntrySource::kRetrieval;

  bool operator==(const IndexEntry&) const = default;
};

struct BuildConfig {
  int k = 50;               // docs kept per entry
  int head_min_clicks = 5;  // clicks needed for the interaction route

  void validate() const {
    if (k < 1) throw ConfigError("k must be >= 1");
    if (head_min_clicks < 1) throw ConfigError("head_min_clicks must be >= 1");
  }
};

// Pre-computed query -> top-K documents cache.
//
// Hybrid construction: queries with at least head_min_clicks clicked
// impressions get interaction entries (score = per-doc CTR, mean dwell then
// doc_id as tiebreaks); every other logged query gets a retrieval entry
// (score = number of impressions where the doc appeared in the top-k
// results). Every logged query therefore has an entry.
class FakeIndex {
 public:
  FakeIndex() = default;

  static FakeIndex build(const LogCorpus& corpus, const BuildConfig& cfg = {});

  // O(1) hash lookup of the normalized query; empty optional on miss.
  std::optional<std::vector<ScoredDoc>> lookup(const std::string& query) const;
  const IndexEntry* entry(const std::string& query) const;

  std::size_t size() const { return entries_.size(); }
  int k() const { return k_; }
  const std::unordered_map<std::string, IndexEntry>& entries() const { return entries_; }

  void insert(std::string normalized_query, IndexEntry entry);  // for tests/tools

  // Little-endian binary format, entries sorted by query for deterministic
  // bytes; see save_index() docs in the README for the byte layout. A
  // truncated or tampered file fails closed with FormatError.
  void save(const std::string& path) const;
  static FakeIndex load(const std::string& path);

  bool operator==(const FakeIndex&) const = default;

 private:
  std::unordered_map<std::string, IndexEntry> entries_;
  int k_ = 50;
};

inline FakeIndex build_index(const LogCorpus& corpus, const BuildConfig& cfg = {}) {
  return FakeIndex::build(corpus, cfg);
}
inline void save_index(const FakeIndex& index, const std::string& path) { index.save(path); }
inline FakeIndex load_index(const std::string& path) { return FakeIndex::load(path); }

}  // namespace qrw
