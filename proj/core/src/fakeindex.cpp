#include "qrw/fakeindex.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include "qrw/text.hpp"

namespace qrw {
namespace {

constexpr char kMagic[7] = {'Q', 'R', 'W', 'F', 'I', 'D', 'X'};
constexpr std::uint8_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "index format is little-endian; add byte swaps for this platform");

void put_u32(std::string& out, std::uint32_t v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_u64(std::string& out, std::uint64_t v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_f64(std::string& out, double v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(v));
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw FormatError("index file truncated");
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(buf[pos++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v;
    std::memcpy(&v, buf.data() + pos, 4);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v;
    std::memcpy(&v, buf.data() + pos, 8);
    pos += 8;
    return v;
  }
  double f64() {
    need(8);
    double v;
    std::memcpy(&v, buf.data() + pos, 8);
    pos += 8;
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

struct PerDoc {
  std::uint64_t shown = 0;      // impressions where the doc appeared
  std::uint64_t clicked = 0;    // impressions where it was clicked
  double dwell_sum = 0.0;
  std::uint64_t top_k_hits = 0; // impressions where it ranked within top k
};

}  // namespace

FakeIndex FakeIndex::build(const LogCorpus& corpus, const BuildConfig& cfg) {
  cfg.validate();
  struct PerQuery {
    std::uint64_t clicks = 0;
    std::unordered_map<std::string, PerDoc> docs;
  };
  std::unordered_map<std::string, PerQuery> agg;

  for (const auto& s : corpus.sessions) {
    for (const auto& imp : s.impressions) {
      PerQuery& q = agg[normalize_query(imp.query)];
      std::unordered_map<std::string, const Interaction*> inter;
      for (const auto& it : imp.interactions) inter[it.doc_id] = &it;
      std::size_t rank = 0;
      for (const auto& doc_id : imp.results) {
        PerDoc& d = q.docs[doc_id];
        ++d.shown;
        if (rank < static_cast<std::size_t>(cfg.k)) ++d.top_k_hits;
        ++rank;
        if (const auto it = inter.find(doc_id); it != inter.end()) {
          d.dwell_sum += it->second->dwell_s;
          if (it->second->clicked) {
            ++d.clicked;
            ++q.clicks;
          }
        }
      }
    }
  }

  FakeIndex index;
  index.k_ = cfg.k;
  for (auto& [query, q] : agg) {
    IndexEntry entry;
    const bool head = q.clicks >= static_cast<std::uint64_t>(cfg.head_min_clicks);
    entry.source = head ? EntrySource::kInteraction : EntrySource::kRetrieval;

    struct Row {
      std::string doc_id;
      double score;
      double tiebreak;
    };
    std::vector<Row> rows;
    rows.reserve(q.docs.size());
    for (auto& [doc_id, d] : q.docs) {
      if (head) {
        const double ctr = static_cast<double>(d.clicked) / static_cast<double>(d.shown);
        const double mean_dwell = d.dwell_sum / static_cast<double>(d.shown);
        rows.push_back({doc_id, ctr, mean_dwell});
      } else {
        rows.push_back({doc_id, static_cast<double>(d.top_k_hits), 0.0});
      }
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.tiebreak != b.tiebreak) return a.tiebreak > b.tiebreak;
      return a.doc_id < b.doc_id;
    });
    if (rows.size() > static_cast<std::size_t>(cfg.k)) {
      rows.resize(static_cast<std::size_t>(cfg.k));
    }
    for (auto& r : rows) entry.docs.push_back({std::move(r.doc_id), r.score});
    index.entries_.emplace(query, std::move(entry));
  }
  return index;
}

std::optional<std::vector<ScoredDoc>> FakeIndex::lookup(const std::string& query) const {
  const auto it = entries_.find(normalize_query(query));
  if (it == entries_.end()) return std::nullopt;
  return it->second.docs;
}

const IndexEntry* FakeIndex::entry(const std::string& query) const {
  const auto it = entries_.find(normalize_query(query));
  return it == entries_.end() ? nullptr : &it->second;
}

void FakeIndex::insert(std::string normalized_query, IndexEntry entry) {
  entries_[std::move(normalized_query)] = std::move(entry);
}

void FakeIndex::save(const std::string& path) const {
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  out.push_back(static_cast<char>(kVersion));
  put_u32(out, static_cast<std::uint32_t>(k_));
  put_u64(out, entries_.size());

  std::vector<const std::pair<const std::string, IndexEntry>*> sorted;
  sorted.reserve(entries_.size());
  for (const auto& kv : entries_) sorted.push_back(&kv);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto* a, const auto* b) { return a->first < b->first; });

  for (const auto* kv : sorted) {
    put_u32(out, static_cast<std::uint32_t>(kv->first.size()));
    out += kv->first;
    out.push_back(static_cast<char>(kv->second.source));
    put_u32(out, static_cast<std::uint32_t>(kv->second.docs.size()));
    for (const auto& d : kv->second.docs) {
      put_u32(out, static_cast<std::uint32_t>(d.doc_id.size()));
      out += d.doc_id;
      put_f64(out, d.score);
    }
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f.is_open()) throw IoError("cannot open '" + path + "' for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f.good()) throw IoError("failed writing '" + path + "'");
}

FakeIndex FakeIndex::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f.is_open()) throw IoError("cannot open '" + path + "'");
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  Reader r{buf};
  const std::string magic = r.str(sizeof(kMagic));
  if (std::memcmp(magic.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("not a fake-index file (bad magic)");
  }
  const std::uint8_t version = r.u8();
  if (version != kVersion) {
    throw FormatError("unsupported index version " + std::to_string(version));
  }

  FakeIndex index;
  index.k_ = static_cast<int>(r.u32());
  if (index.k_ < 1) throw FormatError("invalid k in index header");
  const std::uint64_t count = r.u64();
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint32_t qlen = r.u32();
    std::string query = r.str(qlen);
    IndexEntry entry;
    const std::uint8_t source = r.u8();
    if (source > 1) throw FormatError("invalid entry source byte");
    entry.source = static_cast<EntrySource>(source);
    const std::uint32_t ndocs = r.u32();
    if (ndocs > static_cast<std::uint32_t>(index.k_)) {
      throw FormatError("entry exceeds k docs");
    }
    entry.docs.reserve(ndocs);
    for (std::uint32_t d = 0; d < ndocs; ++d) {
      const std::uint32_t idlen = r.u32();
      std::string doc_id = r.str(idlen);
      const double score = r.f64();
      entry.docs.push_back({std::move(doc_id), score});
    }
    index.entries_.emplace(std::move(query), std::move(entry));
  }
  if (r.pos != buf.size()) throw FormatError("trailing bytes after index payload");
  return index;
}

}  // namespace qrw
