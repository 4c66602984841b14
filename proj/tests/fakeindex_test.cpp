#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "qrw/fakeindex.hpp"
#include "qrw/rng.hpp"
#include "qrw/synth.hpp"
#include "qrw/text.hpp"
#include "support/fixtures.hpp"
#include "support/tmpdir.hpp"

using namespace qrw;

namespace {

FakeIndex random_index(std::uint64_t seed) {
  Rng rng(seed);
  FakeIndex index;
  const std::size_t n = rng.below(40);
  for (std::size_t i = 0; i < n; ++i) {
    IndexEntry entry;
    entry.source = rng.bernoulli(0.5) ? EntrySource::kInteraction : EntrySource::kRetrieval;
    const std::size_t docs = 1 + rng.below(8);
    double score = 100.0;
    std::set<std::string> used;
    for (std::size_t d = 0; d < docs; ++d) {
      score -= rng.uniform(0.01, 3.0);
      const std::string id = "doc" + std::to_string(rng.below(10000));
      if (used.insert(id).second) entry.docs.push_back({id, score});
    }
    index.insert("query " + std::to_string(seed) + " " + std::to_string(i), std::move(entry));
  }
  return index;
}

}  // namespace

TEST_CASE("interaction entries rank by CTR") {
  // a: shown 2, clicked 1 (ctr 0.5); b: shown 5, clicked 1 (ctr 0.2).
  std::vector<ImpressionRecord> records = {
      qrwtest::imp("u", 1.0, "q", {"a", "b"}, {{"a", 3.0, true}}),
      qrwtest::imp("u", 2.0, "q", {"a", "b"}),
      qrwtest::imp("u", 3.0, "q", {"b"}),
      qrwtest::imp("u", 4.0, "q", {"b"}),
      qrwtest::imp("u", 5.0, "q", {"b"}, {{"b", 3.0, true}}),
  };
  const auto corpus = qrwtest::corpus_of(
      records, {qrwtest::doc("a", "ta"), qrwtest::doc("b", "tb")});
  BuildConfig cfg;
  cfg.head_min_clicks = 2;
  const FakeIndex index = FakeIndex::build(corpus, cfg);
  const IndexEntry* entry = index.entry("q");
  REQUIRE(entry != nullptr);
  CHECK(entry->source == EntrySource::kInteraction);
  REQUIRE(entry->docs.size() == 2);
  CHECK(entry->docs[0].doc_id == "a");
  CHECK(entry->docs[0].score == doctest::Approx(0.5));
  CHECK(entry->docs[1].doc_id == "b");
  CHECK(entry->docs[1].score == doctest::Approx(0.2));
}

TEST_CASE("interaction ties break by mean dwell, then doc_id") {
  std::vector<ImpressionRecord> records = {
      qrwtest::imp("u", 1.0, "q", {"a", "b", "c"},
                   {{"a", 10.0, true}, {"b", 20.0, true}, {"c", 20.0, true}}),
  };
  const auto corpus = qrwtest::corpus_of(
      records,
      {qrwtest::doc("a", "ta"), qrwtest::doc("b", "tb"), qrwtest::doc("c", "tc")});
  BuildConfig cfg;
  cfg.head_min_clicks = 1;
  const FakeIndex index = FakeIndex::build(corpus, cfg);
  const IndexEntry* entry = index.entry("q");
  REQUIRE(entry != nullptr);
  REQUIRE(entry->docs.size() == 3);
  CHECK(entry->docs[0].doc_id == "b");  // ctr tie, dwell 20 > 10, id b < c
  CHECK(entry->docs[1].doc_id == "c");
  CHECK(entry->docs[2].doc_id == "a");
}

TEST_CASE("tail queries fall back to top-ranked result frequency") {
  std::vector<ImpressionRecord> records = {
      qrwtest::imp("u", 1.0, "rare query", {"c", "d"}),
  };
  const auto corpus =
      qrwtest::corpus_of(records, {qrwtest::doc("c", "tc"), qrwtest::doc("d", "td")});
  const FakeIndex index = FakeIndex::build(corpus, BuildConfig{});
  const IndexEntry* entry = index.entry("rare query");
  REQUIRE(entry != nullptr);
  CHECK(entry->source == EntrySource::kRetrieval);
  REQUIRE(entry->docs.size() == 2);
  CHECK(entry->docs[0].doc_id == "c");
  CHECK(entry->docs[1].doc_id == "d");

  CHECK_FALSE(index.lookup("never logged").has_value());
}

TEST_CASE("every logged query is covered; entries respect k and ordering") {
  SimConfig sim;
  sim.users = 20;
  const LogCorpus corpus = synthesize_logs(sim, 17);
  BuildConfig cfg;
  cfg.k = 3;  // small k to force truncation
  const FakeIndex index = FakeIndex::build(corpus, cfg);

  for (const auto& s : corpus.sessions) {
    for (const auto& imp : s.impressions) {
      CHECK(index.lookup(imp.query).has_value());
    }
  }
  for (const auto& [query, entry] : index.entries()) {
    CHECK(entry.docs.size() <= 3);
    std::set<std::string> ids;
    for (std::size_t i = 0; i < entry.docs.size(); ++i) {
      CHECK(ids.insert(entry.docs[i].doc_id).second);
      if (i > 0) CHECK(entry.docs[i - 1].score >= entry.docs[i].score);
      // Retrieval entries tiebreak directly on doc_id; interaction entries
      // consult mean dwell first (checked in the dedicated tie test above).
      if (i > 0 && entry.source == EntrySource::kRetrieval &&
          entry.docs[i - 1].score == entry.docs[i].score) {
        CHECK(entry.docs[i - 1].doc_id < entry.docs[i].doc_id);
      }
    }
  }

  // Construction is deterministic.
  CHECK(FakeIndex::build(corpus, cfg) == index);
}

TEST_CASE("interaction sourcing requires head_min_clicks") {
  SimConfig sim;
  sim.users = 16;
  const LogCorpus corpus = synthesize_logs(sim, 19);
  BuildConfig cfg;
  cfg.head_min_clicks = 4;
  const FakeIndex index = FakeIndex::build(corpus, cfg);

  std::unordered_map<std::string, int> clicks;
  for (const auto& s : corpus.sessions) {
    for (const auto& imp : s.impressions) {
      for (const auto& it : imp.interactions) {
        if (it.clicked) ++clicks[normalize_query(imp.query)];
      }
    }
  }
  for (const auto& [query, entry] : index.entries()) {
    if (entry.source == EntrySource::kInteraction) {
      CHECK(clicks[query] >= 4);
    } else {
      CHECK(clicks[query] < 4);
    }
  }
}

TEST_CASE("lookup normalizes the probe query") {
  std::vector<ImpressionRecord> records = {qrwtest::imp("u", 1.0, "Air Fryer", {"a"})};
  const auto corpus = qrwtest::corpus_of(records, {qrwtest::doc("a", "t")});
  const FakeIndex index = FakeIndex::build(corpus, BuildConfig{});
  CHECK(index.lookup("air  fryer").has_value());
  CHECK(index.lookup("AIR FRYER!").has_value());
}

TEST_CASE("save/load round-trips exactly") {
  qrwtest::TempDir dir;
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const FakeIndex index = random_index(seed);
    index.save(dir.file("idx.bin"));
    CHECK(FakeIndex::load(dir.file("idx.bin")) == index);
  }
  const FakeIndex empty;
  empty.save(dir.file("empty.bin"));
  CHECK(FakeIndex::load(dir.file("empty.bin")) == empty);
}

TEST_CASE("corrupt index files fail closed") {
  qrwtest::TempDir dir;
  const FakeIndex index = random_index(5);
  index.save(dir.file("idx.bin"));

  const std::string bytes = [&] {
    std::ifstream f(dir.file("idx.bin"), std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  }();

  // Truncations at every prefix length must fail, never partially load.
  for (const std::size_t cut : {bytes.size() / 4, bytes.size() / 2, bytes.size() - 1}) {
    std::ofstream f(dir.file("cut.bin"), std::ios::binary | std::ios::trunc);
    f.write(bytes.data(), static_cast<std::streamsize>(cut));
    f.close();
    CHECK_THROWS_AS(FakeIndex::load(dir.file("cut.bin")), FormatError);
  }

  std::string wrong_magic = bytes;
  wrong_magic[0] = 'X';
  std::ofstream m(dir.file("magic.bin"), std::ios::binary);
  m.write(wrong_magic.data(), static_cast<std::streamsize>(wrong_magic.size()));
  m.close();
  CHECK_THROWS_AS(FakeIndex::load(dir.file("magic.bin")), FormatError);

  std::string wrong_version = bytes;
  wrong_version[7] = 9;
  std::ofstream v(dir.file("version.bin"), std::ios::binary);
  v.write(wrong_version.data(), static_cast<std::streamsize>(wrong_version.size()));
  v.close();
  CHECK_THROWS_AS(FakeIndex::load(dir.file("version.bin")), FormatError);

  std::string trailing = bytes + "junk";
  std::ofstream t(dir.file("trailing.bin"), std::ios::binary);
  t.write(trailing.data(), static_cast<std::streamsize>(trailing.size()));
  t.close();
  CHECK_THROWS_AS(FakeIndex::load(dir.file("trailing.bin")), FormatError);
}

TEST_CASE("build config validation") {
  BuildConfig bad;
  bad.k = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.k = 10;
  bad.head_min_clicks = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
