#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "qrw/jsonio.hpp"
#include "qrw/reward.hpp"
#include "support/fixtures.hpp"
#include "support/tmpdir.hpp"

using namespace qrw;

namespace {

// freq impressions of `query`, the first `clicks` of them clicked.
LogCorpus counted_corpus(const std::string& query, int freq, int clicks) {
  std::vector<ImpressionRecord> records;
  for (int i = 0; i < freq; ++i) {
    records.push_back(qrwtest::imp("u", 100.0 + i, query, {"d"},
                                   {{"d", 1.0, i < clicks}}));
  }
  return qrwtest::corpus_of(records, {qrwtest::doc("d", "title")});
}

}  // namespace

TEST_CASE("build counts impressions and clicked impressions") {
  const RewardOracle oracle = RewardOracle::build(counted_corpus("cat videos", 10, 2));
  const QueryStats* s = oracle.stats("cat videos");
  REQUIRE(s != nullptr);
  CHECK(s->freq == 10);
  CHECK(s->ctr == doctest::Approx(0.2));
}

TEST_CASE("queries outside the trailing window are absent") {
  std::vector<ImpressionRecord> records = {
      qrwtest::imp("u", 0.0, "old query", {"d"}),
      qrwtest::imp("u", 200.0 * 86400.0, "new query", {"d"}),
  };
  const auto corpus = qrwtest::corpus_of(records, {qrwtest::doc("d", "t")});
  const RewardOracle oracle = RewardOracle::build(corpus, 180);
  CHECK_FALSE(oracle.in_vocabulary("old query"));
  CHECK(oracle.in_vocabulary("new query"));
}

TEST_CASE("empty corpus: everything is out-of-vocabulary") {
  const RewardOracle oracle = RewardOracle::build(LogCorpus{});
  CHECK_FALSE(oracle.in_vocabulary("anything"));
  CHECK(oracle.reward("anything", RewardParams{1.0, 1.0, -1.0}) == -1.0);
}

TEST_CASE("reward evaluates lambda1*ln(freq) + lambda2*ctr") {
  const RewardParams p{1.0, 1.0, -1.0};

  const RewardOracle one = RewardOracle::build(counted_corpus("q", 1, 0));
  CHECK(one.reward("q", p) == 0.0);  // ln 1 = 0

  const RewardOracle hundred = RewardOracle::build(counted_corpus("q", 100, 20));
  // Independently derived: ln(100) + 0.2 = 4.805170185988091.
  CHECK(std::abs(hundred.reward("q", p) - 4.805170185988091) < 1e-9);

  CHECK(hundred.reward("never seen", p) == -1.0);  // exact penalty branch
}

TEST_CASE("in_vocabulary normalizes case and whitespace") {
  const RewardOracle oracle = RewardOracle::build(counted_corpus("air fryer", 3, 1));
  CHECK(oracle.in_vocabulary("air fryer"));
  CHECK(oracle.in_vocabulary("Air  FRYER"));
  CHECK_FALSE(oracle.in_vocabulary("air fryer recipes"));
}

TEST_CASE("reward is monotone in freq and ctr") {
  const RewardParams p;  // defaults: lambda1=1, lambda2=2
  const auto r = [&](int f, int c20) {
    RewardOracle o = RewardOracle::build(counted_corpus("q", f * 20, f * c20));
    return o.reward("q", p);
  };
  // Spot-check neighbor pairs on a coarse sub-grid; the full 20x20 grid
  // runs in the acceptance suite.
  for (int fi = 1; fi < 20; fi += 6) {
    for (int ci = 0; ci < 19; ci += 6) {
      CHECK(r(fi + 1, ci) >= r(fi, ci));
      CHECK(r(fi, ci + 1) >= r(fi, ci));
    }
  }
}

TEST_CASE("oracle build is order-independent") {
  const LogCorpus corpus = qrwtest::random_corpus(5, 5, 10);
  LogCorpus shuffled = corpus;
  std::mt19937 g(17);
  std::shuffle(shuffled.sessions.begin(), shuffled.sessions.end(), g);
  CHECK(RewardOracle::build(corpus) == RewardOracle::build(shuffled));
}

TEST_CASE("oracle TSV round-trips") {
  const LogCorpus corpus = qrwtest::random_corpus(8, 6, 12);
  const RewardOracle oracle = RewardOracle::build(corpus, 90);
  qrwtest::TempDir dir;
  oracle.save_tsv(dir.file("oracle.tsv"));
  const RewardOracle back = RewardOracle::load_tsv(dir.file("oracle.tsv"));
  CHECK(back == oracle);
  CHECK(back.window_days() == 90);
}

TEST_CASE("oracle TSV rejects malformed rows") {
  qrwtest::TempDir dir;
  write_text_file(dir.file("bad.tsv"), "only two\tfields\n");
  CHECK_THROWS_AS(RewardOracle::load_tsv(dir.file("bad.tsv")), ParseError);
  write_text_file(dir.file("bad2.tsv"), "q\t0\t0.5\n");  // freq 0 impossible
  CHECK_THROWS_AS(RewardOracle::load_tsv(dir.file("bad2.tsv")), ParseError);
}

TEST_CASE("reward params validation") {
  RewardParams p;
  p.r_penalty = 0.5;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}
