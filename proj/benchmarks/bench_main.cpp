#include <benchmark/benchmark.h>

#include "qrw/fakeindex.hpp"
#include "qrw/harness.hpp"
#include "qrw/rng.hpp"
#include "qrw/synth.hpp"

namespace {

qrw::FakeIndex make_index(std::size_t entries) {
  qrw::FakeIndex index;
  qrw::Rng rng(42);
  for (std::size_t i = 0; i < entries; ++i) {
    qrw::IndexEntry entry;
    entry.source = qrw::EntrySource::kRetrieval;
    entry.docs.push_back({"v" + std::to_string(rng.below(1000000)), 1.0});
    index.insert("query " + std::to_string(i) + " terms", std::move(entry));
  }
  return index;
}

void BM_FakeIndexLookup(benchmark::State& state) {
  const auto entries = static_cast<std::size_t>(state.range(0));
  const qrw::FakeIndex index = make_index(entries);
  qrw::Rng rng(7);
  std::vector<std::string> probes;
  for (int i = 0; i < 4096; ++i) {
    probes.push_back("Query " + std::to_string(rng.below(entries)) + " Terms");
  }
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(index.lookup(probes[i++ & 4095]));
  }
}
BENCHMARK(BM_FakeIndexLookup)->Arg(10000)->Arg(1000000);

void BM_PolicyDistribution(benchmark::State& state) {
  qrw::SimConfig sim;
  sim.users = 20;
  const qrw::LogCorpus corpus = qrw::synthesize_logs(sim, 5);
  const qrw::RewardOracle oracle = qrw::RewardOracle::build(corpus);
  const auto& imp = corpus.sessions.front().impressions.back();
  const qrw::UserContext ctx = qrw::build_context(corpus, imp.user_id, imp.ts);
  qrw::PolicyParams params;
  params.theta = {0.1, -0.2, -0.5, 1.0, 0.3, 1.5, 0.8, -0.1};
  for (auto _ : state) {
    benchmark::DoNotOptimize(qrw::policy_distribution(params, imp.query, ctx, oracle));
  }
}
BENCHMARK(BM_PolicyDistribution);

void BM_TraditionalRecall(benchmark::State& state) {
  qrw::SimConfig sim;
  sim.users = 20;
  sim.docs_per_topic = 200;
  const qrw::LogCorpus corpus = qrw::synthesize_logs(sim, 5);
  const qrw::DocStore store(corpus.docs);
  for (auto _ : state) {
    benchmark::DoNotOptimize(store.traditional_recall("airfryer cooking guide"));
  }
}
BENCHMARK(BM_TraditionalRecall);

}  // namespace

BENCHMARK_MAIN();
