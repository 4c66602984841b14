#pragma once

#include <string>
#include <vector>

#include "qrw/logstore.hpp"
#include "qrw/rng.hpp"

namespace qrwtest {

inline qrw::VideoDoc doc(const std::string& id, const std::string& title,
                         std::set<std::string> tags = {}, const std::string& topic = "") {
  qrw::VideoDoc d;
  d.doc_id = id;
  d.title = title;
  d.tags = std::move(tags);
  d.topic = topic;
  return d;
}

inline qrw::ImpressionRecord imp(const std::string& user, double ts, const std::string& query,
                                 std::vector<std::string> results,
                                 std::vector<qrw::Interaction> interactions = {},
                                 const std::string& region = "region-0") {
  qrw::ImpressionRecord r;
  r.user_id = user;
  r.ts = ts;
  r.query = query;
  r.region = region;
  r.results = std::move(results);
  r.interactions = std::move(interactions);
  return r;
}

// Corpus from loose impressions: sessionizes with the default gap.
inline qrw::LogCorpus corpus_of(std::vector<qrw::ImpressionRecord> records,
                                std::vector<qrw::VideoDoc> docs) {
  qrw::LogCorpus c;
  c.docs = std::move(docs);
  c.sessions = qrw::sessionize(std::move(records));
  c.validate();
  return c;
}

// Random corpus for property tests: a handful of users browsing a small doc
// catalog with arbitrary dwells. Not guaranteed to contain any rewrite
// structure; that is the point.
inline qrw::LogCorpus random_corpus(std::uint64_t seed, int users = 4, int imps_per_user = 8) {
  qrw::Rng rng(seed);
  std::vector<qrw::VideoDoc> docs;
  const std::vector<std::string> words = {"alpha", "beta",  "gamma", "delta",
                                          "omega", "sigma", "kappa", "theta"};
  for (int i = 0; i < 12; ++i) {
    docs.push_back(doc("d" + std::to_string(i),
                       words[i % words.size()] + " " + words[(i + 3) % words.size()] + " clip",
                       {words[(i + 5) % words.size()]}));
  }
  std::vector<qrw::ImpressionRecord> records;
  for (int u = 0; u < users; ++u) {
    double ts = 1000.0 + 50000.0 * u;
    for (int k = 0; k < imps_per_user; ++k) {
      const std::string q =
          words[rng.below(words.size())] + (rng.bernoulli(0.5) ? " " + words[rng.below(4)] : "");
      std::vector<std::string> results;
      const std::size_t n = 1 + rng.below(3);
      for (std::size_t r = 0; r < n; ++r) {
        results.push_back(docs[rng.below(docs.size())].doc_id);
      }
      std::sort(results.begin(), results.end());
      results.erase(std::unique(results.begin(), results.end()), results.end());
      std::vector<qrw::Interaction> inter;
      if (rng.bernoulli(0.8)) {
        inter.push_back({results[rng.below(results.size())], rng.uniform(0.0, 45.0),
                         rng.bernoulli(0.4)});
      }
      records.push_back(imp("user" + std::to_string(u), ts, q, results, inter));
      ts += rng.bernoulli(0.2) ? 4000.0 : rng.uniform(10.0, 600.0);
    }
  }
  return corpus_of(std::move(records), std::move(docs));
}

}  // namespace qrwtest
