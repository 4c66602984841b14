#include "qrw/reward.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "qrw/jsonio.hpp"
#include "qrw/text.hpp"

namespace qrw {

RewardOracle RewardOracle::build(const LogCorpus& corpus, int window_days) {
  if (window_days <= 0) throw ConfigError("window_days must be positive");
  RewardOracle oracle;
  oracle.window_days_ = window_days;

  double max_ts = 0.0;
  bool any = false;
  for (const auto& s : corpus.sessions) {
    for (const auto& imp : s.impressions) {
      max_ts = any ? std::max(max_ts, imp.ts) : imp.ts;
      any = true;
    }
  }
  if (!any) return oracle;  // empty oracle: everything out-of-vocabulary

  const double cutoff = max_ts - static_cast<double>(window_days) * 86400.0;
  std::unordered_map<std::string, std::pair<std::uint64_t, std::uint64_t>> counts;
  for (const auto& s : corpus.sessions) {
    for (const auto& imp : s.impressions) {
      if (imp.ts < cutoff) continue;
      const bool clicked = std::any_of(imp.interactions.begin(), imp.interactions.end(),
                                       [](const Interaction& it) { return it.clicked; });
      auto& [freq, clicks] = counts[normalize_query(imp.query)];
      ++freq;
      if (clicked) ++clicks;
    }
  }
  for (auto& [q, fc] : counts) {
    oracle.stats_[q] = QueryStats{fc.first, static_cast<double>(fc.second) /
                                                static_cast<double>(fc.first)};
  }
  return oracle;
}

bool RewardOracle::in_vocabulary(const std::string& query) const {
  return stats_.count(normalize_query(query)) > 0;
}

const QueryStats* RewardOracle::stats(const std::string& query) const {
  const auto it = stats_.find(normalize_query(query));
  return it == stats_.end() ? nullptr : &it->second;
}

double RewardOracle::reward(const std::string& query, const RewardParams& p) const {
  p.validate();
  const QueryStats* s = stats(query);
  if (!s) return p.r_penalty;
  return p.lambda1 * std::log(static_cast<double>(s->freq)) + p.lambda2 * s->ctr;
}

void RewardOracle::save_tsv(const std::string& path) const {
  std::vector<std::pair<std::string, QueryStats>> rows(stats_.begin(), stats_.end());
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::ostringstream out;
  out << "# window_days\t" << window_days_ << '\n';
  out.precision(17);
  for (const auto& [q, s] : rows) {
    out << q << '\t' << s.freq << '\t' << s.ctr << '\n';
  }
  write_text_file(path, out.str());
}

RewardOracle RewardOracle::load_tsv(const std::string& path) {
  RewardOracle oracle;
  const std::string content = read_text_file(path);
  std::istringstream in(content);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line.rfind("# window_days\t", 0) == 0) {
      oracle.window_days_ = std::stoi(line.substr(line.find('\t') + 1));
      continue;
    }
    const auto tab1 = line.find('\t');
    const auto tab2 = line.find('\t', tab1 + 1);
    if (tab1 == std::string::npos || tab2 == std::string::npos) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected 3 tab-separated fields");
    }
    QueryStats s;
    try {
      s.freq = std::stoull(line.substr(tab1 + 1, tab2 - tab1 - 1));
      s.ctr = std::stod(line.substr(tab2 + 1));
    } catch (const std::exception&) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": bad numeric field");
    }
    if (s.freq == 0 || s.ctr < 0.0 || s.ctr > 1.0) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": stats out of range");
    }
    oracle.stats_[line.substr(0, tab1)] = s;
  }
  return oracle;
}

}  // namespace qrw
