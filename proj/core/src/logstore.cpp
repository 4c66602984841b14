#include "qrw/logstore.hpp"

#include <algorithm>
#include <map>

#include "qrw/jsonio.hpp"
#include "qrw/text.hpp"

namespace qrw {

double max_dwell(const ImpressionRecord& imp) {
  double m = 0.0;
  for (const auto& it : imp.interactions) m = std::max(m, it.dwell_s);
  return m;
}

const VideoDoc* LogCorpus::find_doc(const std::string& doc_id) const {
  if (doc_index_.size() != docs.size()) {
    doc_index_.clear();
    for (std::size_t i = 0; i < docs.size(); ++i) doc_index_[docs[i].doc_id] = i;
  }
  const auto it = doc_index_.find(doc_id);
  return it == doc_index_.end() ? nullptr : &docs[it->second];
}

void LogCorpus::validate() const {
  std::set<std::string> ids;
  for (const auto& d : docs) {
    if (d.title.empty()) throw IntegrityError("doc '" + d.doc_id + "' has an empty title");
    if (!ids.insert(d.doc_id).second) {
      throw IntegrityError("duplicate doc_id '" + d.doc_id + "' in catalog");
    }
  }
  for (const auto& s : sessions) {
    double prev_ts = -1.0;
    for (const auto& imp : s.impressions) {
      if (imp.user_id != s.user_id) {
        throw IntegrityError("session '" + s.session_id + "' mixes user ids");
      }
      if (imp.ts < prev_ts) {
        throw IntegrityError("session '" + s.session_id + "' is not time-ordered");
      }
      prev_ts = imp.ts;
      if (imp.results.empty()) {
        throw IntegrityError("impression by '" + imp.user_id + "' has no results");
      }
      std::set<std::string> shown(imp.results.begin(), imp.results.end());
      for (const auto& r : imp.results) {
        if (!ids.count(r)) throw IntegrityError("unknown doc_id '" + r + "' in results");
      }
      for (const auto& it : imp.interactions) {
        if (!shown.count(it.doc_id)) {
          throw IntegrityError("interaction with doc_id '" + it.doc_id +
                               "' not present in results");
        }
        if (it.dwell_s < 0.0) {
          throw IntegrityError("negative dwell on doc_id '" + it.doc_id + "'");
        }
      }
    }
  }
}

std::vector<SessionRecord> sessionize(std::vector<ImpressionRecord> records,
                                      double gap_timeout_s) {
  std::map<std::string, std::vector<ImpressionRecord>> by_user;
  for (auto& r : records) by_user[r.user_id].push_back(std::move(r));

  std::vector<SessionRecord> sessions;
  for (auto& [user, imps] : by_user) {
    std::stable_sort(imps.begin(), imps.end(),
                     [](const auto& a, const auto& b) { return a.ts < b.ts; });
    std::size_t session_no = 0;
    SessionRecord cur;
    const auto flush = [&] {
      if (!cur.impressions.empty()) {
        cur.user_id = user;
        cur.session_id = user + "-s" + std::to_string(session_no++);
        sessions.push_back(std::move(cur));
        cur = SessionRecord{};
      }
    };
    for (auto& imp : imps) {
      if (!cur.impressions.empty() && imp.ts - cur.impressions.back().ts >= gap_timeout_s) {
        flush();
      }
      cur.impressions.push_back(std::move(imp));
    }
    flush();
  }
  return sessions;
}

LogCorpus ingest_logs(const std::string& dir, double gap_timeout_s) {
  RawLogs raw = read_log_dir(dir);
  LogCorpus corpus;
  corpus.docs = std::move(raw.docs);
  corpus.ground_truth = std::move(raw.ground_truth);
  corpus.sessions = sessionize(std::move(raw.impressions), gap_timeout_s);
  corpus.validate();
  return corpus;
}

void write_logs(const LogCorpus& corpus, const std::string& dir) {
  write_log_dir(corpus, dir);
}

namespace {

UserContext context_from_prior(const std::vector<const ImpressionRecord*>& recent_first,
                               const DocLookup& find_doc, const ContextWindows& windows) {
  UserContext ctx;
  if (!recent_first.empty()) ctx.geo = recent_first.front()->region;
  for (const auto* imp : recent_first) {
    if (static_cast<int>(ctx.h_query.size()) < windows.h_query) {
      ctx.h_query.push_back(imp->query);
    }
    if (static_cast<int>(ctx.h_video.size()) < windows.h_video) {
      for (const auto& it : imp->interactions) {
        if (it.dwell_s <= 0.0) continue;
        if (static_cast<int>(ctx.h_video.size()) >= windows.h_video) break;
        const VideoDoc* doc = find_doc(it.doc_id);
        if (!doc) continue;
        VideoSummary vs;
        vs.title = doc->title;
        vs.tags.assign(doc->tags.begin(), doc->tags.end());
        ctx.h_video.push_back(std::move(vs));
      }
    }
    if (static_cast<int>(ctx.h_query.size()) >= windows.h_query &&
        static_cast<int>(ctx.h_video.size()) >= windows.h_video) {
      break;
    }
  }
  return ctx;
}

}  // namespace

UserContext build_context(const LogCorpus& corpus, const std::string& user_id,
                          double before_ts, const ContextWindows& windows) {
  std::vector<const ImpressionRecord*> prior;
  for (const auto& s : corpus.sessions) {
    if (s.user_id != user_id) continue;
    for (const auto& imp : s.impressions) {
      if (imp.ts < before_ts) prior.push_back(&imp);
    }
  }
  std::stable_sort(prior.begin(), prior.end(),
                   [](const auto* a, const auto* b) { return a->ts > b->ts; });
  return context_from_prior(
      prior, [&](const std::string& id) { return corpus.find_doc(id); }, windows);
}

UserContext build_context_from_history(const std::vector<ImpressionRecord>& history,
                                       const DocLookup& find_doc,
                                       const ContextWindows& windows) {
  std::vector<const ImpressionRecord*> recent_first;
  recent_first.reserve(history.size());
  for (auto it = history.rbegin(); it != history.rend(); ++it) recent_first.push_back(&*it);
  return context_from_prior(recent_first, find_doc, windows);
}

std::set<std::string> context_term_set(const UserContext& ctx) {
  std::set<std::string> terms;
  for (const auto& q : ctx.h_query) {
    auto t = tokenize_terms(q);
    terms.insert(t.begin(), t.end());
  }
  for (const auto& v : ctx.h_video) {
    auto t = tokenize_terms(v.title);
    terms.insert(t.begin(), t.end());
    for (const auto& tag : v.tags) {
      auto tt = tokenize_terms(tag);
      terms.insert(tt.begin(), tt.end());
    }
  }
  return terms;
}

}  // namespace qrw
