#include "qrw/jsonio.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "json_convert.hpp"

namespace qrw {
namespace detail {

ordered_json impression_to_json(const ImpressionRecord& imp) {
  ordered_json j;
  j["user_id"] = imp.user_id;
  j["ts"] = imp.ts;
  j["query"] = imp.query;
  j["region"] = imp.region;
  j["results"] = imp.results;
  ordered_json inter = ordered_json::array();
  for (const auto& it : imp.interactions) {
    inter.push_back({{"doc_id", it.doc_id}, {"dwell_s", it.dwell_s}, {"clicked", it.clicked}});
  }
  j["interactions"] = std::move(inter);
  return j;
}

ImpressionRecord impression_from_json(const ordered_json& j) {
  ImpressionRecord imp;
  imp.user_id = j.at("user_id").get<std::string>();
  imp.ts = j.at("ts").get<double>();
  imp.query = j.at("query").get<std::string>();
  imp.region = j.value("region", std::string{});
  imp.results = j.at("results").get<std::vector<std::string>>();
  for (const auto& e : j.at("interactions")) {
    Interaction it;
    it.doc_id = e.at("doc_id").get<std::string>();
    it.dwell_s = e.at("dwell_s").get<double>();
    it.clicked = e.at("clicked").get<bool>();
    imp.interactions.push_back(std::move(it));
  }
  return imp;
}

ordered_json doc_to_json(const VideoDoc& doc) {
  ordered_json j;
  j["doc_id"] = doc.doc_id;
  j["title"] = doc.title;
  j["tags"] = doc.tags;
  if (!doc.topic.empty()) j["topic"] = doc.topic;
  return j;
}

VideoDoc doc_from_json(const ordered_json& j) {
  VideoDoc d;
  d.doc_id = j.at("doc_id").get<std::string>();
  d.title = j.at("title").get<std::string>();
  for (const auto& t : j.at("tags")) d.tags.insert(t.get<std::string>());
  d.topic = j.value("topic", std::string{});
  return d;
}

ordered_json planted_to_json(const PlantedEvent& ev) {
  ordered_json j;
  j["user_id"] = ev.user_id;
  j["session_id"] = ev.session_id;
  j["q_orig"] = ev.q_orig;
  j["q_next"] = ev.q_next;
  j["q_orig_ts"] = ev.q_orig_ts;
  j["q_next_ts"] = ev.q_next_ts;
  j["gain_term"] = ev.gain_term;
  return j;
}

PlantedEvent planted_from_json(const ordered_json& j) {
  PlantedEvent ev;
  ev.user_id = j.at("user_id").get<std::string>();
  ev.session_id = j.at("session_id").get<std::string>();
  ev.q_orig = j.at("q_orig").get<std::string>();
  ev.q_next = j.at("q_next").get<std::string>();
  ev.q_orig_ts = j.at("q_orig_ts").get<double>();
  ev.q_next_ts = j.at("q_next_ts").get<double>();
  ev.gain_term = j.value("gain_term", std::string{});
  return ev;
}

ordered_json context_to_json(const UserContext& ctx) {
  ordered_json j;
  j["h_query"] = ctx.h_query;
  ordered_json vids = ordered_json::array();
  for (const auto& v : ctx.h_video) {
    vids.push_back({{"title", v.title}, {"tags", v.tags}});
  }
  j["h_video"] = std::move(vids);
  j["geo"] = ctx.geo;
  return j;
}

UserContext context_from_json(const ordered_json& j) {
  UserContext ctx;
  ctx.h_query = j.value("h_query", std::vector<std::string>{});
  if (j.contains("h_video")) {
    for (const auto& v : j.at("h_video")) {
      VideoSummary vs;
      vs.title = v.at("title").get<std::string>();
      vs.tags = v.value("tags", std::vector<std::string>{});
      ctx.h_video.push_back(std::move(vs));
    }
  }
  ctx.geo = j.value("geo", std::string{});
  return ctx;
}

ordered_json parse_line(const std::string& line, const std::string& file, std::size_t lineno) {
  try {
    return ordered_json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(file + ":" + std::to_string(lineno) + ": " + e.what());
  }
}

void for_each_line(const std::string& path,
                   const std::function<void(const std::string&, std::size_t)>& fn) {
  std::ifstream in(path);
  if (!in.is_open()) throw IoError("cannot open '" + path + "'");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    fn(line, lineno);
  }
}

}  // namespace detail

namespace {

namespace fs = std::filesystem;
using detail::ordered_json;

}  // namespace

RawLogs read_log_dir(const std::string& dir) {
  RawLogs raw;
  const std::string imp_path = (fs::path(dir) / kImpressionsFile).string();
  const std::string docs_path = (fs::path(dir) / kDocsFile).string();
  const std::string gt_path = (fs::path(dir) / kGroundTruthFile).string();

  detail::for_each_line(imp_path, [&](const std::string& line, std::size_t n) {
    try {
      raw.impressions.push_back(
          detail::impression_from_json(detail::parse_line(line, imp_path, n)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(imp_path + ":" + std::to_string(n) + ": " + e.what());
    }
  });
  detail::for_each_line(docs_path, [&](const std::string& line, std::size_t n) {
    try {
      raw.docs.push_back(detail::doc_from_json(detail::parse_line(line, docs_path, n)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(docs_path + ":" + std::to_string(n) + ": " + e.what());
    }
  });
  if (fs::exists(gt_path)) {
    detail::for_each_line(gt_path, [&](const std::string& line, std::size_t n) {
      try {
        raw.ground_truth.push_back(
            detail::planted_from_json(detail::parse_line(line, gt_path, n)));
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(gt_path + ":" + std::to_string(n) + ": " + e.what());
      }
    });
  }
  return raw;
}

std::vector<VideoDoc> read_docs_file(const std::string& path) {
  std::vector<VideoDoc> docs;
  detail::for_each_line(path, [&](const std::string& line, std::size_t n) {
    try {
      docs.push_back(detail::doc_from_json(detail::parse_line(line, path, n)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(n) + ": " + e.what());
    }
  });
  return docs;
}

std::vector<ImpressionRecord> flatten_impressions(const std::vector<SessionRecord>& sessions) {
  std::vector<ImpressionRecord> out;
  for (const auto& s : sessions) {
    out.insert(out.end(), s.impressions.begin(), s.impressions.end());
  }
  return out;
}

void write_log_dir(const LogCorpus& corpus, const std::string& dir) {
  fs::create_directories(dir);

  std::ostringstream imps;
  for (const auto& s : corpus.sessions) {
    for (const auto& imp : s.impressions) {
      imps << detail::impression_to_json(imp).dump() << '\n';
    }
  }
  write_text_file((fs::path(dir) / kImpressionsFile).string(), imps.str());

  std::vector<const VideoDoc*> docs;
  docs.reserve(corpus.docs.size());
  for (const auto& d : corpus.docs) docs.push_back(&d);
  std::sort(docs.begin(), docs.end(),
            [](const auto* a, const auto* b) { return a->doc_id < b->doc_id; });
  std::ostringstream ds;
  for (const auto* d : docs) ds << detail::doc_to_json(*d).dump() << '\n';
  write_text_file((fs::path(dir) / kDocsFile).string(), ds.str());

  if (!corpus.ground_truth.empty()) {
    std::ostringstream gt;
    for (const auto& ev : corpus.ground_truth) {
      gt << detail::planted_to_json(ev).dump() << '\n';
    }
    write_text_file((fs::path(dir) / kGroundTruthFile).string(), gt.str());
  }
}

UserContext context_from_json_string(const std::string& json_text) {
  try {
    return detail::context_from_json(ordered_json::parse(json_text));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("context json: ") + e.what());
  }
}

std::string context_to_json_string(const UserContext& ctx) {
  return detail::context_to_json(ctx).dump();
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.is_open()) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out.is_open()) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  if (!out.good()) throw IoError("failed writing '" + path + "'");
}

}  // namespace qrw
