#pragma once

// Internal nlohmann converters shared by the JSONL readers/writers. Not
// installed; public headers stay free of vendor types.

#include <functional>

#include <json.hpp>

#include "qrw/errors.hpp"
#include "qrw/logstore.hpp"

namespace qrw::detail {

using ordered_json = nlohmann::ordered_json;

ordered_json impression_to_json(const ImpressionRecord& imp);
ImpressionRecord impression_from_json(const ordered_json& j);

ordered_json doc_to_json(const VideoDoc& doc);
VideoDoc doc_from_json(const ordered_json& j);

ordered_json planted_to_json(const PlantedEvent& ev);
PlantedEvent planted_from_json(const ordered_json& j);

ordered_json context_to_json(const UserContext& ctx);
UserContext context_from_json(const ordered_json& j);

// Parses one JSONL line, rethrowing nlohmann errors as ParseError tagged
// with file:line.
ordered_json parse_line(const std::string& line, const std::string& file, std::size_t lineno);

// Applies `fn` to every non-empty line of `path`.
void for_each_line(const std::string& path,
                   const std::function<void(const std::string&, std::size_t)>& fn);

}  // namespace qrw::detail
