#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace graphrank {

using Json = nlohmann::json;

/// Reads a whole file; throws IoError if unreadable.
std::string read_file(const std::filesystem::path& path);

/// Atomic write: temp file in the same directory, then rename over the target.
void write_file(const std::filesystem::path& path, std::string_view content);

/// Parses one JSON document; throws ParseError with context on failure.
Json parse_json(std::string_view content, const std::string& what);

/// Calls `fn(line_number, line)` for each non-empty line of a JSONL file.
void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::size_t, std::string_view)>& fn);

/// Canonical single-line dump used for all persisted artifacts: object keys
/// sorted (nlohmann's default map ordering), no trailing whitespace.
std::string dump_line(const Json& j);

}  // namespace graphrank
