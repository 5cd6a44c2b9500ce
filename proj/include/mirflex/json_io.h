#pragma once

#include <string>

#include <json.hpp>

namespace mirflex {

using Json = nlohmann::json;

/// Compact JSON with keys in sorted order and every floating-point number
/// printed with exactly six decimals. Integers print as integers.
std::string to_canonical_json(const Json& value);

/// Parses JSON text, throwing Error(kParseError) with the parser message.
Json parse_json(const std::string& text);

/// Reads and parses a JSON file (NotFound / ParseError).
Json read_json_file(const std::string& path);

/// Writes text to a file (OutputUnwritable).
void write_text_file(const std::string& path, const std::string& text);

}  // namespace mirflex
