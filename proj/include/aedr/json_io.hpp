#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace aedr {

/// Compact (indent < 0) or indented JSON with every floating-point number
/// written using 17 significant digits, so values round-trip bit-exactly.
std::string dump_json(const nlohmann::json& value, int indent = -1);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

/// Shortest "%.17g" rendering of a double, as used by dump_json and CSV writers.
std::string format_real(double value);

}  // namespace aedr
