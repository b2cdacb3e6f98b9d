#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace locus::io {

/// "%.6f"; non-finite values print as nan / inf / -inf.
std::string format_fixed(double v);

/// Pretty-prints JSON with every floating-point number in fixed 6-decimal
/// notation. Integers and everything else print as usual.
std::string dump_fixed(const nlohmann::json& j, int indent = 2);

nlohmann::json read_json_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace locus::io
