#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

namespace declension {

using Json = nlohmann::json;

/// Deterministic JSON text: object keys sorted, two-space indent, floating
/// point values written with 17 significant digits, trailing newline.
std::string dump_canonical(const Json& value);

Json parse_json(std::string_view text);

std::string read_file(const std::filesystem::path& path);
/// Writes `bytes` verbatim, replacing any existing file.
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace declension
