#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace gazebench {

using json = nlohmann::json;
// ordered_json keeps insertion order on dump, which we rely on for
// byte-stable reports and canonical records.
using ojson = nlohmann::ordered_json;

// Reads a JSONL file, skipping blank lines. Throws std::runtime_error with
// the 1-based line number on malformed lines or unreadable files.
std::vector<json> read_jsonl(const std::filesystem::path& path);

// Writes one compact JSON document per line. Creates parent directories.
void write_jsonl(const std::filesystem::path& path, const std::vector<ojson>& rows);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace gazebench
