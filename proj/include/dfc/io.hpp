#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace dfc::io {

using nlohmann::json;

// Writes through a temporary sibling file and renames it into place, so a
// reader never observes a partially written artifact.
void write_atomic(const std::filesystem::path& path,
                  const std::function<void(std::ostream&)>& writer);
void write_text_atomic(const std::filesystem::path& path, std::string_view text);
void write_bytes_atomic(const std::filesystem::path& path, std::string_view bytes);

std::string read_text(const std::filesystem::path& path);

std::vector<json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<json>& records);

json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& value);

std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines);

}  // namespace dfc::io
