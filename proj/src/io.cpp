#include "dfc/io.hpp"

#include <fstream>
#include <sstream>

#include "dfc/error.hpp"

namespace dfc::io {

namespace fs = std::filesystem;

void write_atomic(const fs::path& path, const std::function<void(std::ostream&)>& writer) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::io, "cannot open for writing: " + tmp.string());
    writer(out);
    out.flush();
    if (!out) fail(ErrorKind::io, "write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::io, "rename failed: " + path.string() + ": " + ec.message());
}

void write_text_atomic(const fs::path& path, std::string_view text) {
  write_atomic(path, [&](std::ostream& out) { out.write(text.data(), static_cast<std::streamsize>(text.size())); });
}

void write_bytes_atomic(const fs::path& path, std::string_view bytes) { write_text_atomic(path, bytes); }

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "missing artifact: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
  write_atomic(path, [&](std::ostream& out) {
    for (const auto& line : lines) out << line << '\n';
  });
}

std::vector<json> read_jsonl(const fs::path& path) {
  std::vector<json> records;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(json::parse(line));
    } catch (const json::exception& e) {
      fail(ErrorKind::data, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

void write_jsonl(const fs::path& path, const std::vector<json>& records) {
  write_atomic(path, [&](std::ostream& out) {
    for (const auto& r : records) out << r.dump() << '\n';
  });
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    fail(ErrorKind::data, path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& value) {
  write_text_atomic(path, value.dump(2) + "\n");
}

}  // namespace dfc::io
