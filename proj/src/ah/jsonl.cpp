#include "ah/jsonl.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ah/errors.hpp"

namespace ah {

namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::io, "cannot open " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) {
    throw Error(ErrorCode::io, "read failed for " + path);
  }
  return buf.str();
}

void write_file_atomic(const std::string& path, std::string_view content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(ErrorCode::io, "cannot open " + tmp + " for writing");
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      std::remove(tmp.c_str());
      throw Error(ErrorCode::io, "write failed for " + tmp);
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::remove(tmp.c_str());
    throw Error(ErrorCode::io, "rename " + tmp + " -> " + path + ": " + ec.message());
  }
}

void for_each_jsonl(std::string_view text,
                    const std::function<void(std::size_t, const Json&)>& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_no;
    pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;

    std::string_view trimmed = line;
    while (!trimmed.empty() && (trimmed.back() == '\r' || trimmed.back() == ' ')) {
      trimmed.remove_suffix(1);
    }
    if (trimmed.empty()) {
      continue;
    }
    Json obj = Json::parse(trimmed, nullptr, false);
    if (obj.is_discarded()) {
      throw Error(ErrorCode::parse, "line " + std::to_string(line_no) + ": invalid JSON");
    }
    fn(line_no, obj);
  }
}

std::vector<Json> read_jsonl_file(const std::string& path) {
  std::vector<Json> rows;
  for_each_jsonl(read_file(path), [&](std::size_t, const Json& obj) { rows.push_back(obj); });
  return rows;
}

std::size_t write_jsonl_file(const std::string& path, const std::vector<Json>& rows) {
  std::string out;
  for (const Json& row : rows) {
    out += row.dump();
    out += '\n';
  }
  write_file_atomic(path, out);
  return rows.size();
}

}  // namespace ah
