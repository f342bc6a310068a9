#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace ah {

/// ordered_json keeps insertion order, which is what makes our emitted files
/// byte-stable across runs.
using Json = nlohmann::ordered_json;

std::string read_file(const std::string& path);

/// Writes via a sibling temp file and renames into place, so a failed write
/// never leaves a truncated line behind.
void write_file_atomic(const std::string& path, std::string_view content);

/// One JSON object per non-empty line. `fn` receives 1-based line numbers;
/// malformed lines raise a parse error naming the line.
void for_each_jsonl(std::string_view text,
                    const std::function<void(std::size_t line_no, const Json&)>& fn);

std::vector<Json> read_jsonl_file(const std::string& path);

/// Serializes one object per line (compact, insertion-ordered keys) and writes
/// the result atomically. Returns the number of lines written.
std::size_t write_jsonl_file(const std::string& path, const std::vector<Json>& rows);

}  // namespace ah
