#pragma once

#include "epifield/errors.hpp"

#include <charconv>
#include <fstream>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace epifield::detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = line.find(sep, pos);
    out.push_back(trim(line.substr(pos, next == std::string_view::npos ? next : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

inline double to_double(std::string_view s, std::size_t line) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
    throw ParseError("not a number: '" + std::string(s) + "'", line);
  return v;
}

/// Line-by-line CSV reader that checks the header and hands back split rows.
class CsvReader {
public:
  CsvReader(const std::filesystem::path& path, const std::vector<std::string_view>& header)
      : in_(path), path_(path) {
    if (!in_) throw NotFoundError("cannot open " + path.string());
    std::string first;
    if (!std::getline(in_, first)) throw ParseError(path.string() + ": empty file", 1);
    if (first.size() >= 3 && first.compare(0, 3, "\xEF\xBB\xBF") == 0) first.erase(0, 3);
    const auto cols = split(first);
    if (cols.size() < header.size())
      throw ParseError(path.string() + ": unexpected header '" + first + "'", 1);
    for (std::size_t i = 0; i < header.size(); ++i)
      if (cols[i] != header[i])
        throw ParseError(path.string() + ": expected column '" + std::string(header[i]) + "'", 1);
    width_ = header.size();
    line_no_ = 1;
  }

  /// Next non-blank row; false at end of file.
  bool next(std::vector<std::string_view>& row) {
    while (std::getline(in_, buf_)) {
      ++line_no_;
      if (trim(buf_).empty()) continue;
      row = split(buf_);
      if (row.size() != width_)
        throw ParseError(path_.string() + ": expected " + std::to_string(width_) + " fields",
                         line_no_);
      return true;
    }
    return false;
  }

  std::size_t line() const noexcept { return line_no_; }

private:
  std::ifstream in_;
  std::filesystem::path path_;
  std::string buf_;
  std::size_t width_ = 0;
  std::size_t line_no_ = 0;
};

} // namespace epifield::detail
