#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "bmseg/core/error.hpp"
#include "bmseg/eval/aggregate.hpp"

namespace bmseg {

// "mean (std)" with two decimals, the table style the result reports use.
// DSC values are scaled to percent; distances stay in mm.
inline std::string format_cell(double mean, double stddev) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f (%.2f)", mean, stddev);
  return buf;
}

inline constexpr const char* kEmptyCell = "—";  // em dash for absent metrics

struct TableDoc {
  std::string title;
  std::vector<std::string> headers;
  std::vector<std::vector<std::string>> rows;
};

inline std::string render_markdown(const TableDoc& t) {
  std::string out;
  if (!t.title.empty()) out += "### " + t.title + "\n\n";
  out += "|";
  for (const auto& h : t.headers) out += " " + h + " |";
  out += "\n|";
  for (size_t i = 0; i < t.headers.size(); ++i) out += " --- |";
  out += "\n";
  for (const auto& row : t.rows) {
    out += "|";
    for (const auto& c : row) out += " " + (c.empty() ? std::string(kEmptyCell) : c) + " |";
    out += "\n";
  }
  return out;
}

inline std::string render_csv(const TableDoc& t) {
  std::string out;
  const auto esc = [](const std::string& s) {
    if (s.find(',') == std::string::npos && s.find('"') == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  };
  for (size_t i = 0; i < t.headers.size(); ++i) out += (i ? "," : "") + esc(t.headers[i]);
  out += "\n";
  for (const auto& row : t.rows) {
    for (size_t i = 0; i < row.size(); ++i)
      out += (i ? "," : "") + esc(row[i].empty() ? kEmptyCell : row[i]);
    out += "\n";
  }
  return out;
}

inline std::string render_text(const TableDoc& t) {
  std::vector<size_t> widths(t.headers.size(), 0);
  const auto measure = [&](const std::vector<std::string>& row) {
    for (size_t i = 0; i < row.size() && i < widths.size(); ++i)
      widths[i] = std::max(widths[i], row[i].empty() ? 1 : row[i].size());
  };
  measure(t.headers);
  for (const auto& r : t.rows) measure(r);

  std::string out;
  if (!t.title.empty()) out += t.title + "\n";
  const auto emit = [&](const std::vector<std::string>& row) {
    for (size_t i = 0; i < widths.size(); ++i) {
      std::string c = i < row.size() && !row[i].empty() ? row[i] : std::string(kEmptyCell);
      out += c;
      out.append(widths[i] >= c.size() ? widths[i] - c.size() + 2 : 2, ' ');
    }
    out += "\n";
  };
  emit(t.headers);
  std::string rule;
  for (size_t w : widths) rule.append(w + 2, '-');
  out += rule + "\n";
  for (const auto& r : t.rows) emit(r);
  return out;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  require(out.good(), "cannot write ", path);
  out << content;
}

}  // namespace bmseg
