#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "bmseg/core/error.hpp"

namespace bmseg {

// Grouped bar chart: one group per integer bucket, one bar per series.
inline void write_histogram_svg(const std::string& path, const std::string& title,
                                const std::vector<std::string>& series_names,
                                const std::vector<std::map<int, int>>& histograms) {
  require(series_names.size() == histograms.size(), "svg: series/histogram count mismatch");

  int max_bucket = 0, max_count = 1;
  for (const auto& h : histograms)
    for (const auto& [bucket, count] : h) {
      max_bucket = std::max(max_bucket, bucket);
      max_count = std::max(max_count, count);
    }

  const int n_series = static_cast<int>(series_names.size());
  const int n_buckets = max_bucket + 1;
  const double bar_w = 14.0, group_gap = 12.0;
  const double plot_h = 220.0, margin = 45.0;
  const double group_w = n_series * bar_w + group_gap;
  const double width = margin * 2 + n_buckets * group_w;
  const double height = plot_h + margin * 2;
  const char* colors[] = {"#4878b0", "#d65f5f", "#6aa66a", "#b07cc6"};

  std::ofstream out(path);
  require(out.good(), "cannot write ", path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
      << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
  out << "<text x='" << width / 2 << "' y='20' text-anchor='middle' font-size='14' "
      << "font-family='sans-serif'>" << title << "</text>\n";

  for (int b = 0; b < n_buckets; ++b) {
    const double gx = margin + b * group_w;
    for (int s = 0; s < n_series; ++s) {
      int count = 0;
      auto it = histograms[s].find(b);
      if (it != histograms[s].end()) count = it->second;
      const double h = plot_h * count / max_count;
      out << "<rect x='" << gx + s * bar_w << "' y='" << margin + plot_h - h << "' width='"
          << bar_w - 2 << "' height='" << h << "' fill='" << colors[s % 4] << "'/>\n";
      if (count > 0)
        out << "<text x='" << gx + s * bar_w + bar_w / 2 - 1 << "' y='"
            << margin + plot_h - h - 3 << "' text-anchor='middle' font-size='9' "
            << "font-family='sans-serif'>" << count << "</text>\n";
    }
    out << "<text x='" << gx + n_series * bar_w / 2 << "' y='" << margin + plot_h + 14
        << "' text-anchor='middle' font-size='11' font-family='sans-serif'>" << b << "</text>\n";
  }
  out << "<text x='" << width / 2 << "' y='" << height - 8
      << "' text-anchor='middle' font-size='12' font-family='sans-serif'>"
      << "metastases per patient</text>\n";
  for (int s = 0; s < n_series; ++s) {
    const double lx = margin + s * 90.0;
    out << "<rect x='" << lx << "' y='28' width='10' height='10' fill='" << colors[s % 4]
        << "'/>\n<text x='" << lx + 14 << "' y='37' font-size='11' font-family='sans-serif'>"
        << series_names[s] << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace bmseg
