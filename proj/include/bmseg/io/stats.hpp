#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "bmseg/eval/components.hpp"
#include "bmseg/io/dataset.hpp"
#include "bmseg/report/svg.hpp"

namespace bmseg {

struct DatasetStats {
  // split -> (lesion count -> number of patients)
  std::map<std::string, std::map<int, int>> histograms;
  std::vector<std::string> failures;  // "case-id: error"
};

// Lesions counted as WT connected components after min-size filtering, i.e.
// with the same semantics the evaluation metrics use.
inline int count_lesions(const LabelVolume& labels, int connectivity = 26, int min_size = 2) {
  const RegionMasks r = compose_regions(labels);
  return static_cast<int>(filter_small(connected_components(r.wt, connectivity), min_size).count());
}

inline DatasetStats dataset_stats(const DatasetIndex& index, int connectivity = 26,
                                  int min_size = 2) {
  DatasetStats stats;
  for (const auto& [split, ids] : index.splits) {
    auto& hist = stats.histograms[split];
    for (const auto& id : ids) {
      const CaseEntry& entry = index.find(id);
      try {
        NiftiVolume lab = read_nifti(entry.label_file);
        LabelVolume labels(lab.shape);
        for (int64_t i = 0; i < labels.numel(); ++i) {
          const int v = static_cast<int>(std::lround(lab.data[i]));
          require(v >= 0 && v <= LabelVolume::kMaxLabel, "invalid label ", lab.data[i]);
          labels.vol.data[i] = static_cast<uint8_t>(v);
        }
        hist[count_lesions(labels, connectivity, min_size)] += 1;
      } catch (const std::exception& e) {
        stats.failures.push_back(id + ": " + e.what());
      }
    }
  }
  return stats;
}

inline nlohmann::json stats_to_json(const DatasetStats& stats) {
  nlohmann::json j;
  for (const auto& [split, hist] : stats.histograms) {
    nlohmann::json h = nlohmann::json::object();
    for (const auto& [count, patients] : hist) h[std::to_string(count)] = patients;
    j["histograms"][split] = h;
  }
  j["failures"] = stats.failures;
  return j;
}

inline void write_stats_plot(const DatasetStats& stats, const std::string& path) {
  std::vector<std::string> names;
  std::vector<std::map<int, int>> hists;
  for (const char* split : {"train", "val", "test"}) {
    auto it = stats.histograms.find(split);
    if (it == stats.histograms.end()) continue;
    names.push_back(split);
    hists.push_back(it->second);
  }
  write_histogram_svg(path, "patients by metastasis count", names, hists);
}

}  // namespace bmseg
