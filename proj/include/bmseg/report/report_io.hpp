#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "bmseg/eval/aggregate.hpp"
#include "bmseg/report/tables.hpp"

namespace bmseg {

inline nlohmann::json to_json(const RegionMetrics& rm) {
  return {{"legacy_dsc", rm.legacy_dsc},
          {"legacy_hd95", rm.legacy_hd95},
          {"lesionwise_dsc", rm.lesionwise_dsc},
          {"lesionwise_hd95", rm.lesionwise_hd95}};
}

inline nlohmann::json to_json(const MetricsReport& rep) {
  nlohmann::json j;
  j["case_id"] = rep.case_id;
  if (!rep.config_fingerprint.empty()) j["config_fingerprint"] = rep.config_fingerprint;
  for (const auto& [region, rm] : rep.regions) j["regions"][region] = to_json(rm);
  return j;
}

inline MetricsReport metrics_report_from_json(const nlohmann::json& j) {
  MetricsReport rep;
  rep.case_id = j.value("case_id", "");
  rep.config_fingerprint = j.value("config_fingerprint", "");
  for (const auto& [region, rm] : j.at("regions").items()) {
    RegionMetrics m;
    m.legacy_dsc = rm.value("legacy_dsc", 0.0);
    m.legacy_hd95 = rm.value("legacy_hd95", 0.0);
    m.lesionwise_dsc = rm.value("lesionwise_dsc", 0.0);
    m.lesionwise_hd95 = rm.value("lesionwise_hd95", 0.0);
    rep.regions[region] = m;
  }
  return rep;
}

inline nlohmann::json to_json(const AggregateReport& agg) {
  nlohmann::json j;
  for (const auto& [key, st] : agg)
    j[key] = {{"mean", st.mean}, {"std", st.stddev}, {"n_runs", st.n_runs}};
  return j;
}

// Comparison-table layout: legacy DSC/HD95 and lesion-wise DSC/HD95 over
// WT/TC/ET plus their average. DSC in percent, HD95 in mm.
inline TableDoc comparison_table(const std::string& row_name, const AggregateReport& agg) {
  TableDoc t;
  t.title = "Segmentation results";
  t.headers = {"Model",    "DSC WT",    "DSC TC",    "DSC ET",    "DSC AVG",
               "HD95 WT",  "HD95 TC",   "HD95 ET",   "HD95 AVG",  "LW DSC WT",
               "LW DSC TC", "LW DSC ET", "LW DSC AVG", "LW HD95 WT", "LW HD95 TC",
               "LW HD95 ET", "LW HD95 AVG"};
  std::vector<std::string> row = {row_name};
  const auto push_triplet = [&](const char* metric, double scale) {
    double m = 0, sd = 0;
    bool all = true;
    for (const char* r : {"WT", "TC", "ET"}) {
      auto it = agg.find(std::string(r) + "/" + metric);
      if (it == agg.end()) {
        all = false;
        row.emplace_back();
        continue;
      }
      row.push_back(format_cell(it->second.mean * scale, it->second.stddev * scale));
      m += it->second.mean * scale / 3.0;
      sd += it->second.stddev * scale / 3.0;
    }
    row.push_back(all ? format_cell(m, sd) : std::string());
  };
  push_triplet("legacy_dsc", 100.0);
  push_triplet("legacy_hd95", 1.0);
  push_triplet("lesionwise_dsc", 100.0);
  push_triplet("lesionwise_hd95", 1.0);
  t.rows.push_back(std::move(row));
  return t;
}

}  // namespace bmseg
