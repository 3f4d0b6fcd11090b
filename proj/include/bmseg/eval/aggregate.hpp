#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "bmseg/eval/metrics.hpp"

namespace bmseg {

struct AggregateStat {
  double mean = 0.0;
  double stddev = 0.0;  // sample std across runs; 0 by convention for n=1
  int n_runs = 0;
};

// Keyed "REGION/metric", e.g. "WT/lesionwise_dsc".
using AggregateReport = std::map<std::string, AggregateStat>;

inline AggregateStat aggregate_values(const std::vector<double>& run_means) {
  require(!run_means.empty(), "aggregate: no runs");
  AggregateStat st;
  st.n_runs = static_cast<int>(run_means.size());
  for (double v : run_means) st.mean += v;
  st.mean /= st.n_runs;
  if (st.n_runs > 1) {
    double ss = 0.0;
    for (double v : run_means) ss += (v - st.mean) * (v - st.mean);
    st.stddev = std::sqrt(ss / (st.n_runs - 1));
  }
  return st;
}

// Mean over the cases of one run; the per-run value entering aggregation.
inline std::map<std::string, double> run_mean_metrics(const std::vector<MetricsReport>& cases) {
  require(!cases.empty(), "run_mean_metrics: no cases");
  std::map<std::string, double> sums;
  for (const auto& rep : cases) {
    for (const auto& [region, rm] : rep.regions) {
      sums[region + "/legacy_dsc"] += rm.legacy_dsc;
      sums[region + "/legacy_hd95"] += rm.legacy_hd95;
      sums[region + "/lesionwise_dsc"] += rm.lesionwise_dsc;
      sums[region + "/lesionwise_hd95"] += rm.lesionwise_hd95;
    }
  }
  for (auto& [k, v] : sums) v /= static_cast<double>(cases.size());
  return sums;
}

// Aggregates per-run means (one map per seed) into mean/sample-std per metric.
inline AggregateReport aggregate(const std::vector<std::map<std::string, double>>& runs) {
  require(!runs.empty(), "aggregate: no runs");
  AggregateReport rep;
  for (const auto& [key, _] : runs.front()) {
    std::vector<double> vals;
    vals.reserve(runs.size());
    for (const auto& run : runs) {
      auto it = run.find(key);
      require(it != run.end(), "aggregate: run missing metric ", key);
      vals.push_back(it->second);
    }
    rep[key] = aggregate_values(vals);
  }
  return rep;
}

}  // namespace bmseg
