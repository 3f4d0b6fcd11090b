#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bmseg/eval/components.hpp"
#include "bmseg/eval/distance.hpp"

namespace bmseg {

struct MatchConfig {
  int connectivity = 26;      // component adjacency
  int gt_dilation = 3;        // voxels; match radius around each gt lesion
  int min_size = 2;           // components below this are ignored (pred and gt)
  double hd95_penalty = 374.0;  // mm; charged per unmatched lesion slot

  void validate() const {
    require(gt_dilation >= 0, "gt_dilation must be >= 0");
    require(min_size >= 1, "min_size must be >= 1");
    require(hd95_penalty > 0.0, "hd95 penalty must be positive");
  }
};

// 2|A^B| / (|A|+|B|); both empty -> 1.0 by convention.
inline double legacy_dsc(const Mask& pred, const Mask& gt) {
  require(pred.shape == gt.shape, "dsc: mask shapes differ (", shape_str(pred.shape), " vs ",
          shape_str(gt.shape), ")");
  int64_t inter = 0, a = 0, b = 0;
  for (int64_t i = 0; i < pred.numel(); ++i) {
    const bool p = pred.data[i] != 0, g = gt.data[i] != 0;
    inter += p && g;
    a += p;
    b += g;
  }
  if (a + b == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(a + b);
}

struct MatchedPair {
  int gt_index = -1;
  std::vector<int> pred_indices;  // pred components forming the corresponding prediction
  double dsc = 0.0;
  double hd95 = 0.0;
};

struct MatchResult {
  std::vector<MatchedPair> pairs;
  std::vector<int> fp_pred_indices;
  int tp = 0, fn = 0, fp = 0;
};

// Pairs each ground-truth lesion with the union of prediction components that
// intersect its dilation. A prediction component that supports at least one
// match is never a false positive, even if it overlaps several lesions.
inline MatchResult match_lesions(const LesionSet& pred_ls, const LesionSet& gt_ls,
                                 const MatchConfig& cfg,
                                 const std::array<double, 3>& spacing = {1.0, 1.0, 1.0}) {
  require(pred_ls.shape == gt_ls.shape, "match_lesions: lesion sets from different shapes");
  cfg.validate();
  const Shape3 shape = gt_ls.shape;

  MatchResult mr;
  std::vector<uint8_t> pred_supports(pred_ls.count(), 0);

  for (int gi = 0; gi < static_cast<int>(gt_ls.count()); ++gi) {
    const Mask gt_mask = materialize(shape, gt_ls.components[gi]);
    const Mask dilated = dilate(gt_mask, cfg.gt_dilation, 26);

    MatchedPair pair;
    pair.gt_index = gi;
    for (int pi = 0; pi < static_cast<int>(pred_ls.count()); ++pi) {
      for (int64_t v : pred_ls.components[pi]) {
        if (dilated.data[v]) {
          pair.pred_indices.push_back(pi);
          pred_supports[pi] = 1;
          break;
        }
      }
    }
    if (pair.pred_indices.empty()) {
      ++mr.fn;
      continue;
    }
    Mask pred_union(shape);
    for (int pi : pair.pred_indices)
      for (int64_t v : pred_ls.components[pi]) pred_union.data[v] = 1;
    pair.dsc = legacy_dsc(pred_union, gt_mask);
    pair.hd95 = hd95(pred_union, gt_mask, spacing, cfg.hd95_penalty);
    mr.pairs.push_back(std::move(pair));
    ++mr.tp;
  }
  for (int pi = 0; pi < static_cast<int>(pred_ls.count()); ++pi)
    if (!pred_supports[pi]) mr.fp_pred_indices.push_back(pi);
  mr.fp = static_cast<int>(mr.fp_pred_indices.size());
  return mr;
}

enum class LesionMetric { Dsc, Hd95 };

// Lesion-wise Metric = sum_i Metric(l_i) / (TP + FN + FP).
// DSC: unmatched slots contribute 0 to the numerator. HD95: unmatched slots
// contribute the penalty. No lesions on either side -> DSC 1.0, HD95 0.0.
inline double lesion_wise_metric(const MatchResult& mr, LesionMetric metric,
                                 const MatchConfig& cfg) {
  const int denom = mr.tp + mr.fn + mr.fp;
  if (denom == 0) return metric == LesionMetric::Dsc ? 1.0 : 0.0;
  double num = 0.0;
  for (const auto& p : mr.pairs) num += metric == LesionMetric::Dsc ? p.dsc : p.hd95;
  if (metric == LesionMetric::Hd95) num += cfg.hd95_penalty * (mr.fn + mr.fp);
  return num / denom;
}

struct RegionMetrics {
  double legacy_dsc = 0.0;
  double legacy_hd95 = 0.0;
  double lesionwise_dsc = 0.0;
  double lesionwise_hd95 = 0.0;
};

struct MetricsReport {
  std::string case_id;
  std::string config_fingerprint;
  // Keyed by region name: WT, TC, ET plus the per-label NETC and SNFH rows.
  std::map<std::string, RegionMetrics> regions;
};

inline const std::vector<std::string>& report_region_names() {
  static const std::vector<std::string> names = {"WT", "TC", "ET", "NETC", "SNFH"};
  return names;
}

// All four metrics for one region. Size filtering applies to the lesion-wise
// metrics on both sides; legacy metrics always use the raw masks.
inline RegionMetrics evaluate_region(const Mask& pred, const Mask& gt, const MatchConfig& cfg,
                                     const std::array<double, 3>& spacing) {
  RegionMetrics rm;
  rm.legacy_dsc = legacy_dsc(pred, gt);
  rm.legacy_hd95 = hd95(pred, gt, spacing, cfg.hd95_penalty);

  const LesionSet pred_ls =
      filter_small(connected_components(pred, cfg.connectivity), cfg.min_size);
  const LesionSet gt_ls = filter_small(connected_components(gt, cfg.connectivity), cfg.min_size);
  const MatchResult mr = match_lesions(pred_ls, gt_ls, cfg, spacing);
  rm.lesionwise_dsc = lesion_wise_metric(mr, LesionMetric::Dsc, cfg);
  rm.lesionwise_hd95 = lesion_wise_metric(mr, LesionMetric::Hd95, cfg);
  return rm;
}

inline MetricsReport evaluate_case(const LabelVolume& pred, const LabelVolume& gt,
                                   const MatchConfig& cfg,
                                   const std::array<double, 3>& spacing = {1.0, 1.0, 1.0},
                                   const std::string& case_id = "") {
  require(pred.shape() == gt.shape(), "evaluate_case: label shapes differ (",
          shape_str(pred.shape()), " vs ", shape_str(gt.shape()), ")");
  MetricsReport rep;
  rep.case_id = case_id;
  const RegionMasks pr = compose_regions(pred);
  const RegionMasks gr = compose_regions(gt);
  rep.regions["WT"] = evaluate_region(pr.wt, gr.wt, cfg, spacing);
  rep.regions["TC"] = evaluate_region(pr.tc, gr.tc, cfg, spacing);
  rep.regions["ET"] = evaluate_region(pr.et, gr.et, cfg, spacing);
  rep.regions["NETC"] = evaluate_region(label_mask(pred, 1), label_mask(gt, 1), cfg, spacing);
  rep.regions["SNFH"] = evaluate_region(label_mask(pred, 2), label_mask(gt, 2), cfg, spacing);
  return rep;
}

}  // namespace bmseg
