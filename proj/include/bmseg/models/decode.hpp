#pragma once

#include <array>

#include "bmseg/core/volume.hpp"

namespace bmseg {

// Region probability channel order used throughout: 0=WT, 1=TC, 2=ET.
constexpr int kRegionWT = 0;
constexpr int kRegionTC = 1;
constexpr int kRegionET = 2;

// Hierarchy-gated decode of region probabilities [3, D, H, W] into labels.
// A voxel is 3 only if all three regions fire, 1 if TC and WT fire, 2 if only
// WT fires; the WT gate failing forces background regardless of inner probs.
// Re-composing the result always yields nested et <= tc <= wt masks.
inline LabelVolume regions_to_labels(const float* probs, const Shape3& shape,
                                     std::array<double, 3> thresholds = {0.5, 0.5, 0.5}) {
  LabelVolume out(shape);
  const int64_t n = shape_numel(shape);
  const float* wt = probs + kRegionWT * n;
  const float* tc = probs + kRegionTC * n;
  const float* et = probs + kRegionET * n;
  const float th_wt = static_cast<float>(thresholds[kRegionWT]);
  const float th_tc = static_cast<float>(thresholds[kRegionTC]);
  const float th_et = static_cast<float>(thresholds[kRegionET]);
  for (int64_t i = 0; i < n; ++i) {
    if (wt[i] < th_wt) continue;  // label 0
    if (tc[i] >= th_tc) {
      out.vol.data[i] = et[i] >= th_et ? 3 : 1;
    } else {
      out.vol.data[i] = 2;
    }
  }
  return out;
}

// Binary region targets [3, D, H, W] from a label volume (training targets).
inline std::vector<float> region_targets(const LabelVolume& labels) {
  const RegionMasks r = compose_regions(labels);
  const int64_t n = labels.numel();
  std::vector<float> out(3 * n);
  for (int64_t i = 0; i < n; ++i) {
    out[kRegionWT * n + i] = r.wt.data[i];
    out[kRegionTC * n + i] = r.tc.data[i];
    out[kRegionET * n + i] = r.et.data[i];
  }
  return out;
}

}  // namespace bmseg
