#pragma once

#include <string>
#include <vector>

#include "bmseg/models/decode.hpp"
#include "bmseg/models/densenet.hpp"
#include "bmseg/models/flops.hpp"
#include "bmseg/models/resunet.hpp"
#include "bmseg/patch/blend.hpp"
#include "bmseg/patch/grid.hpp"

namespace bmseg {

struct GatedInferenceConfig {
  PatchSpec patch;                      // shared grid for detector and segmentor
  double detector_threshold = 0.5;      // flag iff prob >= threshold
  BlendWeighting weighting = BlendWeighting::Gaussian;
  int detector_batch = 8;
  std::array<double, 3> decode_thresholds = {0.5, 0.5, 0.5};
  // Unflagged patches contribute zero blend weight by default; the
  // alternative blends explicit zero probabilities into covered voxels.
  bool blend_unflagged_zeros = false;
  Shape3 baseline_patch{128, 128, 128};  // the ungated reference grid
};

struct CostReport {
  int64_t total_patches = 0;
  int64_t flagged_patches = 0;
  int64_t segmentor_invocations = 0;
  double detector_gflops = 0.0;   // total over the grid
  double segmentor_gflops = 0.0;  // total over flagged patches
  double baseline_gflops = 0.0;   // ungated reference over its own grid
  double reduction = 0.0;         // 1 - (detector+segmentor)/baseline

  void finalize() {
    require(flagged_patches <= total_patches, "cost report: flagged > total");
    reduction =
        baseline_gflops > 0.0
            ? 1.0 - (detector_gflops + segmentor_gflops) / baseline_gflops
            : 0.0;
  }
};

// Pure cost arithmetic; negative reductions are reported as computed.
inline CostReport cost_report(int64_t n_total, int64_t n_flagged, double det_gflops_per_patch,
                              double seg_gflops_per_patch, double baseline_total_gflops) {
  require(n_total >= 0 && n_flagged >= 0, "cost report: negative patch counts");
  CostReport r;
  r.total_patches = n_total;
  r.flagged_patches = n_flagged;
  r.segmentor_invocations = n_flagged;
  r.detector_gflops = det_gflops_per_patch * static_cast<double>(n_total);
  r.segmentor_gflops = seg_gflops_per_patch * static_cast<double>(n_flagged);
  r.baseline_gflops = baseline_total_gflops;
  r.finalize();
  return r;
}

struct GatedInferenceResult {
  LabelVolume labels;
  std::vector<float> region_probs;  // [3, D, H, W] blended probabilities
  CostReport cost;
  std::vector<std::string> warnings;
};

namespace infer_detail {

inline std::vector<float> segment_patch(ResUNetSegmentor& seg, const std::vector<float>& patch,
                                        int channels, const Shape3& size) {
  nn::Tape tape(false);
  nn::Tensor input({1, channels, size[0], size[1], size[2]});
  std::copy(patch.begin(), patch.end(), input.ptr());
  const SegmentorOutput out = seg.forward(tape, input);
  return out.primary->value.data;  // [3, s, s, s]
}

}  // namespace infer_detail

// Two-stage sliding-window inference: the detector scores every grid patch,
// the segmentor runs only on flagged ones. Voxels covered solely by unflagged
// patches decode to background.
inline GatedInferenceResult run_gated_inference(const MultiModalVolume& vol,
                                                DenseNetDetector& detector,
                                                ResUNetSegmentor& segmentor,
                                                const GatedInferenceConfig& cfg) {
  require(vol.channels == detector.config().in_channels,
          "volume has ", vol.channels, " channels but the detector expects ",
          detector.config().in_channels);
  require(vol.channels == segmentor.config().in_channels,
          "volume has ", vol.channels, " channels but the segmentor expects ",
          segmentor.config().in_channels);
  require(cfg.detector_threshold >= 0.0 && cfg.detector_threshold <= 1.0,
          "detector threshold must lie in [0,1]");

  const Shape3 psize = cfg.patch.size;
  const auto grid = tile_grid(vol.shape, cfg.patch);
  const int64_t patch_vox = shape_numel(psize);

  // stage 1: detector pass over the whole grid
  std::vector<float> probs(grid.size(), 0.f);
  std::vector<std::vector<float>> patch_data(grid.size());
  for (size_t i = 0; i < grid.size(); ++i)
    patch_data[i] = extract_patch_channels(vol, grid[i], psize);

  for (size_t at = 0; at < grid.size(); at += cfg.detector_batch) {
    const size_t end = std::min(grid.size(), at + static_cast<size_t>(cfg.detector_batch));
    nn::Tensor batch({static_cast<int>(end - at), vol.channels, psize[0], psize[1], psize[2]});
    for (size_t i = at; i < end; ++i)
      std::copy(patch_data[i].begin(), patch_data[i].end(),
                batch.ptr() + static_cast<int64_t>(i - at) * vol.channels * patch_vox);
    nn::Tape tape(false);
    nn::Node* out = detector.forward(tape, batch);
    for (size_t i = at; i < end; ++i) probs[i] = out->value.data[i - at];
  }

  // stage 2: segment flagged patches and blend
  GatedInferenceResult result;
  BlendAccumulator acc(vol.shape, 3, psize, cfg.weighting);
  int64_t flagged = 0;
  for (size_t i = 0; i < grid.size(); ++i) {
    const bool flag = probs[i] >= cfg.detector_threshold;
    if (flag) {
      ++flagged;
      acc.add(grid[i], infer_detail::segment_patch(segmentor, patch_data[i], vol.channels,
                                                   psize));
    } else if (cfg.blend_unflagged_zeros) {
      acc.add(grid[i], std::vector<float>(3 * patch_vox, 0.f));
    }
  }
  if (flagged == 0)
    result.warnings.push_back("detector flagged no patches; output is all background");

  result.region_probs = acc.finalize();
  result.labels = regions_to_labels(result.region_probs.data(), vol.shape,
                                    cfg.decode_thresholds);

  const double det_per_patch = estimate_flops(detector.config(), psize);
  const double seg_per_patch = estimate_flops(segmentor.config(), psize);
  ReferenceUNetSpec baseline;
  const PatchSpec baseline_spec{cfg.baseline_patch,
                                {cfg.baseline_patch[0] / 2, cfg.baseline_patch[1] / 2,
                                 cfg.baseline_patch[2] / 2}};
  const double baseline_total =
      estimate_flops(baseline, cfg.baseline_patch) *
      static_cast<double>(tile_grid(vol.shape, baseline_spec).size());
  result.cost = cost_report(static_cast<int64_t>(grid.size()), flagged, det_per_patch,
                            seg_per_patch, baseline_total);
  return result;
}

// Ungated sliding window: every patch is segmented (the theta=0 reference path).
inline GatedInferenceResult run_sliding_window(const MultiModalVolume& vol,
                                               ResUNetSegmentor& segmentor,
                                               const GatedInferenceConfig& cfg) {
  const Shape3 psize = cfg.patch.size;
  const auto grid = tile_grid(vol.shape, cfg.patch);
  GatedInferenceResult result;
  BlendAccumulator acc(vol.shape, 3, psize, cfg.weighting);
  for (const auto& coord : grid) {
    const auto patch = extract_patch_channels(vol, coord, psize);
    acc.add(coord, infer_detail::segment_patch(segmentor, patch, vol.channels, psize));
  }
  result.region_probs = acc.finalize();
  result.labels = regions_to_labels(result.region_probs.data(), vol.shape,
                                    cfg.decode_thresholds);
  result.cost.total_patches = static_cast<int64_t>(grid.size());
  result.cost.flagged_patches = result.cost.segmentor_invocations =
      static_cast<int64_t>(grid.size());
  result.cost.segmentor_gflops =
      estimate_flops(segmentor.config(), psize) * static_cast<double>(grid.size());
  return result;
}

}  // namespace bmseg
