#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "bmseg/core/rng.hpp"
#include "bmseg/patch/grid.hpp"

namespace bmseg {

// One training crop: image channels, matching label window, positivity flag.
struct PatchSample {
  Shape3 size{0, 0, 0};
  int channels = 0;
  std::vector<float> data;          // [C, s, s, s]
  Volume<uint8_t> label_patch;      // [s, s, s]
  PatchCoord coord;
  bool positive = false;
};

inline PatchSample make_patch_sample(const MultiModalVolume& vol, const LabelVolume& labels,
                                     const PatchCoord& coord, const Shape3& size, int min_fg = 1) {
  PatchSample s;
  s.size = size;
  s.channels = vol.channels;
  s.coord = coord;
  s.data = extract_patch_channels(vol, coord, size);
  s.label_patch = extract_patch(labels.vol, coord, size);
  int fg = 0;
  for (uint8_t v : s.label_patch.data)
    if (v > 0) ++fg;
  s.positive = fg >= min_fg;
  return s;
}

namespace detail {
inline int clamp_origin(int center, int size, int extent) {
  const int hi = std::max(0, extent - size);
  return std::min(hi, std::max(0, center - size / 2));
}
}  // namespace detail

// ceil(fg_fraction*n) crops centered on uniformly sampled foreground voxels
// (uniform fallback when the case has no foreground); the rest uniform over
// valid origins. Deterministic for a given rng state.
inline std::vector<PatchSample> sample_training_crops(const MultiModalVolume& vol,
                                                      const LabelVolume& labels, int n,
                                                      double fg_fraction, const Shape3& size,
                                                      Rng& rng, int min_fg = 1) {
  require(n >= 0, "crop count must be non-negative");
  require(fg_fraction >= 0.0 && fg_fraction <= 1.0, "fg_fraction must lie in [0,1]");
  require(vol.shape == labels.shape(), "image/label shape mismatch (", shape_str(vol.shape),
          " vs ", shape_str(labels.shape()), ")");

  std::vector<int64_t> fg;
  for (int64_t i = 0; i < labels.numel(); ++i)
    if (labels.vol.data[i] > 0) fg.push_back(i);

  const int n_forced = static_cast<int>(std::ceil(fg_fraction * n));
  const Shape3 vs = vol.shape;
  std::vector<PatchSample> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    PatchCoord coord;
    if (i < n_forced && !fg.empty()) {
      const int64_t pick = fg[static_cast<size_t>(rand_int(rng, 0, static_cast<int>(fg.size()) - 1))];
      const int cz = static_cast<int>(pick / (static_cast<int64_t>(vs[1]) * vs[2]));
      const int cy = static_cast<int>((pick / vs[2]) % vs[1]);
      const int cx = static_cast<int>(pick % vs[2]);
      coord.origin = {detail::clamp_origin(cz, size[0], vs[0]),
                      detail::clamp_origin(cy, size[1], vs[1]),
                      detail::clamp_origin(cx, size[2], vs[2])};
    } else {
      coord.origin = {rand_int(rng, 0, std::max(0, vs[0] - size[0])),
                      rand_int(rng, 0, std::max(0, vs[1] - size[1])),
                      rand_int(rng, 0, std::max(0, vs[2] - size[2]))};
    }
    out.push_back(make_patch_sample(vol, labels, coord, size, min_fg));
  }
  return out;
}

}  // namespace bmseg
