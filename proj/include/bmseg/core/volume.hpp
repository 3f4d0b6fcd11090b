#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "bmseg/core/types.hpp"

namespace bmseg {

// Dense 3D array, row-major in (z, y, x).
template <typename T>
struct Volume {
  Shape3 shape{0, 0, 0};
  std::vector<T> data;

  Volume() = default;
  explicit Volume(Shape3 s, T fill = T{}) : shape(s), data(shape_numel(s), fill) {}

  int64_t numel() const { return shape_numel(shape); }

  int64_t index(int z, int y, int x) const {
    return (static_cast<int64_t>(z) * shape[1] + y) * shape[2] + x;
  }
  T& at(int z, int y, int x) { return data[index(z, y, x)]; }
  const T& at(int z, int y, int x) const { return data[index(z, y, x)]; }

  bool in_bounds(int z, int y, int x) const {
    return z >= 0 && y >= 0 && x >= 0 && z < shape[0] && y < shape[1] && x < shape[2];
  }
};

using Mask = Volume<uint8_t>;

// Integer annotation volume. 0=background, 1=NETC, 2=SNFH, 3=ET.
struct LabelVolume {
  static constexpr uint8_t kMaxLabel = 3;
  Volume<uint8_t> vol;

  LabelVolume() = default;
  explicit LabelVolume(Shape3 s) : vol(s, 0) {}

  Shape3 shape() const { return vol.shape; }
  int64_t numel() const { return vol.numel(); }
};

inline void validate_labels(const LabelVolume& lv) {
  for (uint8_t v : lv.vol.data)
    require(v <= LabelVolume::kMaxLabel, "invalid label ", int(v));
}

// Channel-stacked multi-modal intensity volume. data is [C, D, H, W] row-major.
struct MultiModalVolume {
  Shape3 shape{0, 0, 0};
  int channels = 0;
  std::vector<float> data;
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  ModalitySet modalities;

  MultiModalVolume() = default;
  MultiModalVolume(Shape3 s, ModalitySet mods)
      : shape(s),
        channels(static_cast<int>(mods.size())),
        data(static_cast<size_t>(mods.size()) * shape_numel(s), 0.f),
        modalities(std::move(mods)) {}

  int64_t voxels() const { return shape_numel(shape); }

  float* channel(int c) { return data.data() + static_cast<int64_t>(c) * voxels(); }
  const float* channel(int c) const { return data.data() + static_cast<int64_t>(c) * voxels(); }

  void validate() const {
    require(channels == static_cast<int>(modalities.size()),
            "channel count ", channels, " != modality count ", modalities.size());
    for (double s : spacing) require(s > 0.0, "non-positive voxel spacing");
    for (float v : data)
      require(std::isfinite(v), "volume contains a non-finite intensity value");
  }
};

// Nested evaluation regions derived from a LabelVolume. et <= tc <= wt voxelwise.
struct RegionMasks {
  Mask wt, tc, et;
};

// wt = label>0, tc = label in {1,3}, et = label==3.
inline RegionMasks compose_regions(const LabelVolume& labels) {
  RegionMasks r;
  const Shape3 s = labels.shape();
  r.wt = Mask(s);
  r.tc = Mask(s);
  r.et = Mask(s);
  const int64_t n = labels.numel();
  for (int64_t i = 0; i < n; ++i) {
    const uint8_t v = labels.vol.data[i];
    r.wt.data[i] = v > 0;
    r.tc.data[i] = (v == 1 || v == 3);
    r.et.data[i] = (v == 3);
  }
  return r;
}

// Binary mask of a single label value (NETC=1, SNFH=2, ET=3).
inline Mask label_mask(const LabelVolume& labels, uint8_t value) {
  Mask m(labels.shape());
  const int64_t n = labels.numel();
  for (int64_t i = 0; i < n; ++i) m.data[i] = labels.vol.data[i] == value;
  return m;
}

}  // namespace bmseg
