#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "bmseg/core/volume.hpp"

namespace bmseg {

struct PatchSpec {
  Shape3 size{64, 64, 64};
  Shape3 stride{32, 32, 32};

  void validate() const {
    for (int a = 0; a < 3; ++a) {
      require(stride[a] > 0 && stride[a] <= size[a],
              "patch stride must satisfy 0 < stride <= size on every axis");
    }
  }
};

struct PatchCoord {
  Shape3 origin{0, 0, 0};

  bool operator==(const PatchCoord& o) const { return origin == o.origin; }
};

namespace detail {
// Axis positions: multiples of stride, plus a clamped final position so the
// patch's far edge lands on the volume edge. Volumes smaller than the patch
// get the single origin 0 (the extraction pads).
inline std::vector<int> axis_positions(int extent, int size, int stride) {
  if (extent <= size) return {0};
  std::vector<int> pos;
  for (int p = 0; p + size < extent; p += stride) pos.push_back(p);
  if (pos.empty() || pos.back() != extent - size) pos.push_back(extent - size);
  return pos;
}
}  // namespace detail

// Overlapping tiling covering every voxel, ordered lexicographically in (z,y,x).
inline std::vector<PatchCoord> tile_grid(const Shape3& shape, const PatchSpec& spec) {
  spec.validate();
  for (int a = 0; a < 3; ++a) require(shape[a] > 0, "tile_grid: non-positive shape");
  const auto zs = detail::axis_positions(shape[0], spec.size[0], spec.stride[0]);
  const auto ys = detail::axis_positions(shape[1], spec.size[1], spec.stride[1]);
  const auto xs = detail::axis_positions(shape[2], spec.size[2], spec.stride[2]);
  std::vector<PatchCoord> out;
  out.reserve(zs.size() * ys.size() * xs.size());
  for (int z : zs)
    for (int y : ys)
      for (int x : xs) out.push_back(PatchCoord{{z, y, x}});
  return out;
}

// Copies a size^3 window starting at coord; regions outside the volume are
// zero-filled (only reachable for sub-size volumes).
template <typename T>
Volume<T> extract_patch(const Volume<T>& vol, const PatchCoord& coord, const Shape3& size) {
  Volume<T> out(size, T{});
  for (int z = 0; z < size[0]; ++z) {
    const int vz = coord.origin[0] + z;
    if (vz < 0 || vz >= vol.shape[0]) continue;
    for (int y = 0; y < size[1]; ++y) {
      const int vy = coord.origin[1] + y;
      if (vy < 0 || vy >= vol.shape[1]) continue;
      const int x0 = std::max(0, -coord.origin[2]);
      const int x1 = std::min(size[2], vol.shape[2] - coord.origin[2]);
      if (x0 >= x1) continue;
      const T* src = &vol.at(vz, vy, coord.origin[2] + x0);
      T* dst = &out.at(z, y, x0);
      std::copy(src, src + (x1 - x0), dst);
    }
  }
  return out;
}

// Multi-channel variant; returns [C, s, s, s] packed row-major.
inline std::vector<float> extract_patch_channels(const MultiModalVolume& vol,
                                                 const PatchCoord& coord, const Shape3& size) {
  const int64_t patch_vox = shape_numel(size);
  const Shape3 vs = vol.shape;
  std::vector<float> out(static_cast<size_t>(vol.channels) * patch_vox, 0.f);
  for (int c = 0; c < vol.channels; ++c) {
    const float* src_ch = vol.channel(c);
    float* dst_ch = out.data() + static_cast<int64_t>(c) * patch_vox;
    for (int z = 0; z < size[0]; ++z) {
      const int vz = coord.origin[0] + z;
      if (vz < 0 || vz >= vs[0]) continue;
      for (int y = 0; y < size[1]; ++y) {
        const int vy = coord.origin[1] + y;
        if (vy < 0 || vy >= vs[1]) continue;
        const int x0 = std::max(0, -coord.origin[2]);
        const int x1 = std::min(size[2], vs[2] - coord.origin[2]);
        if (x0 >= x1) continue;
        const float* src = src_ch + (static_cast<int64_t>(vz) * vs[1] + vy) * vs[2] +
                           coord.origin[2] + x0;
        float* dst = dst_ch + (static_cast<int64_t>(z) * size[1] + y) * size[2] + x0;
        std::copy(src, src + (x1 - x0), dst);
      }
    }
  }
  return out;
}

// True iff the patch window holds at least min_fg foreground label voxels.
inline bool label_patch(const LabelVolume& labels, const PatchCoord& coord, const Shape3& size,
                        int min_fg = 1) {
  int count = 0;
  const auto& vol = labels.vol;
  for (int z = 0; z < size[0]; ++z) {
    const int vz = coord.origin[0] + z;
    if (vz < 0 || vz >= vol.shape[0]) continue;
    for (int y = 0; y < size[1]; ++y) {
      const int vy = coord.origin[1] + y;
      if (vy < 0 || vy >= vol.shape[1]) continue;
      for (int x = 0; x < size[2]; ++x) {
        const int vx = coord.origin[2] + x;
        if (vx < 0 || vx >= vol.shape[2]) continue;
        if (vol.at(vz, vy, vx) > 0 && ++count >= min_fg) return true;
      }
    }
  }
  return false;
}

}  // namespace bmseg
