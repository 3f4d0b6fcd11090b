#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "bmseg/patch/grid.hpp"

namespace bmseg {

enum class BlendWeighting { Uniform, Gaussian };

// Separable importance kernel centered in the patch, sigma = size/8. Border
// voxels still get a strictly positive weight.
inline std::vector<float> gaussian_patch_weights(const Shape3& size) {
  std::array<std::vector<double>, 3> axis;
  for (int a = 0; a < 3; ++a) {
    const int n = size[a];
    axis[a].resize(n);
    const double sigma = n / 8.0;
    const double center = (n - 1) / 2.0;
    for (int i = 0; i < n; ++i) {
      const double d = (i - center) / sigma;
      axis[a][i] = std::exp(-0.5 * d * d);
    }
  }
  std::vector<float> w(shape_numel(size));
  int64_t idx = 0;
  for (int z = 0; z < size[0]; ++z)
    for (int y = 0; y < size[1]; ++y)
      for (int x = 0; x < size[2]; ++x)
        w[idx++] = static_cast<float>(axis[0][z] * axis[1][y] * axis[2][x]);
  return w;
}

// Running weighted sum for sliding-window reconstruction of K channels.
struct BlendAccumulator {
  Shape3 shape{0, 0, 0};
  int channels = 0;
  std::vector<double> value_sum;   // [K, D, H, W]
  std::vector<double> weight_sum;  // [D, H, W]
  std::vector<float> kernel;       // per-patch weights, size^3
  Shape3 patch_size{0, 0, 0};

  BlendAccumulator(Shape3 vol_shape, int k, Shape3 psize, BlendWeighting weighting)
      : shape(vol_shape),
        channels(k),
        value_sum(static_cast<size_t>(k) * shape_numel(vol_shape), 0.0),
        weight_sum(shape_numel(vol_shape), 0.0),
        patch_size(psize) {
    kernel = weighting == BlendWeighting::Gaussian
                 ? gaussian_patch_weights(psize)
                 : std::vector<float>(shape_numel(psize), 1.f);
  }

  // probs is [K, s, s, s]; voxels falling outside the volume are dropped.
  void add(const PatchCoord& coord, const std::vector<float>& probs) {
    const int64_t pv = shape_numel(patch_size);
    require(static_cast<int64_t>(probs.size()) == pv * channels,
            "blend: contribution has wrong size");
    const int64_t vol_vox = shape_numel(shape);
    for (int z = 0; z < patch_size[0]; ++z) {
      const int vz = coord.origin[0] + z;
      if (vz < 0 || vz >= shape[0]) continue;
      for (int y = 0; y < patch_size[1]; ++y) {
        const int vy = coord.origin[1] + y;
        if (vy < 0 || vy >= shape[1]) continue;
        for (int x = 0; x < patch_size[2]; ++x) {
          const int vx = coord.origin[2] + x;
          if (vx < 0 || vx >= shape[2]) continue;
          const int64_t pi = (static_cast<int64_t>(z) * patch_size[1] + y) * patch_size[2] + x;
          const int64_t vi = (static_cast<int64_t>(vz) * shape[1] + vy) * shape[2] + vx;
          const double w = kernel[pi];
          weight_sum[vi] += w;
          for (int c = 0; c < channels; ++c)
            value_sum[c * vol_vox + vi] += w * probs[c * pv + pi];
        }
      }
    }
  }

  // Weighted average; zero-weight voxels (never covered) finalize to 0.
  std::vector<float> finalize() const {
    const int64_t vol_vox = shape_numel(shape);
    std::vector<float> out(static_cast<size_t>(channels) * vol_vox, 0.f);
    for (int64_t i = 0; i < vol_vox; ++i) {
      if (weight_sum[i] <= 0.0) continue;
      for (int c = 0; c < channels; ++c)
        out[c * vol_vox + i] = static_cast<float>(value_sum[c * vol_vox + i] / weight_sum[i]);
    }
    return out;
  }
};

// One-shot reconstruction from (coord, prob patch) contributions.
inline std::vector<float> blend_patches(
    const std::vector<std::pair<PatchCoord, std::vector<float>>>& contributions,
    const Shape3& vol_shape, int channels, const Shape3& patch_size, BlendWeighting weighting) {
  BlendAccumulator acc(vol_shape, channels, patch_size, weighting);
  for (const auto& [coord, probs] : contributions) acc.add(coord, probs);
  return acc.finalize();
}

}  // namespace bmseg
