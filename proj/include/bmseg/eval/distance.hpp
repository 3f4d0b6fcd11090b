#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "bmseg/core/volume.hpp"

namespace bmseg {

// Boundary voxels: foreground voxels with at least one face-adjacent
// background neighbor; voxels on the array edge count as boundary (outside
// the array is treated as background).
inline std::vector<int64_t> boundary_voxels(const Mask& mask) {
  const int D = mask.shape[0], H = mask.shape[1], W = mask.shape[2];
  std::vector<int64_t> out;
  for (int z = 0; z < D; ++z)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        if (!mask.at(z, y, x)) continue;
        const bool edge = z == 0 || y == 0 || x == 0 || z == D - 1 || y == H - 1 || x == W - 1;
        if (edge || !mask.at(z - 1, y, x) || !mask.at(z + 1, y, x) || !mask.at(z, y - 1, x) ||
            !mask.at(z, y + 1, x) || !mask.at(z, y, x - 1) || !mask.at(z, y, x + 1))
          out.push_back(mask.index(z, y, x));
      }
  return out;
}

namespace detail {

// 1D squared-distance transform (Felzenszwalb & Huttenlocher) with anisotropic
// sample step. f holds squared distances on input and output.
inline void edt_1d(std::vector<double>& f, double step) {
  const int n = static_cast<int>(f.size());
  if (n == 0) return;
  static thread_local std::vector<int> v;
  static thread_local std::vector<double> z, d;
  v.assign(n, 0);
  z.assign(n + 1, 0.0);
  d.assign(n, 0.0);

  const double inf = std::numeric_limits<double>::infinity();
  int k = 0;
  v[0] = 0;
  z[0] = -inf;
  z[1] = inf;
  for (int q = 1; q < n; ++q) {
    if (f[q] == inf) continue;
    if (f[v[0]] == inf) {  // first finite parabola
      v[0] = q;
      z[0] = -inf;
      z[1] = inf;
      continue;
    }
    double s;
    while (true) {
      const int p = v[k];
      s = ((f[q] + static_cast<double>(q) * q * step * step) -
           (f[p] + static_cast<double>(p) * p * step * step)) /
          (2.0 * step * step * (q - p));
      if (s > z[k]) break;
      --k;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }

  if (f[v[0]] == inf) return;  // no seeds along this line
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = (q - v[k]) * step;
    d[q] = dq * dq + f[v[k]];
  }
  std::copy(d.begin(), d.end(), f.begin());
}

}  // namespace detail

// Exact squared Euclidean distance (in mm^2) from every voxel center to the
// nearest seed voxel center, honoring per-axis spacing.
inline std::vector<double> squared_distance_field(const Shape3& shape,
                                                  const std::vector<int64_t>& seeds,
                                                  const std::array<double, 3>& spacing) {
  const int D = shape[0], H = shape[1], W = shape[2];
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> g(shape_numel(shape), inf);
  for (int64_t s : seeds) g[s] = 0.0;

  std::vector<double> line;
  // x pass
  line.resize(W);
  for (int z = 0; z < D; ++z)
    for (int y = 0; y < H; ++y) {
      double* row = g.data() + (static_cast<int64_t>(z) * H + y) * W;
      line.assign(row, row + W);
      detail::edt_1d(line, spacing[2]);
      std::copy(line.begin(), line.end(), row);
    }
  // y pass
  line.resize(H);
  for (int z = 0; z < D; ++z)
    for (int x = 0; x < W; ++x) {
      for (int y = 0; y < H; ++y) line[y] = g[(static_cast<int64_t>(z) * H + y) * W + x];
      detail::edt_1d(line, spacing[1]);
      for (int y = 0; y < H; ++y) g[(static_cast<int64_t>(z) * H + y) * W + x] = line[y];
    }
  // z pass
  line.resize(D);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      for (int z = 0; z < D; ++z) line[z] = g[(static_cast<int64_t>(z) * H + y) * W + x];
      detail::edt_1d(line, spacing[0]);
      for (int z = 0; z < D; ++z) g[(static_cast<int64_t>(z) * H + y) * W + x] = line[z];
    }
  return g;
}

// Percentile with linear interpolation between order statistics.
inline double percentile(std::vector<double> values, double pct) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double rank = pct / 100.0 * (static_cast<double>(values.size()) - 1.0);
  const size_t lo = static_cast<size_t>(std::floor(rank));
  const size_t hi = static_cast<size_t>(std::ceil(rank));
  if (lo == hi) return values[lo];
  const double w = rank - static_cast<double>(lo);
  return values[lo] * (1.0 - w) + values[hi] * w;
}

// 95th percentile of pooled bidirectional boundary distances in mm.
// Conventions: both masks empty -> 0; exactly one empty -> penalty.
inline double hd95(const Mask& pred, const Mask& gt, const std::array<double, 3>& spacing,
                   double penalty) {
  require(pred.shape == gt.shape, "hd95: mask shapes differ (", shape_str(pred.shape), " vs ",
          shape_str(gt.shape), ")");
  const auto bp = boundary_voxels(pred);
  const auto bg = boundary_voxels(gt);
  if (bp.empty() && bg.empty()) return 0.0;
  if (bp.empty() || bg.empty()) return penalty;

  const auto dist_to_gt = squared_distance_field(pred.shape, bg, spacing);
  const auto dist_to_pred = squared_distance_field(pred.shape, bp, spacing);
  std::vector<double> pooled;
  pooled.reserve(bp.size() + bg.size());
  for (int64_t i : bp) pooled.push_back(std::sqrt(dist_to_gt[i]));
  for (int64_t i : bg) pooled.push_back(std::sqrt(dist_to_pred[i]));
  return percentile(std::move(pooled), 95.0);
}

}  // namespace bmseg
