#pragma once

// Brute-force reference implementations used only by tests. Deliberately
// independent of the library's algorithms: components via fixpoint label
// propagation (not BFS), distances via all-pairs scans (not distance
// transforms), lesion matching via Chebyshev distance (not dilation).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "bmseg/core/volume.hpp"

namespace oracle {

using bmseg::Mask;
using bmseg::Shape3;

struct Voxel {
  int z, y, x;
};

inline std::vector<Voxel> mask_voxels(const Mask& m) {
  std::vector<Voxel> out;
  for (int z = 0; z < m.shape[0]; ++z)
    for (int y = 0; y < m.shape[1]; ++y)
      for (int x = 0; x < m.shape[2]; ++x)
        if (m.at(z, y, x)) out.push_back({z, y, x});
  return out;
}

inline bool adjacent(const Voxel& a, const Voxel& b, int connectivity) {
  const int dz = std::abs(a.z - b.z), dy = std::abs(a.y - b.y), dx = std::abs(a.x - b.x);
  if (dz > 1 || dy > 1 || dx > 1 || (dz == 0 && dy == 0 && dx == 0)) return false;
  const int manhattan = dz + dy + dx;
  if (connectivity == 6) return manhattan == 1;
  if (connectivity == 18) return manhattan <= 2;
  return true;  // 26
}

// Components by iterating "each voxel takes the min label of its neighborhood"
// until nothing changes. Quadratic-ish but simple to audit.
inline std::vector<std::vector<Voxel>> components(const Mask& m, int connectivity) {
  const auto vox = mask_voxels(m);
  const int n = static_cast<int>(vox.size());
  std::vector<int> label(n);
  for (int i = 0; i < n; ++i) label[i] = i;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (adjacent(vox[i], vox[j], connectivity) && label[j] < label[i]) {
          label[i] = label[j];
          changed = true;
        }
  }
  std::vector<std::vector<Voxel>> comps;
  std::vector<int> roots;
  for (int i = 0; i < n; ++i) {
    auto it = std::find(roots.begin(), roots.end(), label[i]);
    size_t ci;
    if (it == roots.end()) {
      roots.push_back(label[i]);
      comps.emplace_back();
      ci = comps.size() - 1;
    } else {
      ci = static_cast<size_t>(it - roots.begin());
    }
    comps[ci].push_back(vox[i]);
  }
  return comps;
}

inline std::vector<std::vector<Voxel>> filter_small(std::vector<std::vector<Voxel>> comps,
                                                    int min_size) {
  comps.erase(std::remove_if(comps.begin(), comps.end(),
                             [&](const auto& c) { return static_cast<int>(c.size()) < min_size; }),
              comps.end());
  return comps;
}

inline std::vector<Voxel> boundary(const Mask& m) {
  std::vector<Voxel> out;
  for (const auto& v : mask_voxels(m)) {
    bool bnd = false;
    const int offs[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    for (const auto& o : offs) {
      const int nz = v.z + o[0], ny = v.y + o[1], nx = v.x + o[2];
      if (!m.in_bounds(nz, ny, nx) || !m.at(nz, ny, nx)) {
        bnd = true;
        break;
      }
    }
    if (bnd) out.push_back(v);
  }
  return out;
}

inline double euclid(const Voxel& a, const Voxel& b, const std::array<double, 3>& sp) {
  const double dz = (a.z - b.z) * sp[0], dy = (a.y - b.y) * sp[1], dx = (a.x - b.x) * sp[2];
  return std::sqrt(dz * dz + dy * dy + dx * dx);
}

inline double percentile95(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const double rank = 0.95 * (static_cast<double>(v.size()) - 1.0);
  const size_t lo = static_cast<size_t>(std::floor(rank));
  if (lo + 1 >= v.size()) return v.back();
  const double w = rank - static_cast<double>(lo);
  return v[lo] * (1.0 - w) + v[lo + 1] * w;
}

inline double hd95(const Mask& pred, const Mask& gt, const std::array<double, 3>& sp,
                   double penalty) {
  const auto bp = boundary(pred);
  const auto bg = boundary(gt);
  if (bp.empty() && bg.empty()) return 0.0;
  if (bp.empty() || bg.empty()) return penalty;
  std::vector<double> pooled;
  for (const auto& a : bp) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : bg) best = std::min(best, euclid(a, b, sp));
    pooled.push_back(best);
  }
  for (const auto& b : bg) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& a : bp) best = std::min(best, euclid(b, a, sp));
    pooled.push_back(best);
  }
  return percentile95(pooled);
}

inline double dsc(const Mask& pred, const Mask& gt) {
  int64_t inter = 0, a = 0, b = 0;
  for (int64_t i = 0; i < pred.numel(); ++i) {
    inter += pred.data[i] && gt.data[i];
    a += pred.data[i] != 0;
    b += gt.data[i] != 0;
  }
  return (a + b) == 0 ? 1.0 : 2.0 * static_cast<double>(inter) / static_cast<double>(a + b);
}

inline int chebyshev(const Voxel& a, const Voxel& b) {
  return std::max({std::abs(a.z - b.z), std::abs(a.y - b.y), std::abs(a.x - b.x)});
}

struct LesionWise {
  int tp = 0, fn = 0, fp = 0;
  double dsc = 0.0, hd95 = 0.0;
};

// Direct transcription of the lesion-wise metric: match pred components within
// Chebyshev distance `radius` of each gt component, form the union prediction,
// average metric values over TP+FN+FP slots.
inline LesionWise lesion_wise(const Mask& pred, const Mask& gt, int connectivity, int min_size,
                              int radius, double penalty, const std::array<double, 3>& sp) {
  const Shape3 shape = gt.shape;
  const auto gcomps = filter_small(components(gt, connectivity), min_size);
  const auto pcomps = filter_small(components(pred, connectivity), min_size);

  LesionWise lw;
  std::vector<bool> supports(pcomps.size(), false);
  double dsc_sum = 0.0, hd_sum = 0.0;
  for (const auto& gc : gcomps) {
    std::vector<size_t> hits;
    for (size_t pi = 0; pi < pcomps.size(); ++pi) {
      bool close = false;
      for (const auto& gv : gc) {
        for (const auto& pv : pcomps[pi])
          if (chebyshev(gv, pv) <= radius) {
            close = true;
            break;
          }
        if (close) break;
      }
      if (close) {
        hits.push_back(pi);
        supports[pi] = true;
      }
    }
    if (hits.empty()) {
      ++lw.fn;
      continue;
    }
    ++lw.tp;
    Mask gm(shape), pm(shape);
    for (const auto& v : gc) gm.at(v.z, v.y, v.x) = 1;
    for (size_t pi : hits)
      for (const auto& v : pcomps[pi]) pm.at(v.z, v.y, v.x) = 1;
    dsc_sum += oracle::dsc(pm, gm);
    hd_sum += oracle::hd95(pm, gm, sp, penalty);
  }
  for (size_t pi = 0; pi < pcomps.size(); ++pi)
    if (!supports[pi]) ++lw.fp;

  const int denom = lw.tp + lw.fn + lw.fp;
  if (denom == 0) {
    lw.dsc = 1.0;
    lw.hd95 = 0.0;
  } else {
    lw.dsc = dsc_sum / denom;
    lw.hd95 = (hd_sum + penalty * (lw.fn + lw.fp)) / denom;
  }
  return lw;
}

}  // namespace oracle
