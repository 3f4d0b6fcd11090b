#pragma once

#include <cstdint>
#include <vector>

#include "bmseg/core/volume.hpp"

namespace bmseg {

// Voxel adjacency offsets for 6/18/26 connectivity.
inline const std::vector<std::array<int, 3>>& connectivity_offsets(int connectivity) {
  static const std::vector<std::array<int, 3>> c6 = [] {
    std::vector<std::array<int, 3>> v;
    v.push_back({1, 0, 0});
    v.push_back({-1, 0, 0});
    v.push_back({0, 1, 0});
    v.push_back({0, -1, 0});
    v.push_back({0, 0, 1});
    v.push_back({0, 0, -1});
    return v;
  }();
  static const std::vector<std::array<int, 3>> c18 = [] {
    std::vector<std::array<int, 3>> v;
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          int nz = std::abs(dz) + std::abs(dy) + std::abs(dx);
          if (nz == 1 || nz == 2) v.push_back({dz, dy, dx});
        }
    return v;
  }();
  static const std::vector<std::array<int, 3>> c26 = [] {
    std::vector<std::array<int, 3>> v;
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          if (dz || dy || dx) v.push_back({dz, dy, dx});
    return v;
  }();
  switch (connectivity) {
    case 6: return c6;
    case 18: return c18;
    case 26: return c26;
    default: fail("connectivity must be 6, 18 or 26, got ", connectivity);
  }
}

// Connected components of a binary mask. Components hold sorted linear voxel
// indices and are ordered by their minimum linear index.
struct LesionSet {
  Shape3 shape{0, 0, 0};
  int connectivity = 26;
  std::vector<std::vector<int64_t>> components;

  size_t count() const { return components.size(); }
};

inline LesionSet connected_components(const Mask& mask, int connectivity = 26) {
  const auto& offs = connectivity_offsets(connectivity);
  LesionSet ls;
  ls.shape = mask.shape;
  ls.connectivity = connectivity;

  const int D = mask.shape[0], H = mask.shape[1], W = mask.shape[2];
  std::vector<uint8_t> visited(mask.numel(), 0);
  std::vector<int64_t> stack;

  for (int64_t seed = 0; seed < mask.numel(); ++seed) {
    if (!mask.data[seed] || visited[seed]) continue;
    std::vector<int64_t> comp;
    visited[seed] = 1;
    stack.assign(1, seed);
    while (!stack.empty()) {
      const int64_t cur = stack.back();
      stack.pop_back();
      comp.push_back(cur);
      const int z = static_cast<int>(cur / (static_cast<int64_t>(H) * W));
      const int y = static_cast<int>((cur / W) % H);
      const int x = static_cast<int>(cur % W);
      for (const auto& o : offs) {
        const int nz = z + o[0], ny = y + o[1], nx = x + o[2];
        if (nz < 0 || ny < 0 || nx < 0 || nz >= D || ny >= H || nx >= W) continue;
        const int64_t ni = mask.index(nz, ny, nx);
        if (mask.data[ni] && !visited[ni]) {
          visited[ni] = 1;
          stack.push_back(ni);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    ls.components.push_back(std::move(comp));
  }
  return ls;
}

// Drops components with fewer than min_size voxels.
inline LesionSet filter_small(const LesionSet& ls, int min_size) {
  LesionSet out;
  out.shape = ls.shape;
  out.connectivity = ls.connectivity;
  for (const auto& c : ls.components)
    if (static_cast<int>(c.size()) >= min_size) out.components.push_back(c);
  return out;
}

inline Mask materialize(const Shape3& shape, const std::vector<int64_t>& indices) {
  Mask m(shape);
  for (int64_t i : indices) m.data[i] = 1;
  return m;
}

// Morphological dilation by `radius` iterations of the given neighborhood.
// With the default 26-neighborhood this grows a Chebyshev ball of the radius.
inline Mask dilate(const Mask& mask, int radius, int connectivity = 26) {
  if (radius <= 0) return mask;
  const auto& offs = connectivity_offsets(connectivity);
  const int D = mask.shape[0], H = mask.shape[1], W = mask.shape[2];
  Mask cur = mask;
  for (int it = 0; it < radius; ++it) {
    Mask next = cur;
    for (int z = 0; z < D; ++z)
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
          if (!cur.at(z, y, x)) continue;
          for (const auto& o : offs) {
            const int nz = z + o[0], ny = y + o[1], nx = x + o[2];
            if (nz < 0 || ny < 0 || nx < 0 || nz >= D || ny >= H || nx >= W) continue;
            next.at(nz, ny, nx) = 1;
          }
        }
    cur = std::move(next);
  }
  return cur;
}

}  // namespace bmseg
