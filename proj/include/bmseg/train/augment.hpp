#pragma once

#include <cmath>

#include "bmseg/core/rng.hpp"
#include "bmseg/patch/sample.hpp"

namespace bmseg {

// Transform magnitudes follow common self-configuring-segmentation defaults;
// every transform is individually switchable.
struct AugmentationConfig {
  bool enabled = true;
  double p_rotation = 0.2;
  double rot_max_deg = 30.0;  // per axis
  double p_scale = 0.2;
  double scale_min = 0.7, scale_max = 1.4;
  double p_noise = 0.1;
  double noise_var_max = 0.1;
  double p_smooth = 0.2;
  double smooth_sigma_min = 0.5, smooth_sigma_max = 1.0;
  double p_mirror = 0.5;  // per axis
  double p_lowres = 0.25;
  double lowres_factor_max = 2.0;

  void validate() const {
    for (double p : {p_rotation, p_scale, p_noise, p_smooth, p_mirror, p_lowres})
      require(p >= 0.0 && p <= 1.0, "augmentation probabilities must lie in [0,1]");
    require(scale_min <= scale_max && smooth_sigma_min <= smooth_sigma_max &&
                lowres_factor_max >= 1.0,
            "augmentation ranges must be ordered");
  }

  static AugmentationConfig disabled() {
    AugmentationConfig cfg;
    cfg.enabled = false;
    return cfg;
  }
};

namespace aug_detail {

using Mat3 = std::array<std::array<double, 3>, 3>;

inline Mat3 matmul(const Mat3& a, const Mat3& b) {
  Mat3 c{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
  return c;
}

inline Mat3 rotation(int axis, double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  Mat3 m{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  const int u = (axis + 1) % 3, v = (axis + 2) % 3;
  m[u][u] = c;
  m[u][v] = -s;
  m[v][u] = s;
  m[v][v] = c;
  return m;
}

inline float sample_trilinear(const float* vol, const Shape3& s, double z, double y, double x) {
  const int z0 = static_cast<int>(std::floor(z)), y0 = static_cast<int>(std::floor(y)),
            x0 = static_cast<int>(std::floor(x));
  const double fz = z - z0, fy = y - y0, fx = x - x0;
  double acc = 0.0;
  for (int dz = 0; dz <= 1; ++dz)
    for (int dy = 0; dy <= 1; ++dy)
      for (int dx = 0; dx <= 1; ++dx) {
        const int zz = z0 + dz, yy = y0 + dy, xx = x0 + dx;
        if (zz < 0 || yy < 0 || xx < 0 || zz >= s[0] || yy >= s[1] || xx >= s[2]) continue;
        const double w = (dz ? fz : 1 - fz) * (dy ? fy : 1 - fy) * (dx ? fx : 1 - fx);
        acc += w * vol[(static_cast<int64_t>(zz) * s[1] + yy) * s[2] + xx];
      }
  return static_cast<float>(acc);
}

inline uint8_t sample_nearest(const uint8_t* vol, const Shape3& s, double z, double y, double x) {
  const int zz = static_cast<int>(std::lround(z)), yy = static_cast<int>(std::lround(y)),
            xx = static_cast<int>(std::lround(x));
  if (zz < 0 || yy < 0 || xx < 0 || zz >= s[0] || yy >= s[1] || xx >= s[2]) return 0;
  return vol[(static_cast<int64_t>(zz) * s[1] + yy) * s[2] + xx];
}

inline void separable_gaussian(float* data, const Shape3& s, double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * (i / sigma) * (i / sigma));
    sum += kernel[i + radius];
  }
  for (auto& k : kernel) k /= sum;

  std::vector<float> tmp(shape_numel(s));
  for (int axis = 0; axis < 3; ++axis) {
    const int len = s[axis];
    for (int a = 0; a < s[(axis + 1) % 3]; ++a)
      for (int b = 0; b < s[(axis + 2) % 3]; ++b)
        for (int i = 0; i < len; ++i) {
          double acc = 0.0;
          for (int o = -radius; o <= radius; ++o) {
            const int j = std::clamp(i + o, 0, len - 1);
            int zyx[3];
            zyx[axis] = j;
            zyx[(axis + 1) % 3] = a;
            zyx[(axis + 2) % 3] = b;
            acc += kernel[o + radius] *
                   data[(static_cast<int64_t>(zyx[0]) * s[1] + zyx[1]) * s[2] + zyx[2]];
          }
          int zyx[3];
          zyx[axis] = i;
          zyx[(axis + 1) % 3] = a;
          zyx[(axis + 2) % 3] = b;
          tmp[(static_cast<int64_t>(zyx[0]) * s[1] + zyx[1]) * s[2] + zyx[2]] =
              static_cast<float>(acc);
        }
    std::copy(tmp.begin(), tmp.end(), data);
  }
}

}  // namespace aug_detail

// Spatial transforms hit image and label identically (trilinear vs nearest);
// intensity transforms are image-only. The positivity flag is recomputed.
inline PatchSample augment(const PatchSample& in, const AugmentationConfig& cfg, Rng& rng,
                           int min_fg = 1) {
  cfg.validate();
  if (!cfg.enabled) return in;
  PatchSample out = in;
  const Shape3 s = in.size;
  const int64_t vox = shape_numel(s);

  // combined rotation + scale resample
  const bool do_rot = rand_uniform(rng, 0, 1) < cfg.p_rotation;
  const bool do_scale = rand_uniform(rng, 0, 1) < cfg.p_scale;
  if (do_rot || do_scale) {
    aug_detail::Mat3 fwd{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    if (do_rot) {
      for (int axis = 0; axis < 3; ++axis) {
        const double deg = rand_uniform(rng, -cfg.rot_max_deg, cfg.rot_max_deg);
        fwd = aug_detail::matmul(aug_detail::rotation(axis, deg * M_PI / 180.0), fwd);
      }
    }
    double inv_scale = 1.0;
    if (do_scale) inv_scale = 1.0 / rand_uniform(rng, cfg.scale_min, cfg.scale_max);
    // inverse map: transpose of rotation (orthonormal) times inverse scale
    const std::array<double, 3> center = {(s[0] - 1) / 2.0, (s[1] - 1) / 2.0, (s[2] - 1) / 2.0};
    std::vector<float> img(out.data.size());
    Volume<uint8_t> lab(s);
    int64_t i = 0;
    for (int z = 0; z < s[0]; ++z)
      for (int y = 0; y < s[1]; ++y)
        for (int x = 0; x < s[2]; ++x, ++i) {
          const double pz = z - center[0], py = y - center[1], px = x - center[2];
          const double sz = (fwd[0][0] * pz + fwd[1][0] * py + fwd[2][0] * px) * inv_scale +
                            center[0];
          const double sy = (fwd[0][1] * pz + fwd[1][1] * py + fwd[2][1] * px) * inv_scale +
                            center[1];
          const double sx = (fwd[0][2] * pz + fwd[1][2] * py + fwd[2][2] * px) * inv_scale +
                            center[2];
          for (int c = 0; c < in.channels; ++c)
            img[c * vox + i] =
                aug_detail::sample_trilinear(out.data.data() + c * vox, s, sz, sy, sx);
          lab.data[i] = aug_detail::sample_nearest(out.label_patch.data.data(), s, sz, sy, sx);
        }
    out.data = std::move(img);
    out.label_patch = std::move(lab);
  }

  // gaussian noise
  if (rand_uniform(rng, 0, 1) < cfg.p_noise) {
    const double var = rand_uniform(rng, 0.0, cfg.noise_var_max);
    const double sigma = std::sqrt(var);
    for (auto& v : out.data) v += static_cast<float>(rand_normal(rng, 0.0, sigma));
  }

  // gaussian smoothing
  if (rand_uniform(rng, 0, 1) < cfg.p_smooth) {
    const double sigma = rand_uniform(rng, cfg.smooth_sigma_min, cfg.smooth_sigma_max);
    for (int c = 0; c < out.channels; ++c)
      aug_detail::separable_gaussian(out.data.data() + c * vox, s, sigma);
  }

  // mirroring per axis
  for (int axis = 0; axis < 3; ++axis) {
    if (rand_uniform(rng, 0, 1) >= cfg.p_mirror) continue;
    const auto flip_index = [&](int z, int y, int x) {
      int zyx[3] = {z, y, x};
      zyx[axis] = s[axis] - 1 - zyx[axis];
      return (static_cast<int64_t>(zyx[0]) * s[1] + zyx[1]) * s[2] + zyx[2];
    };
    std::vector<float> img(out.data.size());
    Volume<uint8_t> lab(s);
    int64_t i = 0;
    for (int z = 0; z < s[0]; ++z)
      for (int y = 0; y < s[1]; ++y)
        for (int x = 0; x < s[2]; ++x, ++i) {
          const int64_t j = flip_index(z, y, x);
          for (int c = 0; c < out.channels; ++c) img[c * vox + i] = out.data[c * vox + j];
          lab.data[i] = out.label_patch.data[j];
        }
    out.data = std::move(img);
    out.label_patch = std::move(lab);
  }

  // simulated low resolution: box-downsample then trilinear upsample, images only
  if (rand_uniform(rng, 0, 1) < cfg.p_lowres) {
    const double factor = rand_uniform(rng, 1.0, cfg.lowres_factor_max);
    if (factor > 1.01) {
      const Shape3 ds = {std::max(1, static_cast<int>(s[0] / factor)),
                         std::max(1, static_cast<int>(s[1] / factor)),
                         std::max(1, static_cast<int>(s[2] / factor))};
      for (int c = 0; c < out.channels; ++c) {
        float* ch = out.data.data() + c * vox;
        std::vector<float> small(shape_numel(ds));
        int64_t i = 0;
        for (int z = 0; z < ds[0]; ++z)
          for (int y = 0; y < ds[1]; ++y)
            for (int x = 0; x < ds[2]; ++x, ++i)
              small[i] = aug_detail::sample_trilinear(
                  ch, s, (z + 0.5) * s[0] / ds[0] - 0.5, (y + 0.5) * s[1] / ds[1] - 0.5,
                  (x + 0.5) * s[2] / ds[2] - 0.5);
        i = 0;
        for (int z = 0; z < s[0]; ++z)
          for (int y = 0; y < s[1]; ++y)
            for (int x = 0; x < s[2]; ++x, ++i)
              ch[i] = aug_detail::sample_trilinear(
                  small.data(), ds, (z + 0.5) * ds[0] / s[0] - 0.5, (y + 0.5) * ds[1] / s[1] - 0.5,
                  (x + 0.5) * ds[2] / s[2] - 0.5);
      }
    }
  }

  int fg = 0;
  for (uint8_t v : out.label_patch.data)
    if (v > 0) ++fg;
  out.positive = fg >= min_fg;
  return out;
}

// Exposed for the involution property: mirroring twice restores the sample.
inline PatchSample mirror_axis(const PatchSample& in, int axis) {
  PatchSample out = in;
  const Shape3 s = in.size;
  const int64_t vox = shape_numel(s);
  int64_t i = 0;
  for (int z = 0; z < s[0]; ++z)
    for (int y = 0; y < s[1]; ++y)
      for (int x = 0; x < s[2]; ++x, ++i) {
        int zyx[3] = {z, y, x};
        zyx[axis] = s[axis] - 1 - zyx[axis];
        const int64_t j = (static_cast<int64_t>(zyx[0]) * s[1] + zyx[1]) * s[2] + zyx[2];
        for (int c = 0; c < in.channels; ++c) out.data[c * vox + i] = in.data[c * vox + j];
        out.label_patch.data[i] = in.label_patch.data[j];
      }
  return out;
}

}  // namespace bmseg
