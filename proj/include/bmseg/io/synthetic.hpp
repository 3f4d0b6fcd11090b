#pragma once

#include <cmath>
#include <filesystem>
#include <vector>

#include "bmseg/core/rng.hpp"
#include "bmseg/core/volume.hpp"
#include "bmseg/io/dataset.hpp"
#include "bmseg/io/nifti.hpp"

namespace bmseg {

// Desk-scale verification data: ellipsoidal lesions on a noisy "brain"
// ellipsoid, zeros outside (skull-stripped convention). Lesion cores are
// label 3 with a random sub-blob of label 1 and a one-voxel label-2 shell,
// so WT, TC and ET are all exercised.
struct SyntheticSpec {
  int n_cases = 8;
  Shape3 shape{48, 48, 48};
  int n_channels = 3;
  ModalitySet modalities;  // optional; overrides n_channels when non-empty
  int lesion_count_min = 1;
  int lesion_count_max = 3;
  double lesion_radius_min = 3.0;
  double lesion_radius_max = 6.0;
  double noise_std = 0.05;
  uint64_t seed = 17;

  ModalitySet channel_modalities() const {
    if (!modalities.empty()) return modalities;
    ModalitySet mods;
    for (int c = 0; c < n_channels; ++c) mods.push_back(static_cast<ModalityId>(c));
    return mods;
  }

  void validate() const {
    require(n_cases >= 0, "n_cases must be non-negative");
    require(!channel_modalities().empty() &&
                channel_modalities().size() <= static_cast<size_t>(kNumModalities),
            "n_channels must be in [1,4]");
    require(lesion_count_min >= 0 && lesion_count_max >= lesion_count_min,
            "invalid lesion count range");
    require(lesion_radius_min > 0 && lesion_radius_max >= lesion_radius_min,
            "lesion radius range must be positive");
    for (int a = 0; a < 3; ++a) require(shape[a] >= 8, "synthetic shape too small");
  }
};

struct SyntheticCase {
  std::string id;
  MultiModalVolume image;
  LabelVolume labels;
};

namespace detail {

struct Lesion {
  std::array<double, 3> center;
  std::array<double, 3> radii;
};

inline bool inside(const Lesion& l, double z, double y, double x, double scale = 1.0) {
  const double dz = (z - l.center[0]) / (l.radii[0] * scale);
  const double dy = (y - l.center[1]) / (l.radii[1] * scale);
  const double dx = (x - l.center[2]) / (l.radii[2] * scale);
  return dz * dz + dy * dy + dx * dx <= 1.0;
}

}  // namespace detail

inline SyntheticCase generate_synthetic_case(const SyntheticSpec& spec, int case_index) {
  Rng rng = make_rng(spec.seed, 0xCA5E, static_cast<uint64_t>(case_index));
  const Shape3 s = spec.shape;

  SyntheticCase out;
  {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "case-%03d", case_index);
    out.id = buf;
  }
  out.image = MultiModalVolume(s, spec.channel_modalities());
  out.labels = LabelVolume(s);

  // place non-overlapping lesions, keeping >=3 voxels between surfaces so the
  // label-2 shells stay disconnected
  const int n_lesions = rand_int(rng, spec.lesion_count_min, spec.lesion_count_max);
  std::vector<detail::Lesion> lesions;
  int attempts = 0;
  const int max_attempts = 200 * std::max(1, n_lesions);
  while (static_cast<int>(lesions.size()) < n_lesions) {
    require(attempts++ < max_attempts,
            "could not place ", n_lesions, " non-overlapping lesions in ", shape_str(s),
            " after ", max_attempts, " attempts");
    detail::Lesion l;
    for (int a = 0; a < 3; ++a)
      l.radii[a] = rand_uniform(rng, spec.lesion_radius_min, spec.lesion_radius_max);
    const double rmax = std::max({l.radii[0], l.radii[1], l.radii[2]});
    bool fits = true;
    for (int a = 0; a < 3; ++a) {
      const double margin = rmax + 3.0;
      if (s[a] - 1 - margin < margin) {
        fits = false;
        break;
      }
      l.center[a] = rand_uniform(rng, margin, s[a] - 1 - margin);
    }
    require(fits, "lesion radius range too large for shape ", shape_str(s));
    bool overlaps = false;
    for (const auto& other : lesions) {
      const double dz = l.center[0] - other.center[0];
      const double dy = l.center[1] - other.center[1];
      const double dx = l.center[2] - other.center[2];
      const double dist = std::sqrt(dz * dz + dy * dy + dx * dx);
      const double other_rmax = std::max({other.radii[0], other.radii[1], other.radii[2]});
      if (dist < rmax + other_rmax + 4.0) {
        overlaps = true;
        break;
      }
    }
    if (!overlaps) lesions.push_back(l);
  }

  // labels: core 3, sub-blob 1, one-voxel shell 2
  for (const auto& l : lesions) {
    detail::Lesion sub;
    for (int a = 0; a < 3; ++a) {
      sub.radii[a] = std::max(1.0, l.radii[a] * 0.45);
      sub.center[a] = l.center[a] + rand_uniform(rng, -l.radii[a] * 0.3, l.radii[a] * 0.3);
    }
    for (int z = 0; z < s[0]; ++z)
      for (int y = 0; y < s[1]; ++y)
        for (int x = 0; x < s[2]; ++x) {
          if (!detail::inside(l, z, y, x)) continue;
          const bool in_sub = detail::inside(sub, z, y, x);
          out.labels.vol.at(z, y, x) = in_sub ? 1 : 3;
        }
  }
  // shell: background voxels 26-adjacent to a core voxel
  {
    Volume<uint8_t> shell(s);
    for (int z = 0; z < s[0]; ++z)
      for (int y = 0; y < s[1]; ++y)
        for (int x = 0; x < s[2]; ++x) {
          if (out.labels.vol.at(z, y, x) != 0) continue;
          bool near = false;
          for (int dz = -1; dz <= 1 && !near; ++dz)
            for (int dy = -1; dy <= 1 && !near; ++dy)
              for (int dx = -1; dx <= 1; ++dx) {
                const int nz = z + dz, ny = y + dy, nx = x + dx;
                if (out.labels.vol.in_bounds(nz, ny, nx) && out.labels.vol.at(nz, ny, nx) > 0) {
                  near = true;
                  break;
                }
              }
          shell.at(z, y, x) = near;
        }
    for (int64_t i = 0; i < shell.numel(); ++i)
      if (shell.data[i]) out.labels.vol.data[i] = 2;
  }

  // intensities: noisy unit background inside the brain ellipsoid, per-channel
  // additive offsets inside lesion tissue
  detail::Lesion brain;
  for (int a = 0; a < 3; ++a) {
    brain.center[a] = (s[a] - 1) / 2.0;
    brain.radii[a] = s[a] * 0.48;
  }
  for (int c = 0; c < out.image.channels; ++c) {
    float* ch = out.image.channel(c);
    const double lesion_gain = 2.0 + 0.5 * c;
    int64_t i = 0;
    for (int z = 0; z < s[0]; ++z)
      for (int y = 0; y < s[1]; ++y)
        for (int x = 0; x < s[2]; ++x, ++i) {
          if (!detail::inside(brain, z, y, x)) {
            ch[i] = 0.f;
            continue;
          }
          double v = 1.0 + rand_normal(rng, 0.0, spec.noise_std);
          const uint8_t lab = out.labels.vol.data[i];
          if (lab == 3 || lab == 1) v += lesion_gain;
          if (lab == 2) v += lesion_gain * 0.6;
          ch[i] = static_cast<float>(v != 0.0 ? v : 1e-4);  // keep brain voxels nonzero
        }
  }
  return out;
}

inline std::vector<SyntheticCase> generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::vector<SyntheticCase> out;
  out.reserve(spec.n_cases);
  for (int i = 0; i < spec.n_cases; ++i) out.push_back(generate_synthetic_case(spec, i));
  return out;
}

// Writes the cases in the on-disk layout discover_dataset expects.
inline void write_synthetic_dataset(const SyntheticSpec& spec, const std::string& root,
                                    bool gzip = true) {
  const auto cases = generate_synthetic(spec);
  const auto& suffixes = default_suffix_map();
  const char* ext = gzip ? ".nii.gz" : ".nii";
  for (const auto& c : cases) {
    const std::filesystem::path dir = std::filesystem::path(root) / c.id;
    std::filesystem::create_directories(dir);
    for (int ch = 0; ch < c.image.channels; ++ch) {
      const std::string suffix = suffixes.at(c.image.modalities[ch]);
      write_nifti((dir / (c.id + "-" + suffix + ext)).string(), c.image.shape, c.image.spacing,
                  c.image.channel(ch));
    }
    write_nifti_labels((dir / (c.id + "-" + std::string(kLabelSuffix) + ext)).string(),
                       c.labels.shape(), c.image.spacing, c.labels.vol.data.data());
  }
}

}  // namespace bmseg
