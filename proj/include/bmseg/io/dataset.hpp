#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bmseg/core/volume.hpp"
#include "bmseg/io/nifti.hpp"

namespace bmseg {

namespace fs = std::filesystem;

// File suffixes per modality, BraTS-Mets naming: <id>/<id>-<suffix>.nii[.gz]
inline const std::map<ModalityId, std::string>& default_suffix_map() {
  static const std::map<ModalityId, std::string> m = {{ModalityId::T1, "t1n"},
                                                      {ModalityId::T1C, "t1c"},
                                                      {ModalityId::T2, "t2w"},
                                                      {ModalityId::FLAIR, "t2f"}};
  return m;
}

inline constexpr const char* kLabelSuffix = "seg";

struct CaseEntry {
  std::string id;
  std::map<ModalityId, std::string> modality_files;
  std::string label_file;
};

struct DatasetIndex {
  std::vector<CaseEntry> cases;  // sorted by id
  std::map<std::string, std::vector<std::string>> splits;  // train/val/test -> ids

  const CaseEntry& find(const std::string& id) const {
    for (const auto& c : cases)
      if (c.id == id) return c;
    fail("case id not in index: ", id);
  }
  std::vector<const CaseEntry*> split_cases(const std::string& split) const {
    auto it = splits.find(split);
    require(it != splits.end(), "unknown split ", split);
    std::vector<const CaseEntry*> out;
    for (const auto& id : it->second) out.push_back(&find(id));
    return out;
  }
};

// Either fractional sizes or explicit id lists.
struct SplitSpec {
  std::array<double, 3> fractions{0.85, 0.05, 0.10};  // train/val/test
  std::optional<std::array<std::vector<std::string>, 3>> explicit_ids;
};

namespace detail {

// Rounding rule for fractional splits: non-final splits take the floor of
// their quota, the final split absorbs the remainder. Reproduces the
// reference 238 -> 202/11/25 partition for (0.85, 0.05, 0.10).
inline std::array<size_t, 3> split_sizes(size_t n, const std::array<double, 3>& fractions) {
  double fsum = 0.0;
  for (double f : fractions) {
    require(f >= 0.0, "split fractions must be non-negative");
    fsum += f;
  }
  require(std::abs(fsum - 1.0) < 1e-9, "split fractions must sum to 1");
  std::array<size_t, 3> sizes{};
  size_t used = 0;
  for (int i = 0; i < 2; ++i) {
    sizes[i] = static_cast<size_t>(std::floor(fractions[i] * static_cast<double>(n)));
    used += sizes[i];
  }
  require(used <= n, "split fractions overflow the case count");
  sizes[2] = n - used;
  return sizes;
}

inline std::string case_file(const fs::path& dir, const std::string& id,
                             const std::string& suffix) {
  for (const char* ext : {".nii.gz", ".nii"}) {
    const fs::path p = dir / (id + "-" + suffix + ext);
    if (fs::exists(p)) return p.string();
  }
  return {};
}

}  // namespace detail

// Scans <root>/<id>/ directories for one file per requested modality plus a
// label file. Deterministic: cases sorted by id, splits a pure function of
// the directory contents and split_spec.
inline DatasetIndex discover_dataset(
    const std::string& root, const ModalitySet& modalities, const SplitSpec& split_spec,
    const std::map<ModalityId, std::string>& suffix_map = default_suffix_map()) {
  require(fs::exists(root) && fs::is_directory(root), "dataset root not found: ", root);

  std::vector<std::string> ids;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory()) ids.push_back(e.path().filename().string());
  require(!ids.empty(), "no cases found");
  std::sort(ids.begin(), ids.end());

  DatasetIndex index;
  for (const auto& id : ids) {
    const fs::path dir = fs::path(root) / id;
    CaseEntry entry;
    entry.id = id;
    std::vector<std::string> missing;
    for (ModalityId m : modalities) {
      const auto it = suffix_map.find(m);
      require(it != suffix_map.end(), "no file suffix configured for modality ",
              modality_name(m));
      const std::string f = detail::case_file(dir, id, it->second);
      if (f.empty())
        missing.push_back(modality_name(m));
      else
        entry.modality_files[m] = f;
    }
    entry.label_file = detail::case_file(dir, id, kLabelSuffix);
    if (entry.label_file.empty()) missing.push_back("label");
    if (!missing.empty()) {
      std::string what;
      for (size_t i = 0; i < missing.size(); ++i) what += (i ? ", " : "") + missing[i];
      fail("case ", id, ": missing file(s) for ", what);
    }
    index.cases.push_back(std::move(entry));
  }

  const char* names[3] = {"train", "val", "test"};
  if (split_spec.explicit_ids) {
    std::set<std::string> seen;
    size_t total = 0;
    for (int s = 0; s < 3; ++s) {
      for (const auto& id : (*split_spec.explicit_ids)[s]) {
        index.find(id);  // must exist
        require(seen.insert(id).second, "case ", id, " assigned to more than one split");
        ++total;
      }
      index.splits[names[s]] = (*split_spec.explicit_ids)[s];
    }
    require(total == index.cases.size(), "explicit split lists must cover all ",
            index.cases.size(), " cases (got ", total, ")");
  } else {
    const auto sizes = detail::split_sizes(index.cases.size(), split_spec.fractions);
    size_t at = 0;
    for (int s = 0; s < 3; ++s) {
      std::vector<std::string> split_ids;
      for (size_t i = 0; i < sizes[s]; ++i) split_ids.push_back(index.cases[at++].id);
      index.splits[names[s]] = std::move(split_ids);
    }
  }
  return index;
}

// Loads and stacks the requested modalities in order plus the label volume.
// Shapes must agree across all files; label values must lie in {0,1,2,3}.
inline std::pair<MultiModalVolume, LabelVolume> load_case(const CaseEntry& entry,
                                                          const ModalitySet& modalities) {
  require(!modalities.empty(), "load_case: empty modality list");
  MultiModalVolume vol;
  for (size_t c = 0; c < modalities.size(); ++c) {
    const ModalityId m = modalities[c];
    const auto it = entry.modality_files.find(m);
    require(it != entry.modality_files.end(), "case ", entry.id, ": modality ",
            modality_name(m), " not indexed");
    NiftiVolume nv = read_nifti(it->second);
    if (c == 0) {
      vol = MultiModalVolume(nv.shape, modalities);
      vol.spacing = nv.spacing;
    } else {
      require(nv.shape == vol.shape, "case ", entry.id, ": shape mismatch between modalities (",
              shape_str(vol.shape), " vs ", shape_str(nv.shape), ")");
    }
    std::copy(nv.data.begin(), nv.data.end(), vol.channel(static_cast<int>(c)));
  }

  NiftiVolume lab = read_nifti(entry.label_file);
  require(lab.shape == vol.shape, "case ", entry.id, ": label/image shape mismatch (",
          shape_str(lab.shape), " vs ", shape_str(vol.shape), ")");
  LabelVolume labels(lab.shape);
  for (int64_t i = 0; i < labels.numel(); ++i) {
    const float v = lab.data[i];
    const int iv = static_cast<int>(std::lround(v));
    require(std::abs(v - iv) < 1e-3 && iv >= 0 && iv <= LabelVolume::kMaxLabel,
            "case ", entry.id, ": invalid label ", v);
    labels.vol.data[i] = static_cast<uint8_t>(iv);
  }
  vol.validate();
  return {std::move(vol), std::move(labels)};
}

inline LabelVolume label_volume_from_nifti(const NiftiVolume& nv, const std::string& what) {
  LabelVolume labels(nv.shape);
  for (int64_t i = 0; i < labels.numel(); ++i) {
    const float v = nv.data[i];
    const int iv = static_cast<int>(std::lround(v));
    require(std::abs(v - iv) < 1e-3 && iv >= 0 && iv <= LabelVolume::kMaxLabel, what,
            ": invalid label ", v);
    labels.vol.data[i] = static_cast<uint8_t>(iv);
  }
  return labels;
}

// Per-channel z-score over the strictly nonzero voxels (skull-stripped
// convention); zero voxels stay exactly zero. Population std, guarded by
// eps=1e-8; a channel with no nonzero voxels is returned unchanged.
inline MultiModalVolume normalize(MultiModalVolume vol) {
  constexpr double kEps = 1e-8;
  const int64_t n = vol.voxels();
  for (int c = 0; c < vol.channels; ++c) {
    float* ch = vol.channel(c);
    double sum = 0.0;
    int64_t count = 0;
    for (int64_t i = 0; i < n; ++i)
      if (ch[i] != 0.f) {
        sum += ch[i];
        ++count;
      }
    if (count == 0) continue;
    const double mean = sum / static_cast<double>(count);
    double ss = 0.0;
    for (int64_t i = 0; i < n; ++i)
      if (ch[i] != 0.f) ss += (ch[i] - mean) * (ch[i] - mean);
    const double std_dev = std::max(std::sqrt(ss / static_cast<double>(count)), kEps);
    for (int64_t i = 0; i < n; ++i)
      if (ch[i] != 0.f) ch[i] = static_cast<float>((ch[i] - mean) / std_dev);
  }
  return vol;
}

}  // namespace bmseg
