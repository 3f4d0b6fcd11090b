#pragma once

#include <string>
#include <vector>

#include "bmseg/io/dataset.hpp"

namespace bmseg {

struct LoadedCase {
  std::string id;
  MultiModalVolume image;  // normalized
  LabelVolume labels;
};

// Loads and z-score-normalizes every case of a split into memory. Desk-scale
// volumes are small; full-resolution datasets would want streaming instead.
inline std::vector<LoadedCase> load_split(const DatasetIndex& index, const std::string& split,
                                          const ModalitySet& modalities) {
  std::vector<LoadedCase> out;
  for (const CaseEntry* entry : index.split_cases(split)) {
    auto [vol, labels] = load_case(*entry, modalities);
    out.push_back({entry->id, normalize(std::move(vol)), std::move(labels)});
  }
  return out;
}

}  // namespace bmseg
