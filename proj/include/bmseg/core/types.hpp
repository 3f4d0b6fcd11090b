#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "bmseg/core/error.hpp"

namespace bmseg {

// MRI sequences available in the dataset. The enum order is the canonical
// channel order used everywhere a subset is materialized.
enum class ModalityId : uint8_t { T1 = 0, T1C = 1, T2 = 2, FLAIR = 3 };

constexpr int kNumModalities = 4;

inline const char* modality_name(ModalityId m) {
  switch (m) {
    case ModalityId::T1: return "t1";
    case ModalityId::T1C: return "t1c";
    case ModalityId::T2: return "t2";
    case ModalityId::FLAIR: return "f";
  }
  return "?";
}

inline ModalityId parse_modality(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "t1") return ModalityId::T1;
  if (s == "t1c" || s == "t1ce") return ModalityId::T1C;
  if (s == "t2") return ModalityId::T2;
  if (s == "f" || s == "flair" || s == "t2f") return ModalityId::FLAIR;
  fail("unknown modality '", s, "' (expected one of t1, t1c, t2, f)");
}

// Ordered, duplicate-free modality subset in canonical order.
using ModalitySet = std::vector<ModalityId>;

inline ModalitySet make_modality_set(std::vector<ModalityId> ms) {
  require(!ms.empty(), "modality subset must be non-empty");
  std::sort(ms.begin(), ms.end());
  auto it = std::unique(ms.begin(), ms.end());
  require(it == ms.end(), "modality subset contains duplicates");
  return ms;
}

// Parses "t1c,t1,f" style lists; result is canonically ordered.
inline ModalitySet parse_modality_set(const std::string& csv) {
  std::vector<ModalityId> ms;
  std::string cur;
  for (char c : csv) {
    if (c == ',' || c == '+') {
      if (!cur.empty()) ms.push_back(parse_modality(cur));
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) ms.push_back(parse_modality(cur));
  return make_modality_set(std::move(ms));
}

inline std::string modality_set_name(const ModalitySet& ms) {
  std::string out;
  for (size_t i = 0; i < ms.size(); ++i) {
    if (i) out += "+";
    out += modality_name(ms[i]);
  }
  return out;
}

// All 15 non-empty subsets of {T1, T1C, T2, FLAIR}, ordered by subset size
// then canonical modality order. Stable and duplicate-free.
inline std::vector<ModalitySet> all_modality_subsets() {
  std::vector<ModalitySet> out;
  for (int size = 1; size <= kNumModalities; ++size) {
    for (int bits = 1; bits < (1 << kNumModalities); ++bits) {
      if (__builtin_popcount(static_cast<unsigned>(bits)) != size) continue;
      ModalitySet ms;
      for (int m = 0; m < kNumModalities; ++m)
        if (bits & (1 << m)) ms.push_back(static_cast<ModalityId>(m));
      out.push_back(std::move(ms));
    }
  }
  return out;
}

// Spatial shape in (z, y, x) voxel order.
using Shape3 = std::array<int, 3>;

inline int64_t shape_numel(const Shape3& s) {
  return static_cast<int64_t>(s[0]) * s[1] * s[2];
}

inline std::string shape_str(const Shape3& s) {
  return std::to_string(s[0]) + "x" + std::to_string(s[1]) + "x" + std::to_string(s[2]);
}

}  // namespace bmseg
