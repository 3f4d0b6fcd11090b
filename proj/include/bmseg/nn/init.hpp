#pragma once

#include <cmath>

#include "bmseg/core/rng.hpp"
#include "bmseg/nn/tensor.hpp"

namespace bmseg::nn {

// Kaiming-normal fan-in init for conv/linear weights (leaky-relu gain).
inline void kaiming_init(Parameter& p, Rng& rng, float neg_slope = 0.01f) {
  const auto& s = p.value.shape;
  int64_t fan_in = 1;
  for (size_t i = 1; i < s.size(); ++i) fan_in *= s[i];
  const double gain = std::sqrt(2.0 / (1.0 + neg_slope * neg_slope));
  const double stddev = gain / std::sqrt(static_cast<double>(std::max<int64_t>(fan_in, 1)));
  for (auto& v : p.value.data) v = static_cast<float>(rand_normal(rng, 0.0, stddev));
}

inline void constant_init(Parameter& p, float value) {
  std::fill(p.value.data.begin(), p.value.data.end(), value);
}

}  // namespace bmseg::nn
