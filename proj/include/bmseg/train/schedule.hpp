#pragma once

#include <cmath>

#include "bmseg/core/error.hpp"

namespace bmseg {

enum class PolyDirection {
  Decay,    // base * (1 - epoch/max_epoch)^0.9
  Literal,  // base * (epoch/max_epoch)^0.9, the formula as printed
};

struct PolyScheduleConfig {
  double base_lr = 0.01;
  int max_epoch = 1000;
  double exponent = 0.9;
  PolyDirection direction = PolyDirection::Decay;
};

struct WarmupCosineConfig {
  double start_lr = 1e-6;
  double peak_lr = 4e-4;
  int warmup_epochs = 10;
  int max_epoch = 400;
  double min_lr = 0.0;

  void validate() const {
    require(warmup_epochs < max_epoch, "warmup must end before max_epoch");
    require(start_lr > 0 && peak_lr > 0 && min_lr >= 0, "schedule lrs must be non-negative");
  }
};

inline double poly_lr(int epoch, const PolyScheduleConfig& cfg) {
  require(epoch >= 0 && epoch <= cfg.max_epoch, "poly_lr: epoch ", epoch, " outside [0, ",
          cfg.max_epoch, "]");
  const double frac = static_cast<double>(epoch) / cfg.max_epoch;
  if (cfg.direction == PolyDirection::Decay)
    return cfg.base_lr * std::pow(1.0 - frac, cfg.exponent);
  return cfg.base_lr * std::pow(frac, cfg.exponent);
}

// Linear warmup from start_lr to peak_lr, then cosine annealing to min_lr.
inline double warmup_cosine_lr(int epoch, const WarmupCosineConfig& cfg) {
  cfg.validate();
  require(epoch >= 0 && epoch <= cfg.max_epoch, "warmup_cosine_lr: epoch ", epoch,
          " outside [0, ", cfg.max_epoch, "]");
  if (epoch < cfg.warmup_epochs) {
    const double t = static_cast<double>(epoch) / cfg.warmup_epochs;
    return cfg.start_lr + t * (cfg.peak_lr - cfg.start_lr);
  }
  const double t = static_cast<double>(epoch - cfg.warmup_epochs) /
                   (cfg.max_epoch - cfg.warmup_epochs);
  return cfg.min_lr + 0.5 * (cfg.peak_lr - cfg.min_lr) * (1.0 + std::cos(M_PI * t));
}

}  // namespace bmseg
