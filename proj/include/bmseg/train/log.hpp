#pragma once

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "bmseg/core/error.hpp"

namespace bmseg {

// Per-step CSV loss log plus in-memory traces for determinism checks.
class TrainLogger {
public:
  explicit TrainLogger(const std::string& csv_path = "") {
    if (!csv_path.empty()) {
      csv_.open(csv_path);
      require(csv_.good(), "cannot write loss log ", csv_path);
      csv_ << "step,epoch,lr,loss\n";
    }
  }

  void log(int64_t step, int epoch, double lr, double loss) {
    steps_.push_back(step);
    loss_trace_.push_back(loss);
    lr_trace_.push_back(lr);
    if (csv_.is_open()) {
      csv_.precision(12);
      csv_ << step << "," << epoch << "," << lr << "," << loss << "\n";
    }
  }

  void check_finite(double loss, int64_t step, double lr) const {
    require(std::isfinite(loss), "non-finite loss ", loss, " at step ", step, " (lr=", lr,
            "); aborting instead of skipping");
  }

  const std::vector<double>& loss_trace() const { return loss_trace_; }
  const std::vector<double>& lr_trace() const { return lr_trace_; }

private:
  std::ofstream csv_;
  std::vector<int64_t> steps_;
  std::vector<double> loss_trace_;
  std::vector<double> lr_trace_;
};

}  // namespace bmseg
