#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "bmseg/nn/tensor.hpp"

namespace bmseg::nn {

struct SgdConfig {
  double base_lr = 0.01;
  double momentum = 0.99;  // Nesterov
  double weight_decay = 3e-5;

  void validate() const {
    require(base_lr > 0 && momentum > 0 && weight_decay > 0, "sgd settings must be positive");
  }
};

struct AdamConfig {
  double lr = 4e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const {
    require(beta1 > 0 && beta1 < beta2 && beta2 < 1, "adam betas must satisfy 0 < b1 < b2 < 1");
    require(lr > 0, "adam lr must be positive");
  }
};

// SGD with Nesterov momentum and coupled weight decay.
class SgdOptimizer {
public:
  SgdOptimizer(std::vector<Parameter*> params, SgdConfig cfg)
      : params_(std::move(params)), cfg_(cfg) {
    cfg_.validate();
    for (Parameter* p : params_) buffers_.emplace_back(p->value.shape);
  }

  void step(double lr) {
    const float mu = static_cast<float>(cfg_.momentum);
    const float wd = static_cast<float>(cfg_.weight_decay);
    for (size_t i = 0; i < params_.size(); ++i) {
      Parameter& p = *params_[i];
      Tensor& buf = buffers_[i];
      for (int64_t j = 0; j < p.value.numel(); ++j) {
        const float g = p.grad.data[j] + wd * p.value.data[j];
        buf.data[j] = mu * buf.data[j] + g;
        p.value.data[j] -= static_cast<float>(lr) * (g + mu * buf.data[j]);
      }
    }
  }

  std::vector<Tensor>& state() { return buffers_; }

private:
  std::vector<Parameter*> params_;
  SgdConfig cfg_;
  std::vector<Tensor> buffers_;
};

class AdamOptimizer {
public:
  AdamOptimizer(std::vector<Parameter*> params, AdamConfig cfg)
      : params_(std::move(params)), cfg_(cfg) {
    cfg_.validate();
    for (Parameter* p : params_) {
      m_.emplace_back(p->value.shape);
      v_.emplace_back(p->value.shape);
    }
  }

  void step(double lr) {
    ++t_;
    const double b1 = cfg_.beta1, b2 = cfg_.beta2;
    const double bc1 = 1.0 - std::pow(b1, t_);
    const double bc2 = 1.0 - std::pow(b2, t_);
    for (size_t i = 0; i < params_.size(); ++i) {
      Parameter& p = *params_[i];
      for (int64_t j = 0; j < p.value.numel(); ++j) {
        const double g = p.grad.data[j];
        m_[i].data[j] = static_cast<float>(b1 * m_[i].data[j] + (1.0 - b1) * g);
        v_[i].data[j] = static_cast<float>(b2 * v_[i].data[j] + (1.0 - b2) * g * g);
        const double mhat = m_[i].data[j] / bc1;
        const double vhat = v_[i].data[j] / bc2;
        p.value.data[j] -= static_cast<float>(lr * mhat / (std::sqrt(vhat) + cfg_.eps));
      }
    }
  }

  int64_t steps() const { return t_; }
  void set_steps(int64_t t) { t_ = t; }
  std::vector<Tensor>& state_m() { return m_; }
  std::vector<Tensor>& state_v() { return v_; }

private:
  std::vector<Parameter*> params_;
  AdamConfig cfg_;
  std::vector<Tensor> m_, v_;
  int64_t t_ = 0;
};

}  // namespace bmseg::nn
