#pragma once

#include <memory>
#include <string>
#include <vector>

#include "bmseg/core/rng.hpp"
#include "bmseg/nn/checkpoint.hpp"
#include "bmseg/nn/init.hpp"
#include "bmseg/nn/tensor.hpp"

namespace bmseg {

// Owns named parameters; models register weights here so optimizers and
// checkpoints can enumerate them in a stable order.
class ParamRegistry {
public:
  nn::Parameter& add(const std::string& name, std::vector<int> shape) {
    params_.push_back(std::make_unique<nn::Parameter>(name, std::move(shape)));
    return *params_.back();
  }

  std::vector<nn::Parameter*> parameters() {
    std::vector<nn::Parameter*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(p.get());
    return out;
  }

  void zero_grad() {
    for (auto& p : params_) p->zero_grad();
  }

  int64_t parameter_count() const {
    int64_t n = 0;
    for (const auto& p : params_) n += p->value.numel();
    return n;
  }

  void export_to(nn::TensorStore& store, const std::string& prefix = "") const {
    for (const auto& p : params_) store.tensors[prefix + p->name] = p->value;
  }

  void import_from(const nn::TensorStore& store, const std::string& prefix = "") {
    for (auto& p : params_) {
      auto it = store.tensors.find(prefix + p->name);
      require(it != store.tensors.end(), "checkpoint missing tensor ", prefix + p->name);
      require(it->second.shape == p->value.shape, "checkpoint tensor ", p->name,
              " has shape ", it->second.shape_str(), ", expected ", p->value.shape_str());
      p->value = it->second;
    }
  }

private:
  std::vector<std::unique_ptr<nn::Parameter>> params_;
};

}  // namespace bmseg
