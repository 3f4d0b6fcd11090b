#pragma once

#include <string>
#include <vector>

#include "bmseg/models/common.hpp"
#include "bmseg/nn/autograd.hpp"

namespace bmseg {

// Dense-connectivity 3D patch classifier. The default configuration is the
// 121-layer plan (growth 32, blocks 6/12/24/16, compression 0.5) built with
// 3D convolutions; normalization is instance-style affine norm throughout.
struct DetectorConfig {
  int in_channels = 3;
  int growth_rate = 32;
  std::vector<int> block_layers = {6, 12, 24, 16};
  double compression = 0.5;
  int init_features = 64;
  int bn_size = 4;     // bottleneck width = bn_size * growth_rate
  int stem_kernel = 7; // stride-2 stem; scaled configs use 3
  uint64_t init_seed = 101;

  void validate() const {
    require(in_channels >= 1, "detector needs at least one input channel");
    require(compression > 0.0 && compression <= 1.0, "compression must be in (0,1]");
    require(!block_layers.empty(), "detector needs at least one dense block");
    require(growth_rate >= 1 && init_features >= 1 && bn_size >= 1, "invalid detector widths");
    require(stem_kernel % 2 == 1, "stem kernel must be odd");
  }

  std::string canonical() const {
    std::string s = "detector;in=" + std::to_string(in_channels) +
                    ";growth=" + std::to_string(growth_rate) + ";blocks=";
    for (size_t i = 0; i < block_layers.size(); ++i)
      s += (i ? "-" : "") + std::to_string(block_layers[i]);
    s += ";comp=" + std::to_string(compression) + ";init=" + std::to_string(init_features) +
         ";bn=" + std::to_string(bn_size) + ";stem=" + std::to_string(stem_kernel);
    return s;
  }
};

class DenseNetDetector {
public:
  explicit DenseNetDetector(DetectorConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    Rng rng = make_rng(cfg_.init_seed, 0xDE7EC7);

    auto conv = [&](const std::string& name, int ci, int co, int k) -> nn::Parameter& {
      nn::Parameter& p = reg_.add(name, {co, ci, k, k, k});
      nn::kaiming_init(p, rng, 0.f);
      return p;
    };
    auto norm = [&](const std::string& name, int c) -> std::pair<nn::Parameter*, nn::Parameter*> {
      nn::Parameter& g = reg_.add(name + ".gamma", {c});
      nn::Parameter& b = reg_.add(name + ".beta", {c});
      nn::constant_init(g, 1.f);
      nn::constant_init(b, 0.f);
      return {&g, &b};
    };

    stem_conv_ = &conv("stem.conv", cfg_.in_channels, cfg_.init_features, cfg_.stem_kernel);
    std::tie(stem_gamma_, stem_beta_) = norm("stem.norm", cfg_.init_features);

    int features = cfg_.init_features;
    const int bottleneck = cfg_.bn_size * cfg_.growth_rate;
    for (size_t bi = 0; bi < cfg_.block_layers.size(); ++bi) {
      Block block;
      for (int li = 0; li < cfg_.block_layers[bi]; ++li) {
        const std::string base =
            "block" + std::to_string(bi) + ".layer" + std::to_string(li);
        DenseLayer layer;
        std::tie(layer.norm1_gamma, layer.norm1_beta) = norm(base + ".norm1", features);
        layer.conv1 = &conv(base + ".conv1", features, bottleneck, 1);
        std::tie(layer.norm2_gamma, layer.norm2_beta) = norm(base + ".norm2", bottleneck);
        layer.conv2 = &conv(base + ".conv2", bottleneck, cfg_.growth_rate, 3);
        block.layers.push_back(layer);
        features += cfg_.growth_rate;
      }
      if (bi + 1 < cfg_.block_layers.size()) {
        const std::string base = "transition" + std::to_string(bi);
        std::tie(block.trans_gamma, block.trans_beta) = norm(base + ".norm", features);
        const int compressed = std::max(1, static_cast<int>(features * cfg_.compression));
        block.trans_conv = &conv(base + ".conv", features, compressed, 1);
        features = compressed;
      }
      blocks_.push_back(block);
    }
    std::tie(final_gamma_, final_beta_) = norm("final.norm", features);
    head_w_ = &reg_.add("head.weight", {1, features});
    head_b_ = &reg_.add("head.bias", {1});
    nn::kaiming_init(*head_w_, rng, 0.f);
    final_features_ = features;
  }

  // batch [B, C, s, s, s] -> logits [B]
  nn::Node* forward_logits(nn::Tape& tape, const nn::Tensor& batch) {
    require(batch.ndim() == 5, "detector expects [B,C,D,H,W], got ", batch.shape_str());
    require(batch.dim(1) == cfg_.in_channels, "detector configured for ", cfg_.in_channels,
            " channels, got ", batch.dim(1));

    nn::Node* x = tape.input(batch);
    x = nn::conv3d(tape, x, *stem_conv_, nullptr, 2, cfg_.stem_kernel / 2);
    x = nn::instance_norm(tape, x, *stem_gamma_, *stem_beta_);
    x = nn::relu(tape, x);
    x = nn::max_pool3d(tape, x, 3, 2, 1);

    for (size_t bi = 0; bi < blocks_.size(); ++bi) {
      std::vector<nn::Node*> features = {x};
      for (const DenseLayer& layer : blocks_[bi].layers) {
        nn::Node* in = features.size() == 1 ? features[0] : nn::concat(tape, features);
        nn::Node* h = nn::instance_norm(tape, in, *layer.norm1_gamma, *layer.norm1_beta);
        h = nn::relu(tape, h);
        h = nn::conv3d(tape, h, *layer.conv1, nullptr, 1, 0);
        h = nn::instance_norm(tape, h, *layer.norm2_gamma, *layer.norm2_beta);
        h = nn::relu(tape, h);
        h = nn::conv3d(tape, h, *layer.conv2, nullptr, 1, 1);
        features.push_back(h);
      }
      x = nn::concat(tape, features);
      if (blocks_[bi].trans_conv) {
        x = nn::instance_norm(tape, x, *blocks_[bi].trans_gamma, *blocks_[bi].trans_beta);
        x = nn::relu(tape, x);
        x = nn::conv3d(tape, x, *blocks_[bi].trans_conv, nullptr, 1, 0);
        x = nn::avg_pool3d(tape, x, 2, 2);
      }
    }
    x = nn::instance_norm(tape, x, *final_gamma_, *final_beta_);
    x = nn::relu(tape, x);
    x = nn::global_avg_pool(tape, x);          // [B, F]
    return nn::linear(tape, x, *head_w_, *head_b_);  // [B, 1]
  }

  // probabilities in (0,1) via the logistic map of the single logit
  nn::Node* forward(nn::Tape& tape, const nn::Tensor& batch) {
    return nn::sigmoid(tape, forward_logits(tape, batch));
  }

  const DetectorConfig& config() const { return cfg_; }
  ParamRegistry& registry() { return reg_; }
  std::vector<nn::Parameter*> parameters() { return reg_.parameters(); }
  std::string fingerprint() const { return nn::fingerprint(cfg_.canonical()); }

private:
  struct DenseLayer {
    nn::Parameter *norm1_gamma = nullptr, *norm1_beta = nullptr;
    nn::Parameter* conv1 = nullptr;
    nn::Parameter *norm2_gamma = nullptr, *norm2_beta = nullptr;
    nn::Parameter* conv2 = nullptr;
  };
  struct Block {
    std::vector<DenseLayer> layers;
    nn::Parameter *trans_gamma = nullptr, *trans_beta = nullptr;
    nn::Parameter* trans_conv = nullptr;
  };

  DetectorConfig cfg_;
  ParamRegistry reg_;
  nn::Parameter* stem_conv_ = nullptr;
  nn::Parameter *stem_gamma_ = nullptr, *stem_beta_ = nullptr;
  std::vector<Block> blocks_;
  nn::Parameter *final_gamma_ = nullptr, *final_beta_ = nullptr;
  nn::Parameter *head_w_ = nullptr, *head_b_ = nullptr;
  int final_features_ = 0;
};

}  // namespace bmseg
