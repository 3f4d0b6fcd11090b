#pragma once

#include <string>
#include <vector>

#include "bmseg/models/common.hpp"
#include "bmseg/nn/autograd.hpp"

namespace bmseg {

// Residual encoder-decoder with deep supervision. Three sigmoid region
// channels (WT/TC/ET) instead of exclusive classes; auxiliary heads sit on the
// decoder stages below full resolution.
struct SegmentorConfig {
  int in_channels = 3;
  int out_channels = 3;
  int n_stages = 5;
  int base_features = 32;
  int max_features = 320;
  int deep_supervision_levels = 3;
  uint64_t init_seed = 202;

  int stage_features(int stage) const {
    int f = base_features;
    for (int s = 0; s < stage; ++s) f = std::min(f * 2, max_features);
    return f;
  }
  int aux_heads() const { return std::min(deep_supervision_levels, n_stages - 2); }

  void validate() const {
    require(in_channels >= 1, "segmentor needs at least one input channel");
    require(out_channels == 3, "region-based optimization uses 3 output channels");
    require(n_stages >= 2, "segmentor needs at least 2 stages");
    require(base_features >= 1 && max_features >= base_features, "invalid feature plan");
    require(deep_supervision_levels >= 0, "deep_supervision_levels must be >= 0");
  }

  // Smallest input the stage plan supports (bottleneck >= 4 for 64^3 / 5 stages).
  int min_input_size() const { return 1 << (n_stages - 1); }

  std::string canonical() const {
    return "segmentor;in=" + std::to_string(in_channels) + ";out=" +
           std::to_string(out_channels) + ";stages=" + std::to_string(n_stages) + ";base=" +
           std::to_string(base_features) + ";cap=" + std::to_string(max_features) + ";ds=" +
           std::to_string(deep_supervision_levels);
  }
};

struct SegmentorOutput {
  nn::Node* primary = nullptr;      // [B, 3, s, s, s] logits
  std::vector<nn::Node*> aux;       // level l at spatial size s / 2^l (train mode only)
};

class ResUNetSegmentor {
public:
  explicit ResUNetSegmentor(SegmentorConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    Rng rng = make_rng(cfg_.init_seed, 0x5E6);

    auto conv = [&](const std::string& name, int ci, int co, int k,
                    bool bias = false) -> ConvUnit {
      ConvUnit u;
      u.w = &reg_.add(name + ".weight", {co, ci, k, k, k});
      nn::kaiming_init(*u.w, rng);
      if (bias) {
        u.b = &reg_.add(name + ".bias", {co});
        nn::constant_init(*u.b, 0.f);
      }
      return u;
    };
    auto norm = [&](const std::string& name, int c) -> NormUnit {
      NormUnit u;
      u.gamma = &reg_.add(name + ".gamma", {c});
      u.beta = &reg_.add(name + ".beta", {c});
      nn::constant_init(*u.gamma, 1.f);
      nn::constant_init(*u.beta, 0.f);
      return u;
    };

    int prev = cfg_.in_channels;
    for (int s = 0; s < cfg_.n_stages; ++s) {
      const std::string base = "enc" + std::to_string(s);
      const int f = cfg_.stage_features(s);
      EncStage stage;
      stage.stride = s == 0 ? 1 : 2;
      stage.conv1 = conv(base + ".conv1", prev, f, 3);
      stage.norm1 = norm(base + ".norm1", f);
      stage.conv2 = conv(base + ".conv2", f, f, 3);
      stage.norm2 = norm(base + ".norm2", f);
      stage.proj = conv(base + ".proj", prev, f, 1);
      stage.proj_norm = norm(base + ".proj_norm", f);
      enc_.push_back(stage);
      prev = f;
    }
    for (int s = cfg_.n_stages - 1; s >= 1; --s) {
      const std::string base = "dec" + std::to_string(s);
      const int f_in = cfg_.stage_features(s);
      const int f_out = cfg_.stage_features(s - 1);
      DecStage stage;
      stage.up_w = &reg_.add(base + ".up.weight", {f_in, f_out, 2, 2, 2});
      nn::kaiming_init(*stage.up_w, rng);
      stage.conv1 = conv(base + ".conv1", 2 * f_out, f_out, 3);
      stage.norm1 = norm(base + ".norm1", f_out);
      stage.conv2 = conv(base + ".conv2", f_out, f_out, 3);
      stage.norm2 = norm(base + ".norm2", f_out);
      stage.proj = conv(base + ".proj", 2 * f_out, f_out, 1);
      stage.proj_norm = norm(base + ".proj_norm", f_out);
      dec_.push_back(stage);
    }
    head_ = conv("head", cfg_.stage_features(0), cfg_.out_channels, 1, true);
    for (int l = 1; l <= cfg_.aux_heads(); ++l) {
      // aux head l attaches to the decoder output at spatial size s/2^l
      aux_heads_.push_back(
          conv("aux" + std::to_string(l), cfg_.stage_features(l), cfg_.out_channels, 1, true));
    }
  }

  // batch [B, C, s, s, s] -> region logits; aux heads only on training tapes
  SegmentorOutput forward_logits(nn::Tape& tape, const nn::Tensor& batch) {
    require(batch.ndim() == 5, "segmentor expects [B,C,D,H,W], got ", batch.shape_str());
    require(batch.dim(1) == cfg_.in_channels, "segmentor configured for ", cfg_.in_channels,
            " channels, got ", batch.dim(1));
    const int m = cfg_.min_input_size();
    for (int d = 2; d < 5; ++d)
      require(batch.dim(d) % m == 0 && batch.dim(d) >= m, "segmentor input ", batch.shape_str(),
              " must be a multiple of ", m);

    nn::Node* x = tape.input(batch);
    std::vector<nn::Node*> skips;
    for (const EncStage& st : enc_) {
      x = res_block(tape, x, st.conv1, st.norm1, st.conv2, st.norm2, st.proj, st.proj_norm,
                    st.stride);
      skips.push_back(x);
    }

    SegmentorOutput out;
    for (size_t i = 0; i < dec_.size(); ++i) {
      const DecStage& st = dec_[i];
      const int enc_stage = cfg_.n_stages - 2 - static_cast<int>(i);
      x = nn::conv_transpose3d(tape, x, *st.up_w, nullptr);
      x = nn::concat(tape, {x, skips[enc_stage]});
      x = res_block(tape, x, st.conv1, st.norm1, st.conv2, st.norm2, st.proj, st.proj_norm, 1);
      if (tape.training() && enc_stage >= 1 && enc_stage <= cfg_.aux_heads()) {
        const ConvUnit& h = aux_heads_[enc_stage - 1];
        out.aux.push_back(nn::conv3d(tape, x, *h.w, h.b, 1, 0));
      }
    }
    out.primary = nn::conv3d(tape, x, *head_.w, head_.b, 1, 0);
    // aux ordered l=1 (largest) first
    std::reverse(out.aux.begin(), out.aux.end());
    return out;
  }

  SegmentorOutput forward(nn::Tape& tape, const nn::Tensor& batch) {
    SegmentorOutput logits = forward_logits(tape, batch);
    SegmentorOutput probs;
    probs.primary = nn::sigmoid(tape, logits.primary);
    for (nn::Node* a : logits.aux) probs.aux.push_back(nn::sigmoid(tape, a));
    return probs;
  }

  const SegmentorConfig& config() const { return cfg_; }
  ParamRegistry& registry() { return reg_; }
  std::vector<nn::Parameter*> parameters() { return reg_.parameters(); }
  std::string fingerprint() const { return nn::fingerprint(cfg_.canonical()); }

private:
  struct ConvUnit {
    nn::Parameter* w = nullptr;
    nn::Parameter* b = nullptr;
  };
  struct NormUnit {
    nn::Parameter* gamma = nullptr;
    nn::Parameter* beta = nullptr;
  };
  struct EncStage {
    int stride = 1;
    ConvUnit conv1, conv2, proj;
    NormUnit norm1, norm2, proj_norm;
  };
  struct DecStage {
    nn::Parameter* up_w = nullptr;
    ConvUnit conv1, conv2, proj;
    NormUnit norm1, norm2, proj_norm;
  };

  nn::Node* res_block(nn::Tape& tape, nn::Node* x, const ConvUnit& c1, const NormUnit& n1,
                      const ConvUnit& c2, const NormUnit& n2, const ConvUnit& proj,
                      const NormUnit& proj_norm, int stride) {
    nn::Node* h = nn::conv3d(tape, x, *c1.w, nullptr, stride, 1);
    h = nn::instance_norm(tape, h, *n1.gamma, *n1.beta);
    h = nn::leaky_relu(tape, h);
    h = nn::conv3d(tape, h, *c2.w, nullptr, 1, 1);
    h = nn::instance_norm(tape, h, *n2.gamma, *n2.beta);
    nn::Node* skip = nn::conv3d(tape, x, *proj.w, nullptr, stride, 0);
    skip = nn::instance_norm(tape, skip, *proj_norm.gamma, *proj_norm.beta);
    return nn::leaky_relu(tape, nn::add(tape, h, skip));
  }

  SegmentorConfig cfg_;
  ParamRegistry reg_;
  std::vector<EncStage> enc_;
  std::vector<DecStage> dec_;
  ConvUnit head_;
  std::vector<ConvUnit> aux_heads_;
};

}  // namespace bmseg
