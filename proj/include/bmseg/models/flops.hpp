#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bmseg/models/densenet.hpp"
#include "bmseg/models/resunet.hpp"

namespace bmseg {

// Analytic layer-by-layer compute cost. Counts fused multiply-accumulates
// (one MAC = one FLOP), the convention common segmentation-network tooling
// reports; normalizations, activations and pooling are excluded. Only
// convolution and linear layers contribute.
struct FlopCounter {
  double macs = 0.0;

  void conv(int64_t out_voxels, int c_in, int c_out, int kernel) {
    macs += static_cast<double>(out_voxels) * c_in * c_out *
            (static_cast<double>(kernel) * kernel * kernel);
  }
  void conv_transpose(int64_t in_voxels, int c_in, int c_out, int kernel) {
    macs += static_cast<double>(in_voxels) * c_in * c_out *
            (static_cast<double>(kernel) * kernel * kernel);
  }
  void linear(int in_features, int out_features) {
    macs += static_cast<double>(in_features) * out_features;
  }
  double gflops() const { return macs / 1e9; }
};

namespace flops_detail {
inline int64_t vox(const Shape3& s) { return shape_numel(s); }
inline Shape3 halve(const Shape3& s) { return {s[0] / 2, s[1] / 2, s[2] / 2}; }
inline Shape3 conv_out(const Shape3& s, int k, int stride, int pad) {
  const auto o = [&](int i) { return (i + 2 * pad - k) / stride + 1; };
  return {o(s[0]), o(s[1]), o(s[2])};
}
}  // namespace flops_detail

inline double estimate_flops(const DetectorConfig& cfg, const Shape3& input) {
  if (cfg.block_layers.empty()) return 0.0;  // degenerate zero-layer plan
  cfg.validate();
  namespace fd = flops_detail;
  FlopCounter fc;

  Shape3 s = fd::conv_out(input, cfg.stem_kernel, 2, cfg.stem_kernel / 2);
  fc.conv(fd::vox(s), cfg.in_channels, cfg.init_features, cfg.stem_kernel);
  s = fd::conv_out(s, 3, 2, 1);  // stem max-pool

  int features = cfg.init_features;
  const int bottleneck = cfg.bn_size * cfg.growth_rate;
  for (size_t bi = 0; bi < cfg.block_layers.size(); ++bi) {
    for (int li = 0; li < cfg.block_layers[bi]; ++li) {
      fc.conv(fd::vox(s), features, bottleneck, 1);
      fc.conv(fd::vox(s), bottleneck, cfg.growth_rate, 3);
      features += cfg.growth_rate;
    }
    if (bi + 1 < cfg.block_layers.size()) {
      const int compressed = std::max(1, static_cast<int>(features * cfg.compression));
      fc.conv(fd::vox(s), features, compressed, 1);
      features = compressed;
      s = fd::halve(s);  // transition avg-pool
    }
  }
  fc.linear(features, 1);
  return fc.gflops();
}

inline double estimate_flops(const SegmentorConfig& cfg, const Shape3& input) {
  cfg.validate();
  namespace fd = flops_detail;
  FlopCounter fc;

  std::vector<Shape3> stage_shape(cfg.n_stages);
  int prev = cfg.in_channels;
  Shape3 s = input;
  for (int st = 0; st < cfg.n_stages; ++st) {
    if (st > 0) s = fd::halve(s);
    stage_shape[st] = s;
    const int f = cfg.stage_features(st);
    fc.conv(fd::vox(s), prev, f, 3);   // strided entry conv
    fc.conv(fd::vox(s), f, f, 3);
    fc.conv(fd::vox(s), prev, f, 1);   // residual projection
    prev = f;
  }
  for (int st = cfg.n_stages - 1; st >= 1; --st) {
    const int f_in = cfg.stage_features(st);
    const int f_out = cfg.stage_features(st - 1);
    const Shape3 so = stage_shape[st - 1];
    fc.conv_transpose(fd::vox(stage_shape[st]), f_in, f_out, 2);
    fc.conv(fd::vox(so), 2 * f_out, f_out, 3);
    fc.conv(fd::vox(so), f_out, f_out, 3);
    fc.conv(fd::vox(so), 2 * f_out, f_out, 1);  // residual projection
    if (st - 1 >= 1 && st - 1 <= cfg.aux_heads())
      fc.conv(fd::vox(so), f_out, cfg.out_channels, 1);
  }
  fc.conv(fd::vox(input), cfg.stage_features(0), cfg.out_channels, 1);
  return fc.gflops();
}

// The ungated single-pass baseline the cost reports compare against: a plain
// (non-residual) five-stage encoder-decoder, features 32..320 doubling with
// cap, two 3^3 convolutions per stage, strided downsampling, transposed-conv
// upsampling, run at a 128^3 patch.
struct ReferenceUNetSpec {
  int in_channels = 4;
  int out_channels = 3;
  int n_stages = 5;
  int base_features = 32;
  int max_features = 320;

  int stage_features(int stage) const {
    int f = base_features;
    for (int s = 0; s < stage; ++s) f = std::min(f * 2, max_features);
    return f;
  }
};

inline double estimate_flops(const ReferenceUNetSpec& cfg, const Shape3& input) {
  namespace fd = flops_detail;
  FlopCounter fc;
  std::vector<Shape3> stage_shape(cfg.n_stages);
  int prev = cfg.in_channels;
  Shape3 s = input;
  for (int st = 0; st < cfg.n_stages; ++st) {
    if (st > 0) s = fd::halve(s);
    stage_shape[st] = s;
    const int f = cfg.stage_features(st);
    fc.conv(fd::vox(s), prev, f, 3);
    fc.conv(fd::vox(s), f, f, 3);
    prev = f;
  }
  for (int st = cfg.n_stages - 1; st >= 1; --st) {
    const int f_in = cfg.stage_features(st);
    const int f_out = cfg.stage_features(st - 1);
    const Shape3 so = stage_shape[st - 1];
    fc.conv_transpose(fd::vox(stage_shape[st]), f_in, f_out, 2);
    fc.conv(fd::vox(so), 2 * f_out, f_out, 3);
    fc.conv(fd::vox(so), f_out, f_out, 3);
  }
  fc.conv(fd::vox(input), cfg.stage_features(0), cfg.out_channels, 1);
  return fc.gflops();
}

}  // namespace bmseg
