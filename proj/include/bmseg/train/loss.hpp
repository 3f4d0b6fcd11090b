#pragma once

#include <cmath>
#include <vector>

#include "bmseg/nn/autograd.hpp"

namespace bmseg {

struct LossConfig {
  double dice_eps = 1e-5;
  double bce_clamp = 1e-7;  // probabilities clamped to [clamp, 1-clamp]

  // w_l proportional to 2^-l over primary + aux heads, normalized to sum 1.
  static std::vector<double> deep_supervision_weights(int n_heads) {
    std::vector<double> w(n_heads);
    double sum = 0.0;
    for (int l = 0; l < n_heads; ++l) {
      w[l] = std::pow(2.0, -l);
      sum += w[l];
    }
    for (auto& v : w) v /= sum;
    return w;
  }
};

// Soft Dice loss over K channels: 1 - mean_k (2*sum(p*t)+eps)/(sum(p)+sum(t)+eps).
// A channel empty on both sides contributes ~0 loss (eps/eps term). Templated
// so tests can run the same arithmetic and gradient in double precision.
template <typename Real>
Real dice_loss_flat(const Real* probs, const Real* targets, int channels, int64_t spatial,
                    Real eps, Real* grad = nullptr) {
  Real loss = Real(1);
  for (int k = 0; k < channels; ++k) {
    const Real* p = probs + static_cast<int64_t>(k) * spatial;
    const Real* t = targets + static_cast<int64_t>(k) * spatial;
    Real inter = Real(0), psum = Real(0), tsum = Real(0);
    for (int64_t i = 0; i < spatial; ++i) {
      inter += p[i] * t[i];
      psum += p[i];
      tsum += t[i];
    }
    const Real num = Real(2) * inter + eps;
    const Real den = psum + tsum + eps;
    loss -= num / den / Real(channels);
    if (grad) {
      Real* g = grad + static_cast<int64_t>(k) * spatial;
      const Real den2 = den * den;
      for (int64_t i = 0; i < spatial; ++i)
        g[i] += -(Real(2) * t[i] * den - num) / den2 / Real(channels);
    }
  }
  return loss;
}

// Mean binary cross-entropy with probability clamping; exact zero loss is
// unreachable only by the clamp (p==t gives loss <= ~1.2e-7).
template <typename Real>
Real bce_loss_flat(const Real* probs, const Real* targets, int64_t n, Real clamp,
                   Real* grad = nullptr) {
  Real loss = Real(0);
  const Real lo = clamp, hi = Real(1) - clamp;
  for (int64_t i = 0; i < n; ++i) {
    const Real p = std::min(hi, std::max(lo, probs[i]));
    const Real t = targets[i];
    loss += -(t * std::log(p) + (Real(1) - t) * std::log(Real(1) - p));
    if (grad) {
      const bool clamped = probs[i] < lo || probs[i] > hi;
      grad[i] += clamped ? Real(0) : (p - t) / (p * (Real(1) - p)) / Real(n);
    }
  }
  return loss / Real(n);
}

// Batched wrappers over [B, K, spatial]: dice averages the per-sample loss,
// bce averages over every element; both are batch-permutation invariant.
template <typename Real>
Real dice_loss_batched(const Real* probs, const Real* targets, int batch, int channels,
                       int64_t spatial, Real eps, Real* grad = nullptr) {
  Real loss = Real(0);
  const int64_t per = static_cast<int64_t>(channels) * spatial;
  std::vector<Real> gtmp;
  for (int b = 0; b < batch; ++b) {
    Real* g = nullptr;
    if (grad) {
      gtmp.assign(static_cast<size_t>(per), Real(0));
      g = gtmp.data();
    }
    loss += dice_loss_flat(probs + b * per, targets + b * per, channels, spatial, eps, g);
    if (grad)
      for (int64_t i = 0; i < per; ++i) grad[b * per + i] += gtmp[i] / Real(batch);
  }
  return loss / Real(batch);
}

namespace nnops {

using nn::Node;
using nn::Tape;
using nn::Tensor;

// probs: [B,K,D,H,W] node; target: same-shape binary tensor.
inline Node* dice_loss(Tape& tape, Node* probs, const Tensor& target, float eps) {
  require(probs->value.shape == target.shape, "dice_loss: shape mismatch ",
          probs->value.shape_str(), " vs ", Tensor(target.shape).shape_str());
  const int B = probs->value.dim(0), K = probs->value.dim(1);
  const int64_t spatial = probs->value.numel() / (static_cast<int64_t>(B) * K);
  Tensor y({1});
  y.data[0] = dice_loss_batched<float>(probs->value.ptr(), target.ptr(), B, K, spatial, eps);
  Node* out = tape.make(std::move(y), true, nullptr);
  if (!tape.training()) return out;
  auto tgt = std::make_shared<Tensor>(target);
  out->backward_fn = [probs, tgt, B, K, spatial, eps, out]() {
    if (!probs->requires_grad) return;
    if (!probs->has_grad()) probs->grad = Tensor(probs->value.shape);
    Tensor g(probs->value.shape);
    dice_loss_batched<float>(probs->value.ptr(), tgt->ptr(), B, K, spatial, eps, g.ptr());
    const float gy = out->grad.data[0];
    for (int64_t i = 0; i < g.numel(); ++i) probs->grad.data[i] += gy * g.data[i];
  };
  return out;
}

inline Node* bce_loss(Tape& tape, Node* probs, const Tensor& target, float clamp) {
  require(probs->value.shape == target.shape, "bce_loss: shape mismatch ",
          probs->value.shape_str(), " vs ", Tensor(target.shape).shape_str());
  const int64_t n = probs->value.numel();
  Tensor y({1});
  y.data[0] = bce_loss_flat<float>(probs->value.ptr(), target.ptr(), n, clamp);
  Node* out = tape.make(std::move(y), true, nullptr);
  if (!tape.training()) return out;
  auto tgt = std::make_shared<Tensor>(target);
  out->backward_fn = [probs, tgt, n, clamp, out]() {
    if (!probs->requires_grad) return;
    if (!probs->has_grad()) probs->grad = Tensor(probs->value.shape);
    Tensor g(probs->value.shape);
    bce_loss_flat<float>(probs->value.ptr(), tgt->ptr(), n, clamp, g.ptr());
    const float gy = out->grad.data[0];
    for (int64_t i = 0; i < n; ++i) probs->grad.data[i] += gy * g.data[i];
  };
  return out;
}

}  // namespace nnops

// Binary-mask max-pool downsampling by an integer factor; preserves thin
// structures that mean-pooling would wash out.
inline nn::Tensor downsample_max(const nn::Tensor& t, int factor) {
  require(t.ndim() == 5, "downsample_max expects [B,K,D,H,W]");
  if (factor == 1) return t;
  const int B = t.dim(0), K = t.dim(1), D = t.dim(2), H = t.dim(3), W = t.dim(4);
  require(D % factor == 0 && H % factor == 0 && W % factor == 0,
          "downsample_max: spatial dims must divide the factor");
  const int oD = D / factor, oH = H / factor, oW = W / factor;
  nn::Tensor out({B, K, oD, oH, oW});
  int64_t oi = 0;
  for (int b = 0; b < B; ++b)
    for (int k = 0; k < K; ++k) {
      const float* src = t.ptr() + (static_cast<int64_t>(b) * K + k) * D * H * W;
      for (int oz = 0; oz < oD; ++oz)
        for (int oy = 0; oy < oH; ++oy)
          for (int ox = 0; ox < oW; ++ox, ++oi) {
            float m = 0.f;
            for (int dz = 0; dz < factor && m == 0.f; ++dz)
              for (int dy = 0; dy < factor && m == 0.f; ++dy)
                for (int dx = 0; dx < factor; ++dx) {
                  const int64_t idx =
                      (static_cast<int64_t>(oz * factor + dz) * H + oy * factor + dy) * W +
                      ox * factor + dx;
                  if (src[idx] > 0.f) {
                    m = 1.f;
                    break;
                  }
                }
            out.data[oi] = m;
          }
    }
  return out;
}

// Deep-supervision total: sum_l w_l * (dice + bce) at head l. Heads are
// (probability node, matching-resolution target) pairs, primary first.
inline nn::Node* total_segmentation_loss(nn::Tape& tape,
                                         const std::vector<std::pair<nn::Node*, nn::Tensor>>& heads,
                                         const LossConfig& cfg,
                                         const std::vector<double>& weights) {
  require(!heads.empty(), "total_segmentation_loss: no heads");
  require(weights.size() == heads.size(), "total_segmentation_loss: ", heads.size(),
          " heads but ", weights.size(), " weights");
  nn::Node* total = nullptr;
  for (size_t l = 0; l < heads.size(); ++l) {
    nn::Node* d = nnops::dice_loss(tape, heads[l].first, heads[l].second,
                                   static_cast<float>(cfg.dice_eps));
    nn::Node* b = nnops::bce_loss(tape, heads[l].first, heads[l].second,
                                  static_cast<float>(cfg.bce_clamp));
    nn::Node* head = nn::scale(tape, nn::add(tape, d, b), static_cast<float>(weights[l]));
    total = total ? nn::add(tape, total, head) : head;
  }
  return total;
}

}  // namespace bmseg
