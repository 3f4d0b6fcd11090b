#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include "bmseg/nn/gemm.hpp"
#include "bmseg/nn/tensor.hpp"

namespace bmseg::nn {

// Reverse-mode autograd over a per-step tape. Ops append nodes in execution
// order; backward() replays the closures in reverse. Parameters accumulate
// into their own grad buffers, so a tape is built and dropped every step.
struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::function<void()> backward_fn;

  void accum(const float* g, int64_t n) {
    if (grad.data.empty()) grad = Tensor(value.shape);
    for (int64_t i = 0; i < n; ++i) grad.data[i] += g[i];
  }
  bool has_grad() const { return !grad.data.empty(); }
};

class Tape {
public:
  explicit Tape(bool training = true) : training_(training) {}

  bool training() const { return training_; }

  Node* input(Tensor v) {
    auto n = std::make_unique<Node>();
    n->value = std::move(v);
    n->requires_grad = false;
    nodes_.push_back(std::move(n));
    return nodes_.back().get();
  }

  // Leaf that feeds gradients back into an input node as well (for loss
  // gradient checks against probabilities).
  Node* differentiable_input(Tensor v) {
    Node* n = input(std::move(v));
    n->requires_grad = training_;
    return n;
  }

  Node* make(Tensor v, bool requires_grad, std::function<void()> bwd) {
    auto n = std::make_unique<Node>();
    n->value = std::move(v);
    n->requires_grad = requires_grad && training_;
    if (n->requires_grad) n->backward_fn = std::move(bwd);
    nodes_.push_back(std::move(n));
    return nodes_.back().get();
  }

  void backward(Node* loss) {
    require(training_, "backward() on an eval-mode tape");
    require(loss->value.numel() == 1, "backward() expects a scalar loss");
    loss->grad = Tensor(loss->value.shape, 1.f);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      Node* n = it->get();
      if (n->requires_grad && n->has_grad() && n->backward_fn) n->backward_fn();
    }
  }

private:
  bool training_;
  std::vector<std::unique_ptr<Node>> nodes_;
};

namespace detail {

struct ConvDims {
  int B, Ci, D, H, W, Co, k, stride, pad, oD, oH, oW;
};

inline ConvDims conv_dims(const Tensor& x, const Tensor& w, int stride, int pad) {
  require(x.ndim() == 5, "conv3d expects [B,C,D,H,W], got ", x.shape_str());
  ConvDims d;
  d.B = x.dim(0);
  d.Ci = x.dim(1);
  d.D = x.dim(2);
  d.H = x.dim(3);
  d.W = x.dim(4);
  d.Co = w.dim(0);
  d.k = w.dim(2);
  d.stride = stride;
  d.pad = pad;
  require(w.dim(1) == d.Ci, "conv3d: input has ", d.Ci, " channels but kernel expects ",
          w.dim(1));
  const auto out = [&](int i) { return (i + 2 * pad - d.k) / stride + 1; };
  d.oD = out(d.D);
  d.oH = out(d.H);
  d.oW = out(d.W);
  require(d.oD > 0 && d.oH > 0 && d.oW > 0, "conv3d: input ", x.shape_str(),
          " too small for kernel ", d.k, " stride ", stride);
  return d;
}

// im2col for one output z-plane: col is [Ci*k^3, oH*oW].
inline void im2col_slab(const float* x, const ConvDims& d, int oz, float* col) {
  const int64_t plane = static_cast<int64_t>(d.H) * d.W;
  const int N = d.oH * d.oW;
  int r = 0;
  for (int c = 0; c < d.Ci; ++c) {
    const float* xc = x + static_cast<int64_t>(c) * d.D * plane;
    for (int kz = 0; kz < d.k; ++kz) {
      const int z = oz * d.stride - d.pad + kz;
      const bool zin = z >= 0 && z < d.D;
      for (int ky = 0; ky < d.k; ++ky) {
        for (int kx = 0; kx < d.k; ++kx, ++r) {
          float* dst = col + static_cast<int64_t>(r) * N;
          if (!zin) {
            std::fill(dst, dst + N, 0.f);
            continue;
          }
          const float* xz = xc + static_cast<int64_t>(z) * plane;
          int n = 0;
          for (int oy = 0; oy < d.oH; ++oy) {
            const int y = oy * d.stride - d.pad + ky;
            if (y < 0 || y >= d.H) {
              std::fill(dst + n, dst + n + d.oW, 0.f);
              n += d.oW;
              continue;
            }
            const float* xrow = xz + static_cast<int64_t>(y) * d.W;
            for (int ox = 0; ox < d.oW; ++ox, ++n) {
              const int xx = ox * d.stride - d.pad + kx;
              dst[n] = (xx >= 0 && xx < d.W) ? xrow[xx] : 0.f;
            }
          }
        }
      }
    }
  }
}

// scatter-accumulate of a col slab back into the input gradient
inline void col2im_slab(const float* col, const ConvDims& d, int oz, float* gx) {
  const int64_t plane = static_cast<int64_t>(d.H) * d.W;
  const int N = d.oH * d.oW;
  int r = 0;
  for (int c = 0; c < d.Ci; ++c) {
    float* xc = gx + static_cast<int64_t>(c) * d.D * plane;
    for (int kz = 0; kz < d.k; ++kz) {
      const int z = oz * d.stride - d.pad + kz;
      const bool zin = z >= 0 && z < d.D;
      for (int ky = 0; ky < d.k; ++ky) {
        for (int kx = 0; kx < d.k; ++kx, ++r) {
          if (!zin) continue;
          const float* src = col + static_cast<int64_t>(r) * N;
          float* xz = xc + static_cast<int64_t>(z) * plane;
          int n = 0;
          for (int oy = 0; oy < d.oH; ++oy) {
            const int y = oy * d.stride - d.pad + ky;
            if (y < 0 || y >= d.H) {
              n += d.oW;
              continue;
            }
            float* xrow = xz + static_cast<int64_t>(y) * d.W;
            for (int ox = 0; ox < d.oW; ++ox, ++n) {
              const int xx = ox * d.stride - d.pad + kx;
              if (xx >= 0 && xx < d.W) xrow[xx] += src[n];
            }
          }
        }
      }
    }
  }
}

}  // namespace detail

// 3D convolution; cubic kernel, symmetric stride/pad. bias may be null.
inline Node* conv3d(Tape& tape, Node* x, Parameter& w, Parameter* bias, int stride, int pad) {
  const detail::ConvDims d = detail::conv_dims(x->value, w.value, stride, pad);
  if (bias)
    require(bias->value.numel() == d.Co, "conv3d: bias size mismatch");

  Tensor y({d.B, d.Co, d.oD, d.oH, d.oW});
  const int K = d.Ci * d.k * d.k * d.k;
  const int N = d.oH * d.oW;
  std::vector<float> col(static_cast<size_t>(K) * N);
  const int64_t in_sz = static_cast<int64_t>(d.Ci) * d.D * d.H * d.W;
  const int64_t out_sz = static_cast<int64_t>(d.Co) * d.oD * d.oH * d.oW;

  for (int b = 0; b < d.B; ++b) {
    const float* xb = x->value.ptr() + b * in_sz;
    float* yb = y.ptr() + b * out_sz;
    for (int oz = 0; oz < d.oD; ++oz) {
      detail::im2col_slab(xb, d, oz, col.data());
      // y_slab[Co, N] = W[Co, K] * col[K, N]
      std::vector<float> slab(static_cast<size_t>(d.Co) * N);
      gemm(w.value.ptr(), col.data(), slab.data(), d.Co, K, N);
      for (int co = 0; co < d.Co; ++co) {
        float* dst = yb + (static_cast<int64_t>(co) * d.oD + oz) * N;
        const float* src = slab.data() + static_cast<int64_t>(co) * N;
        if (bias) {
          const float bv = bias->value.data[co];
          for (int n = 0; n < N; ++n) dst[n] = src[n] + bv;
        } else {
          std::copy(src, src + N, dst);
        }
      }
    }
  }

  Node* out = tape.make(std::move(y), true, nullptr);
  if (!tape.training()) return out;
  out->backward_fn = [x, &w, bias, d, K, N, in_sz, out_sz, out]() {
    std::vector<float> col(static_cast<size_t>(K) * N);
    std::vector<float> gy_slab(static_cast<size_t>(d.Co) * N);
    std::vector<float> gcol(static_cast<size_t>(K) * N);
    const bool need_gx = x->requires_grad;
    if (need_gx && !x->has_grad()) x->grad = Tensor(x->value.shape);
    for (int b = 0; b < d.B; ++b) {
      const float* xb = x->value.ptr() + b * in_sz;
      const float* gyb = out->grad.ptr() + b * out_sz;
      for (int oz = 0; oz < d.oD; ++oz) {
        for (int co = 0; co < d.Co; ++co)
          std::copy(gyb + (static_cast<int64_t>(co) * d.oD + oz) * N,
                    gyb + (static_cast<int64_t>(co) * d.oD + oz + 1) * N,
                    gy_slab.data() + static_cast<int64_t>(co) * N);
        detail::im2col_slab(xb, d, oz, col.data());
        // gw[Co, K] += gy_slab[Co, N] * col[K, N]^T
        gemm_nt(gy_slab.data(), col.data(), w.grad.ptr(), d.Co, N, K, true);
        if (bias)
          for (int co = 0; co < d.Co; ++co) {
            float s = 0.f;
            const float* row = gy_slab.data() + static_cast<int64_t>(co) * N;
            for (int n = 0; n < N; ++n) s += row[n];
            bias->grad.data[co] += s;
          }
        if (need_gx) {
          // gcol[K, N] = W[Co, K]^T * gy_slab[Co, N]
          gemm_tn(w.value.ptr(), gy_slab.data(), gcol.data(), K, d.Co, N);
          detail::col2im_slab(gcol.data(), d, oz, x->grad.ptr() + b * in_sz);
        }
      }
    }
  };
  return out;
}

// Transposed 3D convolution with kernel == stride (non-overlapping upsampling).
// w is [Ci, Co, k, k, k]; output spatial = input * k.
inline Node* conv_transpose3d(Tape& tape, Node* x, Parameter& w, Parameter* bias) {
  require(x->value.ndim() == 5, "conv_transpose3d expects [B,C,D,H,W]");
  const int B = x->value.dim(0), Ci = x->value.dim(1), D = x->value.dim(2),
            H = x->value.dim(3), W = x->value.dim(4);
  const int k = w.value.dim(2);
  const int Co = w.value.dim(1);
  require(w.value.dim(0) == Ci, "conv_transpose3d: channel mismatch");
  const int oD = D * k, oH = H * k, oW = W * k;
  const int Nin = D * H * W;
  const int Kc = Co * k * k * k;

  Tensor y({B, Co, oD, oH, oW});
  const int64_t in_sz = static_cast<int64_t>(Ci) * Nin;
  const int64_t out_sz = static_cast<int64_t>(Co) * oD * oH * oW;

  const auto scatter = [&](const float* colbuf, float* yb) {
    // colbuf[(co,kz,ky,kx), n] -> y[co, z*k+kz, y*k+ky, x*k+kx]
    int r = 0;
    for (int co = 0; co < Co; ++co)
      for (int kz = 0; kz < k; ++kz)
        for (int ky = 0; ky < k; ++ky)
          for (int kx = 0; kx < k; ++kx, ++r) {
            const float* src = colbuf + static_cast<int64_t>(r) * Nin;
            for (int z = 0; z < D; ++z)
              for (int yy = 0; yy < H; ++yy) {
                float* dst = yb + ((static_cast<int64_t>(co) * oD + z * k + kz) * oH +
                                   yy * k + ky) * oW + kx;
                const float* s = src + (static_cast<int64_t>(z) * H + yy) * W;
                for (int xx = 0; xx < W; ++xx) dst[xx * k] = s[xx];
              }
          }
  };

  std::vector<float> colbuf(static_cast<size_t>(Kc) * Nin);
  for (int b = 0; b < B; ++b) {
    // col[Kc, Nin] = w[Ci, Kc]^T * x[Ci, Nin]
    gemm_tn(w.value.ptr(), x->value.ptr() + b * in_sz, colbuf.data(), Kc, Ci, Nin);
    scatter(colbuf.data(), y.ptr() + b * out_sz);
  }
  if (bias) {
    const int64_t spatial = static_cast<int64_t>(oD) * oH * oW;
    for (int b = 0; b < B; ++b)
      for (int co = 0; co < Co; ++co) {
        float* dst = y.ptr() + b * out_sz + co * spatial;
        const float bv = bias->value.data[co];
        for (int64_t i = 0; i < spatial; ++i) dst[i] += bv;
      }
  }

  Node* out = tape.make(std::move(y), true, nullptr);
  if (!tape.training()) return out;
  out->backward_fn = [x, &w, bias, B, Ci, Co, D, H, W, k, Nin, Kc, in_sz, out_sz, oD, oH, oW,
                      out]() {
    std::vector<float> gcol(static_cast<size_t>(Kc) * Nin);
    const bool need_gx = x->requires_grad;
    if (need_gx && !x->has_grad()) x->grad = Tensor(x->value.shape);
    for (int b = 0; b < B; ++b) {
      const float* gyb = out->grad.ptr() + b * out_sz;
      // gather gy into col layout
      int r = 0;
      for (int co = 0; co < Co; ++co)
        for (int kz = 0; kz < k; ++kz)
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx, ++r) {
              float* dst = gcol.data() + static_cast<int64_t>(r) * Nin;
              for (int z = 0; z < D; ++z)
                for (int yy = 0; yy < H; ++yy) {
                  const float* s = gyb + ((static_cast<int64_t>(co) * oD + z * k + kz) * oH +
                                          yy * k + ky) * oW + kx;
                  float* d2 = dst + (static_cast<int64_t>(z) * H + yy) * W;
                  for (int xx = 0; xx < W; ++xx) d2[xx] = s[xx * k];
                }
            }
      // gw[Ci, Kc] += x[Ci, Nin] * gcol[Kc, Nin]^T
      gemm_nt(x->value.ptr() + b * in_sz, gcol.data(), w.grad.ptr(), Ci, Nin, Kc, true);
      if (need_gx)  // gx[Ci, Nin] = w[Ci, Kc] * gcol[Kc, Nin]
        gemm(w.value.ptr(), gcol.data(), x->grad.ptr() + b * in_sz, Ci, Kc, Nin, true);
      if (bias) {
        const int64_t spatial = static_cast<int64_t>(oD) * oH * oW;
        for (int co = 0; co < Co; ++co) {
          const float* src = gyb + co * spatial;
          float s = 0.f;
          for (int64_t i = 0; i < spatial; ++i) s += src[i];
          bias->grad.data[co] += s;
        }
      }
    }
  };
  return out;
}

// Instance normalization with affine parameters; statistics per (batch, channel).
inline Node* instance_norm(Tape& tape, Node* x, Parameter& gamma, Parameter& beta,
                           float eps = 1e-5f) {
  require(x->value.ndim() == 5, "instance_norm expects [B,C,D,H,W]");
  const int B = x->value.dim(0), C = x->value.dim(1);
  const int64_t S = static_cast<int64_t>(x->value.dim(2)) * x->value.dim(3) * x->value.dim(4);
  require(gamma.value.numel() == C && beta.value.numel() == C, "instance_norm: affine size");

  Tensor y(x->value.shape);
  auto xhat = std::make_shared<std::vector<float>>(x->value.data.size());
  auto istd = std::make_shared<std::vector<float>>(static_cast<size_t>(B) * C);

  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const float* src = x->value.ptr() + (static_cast<int64_t>(b) * C + c) * S;
      float* dst = y.ptr() + (static_cast<int64_t>(b) * C + c) * S;
      float* xh = xhat->data() + (static_cast<int64_t>(b) * C + c) * S;
      double mean = 0.0;
      for (int64_t i = 0; i < S; ++i) mean += src[i];
      mean /= static_cast<double>(S);
      double var = 0.0;
      for (int64_t i = 0; i < S; ++i) var += (src[i] - mean) * (src[i] - mean);
      var /= static_cast<double>(S);
      const float is = static_cast<float>(1.0 / std::sqrt(var + eps));
      (*istd)[static_cast<size_t>(b) * C + c] = is;
      const float g = gamma.value.data[c], bt = beta.value.data[c];
      const float m = static_cast<float>(mean);
      for (int64_t i = 0; i < S; ++i) {
        xh[i] = (src[i] - m) * is;
        dst[i] = g * xh[i] + bt;
      }
    }

  Node* out = tape.make(std::move(y), true, nullptr);
  if (!tape.training()) return out;
  out->backward_fn = [x, &gamma, &beta, B, C, S, xhat, istd, out]() {
    const bool need_gx = x->requires_grad;
    if (need_gx && !x->has_grad()) x->grad = Tensor(x->value.shape);
    for (int b = 0; b < B; ++b)
      for (int c = 0; c < C; ++c) {
        const int64_t off = (static_cast<int64_t>(b) * C + c) * S;
        const float* gy = out->grad.ptr() + off;
        const float* xh = xhat->data() + off;
        const float g = gamma.value.data[c];
        double dg = 0.0, db = 0.0, sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
        for (int64_t i = 0; i < S; ++i) {
          dg += gy[i] * xh[i];
          db += gy[i];
          const double dxh = gy[i] * g;
          sum_dxhat += dxh;
          sum_dxhat_xhat += dxh * xh[i];
        }
        gamma.grad.data[c] += static_cast<float>(dg);
        beta.grad.data[c] += static_cast<float>(db);
        if (!need_gx) continue;
        const float is = (*istd)[static_cast<size_t>(b) * C + c];
        const float mean_dxhat = static_cast<float>(sum_dxhat / static_cast<double>(S));
        const float mean_dxhat_xhat = static_cast<float>(sum_dxhat_xhat / static_cast<double>(S));
        float* gx = x->grad.ptr() + off;
        for (int64_t i = 0; i < S; ++i)
          gx[i] += is * (gy[i] * g - mean_dxhat - xh[i] * mean_dxhat_xhat);
      }
  };
  return out;
}

inline Node* leaky_relu(Tape& tape, Node* x, float slope = 0.01f) {
  Tensor y(x->value.shape);
  const int64_t n = x->value.numel();
  for (int64_t i = 0; i < n; ++i) {
    const float v = x->value.data[i];
    y.data[i] = v > 0.f ? v : slope * v;
  }
  Node* out = tape.make(std::move(y), true, nullptr);
  if (!tape.training()) return out;
  out->backward_fn = [x, slope, n, out]() {
    if (!x->requires_grad) return;
    if (!x->has_grad()) x->grad = Tensor(x->value.shape);
    for (int64_t i = 0; i < n; ++i)
      x->grad.data[i] += out->grad.data[i] * (x->value.data[i] > 0.f ? 1.f : slope);
  };
  return out;
}

inline Node* relu(Tape& tape, Node* x) { return leaky_relu(tape, x, 0.f); }

inline Node* sigmoid(Tape& tape, Node* x) {
  Tensor y(x->value.shape);
  const int64_t n = x->value.numel();
  for (int64_t i = 0; i < n; ++i) y.data[i] = 1.f / (1.f + std::exp(-x->value.data[i]));
  Node* out = tape.make(std::move(y), true, nullptr);
  if (!tape.training()) return out;
  out->backward_fn = [x, n, out]() {
    if (!x->requires_grad) return;
    if (!x->has_grad()) x->grad = Tensor(x->value.shape);
    for (int64_t i = 0; i < n; ++i) {
      const float s = out->value.data[i];
      x->grad.data[i] += out->grad.data[i] * s * (1.f - s);
    }
  };
  return out;
}

inline Node* add(Tape& tape, Node* a, Node* b) {
  require(a->value.shape == b->value.shape, "add: shape mismatch ", a->value.shape_str(), " vs ",
          b->value.shape_str());
  Tensor y(a->value.shape);
  const int64_t n = y.numel();
  for (int64_t i = 0; i < n; ++i) y.data[i] = a->value.data[i] + b->value.data[i];
  Node* out = tape.make(std::move(y), true, nullptr);
  if (!tape.training()) return out;
  out->backward_fn = [a, b, n, out]() {
    for (Node* p : {a, b}) {
      if (!p->requires_grad) continue;
      p->accum(out->grad.ptr(), n);
    }
  };
  return out;
}

inline Node* scale(Tape& tape, Node* x, float c) {
  Tensor y(x->value.shape);
  const int64_t n = y.numel();
  for (int64_t i = 0; i < n; ++i) y.data[i] = c * x->value.data[i];
  Node* out = tape.make(std::move(y), true, nullptr);
  if (!tape.training()) return out;
  out->backward_fn = [x, c, n, out]() {
    if (!x->requires_grad) return;
    if (!x->has_grad()) x->grad = Tensor(x->value.shape);
    for (int64_t i = 0; i < n; ++i) x->grad.data[i] += c * out->grad.data[i];
  };
  return out;
}

// Channel concatenation of [B,C_i,D,H,W] inputs.
inline Node* concat(Tape& tape, const std::vector<Node*>& xs) {
  require(!xs.empty(), "concat: no inputs");
  const auto& s0 = xs[0]->value.shape;
  int Ctot = 0;
  for (Node* x : xs) {
    require(x->value.ndim() == 5, "concat expects 5D inputs");
    for (int d : {0, 2, 3, 4})
      require(x->value.shape[d] == s0[d], "concat: non-channel dims must match");
    Ctot += x->value.dim(1);
  }
  const int B = s0[0];
  const int64_t S = static_cast<int64_t>(s0[2]) * s0[3] * s0[4];
  Tensor y({B, Ctot, s0[2], s0[3], s0[4]});
  for (int b = 0; b < B; ++b) {
    int64_t coff = 0;
    for (Node* x : xs) {
      const int C = x->value.dim(1);
      std::copy(x->value.ptr() + static_cast<int64_t>(b) * C * S,
                x->value.ptr() + static_cast<int64_t>(b + 1) * C * S,
                y.ptr() + (static_cast<int64_t>(b) * Ctot + coff) * S);
      coff += C;
    }
  }
  Node* out = tape.make(std::move(y), true, nullptr);
  if (!tape.training()) return out;
  auto inputs = xs;
  out->backward_fn = [inputs, B, Ctot, S, out]() {
    for (int b = 0; b < B; ++b) {
      int64_t coff = 0;
      for (Node* x : inputs) {
        const int C = x->value.dim(1);
        if (x->requires_grad) {
          if (!x->has_grad()) x->grad = Tensor(x->value.shape);
          const float* src = out->grad.ptr() + (static_cast<int64_t>(b) * Ctot + coff) * S;
          float* dst = x->grad.ptr() + static_cast<int64_t>(b) * C * S;
          for (int64_t i = 0; i < C * S; ++i) dst[i] += src[i];
        }
        coff += C;
      }
    }
  };
  return out;
}

inline Node* max_pool3d(Tape& tape, Node* x, int k, int stride, int pad) {
  require(x->value.ndim() == 5, "max_pool3d expects [B,C,D,H,W]");
  const int B = x->value.dim(0), C = x->value.dim(1), D = x->value.dim(2), H = x->value.dim(3),
            W = x->value.dim(4);
  const auto out_of = [&](int i) { return (i + 2 * pad - k) / stride + 1; };
  const int oD = out_of(D), oH = out_of(H), oW = out_of(W);
  require(oD > 0 && oH > 0 && oW > 0, "max_pool3d: input too small");

  Tensor y({B, C, oD, oH, oW});
  auto argmax = std::make_shared<std::vector<int64_t>>(y.numel());
  const int64_t in_plane = static_cast<int64_t>(H) * W;
  int64_t oi = 0;
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const float* src = x->value.ptr() + (static_cast<int64_t>(b) * C + c) * D * in_plane;
      for (int oz = 0; oz < oD; ++oz)
        for (int oy = 0; oy < oH; ++oy)
          for (int ox = 0; ox < oW; ++ox, ++oi) {
            float best = -std::numeric_limits<float>::infinity();
            int64_t best_i = -1;
            for (int kz = 0; kz < k; ++kz) {
              const int z = oz * stride - pad + kz;
              if (z < 0 || z >= D) continue;
              for (int ky = 0; ky < k; ++ky) {
                const int yy = oy * stride - pad + ky;
                if (yy < 0 || yy >= H) continue;
                for (int kx = 0; kx < k; ++kx) {
                  const int xx = ox * stride - pad + kx;
                  if (xx < 0 || xx >= W) continue;
                  const int64_t idx = (static_cast<int64_t>(z) * H + yy) * W + xx;
                  if (src[idx] > best) {
                    best = src[idx];
                    best_i = idx;
                  }
                }
              }
            }
            y.data[oi] = best_i >= 0 ? best : 0.f;
            (*argmax)[oi] =
                best_i >= 0 ? (static_cast<int64_t>(b) * C + c) * D * in_plane + best_i : -1;
          }
    }

  Node* out = tape.make(std::move(y), true, nullptr);
  if (!tape.training()) return out;
  out->backward_fn = [x, argmax, out]() {
    if (!x->requires_grad) return;
    if (!x->has_grad()) x->grad = Tensor(x->value.shape);
    for (int64_t i = 0; i < out->grad.numel(); ++i)
      if ((*argmax)[i] >= 0) x->grad.data[(*argmax)[i]] += out->grad.data[i];
  };
  return out;
}

inline Node* avg_pool3d(Tape& tape, Node* x, int k, int stride) {
  require(x->value.ndim() == 5, "avg_pool3d expects [B,C,D,H,W]");
  const int B = x->value.dim(0), C = x->value.dim(1), D = x->value.dim(2), H = x->value.dim(3),
            W = x->value.dim(4);
  const auto out_of = [&](int i) { return (i - k) / stride + 1; };
  const int oD = out_of(D), oH = out_of(H), oW = out_of(W);
  require(oD > 0 && oH > 0 && oW > 0, "avg_pool3d: input too small");
  const float inv = 1.f / static_cast<float>(k * k * k);

  Tensor y({B, C, oD, oH, oW});
  const int64_t in_plane = static_cast<int64_t>(H) * W;
  int64_t oi = 0;
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const float* src = x->value.ptr() + (static_cast<int64_t>(b) * C + c) * D * in_plane;
      for (int oz = 0; oz < oD; ++oz)
        for (int oy = 0; oy < oH; ++oy)
          for (int ox = 0; ox < oW; ++ox, ++oi) {
            float s = 0.f;
            for (int kz = 0; kz < k; ++kz)
              for (int ky = 0; ky < k; ++ky)
                for (int kx = 0; kx < k; ++kx)
                  s += src[(static_cast<int64_t>(oz * stride + kz) * H + oy * stride + ky) * W +
                           ox * stride + kx];
            y.data[oi] = s * inv;
          }
    }

  Node* out = tape.make(std::move(y), true, nullptr);
  if (!tape.training()) return out;
  out->backward_fn = [x, B, C, D, H, W, k, stride, oD, oH, oW, inv, in_plane, out]() {
    if (!x->requires_grad) return;
    if (!x->has_grad()) x->grad = Tensor(x->value.shape);
    int64_t oi = 0;
    for (int b = 0; b < B; ++b)
      for (int c = 0; c < C; ++c) {
        float* gx = x->grad.ptr() + (static_cast<int64_t>(b) * C + c) * D * in_plane;
        for (int oz = 0; oz < oD; ++oz)
          for (int oy = 0; oy < oH; ++oy)
            for (int ox = 0; ox < oW; ++ox, ++oi) {
              const float g = out->grad.data[oi] * inv;
              for (int kz = 0; kz < k; ++kz)
                for (int ky = 0; ky < k; ++ky)
                  for (int kx = 0; kx < k; ++kx)
                    gx[(static_cast<int64_t>(oz * stride + kz) * H + oy * stride + ky) * W +
                       ox * stride + kx] += g;
            }
      }
  };
  return out;
}

// [B,C,D,H,W] -> [B,C]
inline Node* global_avg_pool(Tape& tape, Node* x) {
  require(x->value.ndim() == 5, "global_avg_pool expects 5D input");
  const int B = x->value.dim(0), C = x->value.dim(1);
  const int64_t S = static_cast<int64_t>(x->value.dim(2)) * x->value.dim(3) * x->value.dim(4);
  Tensor y({B, C});
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const float* src = x->value.ptr() + (static_cast<int64_t>(b) * C + c) * S;
      double s = 0.0;
      for (int64_t i = 0; i < S; ++i) s += src[i];
      y.data[static_cast<int64_t>(b) * C + c] = static_cast<float>(s / static_cast<double>(S));
    }
  Node* out = tape.make(std::move(y), true, nullptr);
  if (!tape.training()) return out;
  out->backward_fn = [x, B, C, S, out]() {
    if (!x->requires_grad) return;
    if (!x->has_grad()) x->grad = Tensor(x->value.shape);
    for (int b = 0; b < B; ++b)
      for (int c = 0; c < C; ++c) {
        const float g = out->grad.data[static_cast<int64_t>(b) * C + c] / static_cast<float>(S);
        float* gx = x->grad.ptr() + (static_cast<int64_t>(b) * C + c) * S;
        for (int64_t i = 0; i < S; ++i) gx[i] += g;
      }
  };
  return out;
}

// x[B,F] -> y[B,O] with w[O,F], bias[O]
inline Node* linear(Tape& tape, Node* x, Parameter& w, Parameter& bias) {
  require(x->value.ndim() == 2, "linear expects [B,F]");
  const int B = x->value.dim(0), F = x->value.dim(1), O = w.value.dim(0);
  require(w.value.dim(1) == F, "linear: weight/input size mismatch");
  Tensor y({B, O});
  gemm_nt(x->value.ptr(), w.value.ptr(), y.ptr(), B, F, O);
  for (int b = 0; b < B; ++b)
    for (int o = 0; o < O; ++o) y.data[static_cast<int64_t>(b) * O + o] += bias.value.data[o];
  Node* out = tape.make(std::move(y), true, nullptr);
  if (!tape.training()) return out;
  out->backward_fn = [x, &w, &bias, B, F, O, out]() {
    // gw[O,F] += gy[B,O]^T * x[B,F]
    gemm_tn(out->grad.ptr(), x->value.ptr(), w.grad.ptr(), O, B, F, true);
    for (int b = 0; b < B; ++b)
      for (int o = 0; o < O; ++o) bias.grad.data[o] += out->grad.data[static_cast<int64_t>(b) * O + o];
    if (x->requires_grad) {
      if (!x->has_grad()) x->grad = Tensor(x->value.shape);
      gemm(out->grad.ptr(), w.value.ptr(), x->grad.ptr(), B, O, F, true);
    }
  };
  return out;
}

}  // namespace bmseg::nn
