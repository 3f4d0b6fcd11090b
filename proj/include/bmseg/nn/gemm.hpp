#pragma once

#include <Eigen/Core>

namespace bmseg::nn {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

// c[M,N] = a[M,K] * b[K,N] (+= when accumulate)
inline void gemm(const float* a, const float* b, float* c, int M, int K, int N,
                 bool accumulate = false) {
  ConstMapMat ma(a, M, K), mb(b, K, N);
  MapMat mc(c, M, N);
  if (accumulate)
    mc.noalias() += ma * mb;
  else
    mc.noalias() = ma * mb;
}

// c[M,N] = a[K,M]^T * b[K,N]
inline void gemm_tn(const float* a, const float* b, float* c, int M, int K, int N,
                    bool accumulate = false) {
  ConstMapMat ma(a, K, M), mb(b, K, N);
  MapMat mc(c, M, N);
  if (accumulate)
    mc.noalias() += ma.transpose() * mb;
  else
    mc.noalias() = ma.transpose() * mb;
}

// c[M,N] = a[M,K] * b[N,K]^T
inline void gemm_nt(const float* a, const float* b, float* c, int M, int K, int N,
                    bool accumulate = false) {
  ConstMapMat ma(a, M, K), mb(b, N, K);
  MapMat mc(c, M, N);
  if (accumulate)
    mc.noalias() += ma * mb.transpose();
  else
    mc.noalias() = ma * mb.transpose();
}

}  // namespace bmseg::nn
