// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Row-major matrix kernels. Every output element of gemm_nn is accumulated
// over k in ascending order by the same code path regardless of how many rows
// are in the batch, so a row's result never depends on its neighbours.

#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace slicegate::numerics::kernels {

// Register tiles of kTileRows x (2 vectors) outputs. Each output element is
// accumulated as acc = acc + a * b over the reduction index in ascending
// order on every path (tile, row tail, column tail). The project builds with
// -ffp-contract=off, so no path fuses the multiply-add and all of them round
// identically.
inline constexpr std::size_t kVectorBytes = 32;
inline constexpr std::size_t kTileRows = 6;
inline constexpr std::size_t kTileVectors = 2;

template <typename T>
struct SimdTraits {
  typedef T vec __attribute__((vector_size(kVectorBytes), aligned(alignof(T))));
  static constexpr std::size_t lanes = kVectorBytes / sizeof(T);
  static constexpr std::size_t width = lanes * kTileVectors;
};

// a(r, s) = a[r * a_row + s * a_step]: row r of the tile, reduction step s.
// The unroll pragmas let gcc keep the accumulators in registers; without
// them it writes the whole tile back to the stack on every step.
template <typename T, std::size_t R, bool Accumulate>
inline void tile_kernel(std::size_t steps, const T* a, std::size_t a_row, std::size_t a_step, const T* b,
                        std::size_t ldb, T* c, std::size_t ldc) {
  using V = typename SimdTraits<T>::vec;
  constexpr std::size_t L = SimdTraits<T>::lanes;
  V acc[R][kTileVectors];
#pragma GCC unroll 16
  for (std::size_t r = 0; r < R; ++r) {
#pragma GCC unroll 16
    for (std::size_t v = 0; v < kTileVectors; ++v) {
      acc[r][v] = Accumulate ? *reinterpret_cast<const V*>(c + r * ldc + v * L) : V{};
    }
  }
  for (std::size_t s = 0; s < steps; ++s) {
    const T* brow = b + s * ldb;
    V bv[kTileVectors];
#pragma GCC unroll 16
    for (std::size_t v = 0; v < kTileVectors; ++v) bv[v] = *reinterpret_cast<const V*>(brow + v * L);
#pragma GCC unroll 16
    for (std::size_t r = 0; r < R; ++r) {
      const T av = a[r * a_row + s * a_step];
#pragma GCC unroll 16
      for (std::size_t v = 0; v < kTileVectors; ++v) acc[r][v] += av * bv[v];
    }
  }
#pragma GCC unroll 16
  for (std::size_t r = 0; r < R; ++r) {
#pragma GCC unroll 16
    for (std::size_t v = 0; v < kTileVectors; ++v) *reinterpret_cast<V*>(c + r * ldc + v * L) = acc[r][v];
  }
}

template <typename T, bool Accumulate>
void tile_rows(std::size_t rows, std::size_t steps, const T* a, std::size_t a_row, std::size_t a_step, const T* b,
               std::size_t ldb, T* c, std::size_t ldc) {
  std::size_t i = 0;
  for (; i + kTileRows <= rows; i += kTileRows) {
    tile_kernel<T, kTileRows, Accumulate>(steps, a + i * a_row, a_row, a_step, b, ldb, c + i * ldc, ldc);
  }
  for (; i < rows; ++i) tile_kernel<T, 1, Accumulate>(steps, a + i * a_row, a_row, a_step, b, ldb, c + i * ldc, ldc);
}

// Long reductions run in blocks so a B panel block stays in L1 across row
// tiles. Later blocks resume from C, which holds the exact partial sums, so
// the result does not depend on the block length.
inline constexpr std::size_t kStepBlock = 256;

template <typename T>
void tile_panels(std::size_t rows, std::size_t full, std::size_t steps, const T* a, std::size_t a_row,
                 std::size_t a_step, const T* b, std::size_t ldb, T* c, std::size_t ldc, bool accumulate) {
  constexpr std::size_t W = SimdTraits<T>::width;
  for (std::size_t j = 0; j < full; j += W) {
    for (std::size_t s0 = 0; s0 < steps || s0 == 0; s0 += kStepBlock) {
      const std::size_t len = std::min(kStepBlock, steps - s0);
      const T* as = a + s0 * a_step;
      const T* bs = b + s0 * ldb + j;
      if (accumulate || s0 > 0) {
        tile_rows<T, true>(rows, len, as, a_row, a_step, bs, ldb, c + j, ldc);
      } else {
        tile_rows<T, false>(rows, len, as, a_row, a_step, bs, ldb, c + j, ldc);
      }
    }
  }
}

// C[rows x n] (+)= A' * B where A' is addressed through (a_row, a_step).
template <typename T>
void strided_gemm(std::size_t rows, std::size_t n, std::size_t steps, const T* a, std::size_t a_row,
                  std::size_t a_step, const T* b, std::size_t ldb, T* c, std::size_t ldc, bool accumulate) {
  const std::size_t full = n - n % SimdTraits<T>::width;
  tile_panels(rows, full, steps, a, a_row, a_step, b, ldb, c, ldc, accumulate);
  if (full == n) return;
  for (std::size_t r = 0; r < rows; ++r) {
    T* crow = c + r * ldc;
    if (!accumulate) {
      for (std::size_t j = full; j < n; ++j) crow[j] = T(0);
    }
    for (std::size_t s = 0; s < steps; ++s) {
      const T av = a[r * a_row + s * a_step];
      const T* brow = b + s * ldb;
      for (std::size_t j = full; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

/// C[M x N] = (accumulate ? C : 0) + A[M x K] * B[K x N]
template <typename T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda, const T* b,
             std::size_t ldb, T* c, std::size_t ldc, bool accumulate) {
  strided_gemm(m, n, k, a, lda, 1, b, ldb, c, ldc, accumulate);
}

/// C[K x N] += A[M x K]^T * B[M x N], summed over rows in ascending order.
template <typename T>
void gemm_tn_acc(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda, const T* b,
                 std::size_t ldb, T* c, std::size_t ldc) {
  strided_gemm(k, n, m, a, 1, lda, b, ldb, c, ldc, true);
}

/// out[cols x rows] = in[rows x cols]^T
template <typename T>
void transpose(std::size_t rows, std::size_t cols, const T* in, std::size_t ldin, T* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = in[r * ldin + c];
  }
}

/// C[M x N] (+)= A[M x K] * B[N x K]^T, via a transposed copy of B.
template <typename T>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda, const T* b,
             std::size_t ldb, T* c, std::size_t ldc, bool accumulate, std::vector<T>& scratch) {
  scratch.resize(k * n);
  transpose(n, k, b, ldb, scratch.data());
  gemm_nn(m, n, k, a, lda, scratch.data(), n, c, ldc, accumulate);
}

}  // namespace slicegate::numerics::kernels
