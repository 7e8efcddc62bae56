// Copyright 2026 The WLAC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Dense kernels behind the autodiff tape.
//
// Every kernel exists twice: the OpenMP version in `kernels` used by the
// model, and a plain serial transcription of the defining formula in
// `kernels::reference`. The reference versions are kept for tests and the
// benchmark. Parallel kernels partition work so each output element is
// written by exactly one thread, so results do not depend on thread count.

#ifndef WLAC_KERNELS_H_
#define WLAC_KERNELS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "wlac/common.h"

WLAC_NAMESPACE_BEGIN

namespace kernels {

// Row-major matrix extents for the GEMM family below.
struct Dims {
  std::size_t m = 0;  // rows of the left operand as used
  std::size_t k = 0;  // contraction length
  std::size_t n = 0;  // columns of the result
};

// c[m x n] (+)= a[m x k] * b[k x n]
void MatMul(std::span<const Real> a, std::span<const Real> b, std::span<Real> c,
            Dims d, bool accumulate);
// c[k x n] += a[m x k]^T * b[m x n]
void MatMulTransAAccumulate(std::span<const Real> a, std::span<const Real> b,
                            std::span<Real> c, Dims d);
// c[m x k] += a[m x n] * b[k x n]^T
void MatMulTransBAccumulate(std::span<const Real> a, std::span<const Real> b,
                            std::span<Real> c, Dims d);

// In-place row softmax over `cols` columns.
void SoftmaxRows(std::span<Real> x, std::size_t cols);

// Layer normalization over the last dimension. `mean` and `rstd` receive one
// entry per row for the backward pass.
void LayerNormForward(std::span<const Real> x, std::span<const Real> gamma,
                      std::span<const Real> beta, std::size_t cols, Real eps,
                      std::span<Real> y, std::span<Real> mean,
                      std::span<Real> rstd);
// Accumulates into dx, dgamma, dbeta.
void LayerNormBackward(std::span<const Real> x, std::span<const Real> gamma,
                       std::span<const Real> mean, std::span<const Real> rstd,
                       std::span<const Real> dy, std::size_t cols,
                       std::span<Real> dx, std::span<Real> dgamma,
                       std::span<Real> dbeta);

// One attention problem inside a packed batch: queries [q_begin, q_begin +
// q_len) attend to keys [k_begin, k_begin + k_len). Several segments may share
// the same key range.
struct AttentionSegment {
  std::size_t q_begin = 0;
  std::size_t q_len = 0;
  std::size_t k_begin = 0;
  std::size_t k_len = 0;
};

struct AttentionLayout {
  std::vector<AttentionSegment> segments;
  // One flag per packed key row; empty means every key is visible.
  std::vector<std::uint8_t> key_valid;
  // Optional per-segment dense masks, concatenated in segment order, each
  // q_len x k_len row-major. Empty means no dense mask.
  std::vector<std::uint8_t> dense_mask;

  // Offsets of each segment's [heads x q_len x k_len] block in the
  // probability buffer.
  std::vector<std::size_t> ProbOffsets(std::size_t heads) const;
  std::size_t ProbSize(std::size_t heads) const;
  bool Allowed(std::size_t segment, std::size_t dense_offset, std::size_t qi,
               std::size_t kj) const;
};

// Scaled dot-product attention over `heads` column blocks of width
// d_model / heads. Masked keys receive exactly zero probability. Writes the
// head-concatenated output and the probabilities (layout per ProbOffsets).
void AttentionForward(std::span<const Real> q, std::span<const Real> k,
                      std::span<const Real> v, std::size_t d_model,
                      std::size_t heads, const AttentionLayout& layout,
                      std::span<Real> out, std::span<Real> probs);
// Accumulates into dq, dk, dv.
void AttentionBackward(std::span<const Real> q, std::span<const Real> k,
                       std::span<const Real> v, std::span<const Real> probs,
                       std::span<const Real> dout, std::size_t d_model,
                       std::size_t heads, const AttentionLayout& layout,
                       std::span<Real> dq, std::span<Real> dk,
                       std::span<Real> dv);

namespace reference {

void MatMul(std::span<const Real> a, std::span<const Real> b, std::span<Real> c,
            Dims d, bool accumulate);
void MatMulTransAAccumulate(std::span<const Real> a, std::span<const Real> b,
                            std::span<Real> c, Dims d);
void MatMulTransBAccumulate(std::span<const Real> a, std::span<const Real> b,
                            std::span<Real> c, Dims d);
void SoftmaxRows(std::span<Real> x, std::size_t cols);
void LayerNormForward(std::span<const Real> x, std::span<const Real> gamma,
                      std::span<const Real> beta, std::size_t cols, Real eps,
                      std::span<Real> y, std::span<Real> mean,
                      std::span<Real> rstd);
void AttentionForward(std::span<const Real> q, std::span<const Real> k,
                      std::span<const Real> v, std::size_t d_model,
                      std::size_t heads, const AttentionLayout& layout,
                      std::span<Real> out, std::span<Real> probs);

}  // namespace reference

// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
int MaxThreads();

}  // namespace kernels

WLAC_NAMESPACE_END

#endif  // WLAC_KERNELS_H_
