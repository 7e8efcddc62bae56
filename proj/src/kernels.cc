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

#include "wlac/kernels.h"

#include <algorithm>
#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

WLAC_NAMESPACE_BEGIN

namespace kernels {

namespace {

using Index = std::ptrdiff_t;

inline Real Dot(const Real* __restrict a, const Real* __restrict b,
                std::size_t n) {
  Real acc = 0;
#pragma omp simd reduction(+ : acc)
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

inline void Axpy(Real alpha, const Real* __restrict x, Real* __restrict y,
                 std::size_t n) {
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

// ---------------------------------------------------------------------------
// GEMM family

void MatMul(std::span<const Real> a, std::span<const Real> b, std::span<Real> c,
            Dims d, bool accumulate) {
  const Real* pa = a.data();
  const Real* pb = b.data();
  Real* pc = c.data();
  const Index m = static_cast<Index>(d.m);
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < m; ++i) {
    Real* crow = pc + i * d.n;
    if (!accumulate) std::fill(crow, crow + d.n, Real(0));
    const Real* arow = pa + i * d.k;
    for (std::size_t p = 0; p < d.k; ++p) {
      const Real av = arow[p];
      if (av != Real(0)) Axpy(av, pb + p * d.n, crow, d.n);
    }
  }
}

void MatMulTransAAccumulate(std::span<const Real> a, std::span<const Real> b,
                            std::span<Real> c, Dims d) {
  const Real* pa = a.data();
  const Real* pb = b.data();
  Real* pc = c.data();
  const Index k = static_cast<Index>(d.k);
#pragma omp parallel for schedule(static)
  for (Index p = 0; p < k; ++p) {
    Real* crow = pc + p * d.n;
    for (std::size_t i = 0; i < d.m; ++i) {
      const Real av = pa[i * d.k + p];
      if (av != Real(0)) Axpy(av, pb + i * d.n, crow, d.n);
    }
  }
}

void MatMulTransBAccumulate(std::span<const Real> a, std::span<const Real> b,
                            std::span<Real> c, Dims d) {
  const Real* pa = a.data();
  const Real* pb = b.data();
  Real* pc = c.data();
  const Index m = static_cast<Index>(d.m);
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < m; ++i) {
    const Real* arow = pa + i * d.n;
    Real* crow = pc + i * d.k;
    for (std::size_t p = 0; p < d.k; ++p) crow[p] += Dot(arow, pb + p * d.n, d.n);
  }
}

// ---------------------------------------------------------------------------
// Row-wise kernels

void SoftmaxRows(std::span<Real> x, std::size_t cols) {
  const Index rows = static_cast<Index>(x.size() / cols);
  Real* px = x.data();
#pragma omp parallel for schedule(static)
  for (Index r = 0; r < rows; ++r) {
    Real* row = px + r * cols;
    const Real mx = *std::max_element(row, row + cols);
    Real sum = 0;
    for (std::size_t j = 0; j < cols; ++j) {
      row[j] = std::exp(row[j] - mx);
      sum += row[j];
    }
    const Real inv = Real(1) / sum;
    for (std::size_t j = 0; j < cols; ++j) row[j] *= inv;
  }
}

void LayerNormForward(std::span<const Real> x, std::span<const Real> gamma,
                      std::span<const Real> beta, std::size_t cols, Real eps,
                      std::span<Real> y, std::span<Real> mean,
                      std::span<Real> rstd) {
  const Index rows = static_cast<Index>(x.size() / cols);
#pragma omp parallel for schedule(static)
  for (Index r = 0; r < rows; ++r) {
    const Real* xr = x.data() + r * cols;
    Real* yr = y.data() + r * cols;
    Real mu = 0;
    for (std::size_t j = 0; j < cols; ++j) mu += xr[j];
    mu /= static_cast<Real>(cols);
    Real var = 0;
    for (std::size_t j = 0; j < cols; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= static_cast<Real>(cols);
    const Real rs = Real(1) / std::sqrt(var + eps);
    for (std::size_t j = 0; j < cols; ++j) {
      yr[j] = (xr[j] - mu) * rs * gamma[j] + beta[j];
    }
    mean[r] = mu;
    rstd[r] = rs;
  }
}

void LayerNormBackward(std::span<const Real> x, std::span<const Real> gamma,
                       std::span<const Real> mean, std::span<const Real> rstd,
                       std::span<const Real> dy, std::size_t cols,
                       std::span<Real> dx, std::span<Real> dgamma,
                       std::span<Real> dbeta) {
  const std::size_t rows = x.size() / cols;
  // Parameter gradients reduce over rows; keep that serial so the summation
  // order is fixed.
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* xr = x.data() + r * cols;
    const Real* dyr = dy.data() + r * cols;
    for (std::size_t j = 0; j < cols; ++j) {
      const Real xhat = (xr[j] - mean[r]) * rstd[r];
      dgamma[j] += dyr[j] * xhat;
      dbeta[j] += dyr[j];
    }
  }
  const Index irows = static_cast<Index>(rows);
#pragma omp parallel for schedule(static)
  for (Index r = 0; r < irows; ++r) {
    const Real* xr = x.data() + r * cols;
    const Real* dyr = dy.data() + r * cols;
    Real* dxr = dx.data() + r * cols;
    Real sum_g = 0;
    Real sum_gx = 0;
    for (std::size_t j = 0; j < cols; ++j) {
      const Real g = dyr[j] * gamma[j];
      const Real xhat = (xr[j] - mean[r]) * rstd[r];
      sum_g += g;
      sum_gx += g * xhat;
    }
    const Real inv_n = Real(1) / static_cast<Real>(cols);
    for (std::size_t j = 0; j < cols; ++j) {
      const Real g = dyr[j] * gamma[j];
      const Real xhat = (xr[j] - mean[r]) * rstd[r];
      dxr[j] += rstd[r] * (g - inv_n * sum_g - xhat * inv_n * sum_gx);
    }
  }
}

// ---------------------------------------------------------------------------
// Attention

std::vector<std::size_t> AttentionLayout::ProbOffsets(std::size_t heads) const {
  std::vector<std::size_t> out(segments.size());
  std::size_t off = 0;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    out[s] = off;
    off += heads * segments[s].q_len * segments[s].k_len;
  }
  return out;
}

std::size_t AttentionLayout::ProbSize(std::size_t heads) const {
  std::size_t total = 0;
  for (const auto& s : segments) total += heads * s.q_len * s.k_len;
  return total;
}

bool AttentionLayout::Allowed(std::size_t segment, std::size_t dense_offset,
                              std::size_t qi, std::size_t kj) const {
  const AttentionSegment& s = segments[segment];
  if (!key_valid.empty() && !key_valid[s.k_begin + kj]) return false;
  if (!dense_mask.empty() && !dense_mask[dense_offset + qi * s.k_len + kj]) {
    return false;
  }
  return true;
}

namespace {

std::vector<std::size_t> DenseOffsets(const AttentionLayout& layout) {
  std::vector<std::size_t> out(layout.segments.size());
  std::size_t off = 0;
  for (std::size_t s = 0; s < layout.segments.size(); ++s) {
    out[s] = off;
    off += layout.segments[s].q_len * layout.segments[s].k_len;
  }
  return out;
}

void AttentionHeadForward(const Real* q, const Real* k, const Real* v,
                          std::size_t d_model, std::size_t head,
                          std::size_t dh, const AttentionLayout& layout,
                          std::size_t seg, std::size_t dense_off, Real* out,
                          Real* probs) {
  const AttentionSegment& s = layout.segments[seg];
  const Real scale = Real(1) / std::sqrt(static_cast<Real>(dh));
  const std::size_t col = head * dh;
  for (std::size_t qi = 0; qi < s.q_len; ++qi) {
    const Real* qrow = q + (s.q_begin + qi) * d_model + col;
    Real* prow = probs + qi * s.k_len;
    Real mx = -std::numeric_limits<Real>::infinity();
    for (std::size_t kj = 0; kj < s.k_len; ++kj) {
      if (!layout.Allowed(seg, dense_off, qi, kj)) {
        prow[kj] = -std::numeric_limits<Real>::infinity();
        continue;
      }
      prow[kj] = Dot(qrow, k + (s.k_begin + kj) * d_model + col, dh) * scale;
      mx = std::max(mx, prow[kj]);
    }
    Real* orow = out + (s.q_begin + qi) * d_model + col;
    std::fill(orow, orow + dh, Real(0));
    if (mx == -std::numeric_limits<Real>::infinity()) {
      std::fill(prow, prow + s.k_len, Real(0));
      continue;
    }
    Real sum = 0;
    for (std::size_t kj = 0; kj < s.k_len; ++kj) {
      prow[kj] = prow[kj] == -std::numeric_limits<Real>::infinity()
                     ? Real(0)
                     : std::exp(prow[kj] - mx);
      sum += prow[kj];
    }
    const Real inv = Real(1) / sum;
    for (std::size_t kj = 0; kj < s.k_len; ++kj) {
      prow[kj] *= inv;
      if (prow[kj] != Real(0)) {
        Axpy(prow[kj], v + (s.k_begin + kj) * d_model + col, orow, dh);
      }
    }
  }
}

}  // namespace

void AttentionForward(std::span<const Real> q, std::span<const Real> k,
                      std::span<const Real> v, std::size_t d_model,
                      std::size_t heads, const AttentionLayout& layout,
                      std::span<Real> out, std::span<Real> probs) {
  const std::size_t dh = d_model / heads;
  const auto prob_off = layout.ProbOffsets(heads);
  const auto dense_off = DenseOffsets(layout);
  const Index jobs = static_cast<Index>(layout.segments.size() * heads);
#pragma omp parallel for schedule(dynamic, 4)
  for (Index job = 0; job < jobs; ++job) {
    const std::size_t seg = static_cast<std::size_t>(job) / heads;
    const std::size_t h = static_cast<std::size_t>(job) % heads;
    const AttentionSegment& s = layout.segments[seg];
    AttentionHeadForward(q.data(), k.data(), v.data(), d_model, h, dh, layout,
                         seg, dense_off[seg], out.data(),
                         probs.data() + prob_off[seg] + h * s.q_len * s.k_len);
  }
}

void AttentionBackward(std::span<const Real> q, std::span<const Real> k,
                       std::span<const Real> v, std::span<const Real> probs,
                       std::span<const Real> dout, std::size_t d_model,
                       std::size_t heads, const AttentionLayout& layout,
                       std::span<Real> dq, std::span<Real> dk,
                       std::span<Real> dv) {
  const std::size_t dh = d_model / heads;
  const Real scale = Real(1) / std::sqrt(static_cast<Real>(dh));
  const auto prob_off = layout.ProbOffsets(heads);
  // Segments may share keys, so heads are the unit of parallel work: each
  // head owns a disjoint column block of dq, dk and dv.
  const Index iheads = static_cast<Index>(heads);
#pragma omp parallel for schedule(static)
  for (Index h = 0; h < iheads; ++h) {
    const std::size_t col = static_cast<std::size_t>(h) * dh;
    std::vector<Real> ds;
    for (std::size_t seg = 0; seg < layout.segments.size(); ++seg) {
      const AttentionSegment& s = layout.segments[seg];
      const Real* p = probs.data() + prob_off[seg] + h * s.q_len * s.k_len;
      ds.assign(s.k_len, Real(0));
      for (std::size_t qi = 0; qi < s.q_len; ++qi) {
        const std::size_t qrow = (s.q_begin + qi) * d_model + col;
        const Real* prow = p + qi * s.k_len;
        const Real* gout = dout.data() + qrow;
        Real weighted = 0;
        for (std::size_t kj = 0; kj < s.k_len; ++kj) {
          if (prow[kj] == Real(0)) {
            ds[kj] = 0;
            continue;
          }
          ds[kj] = Dot(gout, v.data() + (s.k_begin + kj) * d_model + col, dh);
          weighted += ds[kj] * prow[kj];
        }
        for (std::size_t kj = 0; kj < s.k_len; ++kj) {
          if (prow[kj] == Real(0)) continue;
          const std::size_t krow = (s.k_begin + kj) * d_model + col;
          const Real g = prow[kj] * (ds[kj] - weighted) * scale;
          Axpy(g, k.data() + krow, dq.data() + qrow, dh);
          Axpy(g, q.data() + qrow, dk.data() + krow, dh);
          Axpy(prow[kj], gout, dv.data() + krow, dh);
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Serial references: direct transcriptions of the defining formulas.

namespace reference {

void MatMul(std::span<const Real> a, std::span<const Real> b, std::span<Real> c,
            Dims d, bool accumulate) {
  for (std::size_t i = 0; i < d.m; ++i) {
    for (std::size_t j = 0; j < d.n; ++j) {
      Real acc = accumulate ? c[i * d.n + j] : Real(0);
      for (std::size_t p = 0; p < d.k; ++p) acc += a[i * d.k + p] * b[p * d.n + j];
      c[i * d.n + j] = acc;
    }
  }
}

void MatMulTransAAccumulate(std::span<const Real> a, std::span<const Real> b,
                            std::span<Real> c, Dims d) {
  for (std::size_t p = 0; p < d.k; ++p) {
    for (std::size_t j = 0; j < d.n; ++j) {
      Real acc = 0;
      for (std::size_t i = 0; i < d.m; ++i) acc += a[i * d.k + p] * b[i * d.n + j];
      c[p * d.n + j] += acc;
    }
  }
}

void MatMulTransBAccumulate(std::span<const Real> a, std::span<const Real> b,
                            std::span<Real> c, Dims d) {
  for (std::size_t i = 0; i < d.m; ++i) {
    for (std::size_t p = 0; p < d.k; ++p) {
      Real acc = 0;
      for (std::size_t j = 0; j < d.n; ++j) acc += a[i * d.n + j] * b[p * d.n + j];
      c[i * d.k + p] += acc;
    }
  }
}

void SoftmaxRows(std::span<Real> x, std::size_t cols) {
  for (std::size_t r = 0; r < x.size() / cols; ++r) {
    Real mx = x[r * cols];
    for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, x[r * cols + j]);
    Real sum = 0;
    for (std::size_t j = 0; j < cols; ++j) sum += std::exp(x[r * cols + j] - mx);
    for (std::size_t j = 0; j < cols; ++j) {
      x[r * cols + j] = std::exp(x[r * cols + j] - mx) / sum;
    }
  }
}

void LayerNormForward(std::span<const Real> x, std::span<const Real> gamma,
                      std::span<const Real> beta, std::size_t cols, Real eps,
                      std::span<Real> y, std::span<Real> mean,
                      std::span<Real> rstd) {
  for (std::size_t r = 0; r < x.size() / cols; ++r) {
    Real mu = 0;
    for (std::size_t j = 0; j < cols; ++j) mu += x[r * cols + j];
    mu /= static_cast<Real>(cols);
    Real var = 0;
    for (std::size_t j = 0; j < cols; ++j) {
      var += (x[r * cols + j] - mu) * (x[r * cols + j] - mu);
    }
    var /= static_cast<Real>(cols);
    mean[r] = mu;
    rstd[r] = Real(1) / std::sqrt(var + eps);
    for (std::size_t j = 0; j < cols; ++j) {
      y[r * cols + j] = (x[r * cols + j] - mu) * rstd[r] * gamma[j] + beta[j];
    }
  }
}

void AttentionForward(std::span<const Real> q, std::span<const Real> k,
                      std::span<const Real> v, std::size_t d_model,
                      std::size_t heads, const AttentionLayout& layout,
                      std::span<Real> out, std::span<Real> probs) {
  const std::size_t dh = d_model / heads;
  const Real scale = Real(1) / std::sqrt(static_cast<Real>(dh));
  const auto prob_off = layout.ProbOffsets(heads);
  const auto dense_off = DenseOffsets(layout);
  for (std::size_t seg = 0; seg < layout.segments.size(); ++seg) {
    const AttentionSegment& s = layout.segments[seg];
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t qi = 0; qi < s.q_len; ++qi) {
        std::vector<Real> score(s.k_len, Real(0));
        std::vector<bool> allowed(s.k_len);
        Real mx = -std::numeric_limits<Real>::infinity();
        for (std::size_t kj = 0; kj < s.k_len; ++kj) {
          allowed[kj] = layout.Allowed(seg, dense_off[seg], qi, kj);
          if (!allowed[kj]) continue;
          Real acc = 0;
          for (std::size_t t = 0; t < dh; ++t) {
            acc += q[(s.q_begin + qi) * d_model + h * dh + t] *
                   k[(s.k_begin + kj) * d_model + h * dh + t];
          }
          score[kj] = acc * scale;
          mx = std::max(mx, score[kj]);
        }
        Real sum = 0;
        for (std::size_t kj = 0; kj < s.k_len; ++kj) {
          if (allowed[kj]) sum += std::exp(score[kj] - mx);
        }
        Real* prow = probs.data() + prob_off[seg] + h * s.q_len * s.k_len +
                     qi * s.k_len;
        for (std::size_t kj = 0; kj < s.k_len; ++kj) {
          prow[kj] = allowed[kj] && sum > 0 ? std::exp(score[kj] - mx) / sum
                                            : Real(0);
        }
        for (std::size_t t = 0; t < dh; ++t) {
          Real acc = 0;
          for (std::size_t kj = 0; kj < s.k_len; ++kj) {
            acc += prow[kj] * v[(s.k_begin + kj) * d_model + h * dh + t];
          }
          out[(s.q_begin + qi) * d_model + h * dh + t] = acc;
        }
      }
    }
  }
}

}  // namespace reference

int MaxThreads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace kernels

WLAC_NAMESPACE_END
