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

#include <cmath>
#include <random>
#include <vector>

#include "gtest/gtest.h"

namespace wlac {
namespace {

std::vector<Real> Random(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Real> v(n);
  for (auto& x : v) x = static_cast<Real>(u(rng));
  return v;
}

void ExpectNear(const std::vector<Real>& a, const std::vector<Real>& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_NEAR(a[i], b[i], tol * std::max(1.0, std::abs(static_cast<double>(b[i])))) << i;
  }
}

TEST(KernelsTest, MatMulFamilyMatchesReference) {
  std::mt19937_64 rng(1);
  for (const kernels::Dims d : {kernels::Dims{1, 1, 1}, kernels::Dims{7, 13, 5},
                                kernels::Dims{64, 64, 256}, kernels::Dims{33, 17, 70}}) {
    const auto a = Random(d.m * d.k, rng);
    const auto b = Random(d.k * d.n, rng);
    for (bool acc : {false, true}) {
      auto c1 = Random(d.m * d.n, rng);
      auto c2 = c1;
      kernels::MatMul(a, b, c1, d, acc);
      kernels::reference::MatMul(a, b, c2, d, acc);
      ExpectNear(c1, c2, 1e-4);
    }
    // a^T [m x k]^T * [m x n]
    const auto g = Random(d.m * d.n, rng);
    auto t1 = Random(d.k * d.n, rng);
    auto t2 = t1;
    kernels::MatMulTransAAccumulate(a, g, t1, d);
    kernels::reference::MatMulTransAAccumulate(a, g, t2, d);
    ExpectNear(t1, t2, 1e-4);
    const auto bt = Random(d.k * d.n, rng);
    auto u1 = Random(d.m * d.k, rng);
    auto u2 = u1;
    kernels::MatMulTransBAccumulate(g, bt, u1, d);
    kernels::reference::MatMulTransBAccumulate(g, bt, u2, d);
    ExpectNear(u1, u2, 1e-4);
  }
}

TEST(KernelsTest, SoftmaxRowsMatchesReferenceAndNormalizes) {
  std::mt19937_64 rng(2);
  auto x = Random(6 * 11, rng);
  x[3] = 80;  // large logit must not overflow
  auto y = x;
  kernels::SoftmaxRows(x, 11);
  kernels::reference::SoftmaxRows(y, 11);
  ExpectNear(x, y, 1e-5);
  for (std::size_t r = 0; r < 6; ++r) {
    double s = 0;
    for (std::size_t j = 0; j < 11; ++j) s += x[r * 11 + j];
    EXPECT_NEAR(s, 1.0, 1e-5);
  }
}

TEST(KernelsTest, LayerNormMatchesReference) {
  std::mt19937_64 rng(3);
  const std::size_t rows = 9, cols = 16;
  const auto x = Random(rows * cols, rng);
  const auto g = Random(cols, rng);
  const auto b = Random(cols, rng);
  std::vector<Real> y1(rows * cols), y2(rows * cols), m1(rows), m2(rows), r1(rows), r2(rows);
  kernels::LayerNormForward(x, g, b, cols, Real(1e-5), y1, m1, r1);
  kernels::reference::LayerNormForward(x, g, b, cols, Real(1e-5), y2, m2, r2);
  ExpectNear(y1, y2, 1e-5);
  ExpectNear(m1, m2, 1e-5);
  ExpectNear(r1, r2, 1e-4);
}

TEST(KernelsTest, AttentionMatchesReferenceWithMasksAndSharedKeys) {
  std::mt19937_64 rng(4);
  const std::size_t d = 8, heads = 2;
  kernels::AttentionLayout layout;
  // Two query segments share keys [0, 4); a third uses [4, 9).
  layout.segments = {{0, 3, 0, 4}, {3, 2, 0, 4}, {5, 4, 4, 5}};
  layout.key_valid = {1, 1, 0, 1, 1, 1, 1, 1, 0};
  for (const auto& s : layout.segments) {
    for (std::size_t i = 0; i < s.q_len * s.k_len; ++i) {
      layout.dense_mask.push_back(i % s.k_len == 0 ? 1 : static_cast<std::uint8_t>(rng() % 2));
    }
  }
  const auto q = Random(9 * d, rng);
  const auto k = Random(9 * d, rng);
  const auto v = Random(9 * d, rng);
  std::vector<Real> o1(9 * d), o2(9 * d);
  std::vector<Real> p1(layout.ProbSize(heads)), p2(layout.ProbSize(heads));
  kernels::AttentionForward(q, k, v, d, heads, layout, o1, p1);
  kernels::reference::AttentionForward(q, k, v, d, heads, layout, o2, p2);
  ExpectNear(o1, o2, 1e-5);
  ExpectNear(p1, p2, 1e-5);
  // Masked keys get exactly zero probability.
  const auto off = layout.ProbOffsets(heads);
  std::size_t dense = 0;
  for (std::size_t s = 0; s < layout.segments.size(); ++s) {
    const auto& seg = layout.segments[s];
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t qi = 0; qi < seg.q_len; ++qi) {
        for (std::size_t kj = 0; kj < seg.k_len; ++kj) {
          const Real p = p1[off[s] + (h * seg.q_len + qi) * seg.k_len + kj];
          if (!layout.Allowed(s, dense, qi, kj)) {
            EXPECT_EQ(p, Real(0));
          }
        }
      }
    }
    dense += seg.q_len * seg.k_len;
  }
}

}  // namespace
}  // namespace wlac
