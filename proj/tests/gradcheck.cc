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

#include "gradcheck.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "wlac/autodiff.h"
#include "wlac/model.h"
#include "wlac/transformer.h"

namespace wlac_test {

using wlac::Gradients;
using wlac::Real;
using wlac::Tape;
using wlac::Tensor;
using wlac::Var;
namespace ops = wlac::ops;

namespace {

constexpr double kStep = 1e-5;

double RelError(double a, double n) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6});
}

Tensor RandomTensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                    double away_from_zero = 0) {
  std::uniform_real_distribution<double> u(-1, 1);
  Tensor t({rows, cols});
  for (std::size_t i = 0; i < t.size(); ++i) {
    double v = u(rng);
    if (away_from_zero > 0 && std::abs(v) < away_from_zero) {
      v = v < 0 ? v - away_from_zero : v + away_from_zero;
    }
    t[i] = static_cast<Real>(v);
  }
  return t;
}

std::size_t Dim(std::mt19937_64& rng, std::size_t lo = 2, std::size_t hi = 8) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

using Builder = std::function<Var(Tape&, const std::vector<Var>&)>;

// Loss = sum(f(inputs) .* w) for a fixed random w; compares the tape's
// adjoint of every input element with a central difference.
GradCheckResult CheckOp(const std::string& name, std::vector<Tensor> inputs,
                        const Builder& f, std::mt19937_64& rng) {
  Tensor weights;
  const auto loss_of = [&](const std::vector<Tensor>& in, std::vector<Tensor>* grads) {
    Tape t;
    std::vector<Var> vars;
    for (const auto& x : in) vars.push_back(t.Input(x));
    const Var out = f(t, vars);
    if (weights.empty()) {
      weights = RandomTensor(t.value(out).rows(), t.value(out).cols(), rng);
    }
    const Var loss = ops::WeightedSum(t, out, weights);
    const double value = t.value(loss)[0];
    if (grads != nullptr) {
      Gradients unused;
      t.Backward(loss, &unused);
      for (std::size_t i = 0; i < vars.size(); ++i) {
        const Tensor& g = t.grad(vars[i]);
        grads->push_back(g.empty() ? Tensor(in[i].shape()) : g);
      }
    }
    return value;
  };
  std::vector<Tensor> analytic;
  loss_of(inputs, &analytic);
  GradCheckResult r{name, 0, 0};
  for (std::size_t a = 0; a < inputs.size(); ++a) {
    for (std::size_t i = 0; i < inputs[a].size(); ++i) {
      const Real saved = inputs[a][i];
      inputs[a][i] = static_cast<Real>(saved + kStep);
      const double up = loss_of(inputs, nullptr);
      inputs[a][i] = static_cast<Real>(saved - kStep);
      const double down = loss_of(inputs, nullptr);
      inputs[a][i] = saved;
      const double numeric = (up - down) / (2 * kStep);
      r.max_rel_error = std::max(r.max_rel_error, RelError(analytic[a][i], numeric));
      ++r.checked;
    }
  }
  return r;
}

wlac::kernels::AttentionLayout RandomLayout(std::size_t& q_rows, std::size_t& k_rows,
                                            std::mt19937_64& rng) {
  wlac::kernels::AttentionLayout layout;
  q_rows = 0;
  k_rows = 0;
  for (int s = 0; s < 2; ++s) {
    wlac::kernels::AttentionSegment seg;
    seg.q_begin = q_rows;
    seg.q_len = Dim(rng, 1, 4);
    seg.k_begin = k_rows;
    seg.k_len = Dim(rng, 2, 4);
    q_rows += seg.q_len;
    k_rows += seg.k_len;
    layout.segments.push_back(seg);
  }
  // Hide one key of the second segment; its first key stays visible.
  layout.key_valid.assign(k_rows, 1);
  layout.key_valid.back() = 0;
  return layout;
}

}  // namespace

const char* GradCheckPrecision() { return wlac::kRealName; }

double UniformCrossEntropyError(std::size_t vocab) {
  Tape t;
  const Var logits = t.Constant(Tensor({3, vocab}, Real(0.25)));
  const Var loss = ops::CrossEntropy(t, logits, {0, static_cast<int>(vocab / 2),
                                                 static_cast<int>(vocab - 1)});
  return std::abs(static_cast<double>(t.value(loss)[0]) -
                  std::log(static_cast<double>(vocab)));
}

std::vector<GradCheckResult> CheckAllOps(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<GradCheckResult> out;
  {
    const std::size_t n = Dim(rng), in = Dim(rng), o = Dim(rng);
    out.push_back(CheckOp("linear",
                          {RandomTensor(n, in, rng), RandomTensor(in, o, rng),
                           RandomTensor(1, o, rng)},
                          [](Tape& t, const std::vector<Var>& v) {
                            return ops::Linear(t, v[0], v[1], v[2]);
                          },
                          rng));
  }
  {
    const std::size_t n = Dim(rng), m = Dim(rng);
    out.push_back(CheckOp("add", {RandomTensor(n, m, rng), RandomTensor(n, m, rng)},
                          [](Tape& t, const std::vector<Var>& v) {
                            return ops::Add(t, v[0], v[1]);
                          },
                          rng));
    const Tensor c = RandomTensor(n, m, rng);
    out.push_back(CheckOp("add_constant", {RandomTensor(n, m, rng)},
                          [c](Tape& t, const std::vector<Var>& v) {
                            return ops::AddConstant(t, v[0], c);
                          },
                          rng));
    out.push_back(CheckOp("scale", {RandomTensor(n, m, rng)},
                          [](Tape& t, const std::vector<Var>& v) {
                            return ops::Scale(t, v[0], Real(-1.7));
                          },
                          rng));
    out.push_back(CheckOp("relu", {RandomTensor(n, m, rng, 0.05)},
                          [](Tape& t, const std::vector<Var>& v) {
                            return ops::Relu(t, v[0]);
                          },
                          rng));
    out.push_back(CheckOp("weighted_sum", {RandomTensor(n, m, rng)},
                          [](Tape&, const std::vector<Var>& v) { return v[0]; }, rng));
  }
  {
    const std::size_t n = Dim(rng), m = Dim(rng, 3, 8);
    out.push_back(CheckOp("layer_norm",
                          {RandomTensor(n, m, rng), RandomTensor(1, m, rng),
                           RandomTensor(1, m, rng)},
                          [](Tape& t, const std::vector<Var>& v) {
                            return ops::LayerNorm(t, v[0], v[1], v[2]);
                          },
                          rng));
  }
  {
    const std::size_t n = Dim(rng), m = Dim(rng);
    const std::uint64_t mask_seed = rng();
    out.push_back(CheckOp("dropout", {RandomTensor(n, m, rng)},
                          [mask_seed](Tape& t, const std::vector<Var>& v) {
                            std::mt19937_64 r(mask_seed);
                            return ops::Dropout(t, v[0], Real(0.3), r);
                          },
                          rng));
  }
  {
    const std::size_t rows = Dim(rng), d = Dim(rng);
    std::vector<int> ids;
    for (int i = 0; i < 6; ++i) {
      ids.push_back(static_cast<int>(std::uniform_int_distribution<std::size_t>(0, rows - 1)(rng)));
    }
    out.push_back(CheckOp("embedding", {RandomTensor(rows, d, rng)},
                          [ids](Tape& t, const std::vector<Var>& v) {
                            return ops::Embedding(t, v[0], ids, Real(1.5));
                          },
                          rng));
    std::vector<std::size_t> pick = {rows - 1, 0, rows / 2, 0};
    out.push_back(CheckOp("gather_rows", {RandomTensor(rows, d, rng)},
                          [pick](Tape& t, const std::vector<Var>& v) {
                            return ops::GatherRows(t, v[0], pick);
                          },
                          rng));
  }
  {
    std::size_t q_rows = 0, k_rows = 0;
    const auto layout = RandomLayout(q_rows, k_rows, rng);
    const std::size_t heads = 2, d = 6;
    out.push_back(CheckOp("attention",
                          {RandomTensor(q_rows, d, rng), RandomTensor(k_rows, d, rng),
                           RandomTensor(k_rows, d, rng)},
                          [layout](Tape& t, const std::vector<Var>& v) {
                            return ops::Attention(t, v[0], v[1], v[2], heads, layout);
                          },
                          rng));
    auto dense = layout;
    for (const auto& seg : dense.segments) {
      for (std::size_t i = 0; i < seg.q_len * seg.k_len; ++i) {
        // Keep key 0 visible so no row is fully masked.
        dense.dense_mask.push_back(i % seg.k_len == 0 ? 1 : static_cast<std::uint8_t>(rng() % 2));
      }
    }
    out.push_back(CheckOp("attention_dense_mask",
                          {RandomTensor(q_rows, d, rng), RandomTensor(k_rows, d, rng),
                           RandomTensor(k_rows, d, rng)},
                          [dense](Tape& t, const std::vector<Var>& v) {
                            return ops::Attention(t, v[0], v[1], v[2], heads, dense);
                          },
                          rng));
  }
  {
    const std::size_t n = Dim(rng), classes = Dim(rng);
    std::vector<int> targets;
    for (std::size_t i = 0; i < n; ++i) {
      targets.push_back(static_cast<int>(rng() % classes));
    }
    out.push_back(CheckOp("cross_entropy", {RandomTensor(n, classes, rng)},
                          [targets](Tape& t, const std::vector<Var>& v) {
                            return ops::CrossEntropy(t, v[0], targets);
                          },
                          rng));
  }
  return out;
}

GradCheckResult CheckOneLayerModel(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  wlac::TransformerConfig cfg;
  cfg.layers = 1;
  cfg.heads = 2;
  cfg.d_model = 4;
  cfg.d_ff = 6;
  cfg.dropout = 0;
  cfg.max_len = 16;
  cfg.vocab_size = 12;
  cfg.output_size = 12;
  wlac::ModelParams params = wlac::InitParams(cfg, seed);
  // Break the zero-bias and unit-gain symmetry of the initializer.
  for (auto& [name, t] : params.tensors) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      t[i] = static_cast<Real>(t[i] + 0.2 * std::uniform_real_distribution<double>(-1, 1)(rng));
    }
  }
  const auto rand_ids = [&](std::size_t n) {
    std::vector<int> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back(static_cast<int>(2 + rng() % 10));
    return ids;
  };
  std::vector<wlac::WlacExample> wlac_rows(2);
  for (auto& ex : wlac_rows) {
    ex.src = rand_ids(4);
    ex.dec.ids = rand_ids(5);
    ex.dec.mask_position = 2;
    ex.dec.ids[2] = wlac::kMaskId;
    ex.target = static_cast<int>(rng() % 12);
  }
  wlac_rows[1].src = wlac_rows[0].src;
  wlac::CmlmExample cm;
  cm.src = rand_ids(3);
  cm.dec = rand_ids(5);
  cm.positions = {1, 3};
  cm.targets = {cm.dec[1], cm.dec[3]};
  cm.dec[1] = cm.dec[3] = wlac::kMaskId;
  std::vector<wlac::CmlmExample> cmlm_rows = {cm};

  const auto loss_of = [&](Gradients* grads) {
    Tape t;
    wlac::ForwardOptions opts;
    const wlac::LossTerms terms =
        wlac::JointLossGraph(t, params, wlac_rows, cmlm_rows, opts);
    const double v = t.value(terms.total)[0];
    if (grads != nullptr) t.Backward(terms.total, grads);
    return v;
  };
  Gradients analytic;
  loss_of(&analytic);
  GradCheckResult r{"one_layer_model", 0, 0};
  for (auto& [name, t] : params.tensors) {
    const auto it = analytic.find(name);
    for (std::size_t i = 0; i < t.size(); ++i) {
      const Real saved = t[i];
      t[i] = static_cast<Real>(saved + kStep);
      const double up = loss_of(nullptr);
      t[i] = static_cast<Real>(saved - kStep);
      const double down = loss_of(nullptr);
      t[i] = saved;
      const double numeric = (up - down) / (2 * kStep);
      const double a = it == analytic.end() || it->second.empty() ? 0.0 : it->second[i];
      r.max_rel_error = std::max(r.max_rel_error, RelError(a, numeric));
      ++r.checked;
    }
  }
  return r;
}

}  // namespace wlac_test
