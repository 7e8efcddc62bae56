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

#include "wlac/autodiff.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <utility>

WLAC_NAMESPACE_BEGIN

// ---------------------------------------------------------------------------
// Tape

Var Tape::Constant(Tensor value) {
  WLAC_CHECK(value.AllFinite(), "constant contains non-finite values");
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::Input(Tensor value) {
  WLAC_CHECK(value.AllFinite(), "input contains non-finite values");
  Node n;
  n.value = std::move(value);
  n.requires_grad = grad_enabled_;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::Param(const std::string& name, const Tensor& value) {
  if (auto it = param_index_.find(&value); it != param_index_.end()) {
    return Var{it->second};
  }
  Node n;
  n.external = &value;
  n.requires_grad = grad_enabled_;
  n.param_name = name;
  nodes_.push_back(std::move(n));
  const int id = static_cast<int>(nodes_.size()) - 1;
  param_index_[&value] = id;
  return Var{id};
}

const Tensor& Tape::value(Var v) const {
  const Node& n = nodes_.at(v.id);
  return n.external ? *n.external : n.value;
}

Tensor& Tape::MutableGrad(Var v) {
  Node& n = nodes_.at(v.id);
  if (n.grad.empty()) n.grad = Tensor(value(v).shape());
  return n.grad;
}

Var Tape::Record(Tensor value, std::vector<Var> parents, const char* op,
                 std::function<void(Tape&, int)> backward) {
  if (!value.AllFinite()) {
    throw NumericFault(std::string("non-finite output from op ") + op);
  }
  Node n;
  n.value = std::move(value);
  for (Var p : parents) {
    if (p.valid() && nodes_.at(p.id).requires_grad) n.requires_grad = true;
  }
  n.requires_grad = n.requires_grad && grad_enabled_;
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

void Tape::Backward(Var loss, Gradients* out) {
  WLAC_CHECK(!consumed_, "tape already consumed by a backward pass");
  WLAC_CHECK(grad_enabled_, "tape was recorded without gradients");
  WLAC_CHECK(value(loss).size() == 1, "loss must be a scalar");
  consumed_ = true;
  MutableGrad(loss).Fill(Real(1));
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, i);
  }
  if (out == nullptr) return;
  for (const Node& n : nodes_) {
    if (n.param_name.empty()) continue;
    Tensor& dst = (*out)[n.param_name];
    if (dst.empty()) dst = Tensor(n.external->shape());
    if (n.grad.empty()) continue;
    Real* d = dst.data();
    const Real* g = n.grad.data();
    for (std::size_t j = 0; j < dst.size(); ++j) d[j] += g[j];
  }
}

// ---------------------------------------------------------------------------
// Ops

namespace ops {

namespace {

void CheckMatrix(const Tensor& t, const char* what) {
  WLAC_CHECK(t.rank() == 2, std::string(what) + " must be rank 2, got " +
                                t.ShapeString());
}

}  // namespace

Var Linear(Tape& t, Var x, Var w, Var b) {
  const Tensor& xv = t.value(x);
  const Tensor& wv = t.value(w);
  CheckMatrix(xv, "linear input");
  CheckMatrix(wv, "linear weight");
  WLAC_CHECK(xv.cols() == wv.rows(), "linear shape mismatch " +
                                         xv.ShapeString() + " * " +
                                         wv.ShapeString());
  const kernels::Dims d{xv.rows(), wv.rows(), wv.cols()};
  Tensor y({d.m, d.n});
  if (b.valid()) {
    const Tensor& bv = t.value(b);
    WLAC_CHECK(bv.size() == d.n, "linear bias size mismatch");
    for (std::size_t i = 0; i < d.m; ++i) {
      std::copy(bv.data(), bv.data() + d.n, y.data() + i * d.n);
    }
    kernels::MatMul(xv.values(), wv.values(), y.values(), d, true);
  } else {
    kernels::MatMul(xv.values(), wv.values(), y.values(), d, false);
  }
  return t.Record(std::move(y), {x, w, b}, "linear",
                  [x, w, b, d](Tape& tp, int self) {
                    const Tensor& dy = tp.grad(Var{self});
                    if (tp.requires_grad(x)) {
                      kernels::MatMulTransBAccumulate(
                          dy.values(), tp.value(w).values(),
                          tp.MutableGrad(x).values(), {d.m, d.k, d.n});
                    }
                    if (tp.requires_grad(w)) {
                      kernels::MatMulTransAAccumulate(
                          tp.value(x).values(), dy.values(),
                          tp.MutableGrad(w).values(), {d.m, d.k, d.n});
                    }
                    if (b.valid() && tp.requires_grad(b)) {
                      Tensor& db = tp.MutableGrad(b);
                      for (std::size_t i = 0; i < d.m; ++i) {
                        for (std::size_t j = 0; j < d.n; ++j) {
                          db[j] += dy[i * d.n + j];
                        }
                      }
                    }
                  });
}

Var Add(Tape& t, Var a, Var b) {
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  WLAC_CHECK(av.SameShape(bv), "add shape mismatch " + av.ShapeString() +
                                   " vs " + bv.ShapeString());
  Tensor y = av;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
  return t.Record(std::move(y), {a, b}, "add", [a, b](Tape& tp, int self) {
    const Tensor& dy = tp.grad(Var{self});
    for (Var p : {a, b}) {
      if (!tp.requires_grad(p)) continue;
      Tensor& g = tp.MutableGrad(p);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += dy[i];
    }
  });
}

Var AddConstant(Tape& t, Var x, const Tensor& c) {
  const Tensor& xv = t.value(x);
  WLAC_CHECK(xv.size() == c.size(), "add-constant size mismatch");
  Tensor y = xv;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += c[i];
  return t.Record(std::move(y), {x}, "add_constant", [x](Tape& tp, int self) {
    const Tensor& dy = tp.grad(Var{self});
    Tensor& g = tp.MutableGrad(x);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += dy[i];
  });
}

Var Scale(Tape& t, Var x, Real s) {
  Tensor y = t.value(x);
  for (Real& v : y.storage()) v *= s;
  return t.Record(std::move(y), {x}, "scale", [x, s](Tape& tp, int self) {
    const Tensor& dy = tp.grad(Var{self});
    Tensor& g = tp.MutableGrad(x);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * dy[i];
  });
}

Var Relu(Tape& t, Var x) {
  Tensor y = t.value(x);
  for (Real& v : y.storage()) v = v > Real(0) ? v : Real(0);
  return t.Record(std::move(y), {x}, "relu", [x](Tape& tp, int self) {
    const Tensor& dy = tp.grad(Var{self});
    const Tensor& xv = tp.value(x);
    Tensor& g = tp.MutableGrad(x);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (xv[i] > Real(0)) g[i] += dy[i];
    }
  });
}

Var LayerNorm(Tape& t, Var x, Var gamma, Var beta, Real eps) {
  const Tensor& xv = t.value(x);
  CheckMatrix(xv, "layer-norm input");
  const std::size_t cols = xv.cols();
  WLAC_CHECK(t.value(gamma).size() == cols && t.value(beta).size() == cols,
             "layer-norm parameter size mismatch");
  Tensor y(xv.shape());
  auto stats = std::make_shared<std::vector<Real>>(2 * xv.rows());
  std::span<Real> mean(stats->data(), xv.rows());
  std::span<Real> rstd(stats->data() + xv.rows(), xv.rows());
  kernels::LayerNormForward(xv.values(), t.value(gamma).values(),
                            t.value(beta).values(), cols, eps, y.values(), mean,
                            rstd);
  return t.Record(
      std::move(y), {x, gamma, beta}, "layer_norm",
      [x, gamma, beta, cols, stats](Tape& tp, int self) {
        const std::size_t rows = tp.value(x).rows();
        std::span<const Real> mean(stats->data(), rows);
        std::span<const Real> rstd(stats->data() + rows, rows);
        Tensor scratch_x;
        Tensor scratch_g;
        Tensor scratch_b;
        std::span<Real> dx;
        std::span<Real> dg;
        std::span<Real> db;
        if (tp.requires_grad(x)) {
          dx = tp.MutableGrad(x).values();
        } else {
          scratch_x = Tensor(tp.value(x).shape());
          dx = scratch_x.values();
        }
        if (tp.requires_grad(gamma)) {
          dg = tp.MutableGrad(gamma).values();
        } else {
          scratch_g = Tensor(tp.value(gamma).shape());
          dg = scratch_g.values();
        }
        if (tp.requires_grad(beta)) {
          db = tp.MutableGrad(beta).values();
        } else {
          scratch_b = Tensor(tp.value(beta).shape());
          db = scratch_b.values();
        }
        kernels::LayerNormBackward(tp.value(x).values(),
                                   tp.value(gamma).values(), mean, rstd,
                                   tp.grad(Var{self}).values(), cols, dx, dg,
                                   db);
      });
}

Var Dropout(Tape& t, Var x, Real p, std::mt19937_64& rng) {
  if (p <= Real(0)) return x;
  WLAC_CHECK(p < Real(1), "dropout probability must be < 1");
  const Tensor& xv = t.value(x);
  auto keep = std::make_shared<std::vector<std::uint8_t>>(xv.size());
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const Real scale = Real(1) / (Real(1) - p);
  Tensor y(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    (*keep)[i] = unif(rng) >= static_cast<double>(p);
    y[i] = (*keep)[i] ? xv[i] * scale : Real(0);
  }
  return t.Record(std::move(y), {x}, "dropout",
                  [x, keep, scale](Tape& tp, int self) {
                    const Tensor& dy = tp.grad(Var{self});
                    Tensor& g = tp.MutableGrad(x);
                    for (std::size_t i = 0; i < g.size(); ++i) {
                      if ((*keep)[i]) g[i] += dy[i] * scale;
                    }
                  });
}

Var Embedding(Tape& t, Var table, const std::vector<int>& ids, Real scale) {
  const Tensor& tv = t.value(table);
  CheckMatrix(tv, "embedding table");
  const std::size_t d = tv.cols();
  Tensor y({ids.size(), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    WLAC_CHECK(ids[i] >= 0 && static_cast<std::size_t>(ids[i]) < tv.rows(),
               "embedding id " + std::to_string(ids[i]) + " out of range [0," +
                   std::to_string(tv.rows()) + ")");
    const Real* src = tv.data() + static_cast<std::size_t>(ids[i]) * d;
    Real* dst = y.data() + i * d;
    for (std::size_t j = 0; j < d; ++j) dst[j] = src[j] * scale;
  }
  return t.Record(std::move(y), {table}, "embedding",
                  [table, ids, scale, d](Tape& tp, int self) {
                    const Tensor& dy = tp.grad(Var{self});
                    Tensor& g = tp.MutableGrad(table);
                    for (std::size_t i = 0; i < ids.size(); ++i) {
                      Real* dst = g.data() + static_cast<std::size_t>(ids[i]) * d;
                      const Real* src = dy.data() + i * d;
                      for (std::size_t j = 0; j < d; ++j) dst[j] += scale * src[j];
                    }
                  });
}

Var Attention(Tape& t, Var q, Var k, Var v, std::size_t heads,
              const kernels::AttentionLayout& layout,
              std::vector<Real>* probs_out) {
  const Tensor& qv = t.value(q);
  const Tensor& kv = t.value(k);
  const Tensor& vv = t.value(v);
  const std::size_t d_model = qv.cols();
  WLAC_CHECK(heads > 0 && d_model % heads == 0,
             "d_model must be divisible by heads");
  WLAC_CHECK(kv.cols() == d_model && vv.cols() == d_model &&
                 kv.rows() == vv.rows(),
             "attention key/value shape mismatch");
  for (const auto& s : layout.segments) {
    WLAC_CHECK(s.q_begin + s.q_len <= qv.rows() &&
                   s.k_begin + s.k_len <= kv.rows(),
               "attention segment out of range");
  }
  WLAC_CHECK(layout.key_valid.empty() || layout.key_valid.size() == kv.rows(),
             "key mask length must equal number of keys");
  auto shared_layout = std::make_shared<kernels::AttentionLayout>(layout);
  auto probs =
      std::make_shared<std::vector<Real>>(layout.ProbSize(heads), Real(0));
  Tensor out({qv.rows(), d_model});
  kernels::AttentionForward(qv.values(), kv.values(), vv.values(), d_model,
                            heads, *shared_layout, out.values(), *probs);
  if (probs_out != nullptr) *probs_out = *probs;
  return t.Record(
      std::move(out), {q, k, v}, "attention",
      [q, k, v, heads, d_model, shared_layout, probs](Tape& tp, int self) {
        Tensor dq(tp.value(q).shape());
        Tensor dk(tp.value(k).shape());
        Tensor dv(tp.value(v).shape());
        kernels::AttentionBackward(tp.value(q).values(), tp.value(k).values(),
                                   tp.value(v).values(), *probs,
                                   tp.grad(Var{self}).values(), d_model, heads,
                                   *shared_layout, dq.values(), dk.values(),
                                   dv.values());
        const std::pair<Var, const Tensor*> parts[] = {
            {q, &dq}, {k, &dk}, {v, &dv}};
        for (const auto& [p, g] : parts) {
          if (!tp.requires_grad(p)) continue;
          Tensor& dst = tp.MutableGrad(p);
          for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += (*g)[i];
        }
      });
}

Var GatherRows(Tape& t, Var x, const std::vector<std::size_t>& rows) {
  const Tensor& xv = t.value(x);
  const std::size_t d = xv.cols();
  Tensor y({rows.size(), d});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    WLAC_CHECK(rows[i] < xv.rows(), "gather row out of range");
    std::copy_n(xv.data() + rows[i] * d, d, y.data() + i * d);
  }
  return t.Record(std::move(y), {x}, "gather_rows",
                  [x, rows, d](Tape& tp, int self) {
                    const Tensor& dy = tp.grad(Var{self});
                    Tensor& g = tp.MutableGrad(x);
                    for (std::size_t i = 0; i < rows.size(); ++i) {
                      for (std::size_t j = 0; j < d; ++j) {
                        g[rows[i] * d + j] += dy[i * d + j];
                      }
                    }
                  });
}

Var CrossEntropy(Tape& t, Var logits, const std::vector<int>& targets) {
  const Tensor& lv = t.value(logits);
  CheckMatrix(lv, "cross-entropy logits");
  const std::size_t n = lv.rows();
  const std::size_t vocab = lv.cols();
  WLAC_CHECK(n == targets.size() && n > 0,
             "cross-entropy needs one target per logit row");
  auto probs = std::make_shared<Tensor>(lv);
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    WLAC_CHECK(targets[i] >= 0 && static_cast<std::size_t>(targets[i]) < vocab,
               "cross-entropy target out of range");
    const Real* row = lv.data() + i * vocab;
    const double mx = *std::max_element(row, row + vocab);
    double sum = 0;
    for (std::size_t j = 0; j < vocab; ++j) sum += std::exp(row[j] - mx);
    const double lse = mx + std::log(sum);
    total += lse - static_cast<double>(row[targets[i]]);
    Real* prow = probs->data() + i * vocab;
    for (std::size_t j = 0; j < vocab; ++j) {
      prow[j] = static_cast<Real>(std::exp(row[j] - lse));
    }
  }
  Tensor loss = Tensor::Scalar(static_cast<Real>(total / static_cast<double>(n)));
  return t.Record(std::move(loss), {logits}, "cross_entropy",
                  [logits, targets, probs, n, vocab](Tape& tp, int self) {
                    const Real g = tp.grad(Var{self})[0] / static_cast<Real>(n);
                    Tensor& dl = tp.MutableGrad(logits);
                    for (std::size_t i = 0; i < n; ++i) {
                      const Real* prow = probs->data() + i * vocab;
                      Real* drow = dl.data() + i * vocab;
                      for (std::size_t j = 0; j < vocab; ++j) drow[j] += g * prow[j];
                      drow[targets[i]] -= g;
                    }
                  });
}

Var WeightedSum(Tape& t, Var x, const Tensor& w) {
  const Tensor& xv = t.value(x);
  WLAC_CHECK(xv.size() == w.size(), "weighted-sum size mismatch");
  double acc = 0;
  for (std::size_t i = 0; i < xv.size(); ++i) acc += xv[i] * w[i];
  return t.Record(Tensor::Scalar(static_cast<Real>(acc)), {x}, "weighted_sum",
                  [x, w](Tape& tp, int self) {
                    const Real g = tp.grad(Var{self})[0];
                    Tensor& dx = tp.MutableGrad(x);
                    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g * w[i];
                  });
}

}  // namespace ops

WLAC_NAMESPACE_END
