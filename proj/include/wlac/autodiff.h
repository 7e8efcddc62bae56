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

// Reverse-mode differentiation over a linear tape of matrix operations.
//
// A Tape records every operation in execution order, which is already a
// topological order, so Backward walks it once in reverse. Parameters enter
// the tape by name and their adjoints are accumulated into a Gradients map.

#ifndef WLAC_AUTODIFF_H_
#define WLAC_AUTODIFF_H_

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "wlac/common.h"
#include "wlac/kernels.h"
#include "wlac/tensor.h"

WLAC_NAMESPACE_BEGIN

// Parameter name -> adjoint.
using Gradients = std::map<std::string, Tensor>;

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Tape {
 public:
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // A value that never receives a gradient.
  Var Constant(Tensor value);
  // A value that receives a gradient but is not a named parameter (tests).
  Var Input(Tensor value);
  // A named parameter. The tensor is referenced, not copied, and must outlive
  // the tape. Registering the same name twice returns the same Var.
  Var Param(const std::string& name, const Tensor& value);

  const Tensor& value(Var v) const;
  // Adjoint of an Input or Param after Backward; empty if never reached.
  const Tensor& grad(Var v) const { return nodes_.at(v.id).grad; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  bool grad_enabled() const { return grad_enabled_; }
  std::size_t size() const { return nodes_.size(); }

  // Runs the reverse sweep from a 1x1 loss and adds parameter adjoints into
  // `out` (missing entries are created). A tape can be swept only once.
  void Backward(Var loss, Gradients* out);
  bool consumed() const { return consumed_; }

  // Low-level building block used by the op library: appends a result node
  // whose backward closure reads and writes adjoints through the tape.
  Var Record(Tensor value, std::vector<Var> parents, const char* op,
             std::function<void(Tape&, int self)> backward);
  // Adjoint buffer of a node, allocated (zeroed) on first use.
  Tensor& MutableGrad(Var v);

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    Tensor grad;
    bool requires_grad = false;
    std::string param_name;
    std::function<void(Tape&, int)> backward;
  };

  bool grad_enabled_ = true;
  bool consumed_ = false;
  std::vector<Node> nodes_;
  std::map<const Tensor*, int> param_index_;
};

// Differentiable operations. Shapes are rank-2 [rows x cols] throughout.
namespace ops {

// x[n x in] * w[in x out] (+ b[out]).
Var Linear(Tape& t, Var x, Var w, Var b = {});
Var Add(Tape& t, Var a, Var b);
// x + c where c is a constant of the same shape.
Var AddConstant(Tape& t, Var x, const Tensor& c);
Var Scale(Tape& t, Var x, Real s);
Var Relu(Tape& t, Var x);
Var LayerNorm(Tape& t, Var x, Var gamma, Var beta, Real eps = Real(1e-5));
// Inverted dropout; identity when p == 0.
Var Dropout(Tape& t, Var x, Real p, std::mt19937_64& rng);
// Rows of `table` selected by id, times `scale`.
Var Embedding(Tape& t, Var table, const std::vector<int>& ids, Real scale);
// Core attention over heads; inputs are already projected. When `probs_out`
// is non-null the probabilities are copied there (layout per
// AttentionLayout::ProbOffsets).
Var Attention(Tape& t, Var q, Var k, Var v, std::size_t heads,
              const kernels::AttentionLayout& layout,
              std::vector<Real>* probs_out = nullptr);
Var GatherRows(Tape& t, Var x, const std::vector<std::size_t>& rows);
// Mean over rows of -log softmax(logits)[target].
Var CrossEntropy(Tape& t, Var logits, const std::vector<int>& targets);
// sum(x .* w) for a constant w; used to probe gradients.
Var WeightedSum(Tape& t, Var x, const Tensor& w);

}  // namespace ops

WLAC_NAMESPACE_END

#endif  // WLAC_AUTODIFF_H_
