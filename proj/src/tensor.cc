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

#include "wlac/tensor.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

WLAC_NAMESPACE_BEGIN

namespace {

std::size_t Product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, Real fill)
    : shape_(std::move(shape)), data_(Product(shape_), fill) {
  WLAC_CHECK(shape_.size() == 1 || shape_.size() == 2,
             "tensor rank must be 1 or 2, got " + wlac::ShapeString(shape_));
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<Real> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  WLAC_CHECK(shape_.size() == 1 || shape_.size() == 2,
             "tensor rank must be 1 or 2, got " + wlac::ShapeString(shape_));
  WLAC_CHECK(data_.size() == Product(shape_),
             "data length " + std::to_string(data_.size()) +
                 " does not match shape " + wlac::ShapeString(shape_));
}

void Tensor::Fill(Real v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](Real v) { return std::isfinite(v); });
}

std::string Tensor::ShapeString() const { return wlac::ShapeString(shape_); }

std::string ShapeString(const std::vector<std::size_t>& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

WLAC_NAMESPACE_END
