// Copyright 2026 The rsx Authors.
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

#ifndef RSX_TENSOR_HPP_
#define RSX_TENSOR_HPP_

#include <Eigen/Core>

#include <array>
#include <string>

namespace rsx {

// Dense row-major matrix. Batched sequence activations are stored with the
// batch and time axes flattened into rows: [batch * seq_len, features].
template <typename Scalar>
using Tensor = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using Index = Eigen::Index;
using Shape = std::array<Index, 2>;

template <typename Derived>
Shape shape_of(const Eigen::EigenBase<Derived>& m) {
  return {m.rows(), m.cols()};
}

inline std::string to_string(const Shape& s) {
  return "[" + std::to_string(s[0]) + "x" + std::to_string(s[1]) + "]";
}

// A named trainable tensor with its gradient buffer. `decay` marks whether
// decoupled weight decay applies (off for biases and norm gains).
template <typename Scalar>
struct Parameter {
  std::string name;
  Tensor<Scalar> value;
  Tensor<Scalar> grad;
  bool trainable = true;
  bool decay = true;

  Parameter() = default;
  Parameter(std::string n, Index rows, Index cols, bool decay_ = true)
      : name(std::move(n)), value(Tensor<Scalar>::Zero(rows, cols)), decay(decay_) {}

  Shape shape() const { return shape_of(value); }
  Index size() const { return value.size(); }

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }

  template <typename Other>
  Parameter<Other> cast() const {
    Parameter<Other> out;
    out.name = name;
    out.value = value.template cast<Other>();
    if (grad.size() != 0) out.grad = grad.template cast<Other>();
    out.trainable = trainable;
    out.decay = decay;
    return out;
  }
};

}  // namespace rsx

#endif  // RSX_TENSOR_HPP_
