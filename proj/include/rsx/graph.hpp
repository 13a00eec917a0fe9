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

#ifndef RSX_GRAPH_HPP_
#define RSX_GRAPH_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rsx/error.hpp"
#include "rsx/rng.hpp"
#include "rsx/tensor.hpp"

namespace rsx {

enum class Mode { kTrain, kEval };

template <typename Scalar>
class Graph;

// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
template <typename Scalar>
class Var {
 public:
  Var() = default;
  Var(Graph<Scalar>* graph, int id) : graph_(graph), id_(id) {}

  Graph<Scalar>& graph() const { return *graph_; }
  int id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

  const Tensor<Scalar>& value() const;
  const Tensor<Scalar>& grad() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  Shape shape() const { return shape_of(value()); }

 private:
  Graph<Scalar>* graph_ = nullptr;
  int id_ = -1;
};

// Tape of operations recorded in construction order, which is a valid
// topological order. Building a node runs its forward kernel immediately;
// `forward()` re-runs every kernel in order, which lets callers rebind
// placeholders or perturb parameters and re-evaluate the same graph.
//
// Dropout draws come from an RNG reset to `seed` at the start of every full
// forward pass, so re-evaluation reproduces the same masks.
template <typename Scalar>
class Graph {
 public:
  struct Node;
  using Kernel = std::function<void(Graph&, Node&)>;

  struct Node {
    std::string op;
    std::vector<int> inputs;
    Tensor<Scalar> value;
    Tensor<Scalar> grad;
    std::vector<Tensor<Scalar>> saved;
    const Parameter<Scalar>* source = nullptr;
    Parameter<Scalar>* param = nullptr;  // gradient target, null when read-only
    std::string placeholder;
    bool requires_grad = false;
    Kernel forward;
    Kernel backward;
  };

  explicit Graph(Mode mode = Mode::kTrain, std::uint64_t seed = 0)
      : mode_(mode), seed_(seed), rng_(seed) {
#ifndef NDEBUG
    check_finite_ = true;
#endif
  }

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Mode mode() const { return mode_; }
  bool training() const { return mode_ == Mode::kTrain; }
  Rng& rng() { return rng_; }
  std::uint64_t seed() const { return seed_; }
  void set_check_finite(bool on) { check_finite_ = on; }

  std::size_t size() const { return nodes_.size(); }
  Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  const Tensor<Scalar>& value(int id) const { return node(id).value; }

  Var<Scalar> add(std::string op, const std::vector<Var<Scalar>>& inputs, Kernel forward,
                  Kernel backward) {
    Node n;
    n.op = std::move(op);
    for (const auto& v : inputs) {
      if (&v.graph() != this) throw InvalidArgument("node '" + n.op + "' mixes graphs");
      n.inputs.push_back(v.id());
      n.requires_grad = n.requires_grad || node(v.id()).requires_grad;
    }
    n.forward = std::move(forward);
    n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    const int id = static_cast<int>(nodes_.size()) - 1;
    run_forward(node(id));
    return Var<Scalar>(this, id);
  }

  // Leaf bound to a parameter. One leaf per parameter; repeated calls
  // return the same node so gradients from every use accumulate there.
  Var<Scalar> parameter(Parameter<Scalar>& p) { return leaf(&p, &p); }

  // Read-only use of a parameter: its value enters as a constant.
  Var<Scalar> parameter(const Parameter<Scalar>& p) { return leaf(&p, nullptr); }

  Var<Scalar> constant(Tensor<Scalar> v) {
    Node n;
    n.op = "constant";
    n.value = std::move(v);
    nodes_.push_back(std::move(n));
    return Var<Scalar>(this, static_cast<int>(nodes_.size()) - 1);
  }

  // Named input leaf; rebind with forward({{name, tensor}}).
  Var<Scalar> placeholder(const std::string& name, Tensor<Scalar> initial) {
    Node n;
    n.op = "placeholder";
    n.placeholder = name;
    n.value = std::move(initial);
    nodes_.push_back(std::move(n));
    return Var<Scalar>(this, static_cast<int>(nodes_.size()) - 1);
  }

  std::vector<Parameter<Scalar>*> parameters() const {
    std::vector<Parameter<Scalar>*> out;
    for (const auto& n : nodes_)
      if (n.param != nullptr && n.param->trainable) out.push_back(n.param);
    return out;
  }

  void forward(const std::map<std::string, Tensor<Scalar>>& bindings = {}) {
    for (const auto& [name, tensor] : bindings) {
      bool bound = false;
      for (auto& n : nodes_) {
        if (n.placeholder == name) {
          n.value = tensor;
          bound = true;
        }
      }
      if (!bound) throw InvalidArgument("no placeholder named '" + name + "'");
    }
    rng_ = Rng(seed_);
    for (auto& n : nodes_) run_forward(n);
  }

  // Populates Parameter::grad for every trainable parameter reachable from
  // the graph. Parameter gradients are reset first.
  void backward(Var<Scalar> loss) {
    const Node& l = node(loss.id());
    if (l.value.rows() != 1 || l.value.cols() != 1)
      throw ShapeError("backward needs a scalar loss, got " + to_string(shape_of(l.value)) + " from '" +
                       l.op + "'");
    for (auto& n : nodes_) {
      if (n.param != nullptr && n.param->trainable) n.param->zero_grad();
      if (n.requires_grad)
        n.grad.setZero(n.value.rows(), n.value.cols());
      else
        n.grad.resize(0, 0);
    }
    if (!l.requires_grad) return;
    node(loss.id()).grad.setConstant(1, 1, Scalar(1));
    for (int id = loss.id(); id >= 0; --id) {
      Node& n = node(id);
      if (n.requires_grad && n.backward) n.backward(*this, n);
    }
  }

  // Gradient buffer of an input, or nullptr when it does not need one.
  Tensor<Scalar>* grad_of(const Node& n, std::size_t input) {
    Node& in = node(n.inputs[input]);
    return in.requires_grad ? &in.grad : nullptr;
  }
  const Tensor<Scalar>& input(const Node& n, std::size_t i) const { return node(n.inputs[i]).value; }

 private:
  Var<Scalar> leaf(const Parameter<Scalar>* source, Parameter<Scalar>* target) {
    if (auto it = param_nodes_.find(source); it != param_nodes_.end()) return Var<Scalar>(this, it->second);
    Node n;
    n.op = "param:" + source->name;
    n.source = source;
    n.param = target;
    n.requires_grad = target != nullptr && target->trainable;
    n.forward = [](Graph&, Node& self) { self.value = self.source->value; };
    if (n.requires_grad) {
      n.backward = [](Graph&, Node& self) {
        if (self.param->grad.rows() != self.value.rows() || self.param->grad.cols() != self.value.cols())
          self.param->zero_grad();
        self.param->grad += self.grad;
      };
    }
    nodes_.push_back(std::move(n));
    const int id = static_cast<int>(nodes_.size()) - 1;
    param_nodes_.emplace(source, id);
    run_forward(node(id));
    return Var<Scalar>(this, id);
  }

  void run_forward(Node& n) {
    if (!n.forward) return;
    n.forward(*this, n);
    if (check_finite_ && !n.value.allFinite())
      throw NumericError("non-finite output from '" + n.op + "' " + to_string(shape_of(n.value)));
  }

  Mode mode_;
  std::uint64_t seed_;
  Rng rng_;
  bool check_finite_ = false;
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter<Scalar>*, int> param_nodes_;
};

template <typename Scalar>
const Tensor<Scalar>& Var<Scalar>::value() const {
  return graph_->node(id_).value;
}

template <typename Scalar>
const Tensor<Scalar>& Var<Scalar>::grad() const {
  return graph_->node(id_).grad;
}

template <typename Scalar>
void forward(Graph<Scalar>& graph, const std::map<std::string, Tensor<Scalar>>& bindings = {}) {
  graph.forward(bindings);
}

template <typename Scalar>
void backward(Graph<Scalar>& graph, Var<Scalar> loss) {
  graph.backward(loss);
}

}  // namespace rsx

#endif  // RSX_GRAPH_HPP_
