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

#ifndef RSX_OPS_HPP_
#define RSX_OPS_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "rsx/graph.hpp"

// Differentiable primitives over Graph. Each op records a node whose forward
// kernel validates shapes on every evaluation and whose backward kernel
// accumulates into the gradients of its inputs. Row reductions accumulate
// in double regardless of Scalar.

namespace rsx {

namespace detail {

inline void require(bool ok, const std::string& op, const std::string& msg) {
  if (!ok) throw ShapeError(op + ": " + msg);
}

inline std::string shapes(const Shape& a, const Shape& b) { return to_string(a) + " vs " + to_string(b); }

}  // namespace detail

template <typename S>
Var<S> matmul(Var<S> a, Var<S> b) {
  return a.graph().add(
      "matmul", {a, b},
      [](Graph<S>& g, auto& n) {
        const auto& x = g.input(n, 0);
        const auto& y = g.input(n, 1);
        detail::require(x.cols() == y.rows(), "matmul", detail::shapes(shape_of(x), shape_of(y)));
        n.value.noalias() = x * y;
      },
      [](Graph<S>& g, auto& n) {
        if (auto* da = g.grad_of(n, 0)) da->noalias() += n.grad * g.input(n, 1).transpose();
        if (auto* db = g.grad_of(n, 1)) db->noalias() += g.input(n, 0).transpose() * n.grad;
      });
}

// a * b^T
template <typename S>
Var<S> matmul_nt(Var<S> a, Var<S> b) {
  return a.graph().add(
      "matmul_nt", {a, b},
      [](Graph<S>& g, auto& n) {
        const auto& x = g.input(n, 0);
        const auto& y = g.input(n, 1);
        detail::require(x.cols() == y.cols(), "matmul_nt", detail::shapes(shape_of(x), shape_of(y)));
        n.value.noalias() = x * y.transpose();
      },
      [](Graph<S>& g, auto& n) {
        if (auto* da = g.grad_of(n, 0)) da->noalias() += n.grad * g.input(n, 1);
        if (auto* db = g.grad_of(n, 1)) db->noalias() += n.grad.transpose() * g.input(n, 0);
      });
}

template <typename S>
Var<S> add(Var<S> a, Var<S> b) {
  return a.graph().add(
      "add", {a, b},
      [](Graph<S>& g, auto& n) {
        const auto& x = g.input(n, 0);
        const auto& y = g.input(n, 1);
        detail::require(shape_of(x) == shape_of(y), "add", detail::shapes(shape_of(x), shape_of(y)));
        n.value = x + y;
      },
      [](Graph<S>& g, auto& n) {
        if (auto* da = g.grad_of(n, 0)) *da += n.grad;
        if (auto* db = g.grad_of(n, 1)) *db += n.grad;
      });
}

template <typename S>
Var<S> sub(Var<S> a, Var<S> b) {
  return a.graph().add(
      "sub", {a, b},
      [](Graph<S>& g, auto& n) {
        const auto& x = g.input(n, 0);
        const auto& y = g.input(n, 1);
        detail::require(shape_of(x) == shape_of(y), "sub", detail::shapes(shape_of(x), shape_of(y)));
        n.value = x - y;
      },
      [](Graph<S>& g, auto& n) {
        if (auto* da = g.grad_of(n, 0)) *da += n.grad;
        if (auto* db = g.grad_of(n, 1)) *db -= n.grad;
      });
}

template <typename S>
Var<S> operator+(Var<S> a, Var<S> b) {
  return add(a, b);
}

template <typename S>
Var<S> operator-(Var<S> a, Var<S> b) {
  return sub(a, b);
}

// Elementwise product.
template <typename S>
Var<S> mul(Var<S> a, Var<S> b) {
  return a.graph().add(
      "mul", {a, b},
      [](Graph<S>& g, auto& n) {
        const auto& x = g.input(n, 0);
        const auto& y = g.input(n, 1);
        detail::require(shape_of(x) == shape_of(y), "mul", detail::shapes(shape_of(x), shape_of(y)));
        n.value = x.cwiseProduct(y);
      },
      [](Graph<S>& g, auto& n) {
        if (auto* da = g.grad_of(n, 0)) *da += n.grad.cwiseProduct(g.input(n, 1));
        if (auto* db = g.grad_of(n, 1)) *db += n.grad.cwiseProduct(g.input(n, 0));
      });
}

template <typename S>
Var<S> scale(Var<S> a, double factor) {
  const S f = static_cast<S>(factor);
  return a.graph().add(
      "scale", {a}, [f](Graph<S>& g, auto& n) { n.value = g.input(n, 0) * f; },
      [f](Graph<S>& g, auto& n) {
        if (auto* da = g.grad_of(n, 0)) *da += n.grad * f;
      });
}

// x [rows x cols] + bias [1 x cols], broadcast over rows.
template <typename S>
Var<S> add_bias(Var<S> x, Var<S> bias) {
  return x.graph().add(
      "add_bias", {x, bias},
      [](Graph<S>& g, auto& n) {
        const auto& a = g.input(n, 0);
        const auto& b = g.input(n, 1);
        detail::require(b.rows() == 1 && b.cols() == a.cols(), "add_bias",
                        detail::shapes(shape_of(a), shape_of(b)));
        n.value = a.rowwise() + b.row(0);
      },
      [](Graph<S>& g, auto& n) {
        if (auto* da = g.grad_of(n, 0)) *da += n.grad;
        if (auto* db = g.grad_of(n, 1)) *db += n.grad.colwise().sum();
      });
}

// Sum of all entries, as a [1 x 1] tensor.
template <typename S>
Var<S> sum(Var<S> a) {
  return a.graph().add(
      "sum", {a},
      [](Graph<S>& g, auto& n) {
        const auto& x = g.input(n, 0);
        double acc = 0.0;
        for (Index i = 0; i < x.size(); ++i) acc += static_cast<double>(x.data()[i]);
        n.value.setConstant(1, 1, static_cast<S>(acc));
      },
      [](Graph<S>& g, auto& n) {
        if (auto* da = g.grad_of(n, 0)) da->array() += n.grad(0, 0);
      });
}

template <typename S>
Var<S> mean(Var<S> a) {
  const auto count = static_cast<double>(a.value().size());
  return scale(sum(a), count > 0 ? 1.0 / count : 0.0);
}

template <typename S>
Var<S> relu(Var<S> a) {
  return a.graph().add(
      "relu", {a}, [](Graph<S>& g, auto& n) { n.value = g.input(n, 0).cwiseMax(S(0)); },
      [](Graph<S>& g, auto& n) {
        if (auto* da = g.grad_of(n, 0))
          *da += (g.input(n, 0).array() > S(0)).select(n.grad, S(0)).matrix();
      });
}

// GELU, tanh approximation.
template <typename S>
Var<S> gelu(Var<S> a) {
  return a.graph().add(
      "gelu", {a},
      [](Graph<S>& g, auto& n) {
        constexpr S c = static_cast<S>(0.7978845608028654);  // sqrt(2/pi)
        const auto& x = g.input(n, 0).array();
        n.value = (S(0.5) * x * (S(1) + (c * (x + S(0.044715) * x.cube())).tanh())).matrix();
      },
      [](Graph<S>& g, auto& n) {
        auto* da = g.grad_of(n, 0);
        if (da == nullptr) return;
        constexpr S c = static_cast<S>(0.7978845608028654);
        const auto& x = g.input(n, 0).array();
        const auto t = (c * (x + S(0.044715) * x.cube())).tanh().eval();
        const auto dt = (c * (S(1) + S(3 * 0.044715) * x.square())).eval();
        *da += (n.grad.array() * (S(0.5) * (S(1) + t) + S(0.5) * x * (S(1) - t.square()) * dt)).matrix();
      });
}

// Row-wise softmax with max subtraction.
template <typename S>
Var<S> softmax_rows(Var<S> a) {
  return a.graph().add(
      "softmax", {a},
      [](Graph<S>& g, auto& n) {
        const auto& x = g.input(n, 0);
        n.value.resize(x.rows(), x.cols());
        for (Index r = 0; r < x.rows(); ++r) {
          const S m = x.row(r).maxCoeff();
          double z = 0.0;
          for (Index c = 0; c < x.cols(); ++c) {
            const double e = std::exp(static_cast<double>(x(r, c) - m));
            n.value(r, c) = static_cast<S>(e);
            z += e;
          }
          n.value.row(r) /= static_cast<S>(z);
        }
      },
      [](Graph<S>& g, auto& n) {
        auto* da = g.grad_of(n, 0);
        if (da == nullptr) return;
        const auto& y = n.value;
        for (Index r = 0; r < y.rows(); ++r) {
          double dot = 0.0;
          for (Index c = 0; c < y.cols(); ++c) dot += static_cast<double>(n.grad(r, c) * y(r, c));
          da->row(r).array() += y.row(r).array() * (n.grad.row(r).array() - static_cast<S>(dot));
        }
      });
}

// Per-row normalization to zero mean and unit variance followed by an
// affine transform with gain [1 x cols] and bias [1 x cols].
template <typename S>
Var<S> layer_norm(Var<S> x, Var<S> gain, Var<S> bias, double eps = 1e-5) {
  return x.graph().add(
      "layer_norm", {x, gain, bias},
      [eps](Graph<S>& g, auto& n) {
        const auto& in = g.input(n, 0);
        const auto& gm = g.input(n, 1);
        const auto& bt = g.input(n, 2);
        detail::require(gm.rows() == 1 && gm.cols() == in.cols() && shape_of(bt) == shape_of(gm), "layer_norm",
                        detail::shapes(shape_of(in), shape_of(gm)));
        const Index rows = in.rows();
        const Index cols = in.cols();
        n.saved.resize(2);
        Tensor<S>& xhat = n.saved[0];
        Tensor<S>& rstd = n.saved[1];
        xhat.resize(rows, cols);
        rstd.resize(rows, 1);
        for (Index r = 0; r < rows; ++r) {
          double mu = 0.0;
          for (Index c = 0; c < cols; ++c) mu += static_cast<double>(in(r, c));
          mu /= static_cast<double>(cols);
          double var = 0.0;
          for (Index c = 0; c < cols; ++c) {
            const double d = static_cast<double>(in(r, c)) - mu;
            var += d * d;
          }
          var /= static_cast<double>(cols);
          const double inv = 1.0 / std::sqrt(var + eps);
          rstd(r, 0) = static_cast<S>(inv);
          for (Index c = 0; c < cols; ++c) xhat(r, c) = static_cast<S>((static_cast<double>(in(r, c)) - mu) * inv);
        }
        n.value = (xhat.array().rowwise() * gm.row(0).array()).rowwise() + bt.row(0).array();
      },
      [](Graph<S>& g, auto& n) {
        const Tensor<S>& xhat = n.saved[0];
        const Tensor<S>& rstd = n.saved[1];
        const auto& gm = g.input(n, 1);
        if (auto* dg = g.grad_of(n, 1)) *dg += n.grad.cwiseProduct(xhat).colwise().sum();
        if (auto* db = g.grad_of(n, 2)) *db += n.grad.colwise().sum();
        auto* dx = g.grad_of(n, 0);
        if (dx == nullptr) return;
        const Index cols = xhat.cols();
        for (Index r = 0; r < xhat.rows(); ++r) {
          double m1 = 0.0;
          double m2 = 0.0;
          for (Index c = 0; c < cols; ++c) {
            const double d = static_cast<double>(n.grad(r, c) * gm(0, c));
            m1 += d;
            m2 += d * static_cast<double>(xhat(r, c));
          }
          m1 /= static_cast<double>(cols);
          m2 /= static_cast<double>(cols);
          for (Index c = 0; c < cols; ++c) {
            const double d = static_cast<double>(n.grad(r, c) * gm(0, c));
            (*dx)(r, c) += static_cast<S>(static_cast<double>(rstd(r, 0)) *
                                          (d - m1 - static_cast<double>(xhat(r, c)) * m2));
          }
        }
      });
}

// Rows of `table` selected by `ids`; out-of-range ids are rejected.
template <typename S>
Var<S> embedding(Var<S> table, std::vector<int> ids) {
  return table.graph().add(
      "embedding", {table},
      [ids](Graph<S>& g, auto& n) {
        const auto& t = g.input(n, 0);
        n.value.resize(static_cast<Index>(ids.size()), t.cols());
        for (std::size_t i = 0; i < ids.size(); ++i) {
          if (ids[i] < 0 || ids[i] >= t.rows())
            throw InvalidArgument("embedding: id " + std::to_string(ids[i]) + " outside table of " +
                                  std::to_string(t.rows()) + " rows");
          n.value.row(static_cast<Index>(i)) = t.row(ids[i]);
        }
      },
      [ids](Graph<S>& g, auto& n) {
        auto* dt = g.grad_of(n, 0);
        if (dt == nullptr) return;
        for (std::size_t i = 0; i < ids.size(); ++i) dt->row(ids[i]) += n.grad.row(static_cast<Index>(i));
      });
}

template <typename S>
Var<S> gather_rows(Var<S> x, std::vector<int> rows) {
  return x.graph().add(
      "gather_rows", {x},
      [rows](Graph<S>& g, auto& n) {
        const auto& in = g.input(n, 0);
        n.value.resize(static_cast<Index>(rows.size()), in.cols());
        for (std::size_t i = 0; i < rows.size(); ++i) {
          if (rows[i] < 0 || rows[i] >= in.rows())
            throw ShapeError("gather_rows: row " + std::to_string(rows[i]) + " outside " + to_string(shape_of(in)));
          n.value.row(static_cast<Index>(i)) = in.row(rows[i]);
        }
      },
      [rows](Graph<S>& g, auto& n) {
        auto* dx = g.grad_of(n, 0);
        if (dx == nullptr) return;
        for (std::size_t i = 0; i < rows.size(); ++i) dx->row(rows[i]) += n.grad.row(static_cast<Index>(i));
      });
}

// Inverted dropout. Identity in eval mode or when rate is zero.
template <typename S>
Var<S> dropout(Var<S> x, double rate) {
  return x.graph().add(
      "dropout", {x},
      [rate](Graph<S>& g, auto& n) {
        const auto& in = g.input(n, 0);
        if (!g.training() || rate <= 0.0) {
          n.value = in;
          n.saved.clear();
          return;
        }
        const S keep_scale = static_cast<S>(1.0 / (1.0 - rate));
        n.saved.resize(1);
        Tensor<S>& mask = n.saved[0];
        mask.resize(in.rows(), in.cols());
        for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = g.rng().bernoulli(rate) ? S(0) : keep_scale;
        n.value = in.cwiseProduct(mask);
      },
      [](Graph<S>& g, auto& n) {
        auto* dx = g.grad_of(n, 0);
        if (dx == nullptr) return;
        if (n.saved.empty())
          *dx += n.grad;
        else
          *dx += n.grad.cwiseProduct(n.saved[0]);
      });
}

// Fused temperature softmax + cross-entropy, averaged over rows:
//   loss = (1/N) sum_n sum_c -t[n,c] * log softmax(z[n,:] / T)[c]
// `targets` has the shape of the logits; rows are target distributions.
template <typename S>
Var<S> softmax_cross_entropy(Var<S> logits, Tensor<S> targets, double temperature = 1.0) {
  if (!(temperature > 0.0)) throw InvalidArgument("softmax_cross_entropy: temperature must be positive");
  return logits.graph().add(
      "softmax_cross_entropy", {logits},
      [targets = std::move(targets), temperature](Graph<S>& g, auto& n) {
        const auto& z = g.input(n, 0);
        detail::require(shape_of(z) == shape_of(targets), "softmax_cross_entropy",
                        detail::shapes(shape_of(z), shape_of(targets)));
        detail::require(z.rows() > 0, "softmax_cross_entropy", "empty batch");
        n.saved.resize(2);
        Tensor<S>& probs = n.saved[0];
        n.saved[1] = targets;
        probs.resize(z.rows(), z.cols());
        double total = 0.0;
        for (Index r = 0; r < z.rows(); ++r) {
          double m = -std::numeric_limits<double>::infinity();
          for (Index c = 0; c < z.cols(); ++c) m = std::max(m, static_cast<double>(z(r, c)) / temperature);
          double acc = 0.0;
          for (Index c = 0; c < z.cols(); ++c) acc += std::exp(static_cast<double>(z(r, c)) / temperature - m);
          const double lse = m + std::log(acc);
          for (Index c = 0; c < z.cols(); ++c) {
            const double logp = static_cast<double>(z(r, c)) / temperature - lse;
            probs(r, c) = static_cast<S>(std::exp(logp));
            total -= static_cast<double>(targets(r, c)) * logp;
          }
        }
        n.value.setConstant(1, 1, static_cast<S>(total / static_cast<double>(z.rows())));
      },
      [temperature](Graph<S>& g, auto& n) {
        auto* dz = g.grad_of(n, 0);
        if (dz == nullptr) return;
        const Tensor<S>& probs = n.saved[0];
        const Tensor<S>& t = n.saved[1];
        const double k = static_cast<double>(n.grad(0, 0)) / (temperature * static_cast<double>(probs.rows()));
        for (Index r = 0; r < probs.rows(); ++r) {
          double mass = 0.0;
          for (Index c = 0; c < probs.cols(); ++c) mass += static_cast<double>(t(r, c));
          for (Index c = 0; c < probs.cols(); ++c)
            (*dz)(r, c) += static_cast<S>(k * (static_cast<double>(probs(r, c)) * mass - static_cast<double>(t(r, c))));
        }
      });
}

// Multi-head scaled dot-product self-attention over packed projections.
// `qkv` is [batch * seq_len, 3 * d] holding Q | K | V column blocks; keys at
// positions >= lengths[b] are excluded, so padding never reaches a valid
// output. Returns [batch * seq_len, d] with heads concatenated.
template <typename S>
Var<S> attention(Var<S> qkv, Index seq_len, std::vector<int> lengths, int heads) {
  return qkv.graph().add(
      "attention", {qkv},
      [seq_len, lengths, heads](Graph<S>& g, auto& n) {
        const auto& x = g.input(n, 0);
        const auto batch = static_cast<Index>(lengths.size());
        detail::require(x.rows() == batch * seq_len, "attention",
                        "rows " + std::to_string(x.rows()) + " != batch*seq_len " + std::to_string(batch * seq_len));
        detail::require(heads > 0 && x.cols() % (3 * heads) == 0, "attention",
                        "width " + std::to_string(x.cols()) + " not divisible into 3 x " + std::to_string(heads));
        const Index d = x.cols() / 3;
        const Index dh = d / heads;
        const S inv_sqrt = static_cast<S>(1.0 / std::sqrt(static_cast<double>(dh)));
        n.value.setZero(batch * seq_len, d);
        n.saved.resize(1);
        Tensor<S>& probs = n.saved[0];
        probs.setZero(batch * heads * seq_len, seq_len);
        Tensor<S> s;
        for (Index b = 0; b < batch; ++b) {
          const Index len = lengths[static_cast<std::size_t>(b)];
          detail::require(len >= 1 && len <= seq_len, "attention", "sequence length out of range");
          for (Index h = 0; h < heads; ++h) {
            const auto q = x.block(b * seq_len, h * dh, seq_len, dh);
            const auto k = x.block(b * seq_len, d + h * dh, len, dh);
            const auto v = x.block(b * seq_len, 2 * d + h * dh, len, dh);
            s.noalias() = (q * k.transpose()) * inv_sqrt;
            for (Index r = 0; r < seq_len; ++r) {
              const S m = s.row(r).maxCoeff();
              double z = 0.0;
              for (Index c = 0; c < len; ++c) {
                const double e = std::exp(static_cast<double>(s(r, c) - m));
                s(r, c) = static_cast<S>(e);
                z += e;
              }
              s.row(r) /= static_cast<S>(z);
            }
            probs.block((b * heads + h) * seq_len, 0, seq_len, len) = s;
            n.value.block(b * seq_len, h * dh, seq_len, dh).noalias() = s * v;
          }
        }
      },
      [seq_len, lengths, heads](Graph<S>& g, auto& n) {
        auto* dx = g.grad_of(n, 0);
        if (dx == nullptr) return;
        const auto& x = g.input(n, 0);
        const Tensor<S>& probs = n.saved[0];
        const Index d = x.cols() / 3;
        const Index dh = d / heads;
        const S inv_sqrt = static_cast<S>(1.0 / std::sqrt(static_cast<double>(dh)));
        Tensor<S> dp;
        Tensor<S> ds;
        for (Index b = 0; b < static_cast<Index>(lengths.size()); ++b) {
          const Index len = lengths[static_cast<std::size_t>(b)];
          for (Index h = 0; h < heads; ++h) {
            const auto p = probs.block((b * heads + h) * seq_len, 0, seq_len, len);
            const auto dout = n.grad.block(b * seq_len, h * dh, seq_len, dh);
            const auto q = x.block(b * seq_len, h * dh, seq_len, dh);
            const auto k = x.block(b * seq_len, d + h * dh, len, dh);
            const auto v = x.block(b * seq_len, 2 * d + h * dh, len, dh);
            dp.noalias() = dout * v.transpose();
            dx->block(b * seq_len, 2 * d + h * dh, len, dh).noalias() += p.transpose() * dout;
            ds.resize(seq_len, len);
            for (Index r = 0; r < seq_len; ++r) {
              double dot = 0.0;
              for (Index c = 0; c < len; ++c) dot += static_cast<double>(dp(r, c) * p(r, c));
              ds.row(r).array() = p.row(r).array() * (dp.row(r).array() - static_cast<S>(dot));
            }
            ds *= inv_sqrt;
            dx->block(b * seq_len, h * dh, seq_len, dh).noalias() += ds * k;
            dx->block(b * seq_len, d + h * dh, len, dh).noalias() += ds.transpose() * q;
          }
        }
      });
}

// Each row divided by its Euclidean norm.
template <typename S>
Var<S> l2_normalize_rows(Var<S> x, double eps = 1e-12) {
  return x.graph().add(
      "l2_normalize", {x},
      [eps](Graph<S>& g, auto& n) {
        const auto& in = g.input(n, 0);
        n.saved.resize(1);
        Tensor<S>& norms = n.saved[0];
        norms.resize(in.rows(), 1);
        n.value.resize(in.rows(), in.cols());
        for (Index r = 0; r < in.rows(); ++r) {
          double acc = 0.0;
          for (Index c = 0; c < in.cols(); ++c) acc += static_cast<double>(in(r, c)) * static_cast<double>(in(r, c));
          const double norm = std::max(std::sqrt(acc), eps);
          norms(r, 0) = static_cast<S>(norm);
          for (Index c = 0; c < in.cols(); ++c) n.value(r, c) = static_cast<S>(static_cast<double>(in(r, c)) / norm);
        }
      },
      [](Graph<S>& g, auto& n) {
        auto* dx = g.grad_of(n, 0);
        if (dx == nullptr) return;
        const Tensor<S>& norms = n.saved[0];
        for (Index r = 0; r < n.value.rows(); ++r) {
          double dot = 0.0;
          for (Index c = 0; c < n.value.cols(); ++c) dot += static_cast<double>(n.value(r, c) * n.grad(r, c));
          dx->row(r).array() +=
              (n.grad.row(r).array() - n.value.row(r).array() * static_cast<S>(dot)) / norms(r, 0);
        }
      });
}

// Mean hinge over all off-diagonal entries of a square score matrix whose
// diagonal holds the positive scores:
//   (1 / (B (B - 1))) sum_i sum_{j != i} max(0, margin - s[i,i] + s[i,j])
template <typename S>
Var<S> in_batch_margin_loss(Var<S> scores, double margin) {
  return scores.graph().add(
      "in_batch_margin_loss", {scores},
      [margin](Graph<S>& g, auto& n) {
        const auto& s = g.input(n, 0);
        detail::require(s.rows() == s.cols(), "in_batch_margin_loss", "scores must be square, got " +
                                                                          to_string(shape_of(s)));
        if (s.rows() < 2) throw InvalidArgument("in_batch_margin_loss: batch needs at least 2 rows");
        const Index b = s.rows();
        n.saved.resize(1);
        Tensor<S>& active = n.saved[0];
        active.setZero(b, b);
        double total = 0.0;
        for (Index i = 0; i < b; ++i) {
          for (Index j = 0; j < b; ++j) {
            if (i == j) continue;
            const double h = margin - static_cast<double>(s(i, i)) + static_cast<double>(s(i, j));
            if (h > 0.0) {
              total += h;
              active(i, j) = S(1);
            }
          }
        }
        n.value.setConstant(1, 1, static_cast<S>(total / static_cast<double>(b * (b - 1))));
      },
      [](Graph<S>& g, auto& n) {
        auto* ds = g.grad_of(n, 0);
        if (ds == nullptr) return;
        const Tensor<S>& active = n.saved[0];
        const Index b = active.rows();
        const S w = static_cast<S>(static_cast<double>(n.grad(0, 0)) / static_cast<double>(b * (b - 1)));
        for (Index i = 0; i < b; ++i) {
          for (Index j = 0; j < b; ++j) {
            if (active(i, j) == S(0)) continue;
            (*ds)(i, j) += w;
            (*ds)(i, i) -= w;
          }
        }
      });
}

}  // namespace rsx

#endif  // RSX_OPS_HPP_
