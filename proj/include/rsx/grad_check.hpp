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

#ifndef RSX_GRAD_CHECK_HPP_
#define RSX_GRAD_CHECK_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "rsx/graph.hpp"

namespace rsx {

struct GradCheckOptions {
  double eps = 1e-3;
  double tol = 1e-3;
  int samples = 200;
  std::uint64_t seed = 0;
  // When false, the analytic gradients already stored in the parameters are
  // compared as-is (lets tests inject corrupted gradients).
  bool run_backward = true;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  int checked = 0;
  bool passed = false;
};

// Compares analytic parameter gradients against central differences
//   (L(p + eps) - L(p - eps)) / (2 eps)
// on coordinates sampled uniformly over all trainable parameters reachable
// from `loss`. Error per coordinate is |analytic - numeric| / (|numeric| + 1e-8).
// Parameters and graph values are restored before returning.
template <typename S>
GradCheckResult grad_check(Graph<S>& graph, Var<S> loss, const GradCheckOptions& opts = {}) {
  if (!(opts.eps >= 1e-5 && opts.eps <= 1e-2)) throw InvalidArgument("grad_check: eps must lie in [1e-5, 1e-2]");
  if (opts.run_backward) graph.backward(loss);
  const auto params = graph.parameters();
  std::vector<Index> offsets;
  Index total = 0;
  for (auto* p : params) {
    offsets.push_back(total);
    total += p->size();
    if (p->grad.size() != p->size()) p->zero_grad();
  }
  GradCheckResult result;
  if (total == 0) {
    result.passed = true;
    return result;
  }
  Rng rng(opts.seed);
  const int samples = static_cast<int>(std::min<Index>(opts.samples, total));
  for (int s = 0; s < samples; ++s) {
    const auto flat = static_cast<Index>(rng.uniform_below(static_cast<std::uint64_t>(total)));
    const auto it = std::upper_bound(offsets.begin(), offsets.end(), flat) - 1;
    Parameter<S>& p = *params[static_cast<std::size_t>(it - offsets.begin())];
    const Index local = flat - *it;
    S& coord = p.value.data()[local];
    const S original = coord;
    coord = static_cast<S>(static_cast<double>(original) + opts.eps);
    graph.forward();
    const double up = static_cast<double>(loss.value()(0, 0));
    coord = static_cast<S>(static_cast<double>(original) - opts.eps);
    graph.forward();
    const double down = static_cast<double>(loss.value()(0, 0));
    coord = original;
    const double numeric = (up - down) / (2.0 * opts.eps);
    const double analytic = static_cast<double>(p.grad.data()[local]);
    const double err = std::abs(analytic - numeric) / (std::abs(numeric) + 1e-8);
    result.max_rel_error = std::max(result.max_rel_error, err);
    ++result.checked;
  }
  graph.forward();
  result.passed = result.max_rel_error < opts.tol;
  return result;
}

}  // namespace rsx

#endif  // RSX_GRAD_CHECK_HPP_
