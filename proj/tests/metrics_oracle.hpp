// SPDX-License-Identifier: Apache-2.0
//
// Brute-force metric oracles written without the library's set helpers.
// Shared by the unit tests and the acceptance suite.

#ifndef RSX_TESTS_METRICS_ORACLE_HPP_
#define RSX_TESTS_METRICS_ORACLE_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "rsx/rng.hpp"

namespace oracle {

using Lists = std::vector<std::vector<int>>;

struct Case {
  Lists predicted, ranked, truth;
};

inline bool has(const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }

inline std::vector<int> unique_in_order(const std::vector<int>& v) {
  std::vector<int> out;
  for (int x : v)
    if (!has(out, x)) out.push_back(x);
  return out;
}

inline Case random_case(rsx::Rng& rng) {
  Case c;
  const int queries = rng.uniform_int(1, 6);
  for (int q = 0; q < queries; ++q) {
    std::vector<int> pred, truth, order{0, 1, 2, 3, 4, 5, 6, 7};
    for (int l = 0; l < 8; ++l) {
      if (rng.bernoulli(0.3)) pred.push_back(l);
      if (rng.bernoulli(0.3)) truth.push_back(l);
    }
    if (truth.empty()) truth.push_back(rng.uniform_int(0, 7));
    rsx::shuffle(std::span<int>(order), rng);
    order.resize(rng.uniform_int(0, 8));
    c.predicted.push_back(pred);
    c.truth.push_back(truth);
    c.ranked.push_back(order);
  }
  return c;
}

inline std::array<double, 3> prf1(const Lists& pred, const Lists& truth) {
  std::array<double, 3> sum{0, 0, 0};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto p = unique_in_order(pred[i]);
    const auto t = unique_in_order(truth[i]);
    double hit = 0;
    for (int x : p) hit += has(t, x) ? 1 : 0;
    const double P = p.empty() ? 0 : hit / p.size();
    const double R = hit / t.size();
    sum[0] += P;
    sum[1] += R;
    sum[2] += P + R == 0 ? 0 : 2 * P * R / (P + R);
  }
  for (auto& s : sum) s /= pred.size();
  return sum;
}

inline double ndcg(const Lists& ranked, const Lists& truth, int k) {
  double total = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto r = unique_in_order(ranked[i]);
    const auto t = unique_in_order(truth[i]);
    double dcg = 0, idcg = 0;
    for (int pos = 0; pos < k && pos < static_cast<int>(r.size()); ++pos)
      if (has(t, r[pos])) dcg += 1.0 / std::log2(pos + 2.0);
    for (int pos = 0; pos < k && pos < static_cast<int>(t.size()); ++pos) idcg += 1.0 / std::log2(pos + 2.0);
    total += dcg / idcg;
  }
  return total / ranked.size();
}

inline std::array<double, 2> pk_rk(const Lists& ranked, const Lists& truth, int k) {
  std::array<double, 2> sum{0, 0};
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto r = unique_in_order(ranked[i]);
    const auto t = unique_in_order(truth[i]);
    double hit = 0;
    for (int pos = 0; pos < k && pos < static_cast<int>(r.size()); ++pos) hit += has(t, r[pos]) ? 1 : 0;
    sum[0] += hit / k;
    sum[1] += hit / t.size();
  }
  sum[0] /= ranked.size();
  sum[1] /= ranked.size();
  return sum;
}

}  // namespace oracle

#endif  // RSX_TESTS_METRICS_ORACLE_HPP_
