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

#ifndef RSX_METRICS_HPP_
#define RSX_METRICS_HPP_

#include <nlohmann/json.hpp>

#include <cmath>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "rsx/error.hpp"

namespace rsx {

struct SetScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct TopKScores {
  double precision = 0.0;            // hits / k
  double recall = 0.0;               // hits / |relevant|
  double precision_retrieved = 0.0;  // hits / min(k, |retrieved|)
};

// Per-query set precision/recall/F1. An empty prediction scores P = 0.
template <typename L>
SetScores set_prf1(std::span<const L> predicted, std::span<const L> truth) {
  const std::set<L> t(truth.begin(), truth.end());
  if (t.empty()) throw InvalidArgument("set_prf1: empty truth set");
  const std::set<L> p(predicted.begin(), predicted.end());
  std::size_t hits = 0;
  for (const auto& x : p) hits += t.count(x);
  SetScores s;
  s.precision = p.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(p.size());
  s.recall = static_cast<double>(hits) / static_cast<double>(t.size());
  s.f1 = (s.precision + s.recall) > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

// Binary-gain NDCG@k: DCG = sum_{i<=k} rel_i / log2(i + 1), ideal DCG from
// min(|truth|, k) leading hits. Repeated labels in `ranked` count once.
template <typename L>
double ndcg_at_k(std::span<const L> ranked, std::span<const L> truth, int k) {
  if (k < 1) throw InvalidArgument("ndcg_at_k: k must be >= 1");
  const std::set<L> t(truth.begin(), truth.end());
  if (t.empty()) throw InvalidArgument("ndcg_at_k: empty truth set");
  std::set<L> seen;
  double dcg = 0.0;
  int rank = 0;
  for (const auto& x : ranked) {
    if (!seen.insert(x).second) continue;
    if (++rank > k) break;
    if (t.count(x)) dcg += 1.0 / std::log2(rank + 1.0);
  }
  double ideal = 0.0;
  const int ideal_hits = std::min<int>(k, static_cast<int>(t.size()));
  for (int i = 1; i <= ideal_hits; ++i) ideal += 1.0 / std::log2(i + 1.0);
  return dcg / ideal;
}

template <typename L>
TopKScores retrieval_pk_rk(std::span<const L> retrieved, std::span<const L> relevant, int k) {
  if (k < 1) throw InvalidArgument("retrieval_pk_rk: k must be >= 1");
  const std::set<L> rel(relevant.begin(), relevant.end());
  if (rel.empty()) throw InvalidArgument("retrieval_pk_rk: empty relevant set");
  std::set<L> seen;
  std::size_t hits = 0;
  std::size_t considered = 0;
  for (const auto& x : retrieved) {
    if (!seen.insert(x).second) continue;
    if (static_cast<int>(++considered) > k) {
      --considered;
      break;
    }
    hits += rel.count(x);
  }
  TopKScores s;
  s.precision = static_cast<double>(hits) / k;
  s.recall = static_cast<double>(hits) / static_cast<double>(rel.size());
  s.precision_retrieved = considered == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(considered);
  return s;
}

namespace detail {
template <typename A, typename B>
void check_lengths(const A& a, const B& b, const char* what) {
  if (a.size() != b.size())
    throw InvalidArgument(std::string(what) + ": " + std::to_string(a.size()) + " predictions for " +
                          std::to_string(b.size()) + " queries");
  if (a.empty()) throw InvalidArgument(std::string(what) + ": no queries");
}
}  // namespace detail

// Macro averages over queries.
template <typename L>
SetScores set_prf1(const std::vector<std::vector<L>>& predicted, const std::vector<std::vector<L>>& truth) {
  detail::check_lengths(predicted, truth, "set_prf1");
  SetScores m;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const auto s = set_prf1<L>(predicted[i], truth[i]);
    m.precision += s.precision;
    m.recall += s.recall;
    m.f1 += s.f1;
  }
  const auto n = static_cast<double>(predicted.size());
  return {m.precision / n, m.recall / n, m.f1 / n};
}

template <typename L>
double ndcg_at_k(const std::vector<std::vector<L>>& ranked, const std::vector<std::vector<L>>& truth, int k) {
  detail::check_lengths(ranked, truth, "ndcg_at_k");
  double total = 0.0;
  for (std::size_t i = 0; i < ranked.size(); ++i) total += ndcg_at_k<L>(ranked[i], truth[i], k);
  return total / static_cast<double>(ranked.size());
}

template <typename L>
TopKScores retrieval_pk_rk(const std::vector<std::vector<L>>& retrieved, const std::vector<std::vector<L>>& relevant,
                           int k) {
  detail::check_lengths(retrieved, relevant, "retrieval_pk_rk");
  TopKScores m;
  for (std::size_t i = 0; i < retrieved.size(); ++i) {
    const auto s = retrieval_pk_rk<L>(retrieved[i], relevant[i], k);
    m.precision += s.precision;
    m.recall += s.recall;
    m.precision_retrieved += s.precision_retrieved;
  }
  const auto n = static_cast<double>(retrieved.size());
  return {m.precision / n, m.recall / n, m.precision_retrieved / n};
}

// Metric bundle for one evaluation run. Aggregate metrics are the
// arithmetic means of the per-query rows.
struct EvalReport {
  std::string task;
  std::map<std::string, double> metrics;
  std::vector<std::string> queries;
  std::vector<std::map<std::string, double>> per_query;
  std::size_t query_count = 0;

  void validate() const;
  nlohmann::json to_json(bool with_per_query = false) const;
  static EvalReport from_json(const nlohmann::json& j);
};

struct IntentEvalOptions {
  std::vector<int> precision_ks{1, 3, 5};
  std::vector<int> ndcg_ks{3, 5};
};

// `predicted` are the label sets chosen by the prediction rule; `ranked` the
// full score-ordered label lists used by the ranking metrics.
EvalReport intent_report(const std::vector<std::string>& queries, const std::vector<std::vector<std::string>>& predicted,
                         const std::vector<std::vector<std::string>>& ranked,
                         const std::vector<std::vector<std::string>>& truth, const IntentEvalOptions& opts = {});

EvalReport retrieval_report(const std::vector<std::string>& queries,
                            const std::vector<std::vector<std::string>>& retrieved,
                            const std::vector<std::vector<std::string>>& relevant, const std::vector<int>& ks);

}  // namespace rsx

#endif  // RSX_METRICS_HPP_
