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

#include "rsx/metrics.hpp"

namespace rsx {

void EvalReport::validate() const {
  if (query_count == 0) throw InvalidArgument("EvalReport: no queries");
  for (const auto& [name, v] : metrics)
    if (!(v >= 0.0 && v <= 1.0)) throw NumericError("EvalReport: metric " + name + " outside [0,1]");
}

nlohmann::json EvalReport::to_json(bool with_per_query) const {
  nlohmann::json j;
  j["task"] = task;
  j["query_count"] = query_count;
  j["metrics"] = metrics;
  if (with_per_query) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < per_query.size(); ++i) {
      nlohmann::json row = per_query[i];
      if (i < queries.size()) row["query"] = queries[i];
      rows.push_back(std::move(row));
    }
    j["per_query"] = std::move(rows);
  }
  return j;
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  EvalReport r;
  r.task = j.at("task").get<std::string>();
  r.query_count = j.at("query_count").get<std::size_t>();
  r.metrics = j.at("metrics").get<std::map<std::string, double>>();
  if (j.contains("per_query")) {
    for (const auto& row : j.at("per_query")) {
      std::map<std::string, double> values;
      for (const auto& [k, v] : row.items()) {
        if (k == "query")
          r.queries.push_back(v.get<std::string>());
        else
          values[k] = v.get<double>();
      }
      r.per_query.push_back(std::move(values));
    }
  }
  return r;
}

namespace {

void finalize(EvalReport& r) {
  for (const auto& row : r.per_query)
    for (const auto& [k, v] : row) r.metrics[k] += v;
  for (auto& [k, v] : r.metrics) v /= static_cast<double>(r.per_query.size());
  r.query_count = r.per_query.size();
  r.validate();
}

}  // namespace

EvalReport intent_report(const std::vector<std::string>& queries, const std::vector<std::vector<std::string>>& predicted,
                         const std::vector<std::vector<std::string>>& ranked,
                         const std::vector<std::vector<std::string>>& truth, const IntentEvalOptions& opts) {
  detail::check_lengths(predicted, truth, "intent_report");
  detail::check_lengths(ranked, truth, "intent_report");
  EvalReport r;
  r.task = "intent";
  r.queries = queries;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    std::map<std::string, double> row;
    const auto s = set_prf1<std::string>(predicted[i], truth[i]);
    row["P"] = s.precision;
    row["R"] = s.recall;
    row["F1"] = s.f1;
    for (int k : opts.ndcg_ks) row["NDCG@" + std::to_string(k)] = ndcg_at_k<std::string>(ranked[i], truth[i], k);
    for (int k : opts.precision_ks) {
      const auto t = retrieval_pk_rk<std::string>(ranked[i], truth[i], k);
      row["P@" + std::to_string(k)] = t.precision;
      row["R@" + std::to_string(k)] = t.recall;
    }
    r.per_query.push_back(std::move(row));
  }
  finalize(r);
  return r;
}

EvalReport retrieval_report(const std::vector<std::string>& queries,
                            const std::vector<std::vector<std::string>>& retrieved,
                            const std::vector<std::vector<std::string>>& relevant, const std::vector<int>& ks) {
  detail::check_lengths(retrieved, relevant, "retrieval_report");
  EvalReport r;
  r.task = "retrieval";
  r.queries = queries;
  for (std::size_t i = 0; i < relevant.size(); ++i) {
    std::map<std::string, double> row;
    for (int k : ks) {
      const auto t = retrieval_pk_rk<std::string>(retrieved[i], relevant[i], k);
      row["P@" + std::to_string(k)] = t.precision;
      row["R@" + std::to_string(k)] = t.recall;
      row["P@" + std::to_string(k) + ":retrieved"] = t.precision_retrieved;
    }
    r.per_query.push_back(std::move(row));
  }
  finalize(r);
  return r;
}

}  // namespace rsx
