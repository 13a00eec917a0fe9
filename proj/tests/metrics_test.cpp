// SPDX-License-Identifier: Apache-2.0

#include "rsx/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "metrics_oracle.hpp"
#include "rsx/rng.hpp"

using namespace rsx;
using Lists = std::vector<std::vector<int>>;

TEST_CASE("set_prf1 enumerable cases") {
  std::vector<std::string> a{"A"};
  auto s = set_prf1<std::string>(a, a);
  CHECK(s.precision == 1.0);
  CHECK(s.recall == 1.0);
  CHECK(s.f1 == 1.0);
  std::vector<std::string> pred{"A", "B"}, truth{"A", "C"};
  s = set_prf1<std::string>(pred, truth);
  CHECK(s.precision == 0.5);
  CHECK(s.recall == 0.5);
  CHECK(s.f1 == 0.5);
  std::vector<std::string> none;
  s = set_prf1<std::string>(none, truth);
  CHECK(s.precision == 0.0);
  CHECK(s.f1 == 0.0);
  CHECK_THROWS_AS(set_prf1<std::string>(pred, none), InvalidArgument);
}

TEST_CASE("ndcg hand cases") {
  std::vector<std::string> truth{"a"};
  std::vector<std::string> ranked{"b", "a", "c"};
  CHECK(ndcg_at_k<std::string>(ranked, truth, 3) == doctest::Approx(0.6309297535714574).epsilon(1e-12));
  CHECK(std::abs(ndcg_at_k<std::string>(ranked, truth, 3) - 1.0 / std::log2(3.0)) < 1e-15);
  std::vector<std::string> perfect{"a", "b", "c"};
  CHECK(ndcg_at_k<std::string>(perfect, truth, 3) == 1.0);
  std::vector<std::string> disjoint{"x", "y"};
  CHECK(ndcg_at_k<std::string>(disjoint, truth, 3) == 0.0);
  CHECK_THROWS_AS(ndcg_at_k<std::string>(ranked, truth, 0), InvalidArgument);
}

TEST_CASE("P@k and R@k enumerable cases") {
  std::vector<int> relevant{1, 2, 3, 4};
  std::vector<int> retrieved{1, 9, 2, 8, 7, 3};
  auto s = retrieval_pk_rk<int>(retrieved, relevant, 5);
  CHECK(s.precision == 0.4);
  CHECK(s.recall == 0.5);
  std::vector<int> first{1, 2, 3, 4, 5};
  CHECK(retrieval_pk_rk<int>(first, relevant, 3).precision == 1.0);
  std::vector<int> short_list{1, 9};
  s = retrieval_pk_rk<int>(short_list, relevant, 5);
  CHECK(s.precision == doctest::Approx(0.2));
  CHECK(s.precision_retrieved == 0.5);
}

TEST_CASE("macro averages reject length mismatch") {
  Lists a{{1}, {2}}, b{{1}};
  CHECK_THROWS_AS(set_prf1(a, b), InvalidArgument);
  CHECK_THROWS_AS(ndcg_at_k(a, b, 3), InvalidArgument);
  CHECK_THROWS_AS(retrieval_pk_rk(a, b, 3), InvalidArgument);
}

TEST_CASE("metrics match brute-force oracles on random instances") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto c = oracle::random_case(rng);
    const auto s = set_prf1(c.predicted, c.truth);
    const auto o = oracle::prf1(c.predicted, c.truth);
    CHECK(std::abs(s.precision - o[0]) <= 1e-9);
    CHECK(std::abs(s.recall - o[1]) <= 1e-9);
    CHECK(std::abs(s.f1 - o[2]) <= 1e-9);
    for (int k = 1; k <= 6; ++k) {
      CHECK(std::abs(ndcg_at_k(c.ranked, c.truth, k) - oracle::ndcg(c.ranked, c.truth, k)) <= 1e-9);
      const auto r = retrieval_pk_rk(c.ranked, c.truth, k);
      const auto ro = oracle::pk_rk(c.ranked, c.truth, k);
      CHECK(std::abs(r.precision - ro[0]) <= 1e-9);
      CHECK(std::abs(r.recall - ro[1]) <= 1e-9);
    }
  }
}

TEST_CASE("metric properties") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    auto c = oracle::random_case(rng);
    const int k = 3;
    const double before = ndcg_at_k(c.ranked, c.truth, k);
    for (auto& r : c.ranked)
      if (r.size() > static_cast<std::size_t>(k + 1)) std::reverse(r.begin() + k, r.end());
    CHECK(ndcg_at_k(c.ranked, c.truth, k) == before);
    double prev = 2.0;
    for (int kk = 1; kk <= 8; ++kk) {
      const double p = retrieval_pk_rk<int>(c.ranked[0], c.truth[0], kk).precision;
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
      if (kk > static_cast<int>(c.ranked[0].size())) CHECK(p <= prev);
      prev = p;
    }
  }
}

TEST_CASE("report mean equals mean of per-query rows") {
  std::vector<std::string> q{"q1", "q2", "q3"};
  std::vector<std::vector<std::string>> pred{{"a"}, {"b", "c"}, {}};
  std::vector<std::vector<std::string>> ranked{{"a", "b", "c"}, {"c", "b", "a"}, {"b", "a", "c"}};
  std::vector<std::vector<std::string>> truth{{"a"}, {"c"}, {"a", "c"}};
  auto r = intent_report(q, pred, ranked, truth);
  CHECK(r.query_count == 3);
  for (const auto& [name, v] : r.metrics) {
    double sum = 0.0;
    for (const auto& row : r.per_query) sum += row.at(name);
    CHECK(std::abs(v - sum / 3.0) < 1e-15);
  }
  for (const char* name : {"P", "R", "F1", "NDCG@3", "NDCG@5", "P@1", "R@5"}) CHECK(r.metrics.count(name) == 1);
  auto back = EvalReport::from_json(r.to_json(true));
  CHECK(back.metrics == r.metrics);
  CHECK(back.per_query == r.per_query);
  CHECK(back.queries == r.queries);
}
