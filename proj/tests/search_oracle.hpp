// SPDX-License-Identifier: Apache-2.0
//
// Exhaustive argsort reference for top-k inner-product search.

#ifndef RSX_TESTS_SEARCH_ORACLE_HPP_
#define RSX_TESTS_SEARCH_ORACLE_HPP_

#include <algorithm>
#include <utility>
#include <vector>

#include "rsx/retrieval.hpp"

namespace oracle {

inline std::vector<std::pair<std::size_t, double>> full_sort_topk(const rsx::Tensor<float>& e,
                                                                   const std::vector<float>& q, int k) {
  std::vector<std::pair<std::size_t, double>> all;
  for (rsx::Index r = 0; r < e.rows(); ++r) {
    double s = 0;
    for (rsx::Index c = 0; c < e.cols(); ++c) s += double(e(r, c)) * double(q[c]);
    all.emplace_back(static_cast<std::size_t>(r), s);
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  all.resize(std::min<std::size_t>(all.size(), static_cast<std::size_t>(k)));
  return all;
}

inline bool same_as_oracle(const rsx::ItemIndex& index, const std::vector<float>& q, int k) {
  const auto hits = rsx::search_topk(index, q, k);
  const auto ref = full_sort_topk(index.embeddings(), q, k);
  if (hits.size() != ref.size()) return false;
  for (std::size_t i = 0; i < hits.size(); ++i)
    if (hits[i].row != ref[i].first || hits[i].score != ref[i].second ||
        hits[i].item_id != index.item_ids()[ref[i].first])
      return false;
  return true;
}

}  // namespace oracle

#endif  // RSX_TESTS_SEARCH_ORACLE_HPP_
