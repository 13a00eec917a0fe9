// SPDX-License-Identifier: Apache-2.0

#ifndef RSX_TESTS_STATS_HPP_
#define RSX_TESTS_STATS_HPP_

#include <boost/math/distributions/chi_squared.hpp>

#include <cstdint>
#include <vector>

namespace oracle {

// Pearson goodness-of-fit p-value of observed counts against equal cell
// probabilities.
inline double uniform_chi2_p(const std::vector<std::int64_t>& counts) {
  std::int64_t total = 0;
  for (auto c : counts) total += c;
  const double expected = static_cast<double>(total) / static_cast<double>(counts.size());
  double stat = 0.0;
  for (auto c : counts) {
    const double d = static_cast<double>(c) - expected;
    stat += d * d / expected;
  }
  boost::math::chi_squared dist(static_cast<double>(counts.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

}  // namespace oracle

#endif  // RSX_TESTS_STATS_HPP_
