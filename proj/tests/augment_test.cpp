// SPDX-License-Identifier: Apache-2.0

#include "rsx/augment.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "stats.hpp"

using namespace rsx;

namespace {

// First seed whose (start, length) draws come out as requested.
std::uint64_t seed_with_draws(int n, int max_len, int start, int len) {
  SamplerConfig cfg;
  cfg.max_substring_len = max_len;
  for (std::uint64_t seed = 0;; ++seed) {
    Rng probe(seed);
    const int s = probe.uniform_int(0, n - 1);
    const int l = probe.uniform_int(1, max_len);
    if (s == start && l == len) return seed;
  }
}

TokenSequence seq_with_content(int n) {
  std::vector<int> ids;
  for (int i = 0; i < n; ++i) ids.push_back(kNumSpecial + i % 7);
  return make_sequence(ids, n + 4);
}

}  // namespace

TEST_CASE("one-token title is forced") {
  SamplerConfig cfg;
  Rng rng(3);
  const std::vector<int> title{42};
  for (int i = 0; i < 50; ++i) {
    auto s = sample_substring<int>(title, cfg, rng);
    CHECK(s.span.start == 0);
    CHECK(s.span.length == 1);
    CHECK(s.tokens == title);
  }
  std::vector<int> empty;
  CHECK_THROWS_AS(sample_substring<int>(empty, cfg, rng), InvalidArgument);
}

TEST_CASE("length is clamped at the title end") {
  const std::uint64_t seed = seed_with_draws(10, 5, 8, 5);
  SamplerConfig cfg;
  Rng rng(seed);
  std::vector<int> title{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  auto s = sample_substring<int>(title, cfg, rng);
  CHECK(s.span.start == 8);
  CHECK(s.span.requested_length == 5);
  CHECK(s.span.length == 2);
  CHECK(s.tokens == std::vector<int>{8, 9});
}

TEST_CASE("substrings are contiguous slices within the length law") {
  SamplerConfig cfg;
  Rng rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = rng.uniform_int(1, 20);
    std::vector<int> title(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) title[static_cast<std::size_t>(i)] = i;
    auto s = sample_substring<int>(title, cfg, rng);
    REQUIRE(s.span.length >= 1);
    CHECK(s.span.length <= cfg.max_substring_len);
    CHECK(s.span.start + s.span.length <= n);
    for (int i = 0; i < s.span.length; ++i) CHECK(s.tokens[static_cast<std::size_t>(i)] == s.span.start + i);
  }
}

TEST_CASE("start and length histograms are uniform") {
  SamplerConfig cfg;
  Rng root(2024);
  Rng start_rng = root.split(1), length_rng = root.split(2);
  std::vector<int> title(10, 0);
  std::vector<int> long_title(40, 0);
  std::vector<std::int64_t> starts(10, 0), lengths(5, 0), actual(5, 0);
  for (int i = 0; i < 100000; ++i) {
    ++starts[static_cast<std::size_t>(sample_substring<int>(title, cfg, start_rng).span.start)];
    const auto s = sample_substring<int>(long_title, cfg, length_rng).span;
    ++lengths[static_cast<std::size_t>(s.requested_length - 1)];
    if (s.start + 5 <= 40) ++actual[static_cast<std::size_t>(s.length - 1)];
  }
  CHECK(oracle::uniform_chi2_p(starts) > 0.01);
  CHECK(oracle::uniform_chi2_p(lengths) > 0.01);
  CHECK(oracle::uniform_chi2_p(actual) > 0.01);
}

TEST_CASE("classification examples") {
  SamplerConfig full;
  full.mode = SampleMode::kFull;
  Rng rng(1);
  auto f = make_classification_example(PretrainRecord{"abc", 7}, full, rng);
  CHECK(f.query == "abc");
  CHECK(f.category_id == 7);
  SamplerConfig sub;
  auto s = make_classification_example(PretrainRecord{"x", 2}, sub, rng);
  CHECK(s.query == "x");
  CHECK(s.category_id == 2);
  auto c = make_classification_example(PretrainRecord{"华为手机壳", 3}, sub, rng);
  CHECK(std::string("华为手机壳").find(c.query) != std::string::npos);
}

TEST_CASE("retrieval examples and title-side masking") {
  SamplerConfig cfg;
  Rng rng(9);
  auto one = make_retrieval_example(PretrainRecord{"x", 0}, cfg, rng);
  CHECK(one.query == "x");
  CHECK(one.title == "x");

  cfg.mask_substring_in_title = true;
  cfg.max_substring_len = 2;
  const std::vector<int> title{10, 11, 12, 13, 14};
  for (int trial = 0; trial < 200; ++trial) {
    auto d = make_retrieval_example<int>(title, cfg, rng, kMask);
    for (int i = 0; i < 5; ++i) {
      const bool inside = i >= d.span.start && i < d.span.start + d.span.length;
      CHECK(d.title[static_cast<std::size_t>(i)] == (inside ? kMask : title[static_cast<std::size_t>(i)]));
    }
  }

  SamplerConfig plain;
  Rng a(77), b(77);
  for (int i = 0; i < 100; ++i) {
    auto x = make_retrieval_example(PretrainRecord{"华为 p40 pro 手机 5g", 0}, plain, a);
    auto y = make_retrieval_example(PretrainRecord{"华为 p40 pro 手机 5g", 0}, plain, b);
    CHECK(x.query == y.query);
    CHECK(x.title == y.title);
  }
}

TEST_CASE("mask counts follow the rounding rule") {
  MlmConfig cfg;
  Rng rng(4);
  CHECK(apply_mlm_mask(seq_with_content(20), cfg, 30, rng).positions.size() == 3);
  CHECK(apply_mlm_mask(seq_with_content(1), cfg, 30, rng).positions.size() == 1);
  CHECK(apply_mlm_mask(seq_with_content(3), cfg, 30, rng).positions.size() == 1);
  CHECK(apply_mlm_mask(seq_with_content(10), cfg, 30, rng).positions.size() == 2);  // round(1.5)
  const TokenSequence none = make_sequence(std::vector<int>{}, 6);
  CHECK_THROWS_AS(apply_mlm_mask(none, cfg, 30, rng), InvalidArgument);
  MlmConfig bad;
  bad.keep_prob = 0.2;
  CHECK_THROWS_AS(apply_mlm_mask(seq_with_content(5), bad, 30, rng), InvalidArgument);
}

TEST_CASE("masking never touches special positions and labels match") {
  MlmConfig cfg;
  Rng rng(8);
  for (int trial = 0; trial < 500; ++trial) {
    const auto seq = seq_with_content(rng.uniform_int(1, 30));
    const auto m = apply_mlm_mask(seq, cfg, 30, rng);
    REQUIRE(m.labels.size() == m.positions.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < seq.ids.size(); ++i) {
      const bool masked = k < m.positions.size() && m.positions[k] == static_cast<int>(i);
      if (masked) {
        CHECK(seq.special_mask[i] == 0);
        CHECK(m.labels[k] == seq.ids[i]);
        ++k;
      } else {
        CHECK(m.input.ids[i] == seq.ids[i]);
      }
    }
  }
}

TEST_CASE("replacement frequencies over 100k sequences") {
  MlmConfig cfg;
  Rng rng(31);
  const auto seq = seq_with_content(1);
  std::int64_t counts[3] = {0, 0, 0};
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto m = apply_mlm_mask(seq, cfg, 30, rng);
    ++counts[static_cast<int>(m.actions[0])];
    if (m.actions[0] == MaskAction::kRandomToken) {
      CHECK(m.input.ids[1] >= kNumSpecial);
      CHECK(m.input.ids[1] < 30);
    }
  }
  CHECK(std::abs(counts[0] / double(n) - 0.8) < 0.02);
  CHECK(std::abs(counts[1] / double(n) - 0.1) < 0.02);
  CHECK(std::abs(counts[2] / double(n) - 0.1) < 0.02);
}
