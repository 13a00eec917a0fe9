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

#ifndef RSX_AUGMENT_HPP_
#define RSX_AUGMENT_HPP_

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rsx/corpus.hpp"
#include "rsx/error.hpp"
#include "rsx/rng.hpp"
#include "rsx/tokenizer.hpp"

namespace rsx {

enum class SampleMode { kSubstring, kFull };

struct SamplerConfig {
  int max_substring_len = 5;
  SampleMode mode = SampleMode::kSubstring;
  bool mask_substring_in_title = false;
  std::uint64_t seed = 0;

  void validate() const {
    if (max_substring_len < 1) throw InvalidArgument("max_substring_len must be >= 1");
  }
};

struct MlmConfig {
  double mask_ratio = 0.15;
  double mask_token_prob = 0.8;
  double random_token_prob = 0.1;
  double keep_prob = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SubstringSpan {
  int start = 0;
  int length = 0;            // after clamping at the title end
  int requested_length = 0;  // the uniform draw before clamping
};

// Draws start ~ U{0..n-1} and then length ~ U{1..max_substring_len}, in that
// order, clamping the length to n - start.
SubstringSpan sample_substring_span(int title_len, const SamplerConfig& cfg, Rng& rng);

template <typename T>
struct Substring {
  SubstringSpan span;
  std::vector<T> tokens;
};

template <typename T>
Substring<T> sample_substring(std::span<const T> title, const SamplerConfig& cfg, Rng& rng) {
  if (title.empty()) throw InvalidArgument("sample_substring: empty title");
  Substring<T> out;
  out.span = sample_substring_span(static_cast<int>(title.size()), cfg, rng);
  const auto first = title.begin() + out.span.start;
  out.tokens.assign(first, first + out.span.length);
  return out;
}

template <typename T>
struct ClassificationDraw {
  std::vector<T> query;
  int category_id = 0;
  SubstringSpan span;
};

// Substring mode samples a synthetic query from the title; full mode uses
// the whole title and consumes no randomness.
template <typename T>
ClassificationDraw<T> make_classification_example(std::span<const T> title, int category_id,
                                                  const SamplerConfig& cfg, Rng& rng) {
  if (title.empty()) throw InvalidArgument("make_classification_example: empty title");
  ClassificationDraw<T> out;
  out.category_id = category_id;
  if (cfg.mode == SampleMode::kFull) {
    out.query.assign(title.begin(), title.end());
    const int n = static_cast<int>(title.size());
    out.span = {0, n, n};
    return out;
  }
  auto sub = sample_substring(title, cfg, rng);
  out.query = std::move(sub.tokens);
  out.span = sub.span;
  return out;
}

template <typename T>
struct RetrievalDraw {
  std::vector<T> query;
  std::vector<T> title;
  SubstringSpan span;
};

// Synthetic (query, item) pair. With mask_substring_in_title the sampled
// span of the item side is overwritten by `mask`.
template <typename T>
RetrievalDraw<T> make_retrieval_example(std::span<const T> title, const SamplerConfig& cfg, Rng& rng, const T& mask) {
  auto sub = sample_substring(title, cfg, rng);
  RetrievalDraw<T> out;
  out.query = std::move(sub.tokens);
  out.span = sub.span;
  out.title.assign(title.begin(), title.end());
  if (cfg.mask_substring_in_title)
    std::fill_n(out.title.begin() + out.span.start, out.span.length, mask);
  return out;
}

// Text-level wrappers: titles are split into tokenizer units first.
struct ClassificationExample {
  std::string query;
  int category_id = 0;
  SubstringSpan span;
};

struct RetrievalExample {
  std::string query;
  std::string title;
  SubstringSpan span;
};

ClassificationExample make_classification_example(const PretrainRecord& record, const SamplerConfig& cfg, Rng& rng);
RetrievalExample make_retrieval_example(const PretrainRecord& record, const SamplerConfig& cfg, Rng& rng);

enum class MaskAction : std::uint8_t { kMaskToken, kRandomToken, kKeep };

struct MaskedSequence {
  TokenSequence input;           // ids after replacement
  std::vector<int> positions;    // ascending
  std::vector<int> labels;       // original ids at `positions`
  std::vector<MaskAction> actions;
};

// Selects max(1, round(mask_ratio * n)) of the n non-special positions
// uniformly without replacement (partial Fisher-Yates over the candidate
// list), sorts them, then per position draws u ~ U[0,1):
//   u < mask_token_prob                     -> [MASK]
//   u < mask_token_prob + random_token_prob -> uniform non-special id
//   otherwise                               -> unchanged
MaskedSequence apply_mlm_mask(const TokenSequence& seq, const MlmConfig& cfg, int vocab_size, Rng& rng);

}  // namespace rsx

#endif  // RSX_AUGMENT_HPP_
