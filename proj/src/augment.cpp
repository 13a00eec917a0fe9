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

#include "rsx/augment.hpp"

#include <cmath>

namespace rsx {

void MlmConfig::validate() const {
  if (!(mask_ratio > 0.0 && mask_ratio < 1.0)) throw InvalidArgument("mask_ratio must lie in (0, 1)");
  if (mask_token_prob < 0 || random_token_prob < 0 || keep_prob < 0 ||
      std::abs(mask_token_prob + random_token_prob + keep_prob - 1.0) > 1e-9)
    throw InvalidArgument("MLM replacement probabilities must be non-negative and sum to 1");
}

SubstringSpan sample_substring_span(int title_len, const SamplerConfig& cfg, Rng& rng) {
  cfg.validate();
  if (title_len <= 0) throw InvalidArgument("sample_substring: empty title");
  SubstringSpan s;
  s.start = rng.uniform_int(0, title_len - 1);
  s.requested_length = rng.uniform_int(1, cfg.max_substring_len);
  s.length = std::min(s.requested_length, title_len - s.start);
  return s;
}

ClassificationExample make_classification_example(const PretrainRecord& record, const SamplerConfig& cfg, Rng& rng) {
  const auto units = split_units(record.title);
  auto draw = make_classification_example<std::string>(units, record.category_id, cfg, rng);
  return {join_units(draw.query), draw.category_id, draw.span};
}

RetrievalExample make_retrieval_example(const PretrainRecord& record, const SamplerConfig& cfg, Rng& rng) {
  const auto units = split_units(record.title);
  if (units.empty()) throw InvalidArgument("make_retrieval_example: empty title");
  auto draw = make_retrieval_example<std::string>(units, cfg, rng, kSpecialNames[kMask]);
  return {join_units(draw.query), join_units(draw.title), draw.span};
}

MaskedSequence apply_mlm_mask(const TokenSequence& seq, const MlmConfig& cfg, int vocab_size, Rng& rng) {
  cfg.validate();
  std::vector<int> candidates;
  for (std::size_t i = 0; i < seq.ids.size(); ++i)
    if (seq.special_mask[i] == 0) candidates.push_back(static_cast<int>(i));
  if (candidates.empty()) throw InvalidArgument("apply_mlm_mask: sequence has no maskable tokens");
  if (vocab_size <= kNumSpecial) throw InvalidArgument("apply_mlm_mask: vocabulary has no regular tokens");

  const auto n = static_cast<int>(candidates.size());
  const int count = std::clamp(static_cast<int>(std::lround(cfg.mask_ratio * n)), 1, n);
  for (int i = 0; i < count; ++i) {
    const int j = i + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(n - i)));
    std::swap(candidates[static_cast<std::size_t>(i)], candidates[static_cast<std::size_t>(j)]);
  }
  candidates.resize(static_cast<std::size_t>(count));
  std::sort(candidates.begin(), candidates.end());

  MaskedSequence out;
  out.input = seq;
  out.positions = candidates;
  for (int pos : candidates) {
    auto& id = out.input.ids[static_cast<std::size_t>(pos)];
    out.labels.push_back(id);
    const double u = rng.uniform();
    if (u < cfg.mask_token_prob) {
      id = kMask;
      out.actions.push_back(MaskAction::kMaskToken);
    } else if (u < cfg.mask_token_prob + cfg.random_token_prob) {
      id = rng.uniform_int(kNumSpecial, vocab_size - 1);
      out.actions.push_back(MaskAction::kRandomToken);
    } else {
      out.actions.push_back(MaskAction::kKeep);
    }
  }
  return out;
}

}  // namespace rsx
