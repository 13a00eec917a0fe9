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

#include "rsx/encoder.hpp"

#include <algorithm>

namespace rsx {

void EncoderConfig::validate() const {
  if (num_layers < 1) throw InvalidArgument("num_layers must be >= 1");
  if (hidden_dim < 1 || num_heads < 1 || hidden_dim % num_heads != 0)
    throw InvalidArgument("hidden_dim must be a positive multiple of num_heads");
  if (ffn_dim < 1) throw InvalidArgument("ffn_dim must be positive");
  if (vocab_size <= kNumSpecial) throw InvalidArgument("vocab_size must exceed the special tokens");
  if (max_seq_len < 3) throw InvalidArgument("max_seq_len must be >= 3");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidArgument("dropout must lie in [0, 1)");
}

EncoderConfig EncoderConfig::desk(int vocab_size) {
  EncoderConfig c;
  c.vocab_size = vocab_size;
  return c;
}

EncoderConfig EncoderConfig::paper_shape(int vocab_size) {
  EncoderConfig c;
  c.num_layers = 4;
  c.hidden_dim = 128;
  c.num_heads = 4;
  c.ffn_dim = 512;
  c.vocab_size = vocab_size;
  return c;
}

nlohmann::json EncoderConfig::to_json() const {
  return {{"num_layers", num_layers}, {"hidden_dim", hidden_dim}, {"num_heads", num_heads}, {"ffn_dim", ffn_dim},
          {"vocab_size", vocab_size}, {"max_seq_len", max_seq_len}, {"dropout", dropout}};
}

EncoderConfig EncoderConfig::from_json(const nlohmann::json& j) {
  EncoderConfig c;
  c.num_layers = j.at("num_layers").get<int>();
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.num_heads = j.at("num_heads").get<int>();
  c.ffn_dim = j.at("ffn_dim").get<int>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.max_seq_len = j.at("max_seq_len").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.validate();
  return c;
}

std::vector<int> TokenBatch::first_rows() const {
  std::vector<int> rows(static_cast<std::size_t>(batch));
  for (Index b = 0; b < batch; ++b) rows[static_cast<std::size_t>(b)] = static_cast<int>(b * seq_len);
  return rows;
}

TokenBatch make_batch(std::span<const TokenSequence> seqs, bool trim) {
  if (seqs.empty()) throw InvalidArgument("make_batch: no sequences");
  TokenBatch b;
  b.batch = static_cast<Index>(seqs.size());
  std::size_t width = 0;
  for (const auto& s : seqs) {
    if (s.length < 1 || static_cast<std::size_t>(s.length) > s.ids.size())
      throw InvalidArgument("make_batch: sequence length inconsistent with ids");
    width = std::max(width, trim ? static_cast<std::size_t>(s.length) : s.ids.size());
  }
  b.seq_len = static_cast<Index>(width);
  b.ids.assign(seqs.size() * width, kPad);
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    const auto n = std::min(width, seqs[i].ids.size());
    std::copy_n(seqs[i].ids.begin(), n, b.ids.begin() + static_cast<std::ptrdiff_t>(i * width));
    b.lengths.push_back(seqs[i].length);
  }
  return b;
}

}  // namespace rsx
