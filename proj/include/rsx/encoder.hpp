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

#ifndef RSX_ENCODER_HPP_
#define RSX_ENCODER_HPP_

#include <nlohmann/json.hpp>

#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "rsx/graph.hpp"
#include "rsx/ops.hpp"
#include "rsx/rng.hpp"
#include "rsx/tokenizer.hpp"

namespace rsx {

struct EncoderConfig {
  int num_layers = 2;
  int hidden_dim = 64;
  int num_heads = 4;
  int ffn_dim = 256;
  int vocab_size = 0;
  int max_seq_len = 64;
  double dropout = 0.1;

  void validate() const;

  // 2 layers, d=64, 4 heads, ffn 256.
  static EncoderConfig desk(int vocab_size);
  // 4 layers, d=128, 4 heads, ffn 512; stand-in for the CPU-serving model,
  // whose width is not published.
  static EncoderConfig paper_shape(int vocab_size);

  nlohmann::json to_json() const;
  static EncoderConfig from_json(const nlohmann::json& j);
  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

// Padded id matrix for one forward pass, [batch x seq_len] row-major.
struct TokenBatch {
  Index batch = 0;
  Index seq_len = 0;
  std::vector<int> ids;
  std::vector<int> lengths;

  // Flat row index of each sequence's [CLS] position.
  std::vector<int> first_rows() const;
};

// Stacks sequences; with `trim`, columns that are padding in every row are
// dropped (attention masks make this invisible to valid positions).
TokenBatch make_batch(std::span<const TokenSequence> seqs, bool trim = true);

// Pre-norm transformer encoder: learned absolute positions, GELU FFN, final
// layer norm, MLM projection tied to the token embedding table.
template <typename S>
class EncoderModel {
 public:
  using Scalar = S;

  struct Layer {
    Parameter<S> ln1_gain, ln1_bias;
    Parameter<S> qkv_weight, qkv_bias;
    Parameter<S> out_weight, out_bias;
    Parameter<S> ln2_gain, ln2_bias;
    Parameter<S> ffn_in_weight, ffn_in_bias;
    Parameter<S> ffn_out_weight, ffn_out_bias;
  };

  EncoderModel() = default;

  EncoderModel(const EncoderConfig& cfg, const std::string& prefix) : config_(cfg) {
    cfg.validate();
    const Index d = cfg.hidden_dim;
    const auto name = [&](const std::string& n) { return prefix + n; };
    token_embedding = Parameter<S>(name("tok_emb"), cfg.vocab_size, d);
    position_embedding = Parameter<S>(name("pos_emb"), cfg.max_seq_len, d);
    for (int l = 0; l < cfg.num_layers; ++l) {
      const std::string p = "layers." + std::to_string(l) + ".";
      Layer layer;
      layer.ln1_gain = Parameter<S>(name(p + "ln1.gain"), 1, d, false);
      layer.ln1_bias = Parameter<S>(name(p + "ln1.bias"), 1, d, false);
      layer.qkv_weight = Parameter<S>(name(p + "attn.qkv.weight"), d, 3 * d);
      layer.qkv_bias = Parameter<S>(name(p + "attn.qkv.bias"), 1, 3 * d, false);
      layer.out_weight = Parameter<S>(name(p + "attn.out.weight"), d, d);
      layer.out_bias = Parameter<S>(name(p + "attn.out.bias"), 1, d, false);
      layer.ln2_gain = Parameter<S>(name(p + "ln2.gain"), 1, d, false);
      layer.ln2_bias = Parameter<S>(name(p + "ln2.bias"), 1, d, false);
      layer.ffn_in_weight = Parameter<S>(name(p + "ffn.in.weight"), d, cfg.ffn_dim);
      layer.ffn_in_bias = Parameter<S>(name(p + "ffn.in.bias"), 1, cfg.ffn_dim, false);
      layer.ffn_out_weight = Parameter<S>(name(p + "ffn.out.weight"), cfg.ffn_dim, d);
      layer.ffn_out_bias = Parameter<S>(name(p + "ffn.out.bias"), 1, d, false);
      layers.push_back(std::move(layer));
    }
    final_gain = Parameter<S>(name("final_ln.gain"), 1, d, false);
    final_bias = Parameter<S>(name("final_ln.bias"), 1, d, false);
    mlm_bias = Parameter<S>(name("mlm.bias"), 1, cfg.vocab_size, false);
  }

  // N(0, 0.02) weights, zero biases, unit norm gains; drawn in
  // parameters() order.
  void init(Rng& rng) {
    for (auto* p : parameters()) {
      const bool is_gain = p->name.ends_with(".gain");
      const bool is_bias = p->name.ends_with(".bias");
      if (is_gain)
        p->value.setOnes();
      else if (is_bias)
        p->value.setZero();
      else
        for (Index i = 0; i < p->value.size(); ++i) p->value.data()[i] = static_cast<S>(0.02 * rng.normal());
    }
  }

  const EncoderConfig& config() const { return config_; }

  std::vector<Parameter<S>*> parameters() {
    std::vector<Parameter<S>*> out{&token_embedding, &position_embedding};
    for (auto& l : layers)
      for (auto* p : {&l.ln1_gain, &l.ln1_bias, &l.qkv_weight, &l.qkv_bias, &l.out_weight, &l.out_bias, &l.ln2_gain,
                      &l.ln2_bias, &l.ffn_in_weight, &l.ffn_in_bias, &l.ffn_out_weight, &l.ffn_out_bias})
        out.push_back(p);
    out.insert(out.end(), {&final_gain, &final_bias, &mlm_bias});
    return out;
  }

  std::vector<const Parameter<S>*> parameters() const {
    auto ps = const_cast<EncoderModel*>(this)->parameters();
    return {ps.begin(), ps.end()};
  }

  template <typename T>
  EncoderModel<T> cast() const {
    EncoderModel<T> out(config_, "");
    auto src = parameters();
    auto dst = out.parameters();
    for (std::size_t i = 0; i < src.size(); ++i) *dst[i] = src[i]->template cast<T>();
    return out;
  }

  Parameter<S> token_embedding, position_embedding;
  std::vector<Layer> layers;
  Parameter<S> final_gain, final_bias;
  Parameter<S> mlm_bias;

 private:
  EncoderConfig config_;
};

template <typename M>
using ScalarOf = typename std::remove_const_t<M>::Scalar;

// Hidden states [batch * seq_len, d]. `Enc` may be const, in which case the
// parameters enter the graph as constants.
template <typename Enc>
Var<ScalarOf<Enc>> encode_batch(Graph<ScalarOf<Enc>>& g, Enc& model, const TokenBatch& batch) {
  using S = ScalarOf<Enc>;
  const EncoderConfig& cfg = model.config();
  if (batch.seq_len > cfg.max_seq_len)
    throw ShapeError("sequence length " + std::to_string(batch.seq_len) + " exceeds max_seq_len " +
                     std::to_string(cfg.max_seq_len));
  std::vector<int> positions(batch.ids.size());
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = static_cast<int>(static_cast<Index>(i) % batch.seq_len);
  auto P = [&g](auto& p) { return g.parameter(p); };
  Var<S> x = embedding(P(model.token_embedding), batch.ids) + embedding(P(model.position_embedding), positions);
  for (auto& layer : model.layers) {
    Var<S> h = layer_norm(x, P(layer.ln1_gain), P(layer.ln1_bias));
    Var<S> qkv = add_bias(matmul(h, P(layer.qkv_weight)), P(layer.qkv_bias));
    Var<S> a = attention(qkv, batch.seq_len, batch.lengths, cfg.num_heads);
    a = add_bias(matmul(a, P(layer.out_weight)), P(layer.out_bias));
    x = x + dropout(a, cfg.dropout);
    h = layer_norm(x, P(layer.ln2_gain), P(layer.ln2_bias));
    Var<S> f = gelu(add_bias(matmul(h, P(layer.ffn_in_weight)), P(layer.ffn_in_bias)));
    f = add_bias(matmul(f, P(layer.ffn_out_weight)), P(layer.ffn_out_bias));
    x = x + dropout(f, cfg.dropout);
  }
  return layer_norm(x, P(model.final_gain), P(model.final_bias));
}

// [CLS] rows of a batch, optionally L2-normalized.
template <typename S>
Var<S> pool_first(Var<S> hidden, const TokenBatch& batch, bool normalize = false) {
  Var<S> pooled = gather_rows(hidden, batch.first_rows());
  return normalize ? l2_normalize_rows(pooled) : pooled;
}

// Vocabulary logits at the given flat hidden rows.
template <typename Enc>
Var<ScalarOf<Enc>> mlm_logits(Graph<ScalarOf<Enc>>& g, Enc& model, Var<ScalarOf<Enc>> hidden, std::vector<int> rows) {
  auto h = gather_rows(hidden, std::move(rows));
  return add_bias(matmul_nt(h, g.parameter(model.token_embedding)), g.parameter(model.mlm_bias));
}

// Eval-mode helpers for a single sequence.
template <typename S>
Tensor<S> encode_tokens(const EncoderModel<S>& model, const TokenSequence& seq) {
  Graph<S> g(Mode::kEval);
  const TokenBatch batch = make_batch(std::span(&seq, 1), false);
  return encode_batch(g, model, batch).value();
}

template <typename S>
std::vector<S> pool_first(const Tensor<S>& hidden, bool normalize = false) {
  if (hidden.rows() < 1) throw ShapeError("pool_first: empty hidden states");
  RowVector<S> row = hidden.row(0);
  if (normalize) {
    const double norm = row.template cast<double>().norm();
    if (norm > 0) row = (row.template cast<double>() / norm).template cast<S>();
  }
  return std::vector<S>(row.data(), row.data() + row.size());
}

template <typename S>
Tensor<S> mlm_logits(const EncoderModel<S>& model, const Tensor<S>& hidden, std::span<const int> positions) {
  for (int p : positions)
    if (p < 0 || p >= hidden.rows())
      throw InvalidArgument("mlm_logits: position " + std::to_string(p) + " outside sequence of " +
                            std::to_string(hidden.rows()));
  Graph<S> g(Mode::kEval);
  auto h = g.constant(hidden);
  return mlm_logits(g, model, h, std::vector<int>(positions.begin(), positions.end())).value();
}

}  // namespace rsx

#endif  // RSX_ENCODER_HPP_
