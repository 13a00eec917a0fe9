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

#ifndef RSX_INTENT_HPP_
#define RSX_INTENT_HPP_

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rsx/corpus.hpp"
#include "rsx/encoder.hpp"

namespace rsx {

struct CategoryDistribution {
  std::vector<double> probs;

  int size() const { return static_cast<int>(probs.size()); }
  void validate() const;  // non-negative, sums to 1 within 1e-6
};

struct PredictionRule {
  enum class Kind { kTopK, kThreshold };
  Kind kind = Kind::kTopK;
  int k = 1;
  double threshold = 0.5;

  static PredictionRule top_k(int k);
  static PredictionRule at_threshold(double tau);
  // "top:K" or "threshold:TAU"
  static PredictionRule parse(std::string_view text);
  std::string to_string() const;
  void validate() const;
};

struct IntentFinetuneConfig {
  double temperature = 1.0 / 3.0;
  PredictionRule rule;

  void validate() const;
};

// Encoder plus a linear head on the pooled [CLS] state.
template <typename S>
class IntentModel {
 public:
  using Scalar = S;

  IntentModel() = default;
  IntentModel(const EncoderConfig& cfg, int num_labels) : encoder(cfg, "encoder.") { resize_head(num_labels); }

  void init(Rng& rng) {
    encoder.init(rng);
    init_head(rng);
  }

  // Fresh head for a new label space; the encoder is kept.
  void reinit_head(int num_labels, Rng& rng) {
    resize_head(num_labels);
    init_head(rng);
  }

  int num_labels() const { return static_cast<int>(head_weight.value.cols()); }
  const EncoderConfig& config() const { return encoder.config(); }

  std::vector<Parameter<S>*> parameters() {
    auto out = encoder.parameters();
    out.push_back(&head_weight);
    out.push_back(&head_bias);
    return out;
  }

  std::vector<const Parameter<S>*> parameters() const {
    auto ps = const_cast<IntentModel*>(this)->parameters();
    return {ps.begin(), ps.end()};
  }

  template <typename T>
  IntentModel<T> cast() const {
    IntentModel<T> out;
    out.encoder = encoder.template cast<T>();
    out.head_weight = head_weight.template cast<T>();
    out.head_bias = head_bias.template cast<T>();
    return out;
  }

  EncoderModel<S> encoder;
  Parameter<S> head_weight, head_bias;

 private:
  void resize_head(int num_labels) {
    if (num_labels < 1) throw InvalidArgument("intent head needs at least one label");
    const Index d = encoder.config().hidden_dim;
    head_weight = Parameter<S>("head.weight", d, num_labels);
    head_bias = Parameter<S>("head.bias", 1, num_labels, false);
  }

  void init_head(Rng& rng) {
    for (Index i = 0; i < head_weight.value.size(); ++i)
      head_weight.value.data()[i] = static_cast<S>(0.02 * rng.normal());
    head_bias.value.setZero();
  }
};

void check_label_space(int head_labels, const LabelSpace& space);

// [batch, L] logits.
template <typename M>
Var<ScalarOf<M>> intent_logits(Graph<ScalarOf<M>>& g, M& model, const TokenBatch& batch) {
  auto hidden = encode_batch(g, model.encoder, batch);
  auto pooled = pool_first(hidden, batch);
  return add_bias(matmul(pooled, g.parameter(model.head_weight)), g.parameter(model.head_bias));
}

// Eval-mode scores for one encoded query.
template <typename S>
std::vector<double> intent_logits(const IntentModel<S>& model, const TokenSequence& seq) {
  Graph<S> g(Mode::kEval);
  const TokenBatch batch = make_batch(std::span(&seq, 1), false);
  const Tensor<S> z = intent_logits(g, model, batch).value();
  std::vector<double> out(static_cast<std::size_t>(z.cols()));
  for (Index c = 0; c < z.cols(); ++c) out[static_cast<std::size_t>(c)] = static_cast<double>(z(0, c));
  return out;
}

template <typename S>
std::vector<double> intent_logits(const IntentModel<S>& model, const TokenSequence& seq, const LabelSpace& space) {
  check_label_space(model.num_labels(), space);
  return intent_logits(model, seq);
}

// Row-per-example target distributions.
Tensor<double> one_hot_targets(std::span<const int> category_ids, int num_labels);
// Weights renormalized per example; all-missing weights mean uniform.
Tensor<double> weighted_targets(std::span<const std::vector<IntentLabel>> labels, int num_labels);

template <typename S>
Var<S> rsc_pretrain_loss(Var<S> logits, std::span<const int> category_ids) {
  return softmax_cross_entropy(logits, Tensor<S>(one_hot_targets(category_ids, static_cast<int>(logits.cols())).cast<S>()));
}

template <typename S>
Var<S> finetune_multilabel_loss(Var<S> logits, std::span<const std::vector<IntentLabel>> labels, double temperature) {
  if (!(temperature > 0.0)) throw InvalidArgument("temperature must be positive");
  return softmax_cross_entropy(logits, Tensor<S>(weighted_targets(labels, static_cast<int>(logits.cols())).cast<S>()),
                               temperature);
}

// Single-example losses in double precision.
double rsc_pretrain_loss(std::span<const double> logits, int category_id);
double finetune_multilabel_loss(std::span<const double> logits, std::span<const IntentLabel> labels,
                                const IntentFinetuneConfig& cfg);

CategoryDistribution softmax(std::span<const double> logits, double temperature = 1.0);

// All labels by descending probability, ties by lower id.
std::vector<int> rank_categories(const CategoryDistribution& dist);
std::vector<int> predict_categories(const CategoryDistribution& dist, const PredictionRule& rule);

}  // namespace rsx

#endif  // RSX_INTENT_HPP_
