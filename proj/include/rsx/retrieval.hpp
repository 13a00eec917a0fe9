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

#ifndef RSX_RETRIEVAL_HPP_
#define RSX_RETRIEVAL_HPP_

#include <nlohmann/json.hpp>

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rsx/corpus.hpp"
#include "rsx/encoder.hpp"

namespace rsx {

enum class Tower { kQuery, kItem };

enum class TripletReduction {
  kMean,     // average hinge over all B(B-1) in-batch triplets
  kHardest,  // per query, the largest hinge over its negatives; averaged over B
};

TripletReduction parse_reduction(std::string_view text);
std::string to_string(TripletReduction r);

struct TwoTowerConfig {
  bool share_weights = false;
  bool normalize = false;
  double margin = 0.1;
  TripletReduction reduction = TripletReduction::kMean;

  void validate() const;
  nlohmann::json to_json() const;
  static TwoTowerConfig from_json(const nlohmann::json& j);
  friend bool operator==(const TwoTowerConfig&, const TwoTowerConfig&) = default;
};

// Query tower Q and item tower S scored by Q(q)^T S(s). With share_weights
// the item tower is the query tower.
template <typename S>
class TwoTowerModel {
 public:
  using Scalar = S;

  TwoTowerModel() = default;
  TwoTowerModel(const EncoderConfig& enc, const TwoTowerConfig& cfg)
      : query_encoder(enc, "query_encoder."), config_(cfg) {
    cfg.validate();
    if (!cfg.share_weights) item_encoder = EncoderModel<S>(enc, "item_encoder.");
  }

  void init(Rng& rng) {
    query_encoder.init(rng);
    if (!config_.share_weights) item_encoder.init(rng);
  }

  const TwoTowerConfig& config() const { return config_; }
  const EncoderConfig& encoder_config() const { return query_encoder.config(); }

  EncoderModel<S>& tower(Tower t) { return t == Tower::kItem && !config_.share_weights ? item_encoder : query_encoder; }
  const EncoderModel<S>& tower(Tower t) const {
    return t == Tower::kItem && !config_.share_weights ? item_encoder : query_encoder;
  }

  std::vector<Parameter<S>*> parameters() {
    auto out = query_encoder.parameters();
    if (!config_.share_weights) {
      auto item = item_encoder.parameters();
      out.insert(out.end(), item.begin(), item.end());
    }
    return out;
  }

  std::vector<const Parameter<S>*> parameters() const {
    auto ps = const_cast<TwoTowerModel*>(this)->parameters();
    return {ps.begin(), ps.end()};
  }

  template <typename T>
  TwoTowerModel<T> cast() const {
    TwoTowerModel<T> out;
    out.query_encoder = query_encoder.template cast<T>();
    if (!config_.share_weights) out.item_encoder = item_encoder.template cast<T>();
    out.set_config(config_);
    return out;
  }

  void set_config(const TwoTowerConfig& cfg) { config_ = cfg; }

  EncoderModel<S> query_encoder;
  EncoderModel<S> item_encoder;

 private:
  TwoTowerConfig config_;
};

// [batch, d] tower embeddings.
template <typename M>
Var<ScalarOf<M>> embed_batch(Graph<ScalarOf<M>>& g, M& model, Tower tower, const TokenBatch& batch) {
  auto hidden = encode_batch(g, model.tower(tower), batch);
  return pool_first(hidden, batch, model.config().normalize);
}

template <typename S>
std::vector<S> embed_tokens(const TwoTowerModel<S>& model, Tower tower, const TokenSequence& seq) {
  return pool_first(encode_tokens(model.tower(tower), seq), model.config().normalize);
}

template <typename S>
std::vector<S> embed_text(const TwoTowerModel<S>& model, Tower tower, std::string_view text, const Vocab& vocab) {
  return embed_tokens(model, tower, encode(text, vocab, model.encoder_config().max_seq_len));
}

double score(std::span<const float> q, std::span<const float> s);
double score(std::span<const double> q, std::span<const double> s);

namespace detail {

template <typename S>
Var<S> hardest_margin_loss(Var<S> scores, double margin) {
  return scores.graph().add(
      "hardest_margin_loss", {scores},
      [margin](Graph<S>& g, auto& n) {
        const auto& s = g.input(n, 0);
        if (s.rows() != s.cols()) throw ShapeError("hardest_margin_loss: scores must be square");
        if (s.rows() < 2) throw InvalidArgument("triplet loss needs a batch of at least 2");
        const Index b = s.rows();
        n.saved.assign(1, Tensor<S>::Constant(b, 1, S(-1)));
        double total = 0.0;
        for (Index i = 0; i < b; ++i) {
          double best = 0.0;
          for (Index j = 0; j < b; ++j) {
            if (j == i) continue;
            const double h = margin - static_cast<double>(s(i, i)) + static_cast<double>(s(i, j));
            if (h > best) {
              best = h;
              n.saved[0](i, 0) = static_cast<S>(j);
            }
          }
          total += best;
        }
        n.value.setConstant(1, 1, static_cast<S>(total / static_cast<double>(b)));
      },
      [](Graph<S>& g, auto& n) {
        auto* ds = g.grad_of(n, 0);
        if (ds == nullptr) return;
        const Index b = n.saved[0].rows();
        const S w = static_cast<S>(static_cast<double>(n.grad(0, 0)) / static_cast<double>(b));
        for (Index i = 0; i < b; ++i) {
          const auto j = static_cast<Index>(n.saved[0](i, 0));
          if (j < 0) continue;
          (*ds)(i, j) += w;
          (*ds)(i, i) -= w;
        }
      });
}

}  // namespace detail

// Row i of `s` is the positive for row i of `q`; every other row is a negative.
template <typename S>
Var<S> in_batch_triplet_loss(Var<S> q, Var<S> s, double margin,
                             TripletReduction reduction = TripletReduction::kMean) {
  if (q.rows() != s.rows() || q.cols() != s.cols())
    throw ShapeError("in_batch_triplet_loss: " + to_string(q.shape()) + " vs " + to_string(s.shape()));
  auto scores = matmul_nt(q, s);
  return reduction == TripletReduction::kMean ? in_batch_margin_loss(scores, margin)
                                              : detail::hardest_margin_loss(scores, margin);
}

double in_batch_triplet_loss(const Tensor<double>& q, const Tensor<double>& s, double margin,
                             TripletReduction reduction = TripletReduction::kMean);

// Exact inner-product index; row i holds the embedding of item_ids[i].
class ItemIndex {
 public:
  ItemIndex() = default;
  ItemIndex(std::vector<std::string> item_ids, Tensor<float> embeddings, bool normalize,
            std::string model_checksum = "");

  std::size_t size() const { return item_ids_.size(); }
  Index dim() const { return embeddings_.cols(); }
  bool normalize() const { return normalize_; }
  const std::string& model_checksum() const { return model_checksum_; }
  const std::vector<std::string>& item_ids() const { return item_ids_; }
  const Tensor<float>& embeddings() const { return embeddings_; }
  std::size_t memory_bytes() const;

 private:
  std::vector<std::string> item_ids_;
  Tensor<float> embeddings_;
  bool normalize_ = false;
  std::string model_checksum_;
};

struct SearchHit {
  std::string item_id;
  std::size_t row = 0;
  double score = 0.0;
};

// Exact top-k by dot product (double accumulation), descending score, ties
// by lower row. Returns min(k, N) hits.
std::vector<SearchHit> search_topk(const ItemIndex& index, std::span<const float> query, int k);

// Item-tower embeddings in eval mode, input order, computed in fixed chunks.
template <typename S>
ItemIndex build_index(std::span<const CatalogItem> items, const TwoTowerModel<S>& model, const Vocab& vocab,
                      const std::string& model_checksum = "", int chunk = 64) {
  if (items.empty()) throw InvalidArgument("build_index: no items");
  const EncoderModel<S>& enc = model.tower(Tower::kItem);
  const Index d = enc.config().hidden_dim;
  std::vector<std::string> ids;
  ids.reserve(items.size());
  Tensor<float> emb(static_cast<Index>(items.size()), d);
  for (std::size_t start = 0; start < items.size(); start += static_cast<std::size_t>(chunk)) {
    const std::size_t end = std::min(items.size(), start + static_cast<std::size_t>(chunk));
    std::vector<TokenSequence> seqs;
    for (std::size_t i = start; i < end; ++i) seqs.push_back(encode(items[i].title, vocab, enc.config().max_seq_len));
    Graph<S> g(Mode::kEval);
    const TokenBatch batch = make_batch(seqs);
    const Tensor<S> e = pool_first(encode_batch(g, enc, batch), batch, model.config().normalize).value();
    emb.middleRows(static_cast<Index>(start), e.rows()) = e.template cast<float>();
  }
  for (const auto& it : items) ids.push_back(it.item_id);
  return ItemIndex(std::move(ids), std::move(emb), model.config().normalize, model_checksum);
}

// Directory layout: manifest.json, embeddings.bin (row-major float32 LE),
// item_ids.txt (one id per line).
void save_index(const ItemIndex& index, const std::filesystem::path& dir);
ItemIndex load_index(const std::filesystem::path& dir);

}  // namespace rsx

#endif  // RSX_RETRIEVAL_HPP_
