// SPDX-License-Identifier: Apache-2.0

#include "rsx/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <vector>

#include "doctest.h"
#include "rsx/grad_check.hpp"
#include "rsx/hash.hpp"
#include "search_oracle.hpp"

using namespace rsx;

namespace {

EncoderConfig tiny(int vocab) {
  EncoderConfig c;
  c.num_layers = 1;
  c.hidden_dim = 8;
  c.num_heads = 2;
  c.ffn_dim = 16;
  c.vocab_size = vocab;
  c.max_seq_len = 16;
  c.dropout = 0.0;
  return c;
}

Tensor<float> random_matrix(Index n, Index d, Rng& rng) {
  Tensor<float> m(n, d);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(rng.normal());
  return m;
}

std::vector<std::string> ids_for(Index n) {
  std::vector<std::string> ids;
  for (Index i = 0; i < n; ++i) ids.push_back("item" + std::to_string(i));
  return ids;
}

// Direct enumeration of (1/(B(B-1))) sum_i sum_{j!=i} max(0, m - q_i.s_i + q_i.s_j).
double triplet_oracle(const Tensor<double>& q, const Tensor<double>& s, double m) {
  const Index b = q.rows();
  double total = 0;
  for (Index i = 0; i < b; ++i)
    for (Index j = 0; j < b; ++j)
      if (i != j) total += std::max(0.0, m - q.row(i).dot(s.row(i)) + q.row(i).dot(s.row(j)));
  return total / double(b * (b - 1));
}

Vocab small_vocab() {
  std::vector<std::string> texts{"red shoe", "blue shoe", "green hat", "red hat"};
  return build_vocab(texts);
}

}  // namespace

TEST_CASE("score") {
  const std::vector<float> a{1, 0}, b{0.5f, 0.5f}, c{0, 1};
  CHECK(score(a, b) == 0.5);
  CHECK(score(a, a) == 1.0);
  CHECK(score(a, c) == 0.0);
  const std::vector<float> three{1, 2, 3};
  CHECK_THROWS_AS(score(a, three), ShapeError);
}

TEST_CASE("triplet loss hand case and oracle") {
  Tensor<double> scores(2, 2);
  scores << 0.9, 0.5, 0.5, 0.9;
  Graph<double> g(Mode::kEval);
  CHECK(in_batch_margin_loss(g.constant(scores), 0.5).value()(0, 0) == doctest::Approx(0.1).epsilon(1e-12));
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const Index b = rng.uniform_int(2, 7);
    Tensor<double> q = random_matrix(b, 4, rng).cast<double>();
    Tensor<double> s = random_matrix(b, 4, rng).cast<double>();
    const double m = rng.uniform();
    const double loss = in_batch_triplet_loss(q, s, m);
    CHECK(std::abs(loss - triplet_oracle(q, s, m)) < 1e-6);
    bool all_ok = true;
    for (Index i = 0; i < b; ++i)
      for (Index j = 0; j < b; ++j)
        if (i != j && m - q.row(i).dot(s.row(i)) + q.row(i).dot(s.row(j)) > 0) all_ok = false;
    CHECK((loss == 0.0) == all_ok);
  }
  Tensor<double> one = Tensor<double>::Ones(1, 4);
  CHECK_THROWS_AS(in_batch_triplet_loss(one, one, 0.1), InvalidArgument);
  Tensor<double> q = Tensor<double>::Identity(3, 3) * 2.0;
  CHECK(in_batch_triplet_loss(q, q, 0.5) == 0.0);
  CHECK(in_batch_triplet_loss(q, q, 0.5, TripletReduction::kHardest) == 0.0);
}

TEST_CASE("hardest-negative reduction") {
  Tensor<double> scores(3, 3);
  scores << 1.0, 0.8, 0.2, 0.1, 0.5, 0.45, 0.3, 0.3, 0.0;
  Graph<double> g(Mode::kEval);
  auto s = g.constant(scores);
  const double m = 0.1;
  // per-row max hinge: max(0,0.1-1+0.8)=0, max(0.1-0.5+0.45)=0.05, max(0.1-0+0.3)=0.4
  CHECK(detail::hardest_margin_loss(s, m).value()(0, 0) == doctest::Approx((0.0 + 0.05 + 0.4) / 3.0));
  CHECK(parse_reduction("hardest") == TripletReduction::kHardest);
  CHECK_THROWS_AS(parse_reduction("sum"), InvalidArgument);

  Rng rng(8);
  Tensor<double> q = random_matrix(5, 6, rng).cast<double>();
  Tensor<double> t = random_matrix(5, 6, rng).cast<double>();
  Parameter<double> pq("q", 5, 6), pt("t", 5, 6);
  pq.value = q;
  pt.value = t;
  Graph<double> h(Mode::kEval);
  auto loss = in_batch_triplet_loss(h.parameter(pq), h.parameter(pt), 0.3, TripletReduction::kHardest);
  auto r = grad_check(h, loss, {.eps = 1e-4, .tol = 1e-5, .samples = 60});
  CHECK(r.passed);
}

TEST_CASE("embeddings: shape, normalization, determinism, shared towers") {
  const Vocab vocab = small_vocab();
  TwoTowerConfig cfg;
  cfg.normalize = true;
  TwoTowerModel<float> m(tiny(vocab.size()), cfg);
  Rng rng(3);
  m.init(rng);
  auto e = embed_text(m, Tower::kQuery, "red shoe", vocab);
  CHECK(e.size() == 8);
  double n2 = 0;
  for (float v : e) n2 += double(v) * v;
  CHECK(std::abs(std::sqrt(n2) - 1.0) < 1e-6);
  CHECK(embed_text(m, Tower::kQuery, "red shoe", vocab) == e);
  CHECK(embed_text(m, Tower::kItem, "red shoe", vocab) != e);
  const double s = score(std::span<const float>(e), std::span<const float>(embed_text(m, Tower::kItem, "hat", vocab)));
  CHECK(s >= -1.0 - 1e-6);
  CHECK(s <= 1.0 + 1e-6);

  cfg.share_weights = true;
  TwoTowerModel<float> shared(tiny(vocab.size()), cfg);
  shared.init(rng);
  CHECK(shared.parameters().size() == shared.query_encoder.parameters().size());
  for (const char* t : {"red shoe", "green hat", "blue"})
    CHECK(embed_text(shared, Tower::kQuery, t, vocab) == embed_text(shared, Tower::kItem, t, vocab));
  CHECK_THROWS_AS(TwoTowerModel<float>(tiny(10), TwoTowerConfig{.margin = -1.0}), InvalidArgument);
}

TEST_CASE("batched loss gradients through both towers") {
  const Vocab vocab = small_vocab();
  TwoTowerModel<double> m(tiny(vocab.size()), TwoTowerConfig{});
  Rng rng(4);
  m.init(rng);
  std::vector<TokenSequence> qs{encode("red", vocab, 16), encode("blue shoe", vocab, 16), encode("hat", vocab, 16)};
  std::vector<TokenSequence> ss{encode("red hat", vocab, 16), encode("blue shoe", vocab, 16),
                                encode("green hat", vocab, 16)};
  Graph<double> g(Mode::kEval);
  auto loss = in_batch_triplet_loss(embed_batch(g, m, Tower::kQuery, make_batch(qs)),
                                    embed_batch(g, m, Tower::kItem, make_batch(ss)), 1.0);
  CHECK(loss.value()(0, 0) > 0.0);
  auto r = grad_check(g, loss, {.eps = 1e-4, .tol = 1e-4, .samples = 100});
  CHECK(r.passed);
}

TEST_CASE("search_topk") {
  ItemIndex two({"a", "b"}, (Tensor<float>(2, 2) << 1, 0, 0, 1).finished(), false);
  const std::vector<float> q{1.0f, 0.1f};
  auto hits = search_topk(two, q, 1);
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].item_id == "a");
  CHECK(hits[0].score == 1.0);
  CHECK(search_topk(two, q, 10).size() == 2);
  ItemIndex tied({"x", "y", "z"}, Tensor<float>::Ones(3, 2), false);
  hits = search_topk(tied, q, 3);
  CHECK(hits[0].item_id == "x");
  CHECK(hits[2].item_id == "z");
  CHECK_THROWS_AS(search_topk(ItemIndex{}, q, 1), InvalidArgument);
  CHECK_THROWS_AS(search_topk(two, q, 0), InvalidArgument);
  CHECK_THROWS_AS(ItemIndex({"a", "a"}, Tensor<float>::Ones(2, 2), false), InvalidArgument);

  Rng rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    ItemIndex idx(ids_for(300), random_matrix(300, 16, rng), false);
    std::vector<float> query(16);
    for (auto& v : query) v = static_cast<float>(rng.normal());
    CHECK(oracle::same_as_oracle(idx, query, 5));
    CHECK(oracle::same_as_oracle(idx, query, 50));
    auto h = search_topk(idx, query, 50);
    for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i - 1].score >= h[i].score);
  }
}

TEST_CASE("index build, persistence and capacity") {
  const Vocab vocab = small_vocab();
  TwoTowerModel<float> m(tiny(vocab.size()), TwoTowerConfig{});
  Rng rng(6);
  m.init(rng);
  std::vector<CatalogItem> items{{"i1", "red shoe"}, {"i2", "blue hat"}, {"i3", "green"}};
  auto idx = build_index(std::span<const CatalogItem>(items), m, vocab, "abc", 2);
  CHECK(idx.embeddings().rows() == 3);
  CHECK(idx.embeddings().cols() == 8);
  CHECK(build_index(std::span<const CatalogItem>(items), m, vocab, "abc", 2).embeddings() == idx.embeddings());
  auto single = embed_text(m, Tower::kItem, "blue hat", vocab);
  for (int c = 0; c < 8; ++c) CHECK(idx.embeddings()(1, c) == doctest::Approx(single[c]).epsilon(1e-5));
  items.push_back({"i1", "dup"});
  CHECK_THROWS_AS(build_index(std::span<const CatalogItem>(items), m, vocab), InvalidArgument);

  const auto dir = std::filesystem::temp_directory_path() / "rsx_index_test";
  std::filesystem::remove_all(dir);
  save_index(idx, dir);
  auto back = load_index(dir);
  CHECK(back.item_ids() == idx.item_ids());
  CHECK(back.embeddings() == idx.embeddings());
  CHECK(back.model_checksum() == "abc");
  std::string blob = read_file(dir / "embeddings.bin");
  blob[3] ^= 1;
  write_file(dir / "embeddings.bin", blob);
  CHECK_THROWS_AS(load_index(dir), ChecksumError);
  std::filesystem::remove_all(dir);

  const Index n = 83672;
  ItemIndex big(ids_for(n), Tensor<float>::Zero(n, 128), false);
  CHECK(big.memory_bytes() < (std::size_t{4} << 30));
  CHECK(search_topk(big, std::vector<float>(128, 1.0f), 3)[0].item_id == "item0");
}
