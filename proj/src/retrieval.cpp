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

#include "rsx/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "rsx/hash.hpp"

namespace rsx {

TripletReduction parse_reduction(std::string_view text) {
  if (text == "mean") return TripletReduction::kMean;
  if (text == "hardest") return TripletReduction::kHardest;
  throw InvalidArgument("triplet reduction '" + std::string(text) + "': expected mean or hardest");
}

std::string to_string(TripletReduction r) { return r == TripletReduction::kMean ? "mean" : "hardest"; }

void TwoTowerConfig::validate() const {
  if (!(margin >= 0.0)) throw InvalidArgument("margin must be >= 0");
}

nlohmann::json TwoTowerConfig::to_json() const {
  return {{"share_weights", share_weights},
          {"normalize", normalize},
          {"margin", margin},
          {"reduction", rsx::to_string(reduction)}};
}

TwoTowerConfig TwoTowerConfig::from_json(const nlohmann::json& j) {
  TwoTowerConfig c;
  c.share_weights = j.at("share_weights").get<bool>();
  c.normalize = j.at("normalize").get<bool>();
  c.margin = j.at("margin").get<double>();
  c.reduction = parse_reduction(j.at("reduction").get<std::string>());
  c.validate();
  return c;
}

namespace {

template <typename T>
double dot(std::span<const T> q, std::span<const T> s) {
  if (q.size() != s.size())
    throw ShapeError("score: dimension " + std::to_string(q.size()) + " vs " + std::to_string(s.size()));
  double acc = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) acc += static_cast<double>(q[i]) * static_cast<double>(s[i]);
  return acc;
}

}  // namespace

double score(std::span<const float> q, std::span<const float> s) { return dot(q, s); }
double score(std::span<const double> q, std::span<const double> s) { return dot(q, s); }

double in_batch_triplet_loss(const Tensor<double>& q, const Tensor<double>& s, double margin,
                             TripletReduction reduction) {
  Graph<double> g(Mode::kEval);
  return in_batch_triplet_loss(g.constant(q), g.constant(s), margin, reduction).value()(0, 0);
}

ItemIndex::ItemIndex(std::vector<std::string> item_ids, Tensor<float> embeddings, bool normalize,
                     std::string model_checksum)
    : item_ids_(std::move(item_ids)),
      embeddings_(std::move(embeddings)),
      normalize_(normalize),
      model_checksum_(std::move(model_checksum)) {
  if (static_cast<Index>(item_ids_.size()) != embeddings_.rows())
    throw ShapeError("index: " + std::to_string(item_ids_.size()) + " ids for " +
                     std::to_string(embeddings_.rows()) + " rows");
  std::unordered_set<std::string> seen;
  for (const auto& id : item_ids_)
    if (!seen.insert(id).second) throw InvalidArgument("index: duplicate item_id '" + id + "'");
  if (!embeddings_.allFinite()) throw NumericError("index: non-finite embedding");
}

std::size_t ItemIndex::memory_bytes() const {
  std::size_t bytes = static_cast<std::size_t>(embeddings_.size()) * sizeof(float);
  for (const auto& id : item_ids_) bytes += sizeof(std::string) + id.capacity();
  return bytes;
}

std::vector<SearchHit> search_topk(const ItemIndex& index, std::span<const float> query, int k) {
  if (k < 1) throw InvalidArgument("search_topk: k must be >= 1");
  if (index.size() == 0) throw InvalidArgument("search_topk: empty index");
  if (static_cast<Index>(query.size()) != index.dim())
    throw ShapeError("search_topk: query dimension " + std::to_string(query.size()) + " vs index " +
                     std::to_string(index.dim()));
  const Tensor<float>& e = index.embeddings();
  const Index n = e.rows();
  const Index d = e.cols();
  std::vector<double> scores(static_cast<std::size_t>(n));
  for (Index r = 0; r < n; ++r) {
    const float* row = e.data() + r * d;
    double acc = 0.0;
    for (Index c = 0; c < d; ++c) acc += static_cast<double>(row[c]) * static_cast<double>(query[c]);
    scores[static_cast<std::size_t>(r)] = acc;
  }
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto take = std::min<std::size_t>(order.size(), static_cast<std::size_t>(k));
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    [&](std::size_t a, std::size_t b) { return scores[a] > scores[b] || (scores[a] == scores[b] && a < b); });
  std::vector<SearchHit> hits;
  hits.reserve(take);
  for (std::size_t i = 0; i < take; ++i) hits.push_back({index.item_ids()[order[i]], order[i], scores[order[i]]});
  return hits;
}

void save_index(const ItemIndex& index, const std::filesystem::path& dir) {
  const Tensor<float>& e = index.embeddings();
  const std::string blob = pack_f32_le(std::span<const float>(e.data(), static_cast<std::size_t>(e.size())));
  std::string ids;
  for (const auto& id : index.item_ids()) ids += id + "\n";
  nlohmann::json m{{"format", "rsx-index"},
                   {"version", 1},
                   {"count", index.size()},
                   {"dim", index.dim()},
                   {"normalize", index.normalize()},
                   {"model_checksum", index.model_checksum()},
                   {"embeddings_sha1", sha1_hex(blob)},
                   {"item_ids_sha1", sha1_hex(ids)}};
  write_file(dir / "embeddings.bin", blob);
  write_file(dir / "item_ids.txt", ids);
  write_file(dir / "manifest.json", m.dump(2) + "\n");
}

ItemIndex load_index(const std::filesystem::path& dir) {
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(read_file(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("index manifest: " + std::string(e.what()));
  }
  if (m.value("format", "") != "rsx-index") throw ParseError("index manifest: unknown format");
  const auto count = m.at("count").get<std::size_t>();
  const auto dim = m.at("dim").get<Index>();
  const std::string blob = read_file(dir / "embeddings.bin");
  const std::string ids = read_file(dir / "item_ids.txt");
  if (sha1_hex(blob) != m.at("embeddings_sha1").get<std::string>())
    throw ChecksumError("index embeddings checksum mismatch in " + dir.string());
  if (sha1_hex(ids) != m.at("item_ids_sha1").get<std::string>())
    throw ChecksumError("index item_ids checksum mismatch in " + dir.string());
  const std::vector<float> values = unpack_f32_le(blob);
  if (values.size() != count * static_cast<std::size_t>(dim))
    throw ShapeError("index: blob holds " + std::to_string(values.size()) + " floats, manifest says " +
                     std::to_string(count) + "x" + std::to_string(dim));
  Tensor<float> e = Eigen::Map<const Tensor<float>>(values.data(), static_cast<Index>(count), dim);
  std::vector<std::string> id_list;
  std::size_t pos = 0;
  while (pos < ids.size()) {
    const auto nl = ids.find('\n', pos);
    if (nl == std::string::npos) throw ParseError("index item_ids.txt: missing final newline");
    id_list.push_back(ids.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return ItemIndex(std::move(id_list), std::move(e), m.at("normalize").get<bool>(),
                   m.at("model_checksum").get<std::string>());
}

}  // namespace rsx
