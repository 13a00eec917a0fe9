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

#ifndef RSX_CORPUS_HPP_
#define RSX_CORPUS_HPP_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace rsx {

struct PretrainRecord {
  std::string title;
  int category_id = 0;
};

struct IntentLabel {
  int category_id = 0;
  double weight = 1.0;  // fraction of clicks, in (0, 1]
};

struct IntentExample {
  std::string query;
  std::vector<IntentLabel> labels;
};

struct RetrievalPair {
  std::string query;
  std::string item_id;
  std::string title;
};

struct CatalogItem {
  std::string item_id;
  std::string title;
  int category_id = -1;  // -1 when the catalog has no category column
};

// Evaluation rows keep raw category names / item ids as ground truth.
struct EvalQuery {
  std::string query;
  std::vector<std::string> relevant;
};

struct LabelSpace {
  int size = 0;
  std::vector<std::string> names;
};

// Raw category string <-> dense 0-based id, assigned in order of first
// appearance. Persisted as `dense_id \t raw_category_string`.
class LabelMap {
 public:
  int intern(std::string_view raw);
  std::optional<int> find(std::string_view raw) const;
  const std::string& name(int id) const;
  int size() const { return static_cast<int>(names_.size()); }
  LabelSpace space() const { return {size(), names_}; }

  std::string to_tsv() const;
  static LabelMap from_tsv(std::string_view tsv);
  static LabelMap load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> ids_;
};

// columns[i] is the source column index of logical field i; empty means the
// identity mapping (fields in their documented order).
struct Schema {
  std::vector<int> columns;
  char delimiter = '\t';
  bool skip_header = false;

  static Schema parse(std::string_view spec);  // e.g. "1,0"
};

struct LoadOptions {
  Schema schema;
  bool strict = false;
};

struct LoadStats {
  std::size_t lines = 0;
  std::size_t loaded = 0;
  std::size_t skipped = 0;
  std::size_t duplicates = 0;
  std::vector<std::string> warnings;  // "line N: reason", first 100 only
};

struct PretrainCorpus {
  std::vector<PretrainRecord> records;
  LabelSpace labels;
  LoadStats stats;
};

struct IntentDataset {
  std::vector<IntentExample> examples;
  LabelSpace labels;
  LoadStats stats;
};

struct RetrievalDataset {
  std::vector<RetrievalPair> pairs;
  std::size_t distinct_queries = 0;
  std::size_t distinct_items = 0;
  LoadStats stats;
};

struct EvalDataset {
  std::vector<EvalQuery> queries;
  LoadStats stats;
};

// pretrain.tsv: title \t category
PretrainCorpus load_pretrain_corpus(const std::filesystem::path& path, LabelMap& labels,
                                    const LoadOptions& opts = {});

// intent_finetune.tsv: query \t cat:weight[,cat:weight...]; a bare `cat`
// list gets uniform weights.
IntentDataset load_intent_dataset(const std::filesystem::path& path, LabelMap& labels, const LoadOptions& opts = {});

// retrieval_finetune.tsv: query \t item_id \t title. Repeated
// (query, item_id) rows keep the first occurrence.
RetrievalDataset load_retrieval_dataset(const std::filesystem::path& path, const LoadOptions& opts = {});

// items.tsv: item_id \t title [\t category]
std::vector<CatalogItem> load_items(const std::filesystem::path& path, LabelMap* labels = nullptr,
                                    const LoadOptions& opts = {});

// eval_intent.tsv: query \t cat[,cat...]   eval_retrieval.tsv: query \t id[,id...]
EvalDataset load_eval_dataset(const std::filesystem::path& path, const LoadOptions& opts = {});

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char delim);

}  // namespace rsx

#endif  // RSX_CORPUS_HPP_
