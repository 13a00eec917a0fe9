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

#ifndef RSX_SYNTH_HPP_
#define RSX_SYNTH_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace rsx {

// Generator for a small e-commerce-like corpus: each category owns a set of
// CJK characters and a few alphanumeric brand tokens, drawn with Zipf
// weights, and shares a pool of generic characters with every other
// category. Queries are short and mostly use category characters, so a
// model that has only seen the labeled queries misses most of the tail.
struct SynthConfig {
  int num_titles = 5000;
  int num_categories = 20;
  int chars_per_category = 30;
  int brands_per_category = 4;
  int generic_chars = 24;
  int intent_train = 500;
  int intent_eval = 400;
  int retrieval_train = 500;
  int retrieval_eval = 200;
  double multi_label_rate = 0.2;
  std::uint64_t seed = 0;
};

struct SynthItem {
  std::string item_id;
  std::string title;
  std::string category;
};

struct SynthIntentQuery {
  std::string query;
  std::vector<std::pair<std::string, double>> labels;  // category, click share
};

struct SynthRetrievalPair {
  std::string query;
  std::string item_id;
  std::string title;
};

struct SynthRetrievalQuery {
  std::string query;
  std::vector<std::string> relevant;
};

struct SynthCorpus {
  std::vector<SynthItem> items;
  std::vector<SynthIntentQuery> intent_train;
  std::vector<SynthIntentQuery> intent_eval;
  std::vector<SynthRetrievalPair> retrieval_train;
  std::vector<SynthRetrievalQuery> retrieval_eval;

  // pretrain.tsv, items.tsv, intent_finetune.tsv, eval_intent.tsv,
  // retrieval_finetune.tsv, eval_retrieval.tsv
  void write(const std::filesystem::path& dir) const;
};

SynthCorpus generate_synthetic(const SynthConfig& cfg);

}  // namespace rsx

#endif  // RSX_SYNTH_HPP_
