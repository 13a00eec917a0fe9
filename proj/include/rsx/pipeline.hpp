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

#ifndef RSX_PIPELINE_HPP_
#define RSX_PIPELINE_HPP_

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rsx/corpus.hpp"
#include "rsx/intent.hpp"
#include "rsx/metrics.hpp"
#include "rsx/retrieval.hpp"
#include "rsx/trainer.hpp"

namespace rsx {

// Named input files recorded in run_meta.json with their git blob ids.
using RunInputs = std::map<std::string, std::filesystem::path>;

// Writes config.txt, loss_trace.tsv, checkpoint.{json,bin}, vocab.tsv,
// labels.tsv (intent models) and run_meta.json.
void write_run(const std::filesystem::path& dir, const TrainConfig& cfg, const TrainResult& result, const Vocab& vocab,
               const RunInputs& inputs, const nlohmann::json& extra = nlohmann::json::object());

struct LoadedRun {
  std::filesystem::path dir;
  Checkpoint checkpoint;
  Vocab vocab;
};

// A run directory, or a checkpoint path whose directory holds vocab.tsv.
LoadedRun load_run(const std::filesystem::path& path);

struct IntentPrediction {
  std::string query;
  std::vector<std::string> predicted;
  std::vector<std::string> ranked;  // every label, best first
};

// Probabilities use the fine-tuning temperature stored in the checkpoint.
std::vector<IntentPrediction> predict_intent(const Checkpoint& ckpt, const Vocab& vocab,
                                             const std::vector<std::string>& queries, const PredictionRule& rule);

// query \t predicted[,..] \t ranked[,..]
std::string intent_predictions_tsv(const std::vector<IntentPrediction>& preds, std::size_t ranked_depth = 10);
std::vector<IntentPrediction> load_intent_predictions(const std::filesystem::path& path);

EvalReport evaluate_intent(const std::vector<IntentPrediction>& preds, const EvalDataset& truth,
                           const IntentEvalOptions& opts = {});

struct RetrievalResult {
  std::string query;
  std::vector<SearchHit> hits;
};

std::vector<RetrievalResult> run_retrieval(const TwoTowerModel<float>& model, const Vocab& vocab,
                                           const ItemIndex& index, const std::vector<std::string>& queries, int k);

// query \t id[,..] \t score[,..]
std::string retrieval_results_tsv(const std::vector<RetrievalResult>& results);
std::vector<RetrievalResult> load_retrieval_results(const std::filesystem::path& path);

EvalReport evaluate_retrieval(const std::vector<RetrievalResult>& results, const EvalDataset& truth,
                              const std::vector<int>& ks);

}  // namespace rsx

#endif  // RSX_PIPELINE_HPP_
