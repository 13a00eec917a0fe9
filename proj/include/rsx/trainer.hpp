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

#ifndef RSX_TRAINER_HPP_
#define RSX_TRAINER_HPP_

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rsx/augment.hpp"
#include "rsx/corpus.hpp"
#include "rsx/encoder.hpp"
#include "rsx/intent.hpp"
#include "rsx/retrieval.hpp"

namespace rsx {

enum class TaskKind { kPretrainIntent, kFinetuneIntent, kPretrainRetrieval, kFinetuneRetrieval };

TaskKind parse_task(std::string_view text);
std::string to_string(TaskKind t);
bool is_intent(TaskKind t);
bool is_pretrain(TaskKind t);

// Enabled pre-training objectives. `substring` is RSC for intent and RSR for
// retrieval; `full` is full-title classification (FSC).
struct PretrainTasks {
  bool substring = true;
  bool mlm = true;
  bool full = false;

  // Comma list such as "rsc,mlm"; rsc and rsr are synonyms.
  static PretrainTasks parse(std::string_view text);
  std::string to_string() const;
  // Display name, e.g. "RSC+MLM" or "RSR+MLM".
  std::string label(TaskKind task) const;
  bool any_task_head() const { return substring || full; }
};

enum class ScheduleKind {
  kLinear,    // linear warmup, then linear decay to 0 at the last step
  kConstant,  // linear warmup, then flat
};

struct TrainConfig {
  TaskKind task = TaskKind::kPretrainIntent;
  PretrainTasks tasks;
  double lr = 1e-4;
  double weight_decay = 0.01;
  int batch_size = 64;
  int steps = 1000;
  int warmup_steps = 100;
  ScheduleKind schedule = ScheduleKind::kLinear;
  std::uint64_t seed = 0;
  double mlm_loss_weight = 1.0;
  // Run the substring task for the first half of the steps and MLM for the
  // second half instead of summing both every batch.
  bool sequential_phases = false;
  int log_every = 50;

  double temperature = 1.0 / 3.0;
  int max_substring_len = 5;
  bool mask_substring_in_title = false;
  double mask_ratio = 0.15;

  EncoderConfig encoder;  // vocab_size comes from the vocabulary at run time
  TwoTowerConfig towers;

  void validate() const;
  // Sets one `key = value` field; throws ParseError for unknown keys.
  void set(std::string_view key, std::string_view value);
  // Flat `key = value` text with every key, one per line.
  std::string to_text() const;
  static TrainConfig parse(std::string_view text);
  static TrainConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  std::string task_label() const;

  static const std::vector<std::string>& keys();
};

// The configuration used for the published runs (batch 1024, lr 1e-4).
TrainConfig reference_config(TaskKind task);

double lr_at(std::int64_t step, const TrainConfig& cfg);

struct AdamState {
  std::vector<Tensor<float>> m;
  std::vector<Tensor<float>> v;
  std::int64_t step = 0;
};

// One AdamW update (beta1 0.9, beta2 0.999, eps 1e-8) with decoupled decay
//   theta <- theta - lr * wd * theta   (only where Parameter::decay)
//   theta <- theta - lr * mhat / (sqrt(vhat) + eps)
// Parameters whose grad buffer is empty took no part in the step and are
// left untouched. A non-finite gradient throws NumericError.
void adamw_step(std::span<Parameter<float>* const> params, AdamState& state, double lr, double weight_decay);

struct NamedTensor {
  std::string name;
  Tensor<float> value;
};

struct Checkpoint {
  std::string model_kind;  // "intent" or "two_tower"
  nlohmann::json config;   // encoder, towers, num_labels, train config, task_label
  std::vector<std::string> labels;
  std::vector<NamedTensor> params;
  std::vector<NamedTensor> adam_m;
  std::vector<NamedTensor> adam_v;
  std::int64_t step = 0;
  std::string vocab_checksum;

  const NamedTensor* find(std::string_view name) const;
  EncoderConfig encoder_config() const;
  std::string task_label() const;
};

// `stem` names the pair stem.json + stem.bin. The manifest holds names,
// shapes, byte offsets and the SHA-1 of the blob.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& stem);
// Accepts the stem, either file of the pair, or a run directory. Verifies
// checksums before reading any tensor and checks every shape against the
// config snapshot.
Checkpoint load_checkpoint(const std::filesystem::path& path);
std::filesystem::path checkpoint_stem(const std::filesystem::path& path);
// git blob id of the manifest; identifies the exact weights.
std::string checkpoint_checksum(const std::filesystem::path& path);

Checkpoint make_checkpoint(const IntentModel<float>& model, std::span<const std::string> labels);
Checkpoint make_checkpoint(const TwoTowerModel<float>& model);
IntentModel<float> intent_model_from(const Checkpoint& ckpt);
TwoTowerModel<float> two_tower_from(const Checkpoint& ckpt);

// Copies tensors from `src` into `dst` by name, mapping between encoder
// prefixes (encoder., query_encoder., item_encoder.) when names differ. Every
// destination encoder tensor must be found with a matching shape; other
// tensors (heads) are copied only on an exact name and shape match. Returns
// the destination names that were loaded.
std::vector<std::string> transfer_parameters(const Checkpoint& src, std::span<Parameter<float>* const> dst);

struct LossRecord {
  std::int64_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
  double task_loss = 0.0;
  double mlm_loss = 0.0;
};

std::string loss_trace_tsv(std::span<const LossRecord> trace);

// First step at which the window-smoothed loss exceeds the minimum smoothed
// value of the preceding `span` steps by more than `tolerance` (relative).
std::optional<std::int64_t> divergence_step(std::span<const LossRecord> trace, int window = 50, int span = 500,
                                            double tolerance = 0.10);

struct TrainData {
  const Vocab* vocab = nullptr;
  const PretrainCorpus* pretrain = nullptr;     // pretrain-* tasks
  const IntentDataset* intent = nullptr;        // finetune-intent
  const RetrievalDataset* retrieval = nullptr;  // finetune-retrieval
  std::vector<std::string> labels;              // label names for intent tasks
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<LossRecord> trace;
  std::vector<std::string> loaded_parameters;  // warm start only
  std::string init_label;                      // task label of the warm-start checkpoint
};

using TrainLogger = std::function<void(const std::string&)>;

TrainResult run_training(const TrainConfig& cfg, const TrainData& data, const Checkpoint* init = nullptr,
                         const TrainLogger& log = {});

// Encoder structure of `cfg` replaced by that of `ckpt` (dropout kept).
TrainConfig inherit_encoder(TrainConfig cfg, const Checkpoint& ckpt);

}  // namespace rsx

#endif  // RSX_TRAINER_HPP_
