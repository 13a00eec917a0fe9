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

#include "rsx/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <deque>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "rsx/hash.hpp"

namespace rsx {

namespace {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ParseError("config key '" + std::string(key) + "': bad value '" + std::string(text) + "'");
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ParseError("config key '" + std::string(key) + "': expected true or false, got '" + std::string(text) + "'");
}

const char* bool_text(bool b) { return b ? "true" : "false"; }

}  // namespace

TaskKind parse_task(std::string_view text) {
  if (text == "pretrain-intent") return TaskKind::kPretrainIntent;
  if (text == "finetune-intent") return TaskKind::kFinetuneIntent;
  if (text == "pretrain-retrieval") return TaskKind::kPretrainRetrieval;
  if (text == "finetune-retrieval") return TaskKind::kFinetuneRetrieval;
  throw InvalidArgument("unknown task '" + std::string(text) + "'");
}

std::string to_string(TaskKind t) {
  switch (t) {
    case TaskKind::kPretrainIntent:
      return "pretrain-intent";
    case TaskKind::kFinetuneIntent:
      return "finetune-intent";
    case TaskKind::kPretrainRetrieval:
      return "pretrain-retrieval";
    case TaskKind::kFinetuneRetrieval:
      return "finetune-retrieval";
  }
  return "?";
}

bool is_intent(TaskKind t) { return t == TaskKind::kPretrainIntent || t == TaskKind::kFinetuneIntent; }
bool is_pretrain(TaskKind t) { return t == TaskKind::kPretrainIntent || t == TaskKind::kPretrainRetrieval; }

PretrainTasks PretrainTasks::parse(std::string_view text) {
  PretrainTasks t{false, false, false};
  for (const auto& raw : split(text, ',')) {
    std::string name = trim(raw);
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
    if (name == "rsc" || name == "rsr")
      t.substring = true;
    else if (name == "mlm")
      t.mlm = true;
    else if (name == "fsc")
      t.full = true;
    else if (!name.empty())
      throw InvalidArgument("unknown pre-training task '" + name + "'");
  }
  return t;
}

std::string PretrainTasks::to_string() const {
  std::vector<std::string> parts;
  if (substring) parts.push_back("rsc");
  if (full) parts.push_back("fsc");
  if (mlm) parts.push_back("mlm");
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : ",") + p;
  return out;
}

std::string PretrainTasks::label(TaskKind task) const {
  std::string out;
  if (substring) out = is_intent(task) ? "RSC" : "RSR";
  if (full) out = "FSC";
  if (mlm) out += out.empty() ? "MLM" : "+MLM";
  return out;
}

const std::vector<std::string>& TrainConfig::keys() {
  static const std::vector<std::string> k{
      "task",        "tasks",         "lr",        "weight_decay",      "batch_size",
      "steps",       "warmup_steps",  "schedule",  "seed",              "mlm_loss_weight",
      "sequential_phases", "log_every", "temperature", "max_substring_len", "mask_substring_in_title",
      "mask_ratio",  "num_layers",    "hidden_dim", "num_heads",        "ffn_dim",
      "max_seq_len", "dropout",       "share_weights", "normalize",     "margin",
      "reduction"};
  return k;
}

void TrainConfig::set(std::string_view key, std::string_view v) {
  if (key == "task") task = parse_task(v);
  else if (key == "tasks") tasks = PretrainTasks::parse(v);
  else if (key == "lr") lr = parse_number<double>(key, v);
  else if (key == "weight_decay") weight_decay = parse_number<double>(key, v);
  else if (key == "batch_size") batch_size = parse_number<int>(key, v);
  else if (key == "steps") steps = parse_number<int>(key, v);
  else if (key == "warmup_steps") warmup_steps = parse_number<int>(key, v);
  else if (key == "schedule") {
    if (v == "linear") schedule = ScheduleKind::kLinear;
    else if (v == "constant") schedule = ScheduleKind::kConstant;
    else throw ParseError("config key 'schedule': expected linear or constant, got '" + std::string(v) + "'");
  }
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, v);
  else if (key == "mlm_loss_weight") mlm_loss_weight = parse_number<double>(key, v);
  else if (key == "sequential_phases") sequential_phases = parse_bool(key, v);
  else if (key == "log_every") log_every = parse_number<int>(key, v);
  else if (key == "temperature") temperature = parse_number<double>(key, v);
  else if (key == "max_substring_len") max_substring_len = parse_number<int>(key, v);
  else if (key == "mask_substring_in_title") mask_substring_in_title = parse_bool(key, v);
  else if (key == "mask_ratio") mask_ratio = parse_number<double>(key, v);
  else if (key == "num_layers") encoder.num_layers = parse_number<int>(key, v);
  else if (key == "hidden_dim") encoder.hidden_dim = parse_number<int>(key, v);
  else if (key == "num_heads") encoder.num_heads = parse_number<int>(key, v);
  else if (key == "ffn_dim") encoder.ffn_dim = parse_number<int>(key, v);
  else if (key == "max_seq_len") encoder.max_seq_len = parse_number<int>(key, v);
  else if (key == "dropout") encoder.dropout = parse_number<double>(key, v);
  else if (key == "share_weights") towers.share_weights = parse_bool(key, v);
  else if (key == "normalize") towers.normalize = parse_bool(key, v);
  else if (key == "margin") towers.margin = parse_number<double>(key, v);
  else if (key == "reduction") towers.reduction = parse_reduction(v);
  else throw ParseError("unknown config key '" + std::string(key) + "'");
}

namespace {

std::string get(const TrainConfig& c, const std::string& key) {
  if (key == "task") return to_string(c.task);
  if (key == "tasks") return c.tasks.to_string();
  if (key == "lr") return format_double(c.lr);
  if (key == "weight_decay") return format_double(c.weight_decay);
  if (key == "batch_size") return std::to_string(c.batch_size);
  if (key == "steps") return std::to_string(c.steps);
  if (key == "warmup_steps") return std::to_string(c.warmup_steps);
  if (key == "schedule") return c.schedule == ScheduleKind::kLinear ? "linear" : "constant";
  if (key == "seed") return std::to_string(c.seed);
  if (key == "mlm_loss_weight") return format_double(c.mlm_loss_weight);
  if (key == "sequential_phases") return bool_text(c.sequential_phases);
  if (key == "log_every") return std::to_string(c.log_every);
  if (key == "temperature") return format_double(c.temperature);
  if (key == "max_substring_len") return std::to_string(c.max_substring_len);
  if (key == "mask_substring_in_title") return bool_text(c.mask_substring_in_title);
  if (key == "mask_ratio") return format_double(c.mask_ratio);
  if (key == "num_layers") return std::to_string(c.encoder.num_layers);
  if (key == "hidden_dim") return std::to_string(c.encoder.hidden_dim);
  if (key == "num_heads") return std::to_string(c.encoder.num_heads);
  if (key == "ffn_dim") return std::to_string(c.encoder.ffn_dim);
  if (key == "max_seq_len") return std::to_string(c.encoder.max_seq_len);
  if (key == "dropout") return format_double(c.encoder.dropout);
  if (key == "share_weights") return bool_text(c.towers.share_weights);
  if (key == "normalize") return bool_text(c.towers.normalize);
  if (key == "margin") return format_double(c.towers.margin);
  if (key == "reduction") return to_string(c.towers.reduction);
  throw InvalidArgument("unknown config key '" + key + "'");
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw InvalidArgument("lr must be positive");
  if (!(weight_decay >= 0.0)) throw InvalidArgument("weight_decay must be >= 0");
  if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  if (!is_intent(task) && batch_size < 2)
    throw InvalidArgument("batch_size must be >= 2 for retrieval tasks (in-batch negatives)");
  if (steps < 1) throw InvalidArgument("steps must be >= 1");
  if (warmup_steps < 0 || warmup_steps > steps) throw InvalidArgument("warmup_steps must lie in [0, steps]");
  if (!(mlm_loss_weight >= 0.0)) throw InvalidArgument("mlm_loss_weight must be >= 0");
  if (log_every < 1) throw InvalidArgument("log_every must be >= 1");
  if (!(temperature > 0.0)) throw InvalidArgument("temperature must be positive");
  if (max_substring_len < 1) throw InvalidArgument("max_substring_len must be >= 1");
  if (!(mask_ratio > 0.0 && mask_ratio < 1.0)) throw InvalidArgument("mask_ratio must lie in (0, 1)");
  if (is_pretrain(task)) {
    if (!tasks.substring && !tasks.mlm && !tasks.full) throw InvalidArgument("no pre-training task enabled");
    if (tasks.substring && tasks.full) throw InvalidArgument("rsc and fsc are alternatives; enable one");
    if (tasks.full && !is_intent(task)) throw InvalidArgument("fsc applies to intent pre-training only");
  }
  EncoderConfig e = encoder;
  e.vocab_size = kNumSpecial + 1;
  e.validate();
  towers.validate();
}

std::string TrainConfig::to_text() const {
  std::string out;
  for (const auto& k : keys()) out += k + " = " + get(*this, k) + "\n";
  return out;
}

TrainConfig TrainConfig::parse(std::string_view text) {
  TrainConfig c;
  int line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("config line " + std::to_string(line_no) + ": expected key = value");
    c.set(trim(std::string_view(line).substr(0, eq)), trim(std::string_view(line).substr(eq + 1)));
  }
  c.validate();
  return c;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) { return parse(read_file(path)); }

nlohmann::json TrainConfig::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& k : keys()) j[k] = get(*this, k);
  return j;
}

std::string TrainConfig::task_label() const {
  if (is_pretrain(task)) return tasks.label(task);
  return "finetune";
}

TrainConfig reference_config(TaskKind task) {
  TrainConfig c;
  c.task = task;
  c.lr = 1e-4;
  c.weight_decay = 0.01;
  c.batch_size = 1024;
  c.encoder.num_layers = 4;
  c.encoder.hidden_dim = 128;
  c.encoder.num_heads = 4;
  c.encoder.ffn_dim = 512;
  return c;
}

double lr_at(std::int64_t step, const TrainConfig& cfg) {
  if (step < 0) throw InvalidArgument("lr_at: negative step");
  const auto warm = static_cast<std::int64_t>(cfg.warmup_steps);
  const auto total = static_cast<std::int64_t>(cfg.steps);
  if (step < warm) return cfg.lr * static_cast<double>(step) / static_cast<double>(warm);
  if (cfg.schedule == ScheduleKind::kConstant) return cfg.lr;
  if (step >= total) return 0.0;
  return cfg.lr * (static_cast<double>(total - step) / static_cast<double>(total - warm));
}

void adamw_step(std::span<Parameter<float>* const> params, AdamState& state, double lr, double weight_decay) {
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  if (state.m.size() != params.size()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Parameter<float>& p = *params[i];
    if (p.grad.size() == 0) continue;
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols())
      throw ShapeError("adamw: gradient of " + p.name + " has shape " + to_string(shape_of(p.grad)));
    if (!p.grad.allFinite())
      throw NumericError("non-finite gradient in " + p.name + " at step " + std::to_string(state.step + 1));
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter<float>& p = *params[i];
    if (p.grad.size() == 0) continue;
    Tensor<float>& m = state.m[i];
    Tensor<float>& v = state.v[i];
    if (m.size() != p.value.size()) {
      m.setZero(p.value.rows(), p.value.cols());
      v.setZero(p.value.rows(), p.value.cols());
    }
    const double decay = p.decay ? 1.0 - lr * weight_decay : 1.0;
    float* w = p.value.data();
    const float* g = p.grad.data();
    float* mp = m.data();
    float* vp = v.data();
    for (Index k = 0; k < p.value.size(); ++k) {
      const double gk = g[k];
      const double mk = kBeta1 * mp[k] + (1.0 - kBeta1) * gk;
      const double vk = kBeta2 * vp[k] + (1.0 - kBeta2) * gk * gk;
      mp[k] = static_cast<float>(mk);
      vp[k] = static_cast<float>(vk);
      const double update = (mk / c1) / (std::sqrt(vk / c2) + kEps);
      w[k] = static_cast<float>(static_cast<double>(w[k]) * decay - lr * update);
    }
  }
}

// ---------------------------------------------------------------- checkpoints

const NamedTensor* Checkpoint::find(std::string_view name) const {
  for (const auto& t : params)
    if (t.name == name) return &t;
  return nullptr;
}

EncoderConfig Checkpoint::encoder_config() const { return EncoderConfig::from_json(config.at("encoder")); }

std::string Checkpoint::task_label() const { return config.value("task_label", std::string()); }

std::filesystem::path checkpoint_stem(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) return path / "checkpoint";
  if (path.extension() == ".json" || path.extension() == ".bin") return std::filesystem::path(path).replace_extension();
  return path;
}

namespace {

std::filesystem::path with_ext(const std::filesystem::path& stem, const char* ext) {
  return std::filesystem::path(stem.string() + ext);
}

void append(std::string& blob, nlohmann::json& entries, const std::vector<NamedTensor>& group, const char* name) {
  for (const auto& t : group) {
    entries.push_back({{"group", name},
                       {"name", t.name},
                       {"shape", {t.value.rows(), t.value.cols()}},
                       {"offset", blob.size()}});
    blob += pack_f32_le(std::span<const float>(t.value.data(), static_cast<std::size_t>(t.value.size())));
  }
}

template <typename Model>
void copy_into(Model& model, const Checkpoint& ckpt) {
  auto dst = model.parameters();
  if (dst.size() != ckpt.params.size())
    throw ShapeError("checkpoint holds " + std::to_string(ckpt.params.size()) + " tensors, model expects " +
                     std::to_string(dst.size()));
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const NamedTensor& src = ckpt.params[i];
    if (src.name != dst[i]->name)
      throw ShapeError("checkpoint tensor " + std::to_string(i) + " is '" + src.name + "', expected '" +
                       dst[i]->name + "'");
    if (shape_of(src.value) != dst[i]->shape())
      throw ShapeError("checkpoint tensor '" + src.name + "' has shape " + to_string(shape_of(src.value)) +
                       ", config implies " + to_string(dst[i]->shape()));
    dst[i]->value = src.value;
  }
}

template <typename Model>
std::vector<NamedTensor> named(const Model& model) {
  std::vector<NamedTensor> out;
  for (const auto* p : model.parameters()) out.push_back({p->name, p->value});
  return out;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto stem = checkpoint_stem(path);
  std::string blob;
  nlohmann::json entries = nlohmann::json::array();
  append(blob, entries, ckpt.params, "param");
  append(blob, entries, ckpt.adam_m, "adam_m");
  append(blob, entries, ckpt.adam_v, "adam_v");
  nlohmann::json m{{"format", "rsx-checkpoint"},
                   {"version", 1},
                   {"model_kind", ckpt.model_kind},
                   {"config", ckpt.config},
                   {"labels", ckpt.labels},
                   {"step", ckpt.step},
                   {"vocab_checksum", ckpt.vocab_checksum},
                   {"tensors", entries},
                   {"blob_bytes", blob.size()},
                   {"blob_sha1", sha1_hex(blob)}};
  write_file(with_ext(stem, ".bin"), blob);
  write_file(with_ext(stem, ".json"), m.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const auto stem = checkpoint_stem(path);
  const std::string manifest_text = read_file(with_ext(stem, ".json"));
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(manifest_text);
  } catch (const nlohmann::json::exception&) {
    throw ChecksumError("checkpoint manifest " + with_ext(stem, ".json").string() + " is truncated or corrupt");
  }
  if (m.value("format", "") != "rsx-checkpoint") throw ParseError("not a checkpoint manifest: " + stem.string());
  const std::string blob = read_file(with_ext(stem, ".bin"));
  if (blob.size() != m.at("blob_bytes").get<std::size_t>())
    throw ChecksumError("checkpoint blob " + with_ext(stem, ".bin").string() + " has " + std::to_string(blob.size()) +
                        " bytes, manifest says " + std::to_string(m.at("blob_bytes").get<std::size_t>()));
  if (sha1_hex(blob) != m.at("blob_sha1").get<std::string>())
    throw ChecksumError("checkpoint blob " + with_ext(stem, ".bin").string() + " fails its SHA-1 check");

  Checkpoint c;
  c.model_kind = m.at("model_kind").get<std::string>();
  c.config = m.at("config");
  c.labels = m.at("labels").get<std::vector<std::string>>();
  c.step = m.at("step").get<std::int64_t>();
  c.vocab_checksum = m.at("vocab_checksum").get<std::string>();
  for (const auto& e : m.at("tensors")) {
    const auto rows = e.at("shape").at(0).get<Index>();
    const auto cols = e.at("shape").at(1).get<Index>();
    const auto offset = e.at("offset").get<std::size_t>();
    const auto bytes = static_cast<std::size_t>(rows * cols) * 4;
    if (rows < 0 || cols < 0 || offset + bytes > blob.size())
      throw ShapeError("checkpoint tensor '" + e.at("name").get<std::string>() + "' lies outside the blob");
    const auto values = unpack_f32_le(std::string_view(blob).substr(offset, bytes));
    NamedTensor t{e.at("name").get<std::string>(), Eigen::Map<const Tensor<float>>(values.data(), rows, cols)};
    const auto group = e.at("group").get<std::string>();
    if (group == "param")
      c.params.push_back(std::move(t));
    else if (group == "adam_m")
      c.adam_m.push_back(std::move(t));
    else if (group == "adam_v")
      c.adam_v.push_back(std::move(t));
    else
      throw ParseError("checkpoint tensor group '" + group + "'");
  }
  // Shapes against the config snapshot.
  if (c.model_kind == "intent")
    (void)intent_model_from(c);
  else if (c.model_kind == "two_tower")
    (void)two_tower_from(c);
  else
    throw ParseError("unknown model kind '" + c.model_kind + "'");
  for (const auto* group : {&c.adam_m, &c.adam_v}) {
    if (group->empty()) continue;
    if (group->size() != c.params.size()) throw ShapeError("optimizer state does not match the parameters");
    for (std::size_t i = 0; i < group->size(); ++i)
      if (shape_of((*group)[i].value) != shape_of(c.params[i].value) || (*group)[i].name != c.params[i].name)
        throw ShapeError("optimizer state for '" + c.params[i].name + "' does not match");
  }
  return c;
}

std::string checkpoint_checksum(const std::filesystem::path& path) {
  return git_blob_hash_file(with_ext(checkpoint_stem(path), ".json"));
}

Checkpoint make_checkpoint(const IntentModel<float>& model, std::span<const std::string> labels) {
  Checkpoint c;
  c.model_kind = "intent";
  c.config = {{"encoder", model.config().to_json()}, {"num_labels", model.num_labels()}};
  c.labels.assign(labels.begin(), labels.end());
  c.params = named(model);
  return c;
}

Checkpoint make_checkpoint(const TwoTowerModel<float>& model) {
  Checkpoint c;
  c.model_kind = "two_tower";
  c.config = {{"encoder", model.encoder_config().to_json()}, {"towers", model.config().to_json()}};
  c.params = named(model);
  return c;
}

IntentModel<float> intent_model_from(const Checkpoint& ckpt) {
  if (ckpt.model_kind != "intent") throw InvalidArgument("checkpoint holds a " + ckpt.model_kind + " model");
  IntentModel<float> model(ckpt.encoder_config(), ckpt.config.at("num_labels").get<int>());
  copy_into(model, ckpt);
  return model;
}

TwoTowerModel<float> two_tower_from(const Checkpoint& ckpt) {
  if (ckpt.model_kind != "two_tower") throw InvalidArgument("checkpoint holds a " + ckpt.model_kind + " model");
  TwoTowerModel<float> model(ckpt.encoder_config(), TwoTowerConfig::from_json(ckpt.config.at("towers")));
  copy_into(model, ckpt);
  return model;
}

std::vector<std::string> transfer_parameters(const Checkpoint& src, std::span<Parameter<float>* const> dst) {
  static const std::vector<std::string> kTowers{"encoder.", "query_encoder.", "item_encoder."};
  std::vector<std::string> loaded;
  std::vector<std::string> missing;
  for (auto* p : dst) {
    std::string prefix;
    for (const auto& t : kTowers)
      if (p->name.starts_with(t)) prefix = t;
    std::vector<std::string> candidates{p->name};
    if (!prefix.empty()) {
      const std::string rest = p->name.substr(prefix.size());
      for (const auto& t : {std::string("query_encoder."), std::string("encoder."), std::string("item_encoder.")})
        candidates.push_back(t + rest);
    }
    const NamedTensor* found = nullptr;
    for (const auto& name : candidates)
      if ((found = src.find(name)) != nullptr) break;
    if (found != nullptr && shape_of(found->value) == p->shape()) {
      p->value = found->value;
      loaded.push_back(p->name);
    } else if (!prefix.empty()) {
      missing.push_back(p->name + (found ? " (shape " + to_string(shape_of(found->value)) + " vs " +
                                               to_string(p->shape()) + ")"
                                         : " (absent)"));
    }
  }
  if (!missing.empty()) {
    std::string msg = "warm start cannot fill " + std::to_string(missing.size()) + " encoder tensors:";
    for (const auto& m : missing) msg += " " + m;
    throw ShapeError(msg);
  }
  return loaded;
}

// ------------------------------------------------------------------ training

std::string loss_trace_tsv(std::span<const LossRecord> trace) {
  std::string out = "step\tlr\tloss\ttask_loss\tmlm_loss\n";
  for (const auto& r : trace)
    out += std::to_string(r.step) + "\t" + format_double(r.lr) + "\t" + format_double(r.loss) + "\t" +
           format_double(r.task_loss) + "\t" + format_double(r.mlm_loss) + "\n";
  return out;
}

std::optional<std::int64_t> divergence_step(std::span<const LossRecord> trace, int window, int span,
                                            double tolerance) {
  if (trace.size() < static_cast<std::size_t>(window)) return std::nullopt;
  std::vector<double> smooth;
  double acc = 0.0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    acc += trace[i].loss;
    if (i >= static_cast<std::size_t>(window)) acc -= trace[i - static_cast<std::size_t>(window)].loss;
    if (i + 1 >= static_cast<std::size_t>(window)) smooth.push_back(acc / window);
  }
  std::deque<std::size_t> mins;  // indices with increasing smoothed values
  for (std::size_t t = 0; t < smooth.size(); ++t) {
    while (!mins.empty() && mins.front() + static_cast<std::size_t>(span) < t) mins.pop_front();
    if (!mins.empty() && smooth[t] > smooth[mins.front()] * (1.0 + tolerance))
      return trace[t + static_cast<std::size_t>(window) - 1].step;
    while (!mins.empty() && smooth[mins.back()] >= smooth[t]) mins.pop_back();
    mins.push_back(t);
  }
  return std::nullopt;
}

TrainConfig inherit_encoder(TrainConfig cfg, const Checkpoint& ckpt) {
  const EncoderConfig e = ckpt.encoder_config();
  const double dropout = cfg.encoder.dropout;
  cfg.encoder = e;
  cfg.encoder.dropout = dropout;
  return cfg;
}

namespace {

// Draws batches from seeded epoch permutations. Examples sharing a key (the
// same item) are never placed in one batch, since each would be the other's
// false negative; a clashing example waits for the next batch.
class BatchSampler {
 public:
  BatchSampler(std::vector<int> keys, Rng rng) : keys_(std::move(keys)), rng_(rng), order_(keys_.size()) {
    std::iota(order_.begin(), order_.end(), 0);
    pos_ = order_.size();
    distinct_ = static_cast<int>(std::unordered_set<int>(keys_.begin(), keys_.end()).size());
  }

  int capacity() const { return distinct_; }

  std::vector<int> next(int size) {
    size = std::min(size, distinct_);
    std::vector<int> batch;
    std::unordered_set<int> used;
    const auto take = [&](int i) {
      if (!used.insert(keys_[static_cast<std::size_t>(i)]).second) return false;
      batch.push_back(i);
      return true;
    };
    std::deque<int> waiting;
    for (int i : deferred_)
      if (static_cast<int>(batch.size()) >= size || !take(i)) waiting.push_back(i);
    deferred_ = std::move(waiting);
    while (static_cast<int>(batch.size()) < size) {
      if (pos_ == order_.size()) {
        shuffle(std::span<int>(order_), rng_);
        pos_ = 0;
      }
      const int i = order_[pos_++];
      if (!take(i)) deferred_.push_back(i);
    }
    return batch;
  }

 private:
  std::vector<int> keys_;
  Rng rng_;
  std::vector<int> order_;
  std::size_t pos_ = 0;
  int distinct_ = 0;
  std::deque<int> deferred_;
};

std::vector<int> units_of(std::string_view text, const Vocab& vocab) {
  const auto units = split_units(text);
  return to_ids(units, vocab);
}

template <typename Key>
std::vector<int> dense_keys(const std::vector<Key>& raw) {
  std::unordered_map<Key, int> ids;
  std::vector<int> out;
  out.reserve(raw.size());
  for (const auto& k : raw) out.push_back(ids.emplace(k, static_cast<int>(ids.size())).first->second);
  return out;
}

template <typename Enc>
Var<float> mlm_loss(Graph<float>& g, Enc& enc, std::span<const MaskedSequence> masked, int vocab_size) {
  std::vector<TokenSequence> inputs;
  for (const auto& m : masked) inputs.push_back(m.input);
  const TokenBatch batch = make_batch(inputs);
  auto hidden = encode_batch(g, enc, batch);
  std::vector<int> rows, labels;
  for (std::size_t i = 0; i < masked.size(); ++i) {
    for (std::size_t k = 0; k < masked[i].positions.size(); ++k) {
      rows.push_back(static_cast<int>(static_cast<Index>(i) * batch.seq_len + masked[i].positions[k]));
      labels.push_back(masked[i].labels[k]);
    }
  }
  auto logits = mlm_logits(g, enc, hidden, rows);
  return softmax_cross_entropy(logits, Tensor<float>(one_hot_targets(labels, vocab_size).cast<float>()));
}

struct Prepared {
  std::vector<std::vector<int>> units;  // pre-training titles
  std::vector<int> categories;
  std::vector<TokenSequence> queries;   // fine-tuning
  std::vector<TokenSequence> items;
  std::vector<std::vector<IntentLabel>> labels;
  std::vector<int> keys;
};

Prepared prepare(const TrainConfig& cfg, const TrainData& data, const TrainLogger& log) {
  Prepared p;
  const Vocab& vocab = *data.vocab;
  const int max_len = cfg.encoder.max_seq_len;
  const bool intent = is_intent(cfg.task);
  if (is_pretrain(cfg.task)) {
    if (data.pretrain == nullptr) throw InvalidArgument(to_string(cfg.task) + " needs a pre-training corpus");
    std::size_t empty = 0;
    for (const auto& r : data.pretrain->records) {
      auto u = units_of(r.title, vocab);
      if (u.empty()) {
        ++empty;
        continue;
      }
      p.units.push_back(u);
      p.categories.push_back(r.category_id);
    }
    if (empty > 0 && log) log("skipped " + std::to_string(empty) + " titles with no tokens");
    if (p.units.empty()) throw InvalidArgument("pre-training corpus has no usable titles");
    // Retrieval batches must not hold two copies of one title.
    std::vector<std::string> keys;
    for (std::size_t i = 0; i < p.units.size(); ++i) {
      const auto& u = p.units[i];
      keys.push_back(intent ? std::to_string(i)
                            : std::string(reinterpret_cast<const char*>(u.data()), u.size() * sizeof(int)));
    }
    p.keys = dense_keys(keys);
  } else if (cfg.task == TaskKind::kFinetuneIntent) {
    if (data.intent == nullptr) throw InvalidArgument("finetune-intent needs an intent dataset");
    std::vector<int> keys;
    for (const auto& e : data.intent->examples) {
      p.queries.push_back(encode(e.query, vocab, max_len));
      p.labels.push_back(e.labels);
      keys.push_back(static_cast<int>(keys.size()));
    }
    p.keys = std::move(keys);
  } else {
    if (data.retrieval == nullptr) throw InvalidArgument("finetune-retrieval needs a retrieval dataset");
    std::vector<std::string> ids;
    for (const auto& pair : data.retrieval->pairs) {
      p.queries.push_back(encode(pair.query, vocab, max_len));
      p.items.push_back(encode(pair.title, vocab, max_len));
      ids.push_back(pair.item_id);
    }
    p.keys = dense_keys(ids);
  }
  if (p.keys.empty()) throw InvalidArgument("training set is empty");
  return p;
}

struct StepLosses {
  Var<float> total;
  double task = 0.0;
  double mlm = 0.0;
};

}  // namespace

TrainResult run_training(const TrainConfig& cfg_in, const TrainData& data, const Checkpoint* init,
                         const TrainLogger& log) {
  cfg_in.validate();
  if (data.vocab == nullptr) throw InvalidArgument("run_training needs a vocabulary");
  TrainConfig cfg = cfg_in;
  cfg.encoder.vocab_size = data.vocab->size();
  const bool intent = is_intent(cfg.task);
  const bool pretrain = is_pretrain(cfg.task);
  const bool use_task = !pretrain || cfg.tasks.any_task_head();
  const bool use_mlm = pretrain && cfg.tasks.mlm;

  if (init != nullptr) {
    if (init->vocab_checksum != data.vocab->checksum())
      throw InvalidArgument("warm-start checkpoint was trained with a different vocabulary");
    EncoderConfig want = init->encoder_config();
    want.dropout = cfg.encoder.dropout;
    if (!(want == cfg.encoder))
      throw ShapeError("encoder config differs from the warm-start checkpoint: " + cfg.encoder.to_json().dump() +
                       " vs " + want.to_json().dump());
  }

  std::vector<std::string> labels = data.labels;
  if (intent && labels.empty()) {
    if (pretrain && data.pretrain != nullptr) labels = data.pretrain->labels.names;
    if (!pretrain && data.intent != nullptr) labels = data.intent->labels.names;
  }
  if (intent && labels.empty()) throw InvalidArgument("intent training needs a non-empty label space");

  Prepared prep = prepare(cfg, data, log);
  const Rng root(cfg.seed);
  Rng init_rng = root.split(1);
  BatchSampler sampler(prep.keys, root.split(2));
  Rng aug_rng = root.split(3);
  Rng mlm_rng = root.split(4);
  Rng drop_rng = root.split(5);

  if (!intent && sampler.capacity() < 2)
    throw InvalidArgument("retrieval training needs at least 2 distinct items");

  std::optional<IntentModel<float>> im;
  std::optional<TwoTowerModel<float>> tm;
  if (intent) {
    im.emplace(cfg.encoder, static_cast<int>(labels.size()));
    im->init(init_rng);
  } else {
    tm.emplace(cfg.encoder, cfg.towers);
    tm->init(init_rng);
  }
  std::vector<Parameter<float>*> params = intent ? im->parameters() : tm->parameters();

  TrainResult result;
  if (init != nullptr) {
    result.loaded_parameters = transfer_parameters(*init, params);
    result.init_label = init->task_label();
    if (log) {
      std::size_t encoder_loaded = 0;
      for (const auto& n : result.loaded_parameters) encoder_loaded += n.find("encoder.") != std::string::npos;
      log("warm start from " + (result.init_label.empty() ? std::string("checkpoint") : result.init_label) +
          ": loaded " + std::to_string(result.loaded_parameters.size()) + " of " + std::to_string(params.size()) +
          " tensors (" + std::to_string(encoder_loaded) + " encoder)");
    }
  }

  SamplerConfig scfg;
  scfg.max_substring_len = cfg.max_substring_len;
  scfg.mode = cfg.tasks.full ? SampleMode::kFull : SampleMode::kSubstring;
  scfg.mask_substring_in_title = cfg.mask_substring_in_title;
  MlmConfig mcfg;
  mcfg.mask_ratio = cfg.mask_ratio;
  const int vocab_size = data.vocab->size();
  const int max_len = cfg.encoder.max_seq_len;

  AdamState adam;
  for (int step = 0; step < cfg.steps; ++step) {
    bool step_task = use_task;
    bool step_mlm = use_mlm;
    if (cfg.sequential_phases && use_task && use_mlm) {
      step_task = step < cfg.steps / 2;
      step_mlm = !step_task;
    }
    const std::vector<int> idx = sampler.next(cfg.batch_size);
    for (auto* p : params) p->grad.resize(0, 0);
    Graph<float> g(Mode::kTrain, drop_rng.next_u64());
    StepLosses losses;
    Var<float> task_var, mlm_var;

    if (step_task) {
      if (pretrain && intent) {
        std::vector<TokenSequence> qs;
        std::vector<int> cats;
        for (int i : idx) {
          auto draw = make_classification_example<int>(prep.units[static_cast<std::size_t>(i)],
                                                       prep.categories[static_cast<std::size_t>(i)], scfg, aug_rng);
          qs.push_back(make_sequence(draw.query, max_len));
          cats.push_back(draw.category_id);
        }
        task_var = rsc_pretrain_loss(intent_logits(g, *im, make_batch(qs)), std::span<const int>(cats));
      } else if (pretrain) {
        std::vector<TokenSequence> qs, ts;
        for (int i : idx) {
          auto draw = make_retrieval_example<int>(prep.units[static_cast<std::size_t>(i)], scfg, aug_rng, kMask);
          qs.push_back(make_sequence(draw.query, max_len));
          ts.push_back(make_sequence(draw.title, max_len));
        }
        task_var = in_batch_triplet_loss(embed_batch(g, *tm, Tower::kQuery, make_batch(qs)),
                                         embed_batch(g, *tm, Tower::kItem, make_batch(ts)), cfg.towers.margin,
                                         cfg.towers.reduction);
      } else if (intent) {
        std::vector<TokenSequence> qs;
        std::vector<std::vector<IntentLabel>> ls;
        for (int i : idx) {
          qs.push_back(prep.queries[static_cast<std::size_t>(i)]);
          ls.push_back(prep.labels[static_cast<std::size_t>(i)]);
        }
        task_var = finetune_multilabel_loss(intent_logits(g, *im, make_batch(qs)),
                                            std::span<const std::vector<IntentLabel>>(ls), cfg.temperature);
      } else {
        std::vector<TokenSequence> qs, ts;
        for (int i : idx) {
          qs.push_back(prep.queries[static_cast<std::size_t>(i)]);
          ts.push_back(prep.items[static_cast<std::size_t>(i)]);
        }
        task_var = in_batch_triplet_loss(embed_batch(g, *tm, Tower::kQuery, make_batch(qs)),
                                         embed_batch(g, *tm, Tower::kItem, make_batch(ts)), cfg.towers.margin,
                                         cfg.towers.reduction);
      }
      losses.task = static_cast<double>(task_var.value()(0, 0));
    }
    if (step_mlm) {
      std::vector<MaskedSequence> masked;
      for (int i : idx)
        masked.push_back(
            apply_mlm_mask(make_sequence(prep.units[static_cast<std::size_t>(i)], max_len), mcfg, vocab_size, mlm_rng));
      if (intent) {
        mlm_var = mlm_loss(g, im->encoder, masked, vocab_size);
      } else if (cfg.towers.share_weights) {
        mlm_var = mlm_loss(g, tm->query_encoder, masked, vocab_size);
      } else {
        mlm_var = scale(mlm_loss(g, tm->query_encoder, masked, vocab_size) +
                            mlm_loss(g, tm->item_encoder, masked, vocab_size),
                        0.5);
      }
      losses.mlm = static_cast<double>(mlm_var.value()(0, 0));
    }
    if (step_task && step_mlm)
      losses.total = task_var + scale(mlm_var, cfg.mlm_loss_weight);
    else
      losses.total = step_task ? task_var : mlm_var;

    const double total = static_cast<double>(losses.total.value()(0, 0));
    if (!std::isfinite(total))
      throw NumericError("non-finite loss at step " + std::to_string(step + 1) + " (task " +
                         std::to_string(losses.task) + ", mlm " + std::to_string(losses.mlm) + ")");
    g.backward(losses.total);
    const double lr = lr_at(step, cfg);
    adamw_step(params, adam, lr, cfg.weight_decay);
    result.trace.push_back({step + 1, lr, total, losses.task, losses.mlm});
    if (log && ((step + 1) % cfg.log_every == 0 || step + 1 == cfg.steps)) {
      std::ostringstream os;
      os << "step " << step + 1 << "/" << cfg.steps << " lr " << lr << " loss " << total;
      if (step_task && step_mlm) os << " (task " << losses.task << ", mlm " << losses.mlm << ")";
      log(os.str());
    }
  }
  if (log) {
    if (auto bad = divergence_step(result.trace)) log("warning: smoothed loss rose by more than 10% at step " + std::to_string(*bad));
  }

  Checkpoint& c = result.checkpoint;
  c = intent ? make_checkpoint(*im, labels) : make_checkpoint(*tm);
  c.config["train"] = cfg.to_json();
  c.config["task_label"] = pretrain ? cfg.task_label()
                                    : (result.init_label.empty() ? std::string("No pre-train") : result.init_label);
  c.step = adam.step;
  c.vocab_checksum = data.vocab->checksum();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor<float> zero = Tensor<float>::Zero(params[i]->value.rows(), params[i]->value.cols());
    const bool has = i < adam.m.size() && adam.m[i].size() == params[i]->value.size();
    c.adam_m.push_back({params[i]->name, has ? adam.m[i] : zero});
    c.adam_v.push_back({params[i]->name, has ? adam.v[i] : zero});
  }
  return result;
}

}  // namespace rsx
