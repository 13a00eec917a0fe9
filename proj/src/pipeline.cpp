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

#include "rsx/pipeline.hpp"

#include <charconv>
#include <functional>

#include "rsx/hash.hpp"

namespace rsx {

namespace {

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.push_back(sep);
    out += parts[i];
  }
  return out;
}

std::vector<std::string> split_list(std::string_view field) {
  std::vector<std::string> out;
  if (field.empty()) return out;
  for (auto& s : split(field, ',')) {
    std::string t = trim(s);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out = split(text, '\n');
  if (!out.empty() && out.back().empty()) out.pop_back();
  for (auto& l : out)
    if (!l.empty() && l.back() == '\r') l.pop_back();
  return out;
}

void check_alignment(std::size_t n_pred, const EvalDataset& truth, const std::function<const std::string&(std::size_t)>& query) {
  if (n_pred != truth.queries.size())
    throw InvalidArgument("predictions cover " + std::to_string(n_pred) + " queries, truth has " +
                          std::to_string(truth.queries.size()));
  for (std::size_t i = 0; i < n_pred; ++i)
    if (query(i) != truth.queries[i].query)
      throw InvalidArgument("prediction row " + std::to_string(i + 1) + " is for '" + query(i) + "', truth row is '" +
                            truth.queries[i].query + "'");
}

}  // namespace

void write_run(const std::filesystem::path& dir, const TrainConfig& cfg, const TrainResult& result, const Vocab& vocab,
               const RunInputs& inputs, const nlohmann::json& extra) {
  std::filesystem::create_directories(dir);
  const std::string config_text = cfg.to_text();
  write_file(dir / "config.txt", config_text);
  write_file(dir / "loss_trace.tsv", loss_trace_tsv(result.trace));
  save_checkpoint(result.checkpoint, dir / "checkpoint");
  vocab.save(dir / "vocab.tsv");
  if (result.checkpoint.model_kind == "intent") {
    std::string labels;
    for (std::size_t i = 0; i < result.checkpoint.labels.size(); ++i)
      labels += std::to_string(i) + "\t" + result.checkpoint.labels[i] + "\n";
    write_file(dir / "labels.tsv", labels);
  }
  nlohmann::json meta = extra;
  meta["seed"] = cfg.seed;
  meta["task"] = to_string(cfg.task);
  meta["task_label"] = result.checkpoint.task_label();
  if (!result.init_label.empty()) meta["pretrain_label"] = result.init_label;
  meta["steps"] = cfg.steps;
  meta["final_loss"] = result.trace.empty() ? 0.0 : result.trace.back().loss;
  meta["config"] = {{"path", "config.txt"}, {"git_blob", git_blob_hash(config_text)}};
  nlohmann::json in = nlohmann::json::object();
  for (const auto& [role, path] : inputs)
    in[role] = {{"path", path.string()}, {"git_blob", git_blob_hash_file(path)}};
  meta["inputs"] = in;
  meta["vocab_checksum"] = vocab.checksum();
  meta["checkpoint"] = {{"path", "checkpoint.json"}, {"git_blob", checkpoint_checksum(dir / "checkpoint")}};
  if (!result.loaded_parameters.empty()) meta["loaded_parameters"] = result.loaded_parameters;
  write_file(dir / "run_meta.json", meta.dump(2) + "\n");
}

LoadedRun load_run(const std::filesystem::path& path) {
  LoadedRun run;
  const auto stem = checkpoint_stem(path);
  run.dir = stem.has_parent_path() ? stem.parent_path() : std::filesystem::path(".");
  run.checkpoint = load_checkpoint(stem);
  run.vocab = Vocab::load(run.dir / "vocab.tsv");
  if (run.vocab.checksum() != run.checkpoint.vocab_checksum)
    throw ChecksumError("vocab.tsv in " + run.dir.string() + " does not match the checkpoint");
  return run;
}

std::vector<IntentPrediction> predict_intent(const Checkpoint& ckpt, const Vocab& vocab,
                                             const std::vector<std::string>& queries, const PredictionRule& rule) {
  const IntentModel<float> model = intent_model_from(ckpt);
  double temperature = 1.0;
  if (ckpt.config.contains("train") && ckpt.config["train"].value("task", "") == "finetune-intent")
    temperature = std::stod(ckpt.config["train"].at("temperature").get<std::string>());
  const int max_len = model.config().max_seq_len;
  std::vector<IntentPrediction> out;
  constexpr std::size_t kChunk = 64;
  for (std::size_t start = 0; start < queries.size(); start += kChunk) {
    const std::size_t end = std::min(queries.size(), start + kChunk);
    std::vector<TokenSequence> seqs;
    for (std::size_t i = start; i < end; ++i) seqs.push_back(encode(queries[i], vocab, max_len));
    Graph<float> g(Mode::kEval);
    const Tensor<float> z = intent_logits(g, model, make_batch(seqs)).value();
    for (Index r = 0; r < z.rows(); ++r) {
      std::vector<double> logits(static_cast<std::size_t>(z.cols()));
      for (Index c = 0; c < z.cols(); ++c) logits[static_cast<std::size_t>(c)] = z(r, c);
      const CategoryDistribution dist = softmax(logits, temperature);
      IntentPrediction p;
      p.query = queries[start + static_cast<std::size_t>(r)];
      for (int c : predict_categories(dist, rule)) p.predicted.push_back(ckpt.labels.at(static_cast<std::size_t>(c)));
      for (int c : rank_categories(dist)) p.ranked.push_back(ckpt.labels.at(static_cast<std::size_t>(c)));
      out.push_back(std::move(p));
    }
  }
  return out;
}

std::string intent_predictions_tsv(const std::vector<IntentPrediction>& preds, std::size_t ranked_depth) {
  std::string out;
  for (const auto& p : preds) {
    std::vector<std::string> ranked(p.ranked.begin(), p.ranked.begin() + static_cast<std::ptrdiff_t>(std::min(ranked_depth, p.ranked.size())));
    out += p.query + "\t" + join(p.predicted, ',') + "\t" + join(ranked, ',') + "\n";
  }
  return out;
}

std::vector<IntentPrediction> load_intent_predictions(const std::filesystem::path& path) {
  std::vector<IntentPrediction> out;
  std::size_t line_no = 0;
  for (const auto& line : lines_of(read_file(path))) {
    ++line_no;
    const auto fields = split(line, '\t');
    if (fields.size() < 2 || fields.size() > 3)
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected query, predicted[, ranked]");
    IntentPrediction p;
    p.query = fields[0];
    p.predicted = split_list(fields[1]);
    p.ranked = fields.size() == 3 ? split_list(fields[2]) : p.predicted;
    out.push_back(std::move(p));
  }
  return out;
}

EvalReport evaluate_intent(const std::vector<IntentPrediction>& preds, const EvalDataset& truth,
                           const IntentEvalOptions& opts) {
  check_alignment(preds.size(), truth, [&](std::size_t i) -> const std::string& { return preds[i].query; });
  std::vector<std::string> queries;
  std::vector<std::vector<std::string>> predicted, ranked, gold;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    queries.push_back(preds[i].query);
    predicted.push_back(preds[i].predicted);
    ranked.push_back(preds[i].ranked);
    gold.push_back(truth.queries[i].relevant);
  }
  return intent_report(queries, predicted, ranked, gold, opts);
}

std::vector<RetrievalResult> run_retrieval(const TwoTowerModel<float>& model, const Vocab& vocab,
                                           const ItemIndex& index, const std::vector<std::string>& queries, int k) {
  if (index.dim() != model.encoder_config().hidden_dim)
    throw ShapeError("index dimension " + std::to_string(index.dim()) + " does not match the model");
  if (index.normalize() != model.config().normalize)
    throw InvalidArgument("index normalization flag does not match the model");
  std::vector<RetrievalResult> out;
  for (const auto& q : queries) {
    const auto e = embed_text(model, Tower::kQuery, q, vocab);
    out.push_back({q, search_topk(index, e, k)});
  }
  return out;
}

std::string retrieval_results_tsv(const std::vector<RetrievalResult>& results) {
  std::string out;
  for (const auto& r : results) {
    std::vector<std::string> ids, scores;
    for (const auto& h : r.hits) {
      ids.push_back(h.item_id);
      char buf[32];
      auto res = std::to_chars(buf, buf + sizeof(buf), h.score);
      scores.emplace_back(buf, res.ptr);
    }
    out += r.query + "\t" + join(ids, ',') + "\t" + join(scores, ',') + "\n";
  }
  return out;
}

std::vector<RetrievalResult> load_retrieval_results(const std::filesystem::path& path) {
  std::vector<RetrievalResult> out;
  std::size_t line_no = 0;
  for (const auto& line : lines_of(read_file(path))) {
    ++line_no;
    const auto fields = split(line, '\t');
    if (fields.size() < 2 || fields.size() > 3)
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected query, ids[, scores]");
    RetrievalResult r;
    r.query = fields[0];
    const auto ids = split_list(fields[1]);
    const auto scores = fields.size() == 3 ? split_list(fields[2]) : std::vector<std::string>{};
    for (std::size_t i = 0; i < ids.size(); ++i) {
      SearchHit h;
      h.item_id = ids[i];
      h.row = i;
      if (i < scores.size()) h.score = std::stod(scores[i]);
      r.hits.push_back(std::move(h));
    }
    out.push_back(std::move(r));
  }
  return out;
}

EvalReport evaluate_retrieval(const std::vector<RetrievalResult>& results, const EvalDataset& truth,
                              const std::vector<int>& ks) {
  check_alignment(results.size(), truth, [&](std::size_t i) -> const std::string& { return results[i].query; });
  std::vector<std::string> queries;
  std::vector<std::vector<std::string>> retrieved, relevant;
  for (std::size_t i = 0; i < results.size(); ++i) {
    queries.push_back(results[i].query);
    std::vector<std::string> ids;
    for (const auto& h : results[i].hits) ids.push_back(h.item_id);
    retrieved.push_back(std::move(ids));
    relevant.push_back(truth.queries[i].relevant);
  }
  return retrieval_report(queries, retrieved, relevant, ks);
}

}  // namespace rsx
