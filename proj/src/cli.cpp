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

#include "rsx/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "rsx/augment.hpp"
#include "rsx/hash.hpp"
#include "rsx/pipeline.hpp"
#include "rsx/synth.hpp"

namespace rsx {
namespace {

namespace fs = std::filesystem;

std::vector<int> parse_ks(const std::string& text) {
  std::vector<int> ks;
  for (const auto& part : split(text, ',')) {
    const std::string t = trim(part);
    if (t.empty()) continue;
    std::size_t used = 0;
    int k = 0;
    try {
      k = std::stoi(t, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != t.size() || k < 1) throw InvalidArgument("bad cutoff '" + t + "' in '" + text + "'");
    ks.push_back(k);
  }
  if (ks.empty()) throw InvalidArgument("empty cutoff list");
  return ks;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\t', ' ');
  return s;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::vector<std::string> out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!trim(line).empty()) out.push_back(line);
  }
  return out;
}

std::string join(const std::vector<float>& v) {
  std::ostringstream os;
  os << std::setprecision(9);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

Tower parse_tower(const std::string& s) {
  if (s == "query") return Tower::kQuery;
  if (s == "item") return Tower::kItem;
  throw InvalidArgument("tower must be 'query' or 'item', got '" + s + "'");
}

// Options shared by pretrain and finetune.
struct TrainFlags {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<int> steps;
  std::string vocab;
  std::string out;
  std::string init;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", config, "key = value training config file");
    cmd->add_option("--set", sets, "override one config key, KEY=VALUE (repeatable)");
    cmd->add_option("--seed", seed, "seed for every random stream");
    cmd->add_option("--steps", steps, "optimizer steps");
    cmd->add_option("--vocab", vocab, "vocab.tsv (defaults to the --init run's vocab)");
    cmd->add_option("--out", out, "run directory to write")->required();
  }

  TrainConfig resolve(TaskKind task, const Checkpoint* init) const {
    TrainConfig cfg = config.empty() ? TrainConfig{} : TrainConfig::load(config);
    if (init != nullptr) cfg = inherit_encoder(cfg, *init);
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw InvalidArgument("--set expects KEY=VALUE, got '" + kv + "'");
      cfg.set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
    }
    cfg.task = task;
    if (seed) cfg.seed = *seed;
    if (steps) {
      cfg.steps = *steps;
      if (cfg.warmup_steps > cfg.steps) cfg.warmup_steps = cfg.steps / 10;
    }
    cfg.validate();
    return cfg;
  }
};

struct Context {
  std::ostream& out;
  std::ostream& err;
  std::vector<std::string> argv;

  void log(const std::string& msg) const { err << "[rsx] " << msg << "\n"; }
  TrainLogger logger() const {
    return [this](const std::string& m) { log(m); };
  }
  nlohmann::json meta() const { return {{"argv", argv}}; }
};

void print_report(const Context& ctx, const EvalReport& report, bool per_query, const std::string& save) {
  const std::string text = report.to_json(per_query).dump(2) + "\n";
  if (!save.empty()) write_file(save, text);
  ctx.out << text;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Context ctx{out, err, args};
  CLI::App app{"rsx: substring pre-training, intent detection and two-tower retrieval", "rsx"};
  app.require_subcommand(1, 1);
  app.allow_extras(false);
  app.set_help_all_flag("--help-all", "print the flag reference of every subcommand");
  std::function<void()> action;

  // synth
  auto* synth = app.add_subcommand("synth", "write a synthetic corpus (all six dataset files)");
  SynthConfig sc;
  std::string synth_out;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--seed", sc.seed, "generator seed");
  synth->add_option("--titles", sc.num_titles, "number of catalog titles");
  synth->add_option("--categories", sc.num_categories, "number of categories");
  synth->add_option("--intent-train", sc.intent_train, "labeled intent queries");
  synth->add_option("--intent-eval", sc.intent_eval, "held-out intent queries");
  synth->add_option("--retrieval-train", sc.retrieval_train, "retrieval fine-tuning pairs");
  synth->add_option("--retrieval-eval", sc.retrieval_eval, "held-out retrieval queries");
  synth->callback([&] {
    action = [&] {
      generate_synthetic(sc).write(synth_out);
      ctx.log("wrote synthetic corpus to " + synth_out);
    };
  });

  // build-vocab
  auto* bv = app.add_subcommand("build-vocab", "build vocab.tsv from corpus text");
  std::vector<std::string> bv_pretrain, bv_intent, bv_retrieval, bv_items, bv_text;
  int min_freq = 1;
  std::string bv_out;
  bv->add_option("--pretrain", bv_pretrain, "pretrain.tsv (titles)");
  bv->add_option("--intent", bv_intent, "intent_finetune.tsv (queries)");
  bv->add_option("--retrieval", bv_retrieval, "retrieval_finetune.tsv (queries and titles)");
  bv->add_option("--items", bv_items, "items.tsv (titles)");
  bv->add_option("--text", bv_text, "plain text, one document per line");
  bv->add_option("--min-freq", min_freq, "minimum unit frequency")->check(CLI::PositiveNumber);
  bv->add_option("--out", bv_out, "vocab.tsv to write (stdout when omitted)");
  bv->callback([&] {
    action = [&] {
      std::vector<std::string> texts;
      LabelMap scratch;
      for (const auto& p : bv_pretrain)
        for (auto& r : load_pretrain_corpus(p, scratch).records) texts.push_back(std::move(r.title));
      for (const auto& p : bv_intent)
        for (auto& e : load_intent_dataset(p, scratch).examples) texts.push_back(std::move(e.query));
      for (const auto& p : bv_retrieval)
        for (auto& r : load_retrieval_dataset(p).pairs) {
          texts.push_back(std::move(r.query));
          texts.push_back(std::move(r.title));
        }
      for (const auto& p : bv_items)
        for (auto& it : load_items(p)) texts.push_back(std::move(it.title));
      for (const auto& p : bv_text)
        for (auto& line : read_lines(p)) texts.push_back(std::move(line));
      const Vocab vocab = build_vocab(texts, min_freq);
      ctx.log("vocab size " + std::to_string(vocab.size()) + " from " + std::to_string(texts.size()) + " texts");
      if (bv_out.empty())
        ctx.out << vocab.to_tsv();
      else
        vocab.save(bv_out);
    };
  });

  // sample
  auto* sample = app.add_subcommand("sample", "dump generated pre-training examples as TSV");
  std::string sample_input, sample_mode = "substring", sample_vocab;
  int sample_n = 10;
  std::uint64_t sample_seed = 0;
  SamplerConfig sampler;
  MlmConfig mlm;
  sample->add_option("--input", sample_input, "pretrain.tsv")->required();
  sample->add_option("--mode", sample_mode, "substring | full | retrieval | mlm")
      ->check(CLI::IsMember({"substring", "full", "retrieval", "mlm"}));
  sample->add_option("--n", sample_n, "number of examples")->check(CLI::NonNegativeNumber);
  sample->add_option("--seed", sample_seed, "sampler seed");
  sample->add_option("--max-len", sampler.max_substring_len, "maximum substring length in units");
  sample->add_flag("--mask-title", sampler.mask_substring_in_title, "mask the sampled span on the title side");
  sample->add_option("--mask-ratio", mlm.mask_ratio, "MLM mask ratio");
  sample->add_option("--vocab", sample_vocab, "vocab.tsv (mlm mode)");
  sample->callback([&] {
    action = [&] {
      LabelMap labels;
      const auto corpus = load_pretrain_corpus(sample_input, labels);
      Rng root(sample_seed);
      Rng pick = root.split(1), draw = root.split(2);
      sampler.mode = sample_mode == "full" ? SampleMode::kFull : SampleMode::kSubstring;
      std::optional<Vocab> vocab;
      if (sample_mode == "mlm") {
        if (sample_vocab.empty()) throw InvalidArgument("sample --mode mlm needs --vocab");
        vocab = Vocab::load(sample_vocab);
      }
      for (int i = 0; i < sample_n; ++i) {
        const auto& rec = corpus.records[pick.uniform_below(corpus.records.size())];
        if (sample_mode == "retrieval") {
          const auto ex = make_retrieval_example(rec, sampler, draw);
          ctx.out << ex.query << '\t' << ex.title << '\t' << ex.span.start << '\t' << ex.span.length << '\n';
        } else if (sample_mode == "mlm") {
          const auto seq = encode(rec.title, *vocab, 64);
          if (seq.non_special_count() == 0) continue;
          const auto m = apply_mlm_mask(seq, mlm, vocab->size(), draw);
          std::string pos;
          for (std::size_t j = 0; j < m.positions.size(); ++j) pos += (j ? "," : "") + std::to_string(m.positions[j]);
          ctx.out << decode(m.input.ids, *vocab) << '\t' << rec.title << '\t' << pos << '\t' << m.positions.size()
                  << '\n';
        } else {
          const auto ex = make_classification_example(rec, sampler, draw);
          ctx.out << ex.query << '\t' << labels.name(ex.category_id) << '\t' << ex.span.start << '\t'
                  << ex.span.length << '\n';
        }
      }
    };
  });

  // pretrain
  auto* pretrain = app.add_subcommand("pretrain", "pre-train an encoder on synthetic substring tasks");
  TrainFlags pf;
  std::string pre_data, pre_tasks = "rsc,mlm", pre_target = "intent";
  pf.add_to(pretrain);
  pretrain->add_option("--data", pre_data, "pretrain.tsv")->required();
  pretrain->add_option("--tasks", pre_tasks, "objectives: rsc|rsr|fsc and/or mlm, comma separated");
  pretrain->add_option("--target", pre_target, "intent (RSC/FSC heads) or retrieval (RSR two towers)")
      ->check(CLI::IsMember({"intent", "retrieval"}));
  pretrain->callback([&] {
    action = [&] {
      const TaskKind task = pre_target == "intent" ? TaskKind::kPretrainIntent : TaskKind::kPretrainRetrieval;
      TrainConfig cfg = pf.resolve(task, nullptr);
      cfg.tasks = PretrainTasks::parse(pre_tasks);
      cfg.validate();
      if (pf.vocab.empty()) throw InvalidArgument("pretrain needs --vocab");
      const Vocab vocab = Vocab::load(pf.vocab);
      LabelMap labels;
      const auto corpus = load_pretrain_corpus(pre_data, labels);
      ctx.log("loaded " + std::to_string(corpus.records.size()) + " titles, " + std::to_string(labels.size()) +
              " categories, " + std::to_string(corpus.stats.skipped) + " rows skipped");
      TrainData data;
      data.vocab = &vocab;
      data.pretrain = &corpus;
      data.labels = labels.space().names;
      const TrainResult result = run_training(cfg, data, nullptr, ctx.logger());
      write_run(pf.out, cfg, result, vocab, {{"pretrain", pre_data}, {"vocab", pf.vocab}}, ctx.meta());
      ctx.log("wrote " + pf.out);
    };
  });

  // finetune
  auto* finetune = app.add_subcommand("finetune", "fine-tune for intent detection or retrieval");
  TrainFlags ff;
  std::string ft_task = "intent", ft_data;
  ff.add_to(finetune);
  finetune->add_option("--task", ft_task, "intent or retrieval")->check(CLI::IsMember({"intent", "retrieval"}));
  finetune->add_option("--data", ft_data, "intent_finetune.tsv or retrieval_finetune.tsv")->required();
  finetune->add_option("--init", ff.init, "pre-trained run directory or checkpoint to start from");
  finetune->callback([&] {
    action = [&] {
      std::optional<LoadedRun> init;
      if (!ff.init.empty()) init = load_run(ff.init);
      const TaskKind task = ft_task == "intent" ? TaskKind::kFinetuneIntent : TaskKind::kFinetuneRetrieval;
      const TrainConfig cfg = ff.resolve(task, init ? &init->checkpoint : nullptr);
      Vocab vocab;
      if (!ff.vocab.empty())
        vocab = Vocab::load(ff.vocab);
      else if (init)
        vocab = init->vocab;
      else
        throw InvalidArgument("finetune needs --vocab or --init");
      RunInputs inputs{{"finetune", ft_data}};
      if (!ff.vocab.empty()) inputs["vocab"] = ff.vocab;
      if (init) inputs["init_checkpoint"] = checkpoint_stem(ff.init).string() + ".json";
      TrainData data;
      data.vocab = &vocab;
      IntentDataset intent;
      RetrievalDataset retrieval;
      if (task == TaskKind::kFinetuneIntent) {
        // Category ids keep the pre-trained label order; new ones are appended.
        LabelMap labels;
        if (init)
          for (const auto& name : init->checkpoint.labels) labels.intern(name);
        intent = load_intent_dataset(ft_data, labels);
        data.intent = &intent;
        data.labels = labels.space().names;
        ctx.log("loaded " + std::to_string(intent.examples.size()) + " intent examples over " +
                std::to_string(labels.size()) + " labels");
      } else {
        retrieval = load_retrieval_dataset(ft_data);
        data.retrieval = &retrieval;
        ctx.log("loaded " + std::to_string(retrieval.pairs.size()) + " pairs (" +
                std::to_string(retrieval.stats.duplicates) + " duplicates dropped)");
      }
      const TrainResult result = run_training(cfg, data, init ? &init->checkpoint : nullptr, ctx.logger());
      write_run(ff.out, cfg, result, vocab, inputs, ctx.meta());
      ctx.log("wrote " + ff.out);
    };
  });

  // eval-intent
  auto* ei = app.add_subcommand("eval-intent", "score intent predictions against eval_intent.tsv");
  std::string ei_pred, ei_truth, ei_model, ei_rule = "top:1", ei_k = "1,3,5", ei_ndcg = "3,5", ei_pred_out, ei_save;
  bool ei_per_query = false;
  ei->add_option("--truth", ei_truth, "eval_intent.tsv")->required();
  auto* ei_pred_opt = ei->add_option("--pred", ei_pred, "predictions TSV: query, predicted[, ranked]");
  ei->add_option("--model", ei_model, "intent run to predict with")->excludes(ei_pred_opt);
  ei->add_option("--rule", ei_rule, "prediction rule, top:K or threshold:TAU");
  ei->add_option("--k", ei_k, "P@k/R@k cutoffs, comma separated");
  ei->add_option("--ndcg-k", ei_ndcg, "NDCG cutoffs, comma separated");
  ei->add_option("--pred-out", ei_pred_out, "write the model's predictions here");
  ei->add_option("--save", ei_save, "also write the report JSON here");
  ei->add_flag("--per-query", ei_per_query, "include per-query rows");
  ei->callback([&] {
    action = [&] {
      const EvalDataset truth = load_eval_dataset(ei_truth);
      std::vector<IntentPrediction> preds;
      if (!ei_model.empty()) {
        const LoadedRun run = load_run(ei_model);
        std::vector<std::string> queries;
        for (const auto& q : truth.queries) queries.push_back(q.query);
        preds = predict_intent(run.checkpoint, run.vocab, queries, PredictionRule::parse(ei_rule));
        if (!ei_pred_out.empty()) write_file(ei_pred_out, intent_predictions_tsv(preds));
      } else if (!ei_pred.empty()) {
        preds = load_intent_predictions(ei_pred);
      } else {
        throw InvalidArgument("eval-intent needs --pred or --model");
      }
      IntentEvalOptions opts;
      opts.precision_ks = parse_ks(ei_k);
      opts.ndcg_ks = parse_ks(ei_ndcg);
      print_report(ctx, evaluate_intent(preds, truth, opts), ei_per_query, ei_save);
    };
  });

  // eval-retrieval
  auto* er = app.add_subcommand("eval-retrieval", "score retrieval results against eval_retrieval.tsv");
  std::string er_results, er_truth, er_model, er_index, er_k = "1,5,10", er_results_out, er_save;
  bool er_per_query = false;
  er->add_option("--truth", er_truth, "eval_retrieval.tsv")->required();
  auto* er_res_opt = er->add_option("--results", er_results, "results TSV: query, ids, scores");
  er->add_option("--model", er_model, "two-tower run to search with")->excludes(er_res_opt);
  er->add_option("--index", er_index, "index directory built from the same model");
  er->add_option("--k", er_k, "P@k/R@k cutoffs, comma separated");
  er->add_option("--results-out", er_results_out, "write the search results here");
  er->add_option("--save", er_save, "also write the report JSON here");
  er->add_flag("--per-query", er_per_query, "include per-query rows");
  er->callback([&] {
    action = [&] {
      const EvalDataset truth = load_eval_dataset(er_truth);
      const auto ks = parse_ks(er_k);
      std::vector<RetrievalResult> results;
      if (!er_model.empty()) {
        if (er_index.empty()) throw InvalidArgument("eval-retrieval --model needs --index");
        const LoadedRun run = load_run(er_model);
        const ItemIndex index = load_index(er_index);
        if (index.model_checksum() != checkpoint_checksum(checkpoint_stem(er_model)))
          throw ChecksumError("index " + er_index + " was built from a different checkpoint");
        std::vector<std::string> queries;
        for (const auto& q : truth.queries) queries.push_back(q.query);
        results = run_retrieval(two_tower_from(run.checkpoint), run.vocab, index, queries,
                                *std::max_element(ks.begin(), ks.end()));
        if (!er_results_out.empty()) write_file(er_results_out, retrieval_results_tsv(results));
      } else if (!er_results.empty()) {
        results = load_retrieval_results(er_results);
      } else {
        throw InvalidArgument("eval-retrieval needs --results or --model");
      }
      print_report(ctx, evaluate_retrieval(results, truth, ks), er_per_query, er_save);
    };
  });

  // embed
  auto* embed = app.add_subcommand("embed", "print pooled embeddings as TSV: text, comma separated floats");
  std::string em_model, em_tower = "query", em_input;
  std::vector<std::string> em_text;
  embed->add_option("--model", em_model, "run directory or checkpoint")->required();
  embed->add_option("--tower", em_tower, "query or item (two-tower models)");
  embed->add_option("--text", em_text, "text to embed (repeatable)");
  embed->add_option("--input", em_input, "file with one text per line");
  embed->callback([&] {
    action = [&] {
      const LoadedRun run = load_run(em_model);
      std::vector<std::string> texts = em_text;
      if (!em_input.empty())
        for (auto& line : read_lines(em_input)) texts.push_back(std::move(line));
      if (texts.empty()) throw InvalidArgument("embed needs --text or --input");
      if (run.checkpoint.model_kind == "two_tower") {
        const auto model = two_tower_from(run.checkpoint);
        const Tower tower = parse_tower(em_tower);
        for (const auto& t : texts) ctx.out << t << '\t' << join(embed_text(model, tower, t, run.vocab)) << '\n';
      } else {
        const auto model = intent_model_from(run.checkpoint);
        const int len = model.config().max_seq_len;
        for (const auto& t : texts)
          ctx.out << t << '\t' << join(pool_first(encode_tokens(model.encoder, encode(t, run.vocab, len)))) << '\n';
      }
    };
  });

  // index
  auto* index_cmd = app.add_subcommand("index", "embed a catalog with the item tower and save an exact index");
  std::string ix_model, ix_items, ix_out;
  index_cmd->add_option("--model", ix_model, "two-tower run directory or checkpoint")->required();
  index_cmd->add_option("--items", ix_items, "items.tsv")->required();
  index_cmd->add_option("--out", ix_out, "index directory")->required();
  index_cmd->callback([&] {
    action = [&] {
      const LoadedRun run = load_run(ix_model);
      const auto model = two_tower_from(run.checkpoint);
      const auto items = load_items(ix_items);
      const ItemIndex index =
          build_index(std::span<const CatalogItem>(items), model, run.vocab, checkpoint_checksum(checkpoint_stem(ix_model)));
      save_index(index, ix_out);
      ctx.log("indexed " + std::to_string(index.size()) + " items, " + std::to_string(index.memory_bytes()) +
              " bytes of embeddings");
    };
  });

  // search
  auto* search = app.add_subcommand("search", "exact top-k search; prints item_id and score as TSV");
  std::string se_index, se_model, se_query;
  int se_k = 10;
  search->add_option("--index", se_index, "index directory")->required();
  search->add_option("--model", se_model, "the two-tower run the index was built from")->required();
  search->add_option("--query", se_query, "query text")->required();
  search->add_option("--k", se_k, "number of hits")->check(CLI::PositiveNumber);
  search->callback([&] {
    action = [&] {
      const LoadedRun run = load_run(se_model);
      const ItemIndex index = load_index(se_index);
      if (index.model_checksum() != checkpoint_checksum(checkpoint_stem(se_model)))
        throw ChecksumError("index " + se_index + " was built from a different checkpoint");
      const auto model = two_tower_from(run.checkpoint);
      const auto q = embed_text(model, Tower::kQuery, se_query, run.vocab);
      std::ostringstream os;
      os << std::setprecision(9);
      for (const auto& hit : search_topk(index, q, se_k)) os << hit.item_id << '\t' << hit.score << '\n';
      ctx.out << os.str();
    };
  });

  // report
  auto* report = app.add_subcommand("report", "regenerate an evaluation report from persisted outputs");
  std::string rp_task, rp_pred, rp_truth, rp_input, rp_k, rp_ndcg = "3,5", rp_format = "json";
  bool rp_per_query = false;
  report->add_option("--task", rp_task, "intent or retrieval")->check(CLI::IsMember({"intent", "retrieval"}));
  report->add_option("--pred", rp_pred, "intent predictions or retrieval results TSV");
  report->add_option("--truth", rp_truth, "matching eval TSV");
  report->add_option("--input", rp_input, "a saved report JSON to re-render");
  report->add_option("--k", rp_k, "P@k/R@k cutoffs (default 1,3,5 for intent, 1,5,10 for retrieval)");
  report->add_option("--ndcg-k", rp_ndcg, "NDCG cutoffs (intent)");
  report->add_option("--format", rp_format, "json or tsv")->check(CLI::IsMember({"json", "tsv"}));
  report->add_flag("--per-query", rp_per_query, "include per-query rows");
  report->callback([&] {
    action = [&] {
      EvalReport rep;
      if (!rp_input.empty()) {
        rep = EvalReport::from_json(nlohmann::json::parse(read_file(rp_input)));
      } else {
        if (rp_task.empty() || rp_pred.empty() || rp_truth.empty())
          throw InvalidArgument("report needs --input, or --task with --pred and --truth");
        const EvalDataset truth = load_eval_dataset(rp_truth);
        if (rp_task == "intent") {
          IntentEvalOptions opts;
          opts.precision_ks = parse_ks(rp_k.empty() ? "1,3,5" : rp_k);
          opts.ndcg_ks = parse_ks(rp_ndcg);
          rep = evaluate_intent(load_intent_predictions(rp_pred), truth, opts);
        } else {
          rep = evaluate_retrieval(load_retrieval_results(rp_pred), truth, parse_ks(rp_k.empty() ? "1,5,10" : rp_k));
        }
      }
      rep.validate();
      if (rp_format == "json") {
        ctx.out << rep.to_json(rp_per_query).dump(2) << '\n';
        return;
      }
      std::ostringstream os;
      os << std::setprecision(6) << std::fixed;
      os << "task\t" << rep.task << "\nqueries\t" << rep.query_count << '\n';
      for (const auto& [name, value] : rep.metrics) os << name << '\t' << value << '\n';
      ctx.out << os.str();
    };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error\tkind=usage\tmessage=" << one_line(e.what()) << '\n';
    return 2;
  }
  try {
    action();
    return 0;
  } catch (const InvalidArgument& e) {
    err << "error\tkind=" << e.kind() << "\tmessage=" << one_line(e.what()) << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error\tkind=" << e.kind() << "\tmessage=" << one_line(e.what()) << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error\tkind=internal\tmessage=" << one_line(e.what()) << '\n';
    return 1;
  }
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace rsx
