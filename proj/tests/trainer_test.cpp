// SPDX-License-Identifier: Apache-2.0

#include "rsx/trainer.hpp"

#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "rsx/hash.hpp"
#include "rsx/synth.hpp"

using namespace rsx;

namespace {

struct SmallWorld {
  LabelMap labels;
  PretrainCorpus pretrain;
  IntentDataset intent;
  RetrievalDataset retrieval;
  Vocab vocab;

  SmallWorld() {
    SynthConfig sc;
    sc.num_titles = 200;
    sc.num_categories = 4;
    sc.intent_train = 40;
    sc.intent_eval = 10;
    sc.retrieval_train = 40;
    sc.retrieval_eval = 10;
    const auto dir = std::filesystem::temp_directory_path() / "rsx_trainer_world";
    generate_synthetic(sc).write(dir);
    pretrain = load_pretrain_corpus(dir / "pretrain.tsv", labels);
    intent = load_intent_dataset(dir / "intent_finetune.tsv", labels);
    retrieval = load_retrieval_dataset(dir / "retrieval_finetune.tsv");
    std::vector<std::string> texts;
    for (const auto& r : pretrain.records) texts.push_back(r.title);
    vocab = build_vocab(texts);
  }
};

const SmallWorld& world() {
  static const SmallWorld w;
  return w;
}

TrainConfig tiny(TaskKind task, int steps) {
  TrainConfig c;
  c.task = task;
  c.steps = steps;
  c.warmup_steps = 2;
  c.lr = 3e-3;
  c.batch_size = 8;
  c.encoder.num_layers = 1;
  c.encoder.hidden_dim = 16;
  c.encoder.num_heads = 2;
  c.encoder.ffn_dim = 32;
  c.encoder.max_seq_len = 20;
  return c;
}

TrainData data_for(TaskKind task) {
  const auto& w = world();
  TrainData d;
  d.vocab = &w.vocab;
  d.labels = w.labels.space().names;
  if (is_pretrain(task)) d.pretrain = &w.pretrain;
  if (task == TaskKind::kFinetuneIntent) d.intent = &w.intent;
  if (task == TaskKind::kFinetuneRetrieval) d.retrieval = &w.retrieval;
  return d;
}

}  // namespace

TEST_CASE("learning-rate schedule") {
  TrainConfig c;
  c.steps = 1000;
  c.warmup_steps = 100;
  CHECK(lr_at(0, c) == 0.0);
  CHECK(lr_at(50, c) == doctest::Approx(0.5e-4));
  CHECK(lr_at(100, c) == 1e-4);
  CHECK(lr_at(550, c) == doctest::Approx(0.5e-4));
  CHECK(lr_at(1000, c) == 0.0);
  c.schedule = ScheduleKind::kConstant;
  CHECK(lr_at(900, c) == 1e-4);
  CHECK_THROWS_AS(lr_at(-1, c), InvalidArgument);
  c.warmup_steps = 0;
  c.schedule = ScheduleKind::kLinear;
  CHECK(lr_at(0, c) == 1e-4);
}

TEST_CASE("adamw: decay-only and first-step cases") {
  Parameter<float> w("w", 2, 3);
  w.value << 1, -2, 3, 0.5f, 4, -1;
  const Tensor<float> start = w.value;
  w.zero_grad();
  AdamState st;
  Parameter<float>* ps[] = {&w};
  adamw_step(ps, st, 0.1, 0.01);
  for (Index i = 0; i < w.size(); ++i) CHECK(w.value.data()[i] == doctest::Approx(start.data()[i] * 0.999).epsilon(1e-7));

  Parameter<float> b("b", 1, 4, false);
  b.value.setConstant(1.0f);
  b.grad.resize(1, 4);
  b.grad << 0.3f, -2.0f, 1e-3f, 5.0f;
  AdamState st2;
  Parameter<float>* pb[] = {&b};
  adamw_step(pb, st2, 0.01, 0.0);
  // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
  for (Index i = 0; i < 4; ++i) {
    const double g = b.grad(0, i);
    CHECK(b.value(0, i) == doctest::Approx(1.0 - 0.01 * g / (std::abs(g) + 1e-8)).epsilon(1e-6));
  }

  Parameter<float> skip("skip", 1, 2);
  skip.value.setOnes();
  Parameter<float>* pk[] = {&skip};
  adamw_step(pk, st2, 0.1, 0.5);
  CHECK(skip.value(0, 0) == 1.0f);

  b.grad(0, 2) = std::nanf("");
  CHECK_THROWS_AS(adamw_step(pb, st2, 0.01, 0.0), NumericError);
}

TEST_CASE("config text round trip and validation") {
  TrainConfig c = tiny(TaskKind::kPretrainRetrieval, 7);
  c.tasks = PretrainTasks::parse("rsr,mlm");
  c.towers.margin = 0.25;
  c.temperature = 0.2;
  const TrainConfig back = TrainConfig::parse(c.to_text());
  CHECK(back.to_text() == c.to_text());
  CHECK(back.task_label() == "RSR+MLM");
  CHECK(TrainConfig::parse("task = pretrain-intent\ntasks = rsc, mlm\n").task_label() == "RSC+MLM");
  CHECK(TrainConfig::parse("task = pretrain-intent\ntasks = fsc,mlm\n").task_label() == "FSC+MLM");
  CHECK_THROWS_AS(TrainConfig::parse("colour = red\n"), ParseError);
  CHECK_THROWS_AS(TrainConfig::parse("lr = fast\n"), ParseError);
  CHECK_THROWS_AS(TrainConfig::parse("task = finetune-retrieval\nbatch_size = 1\n"), InvalidArgument);
  CHECK_THROWS_AS(TrainConfig::parse("lr = 0\n"), InvalidArgument);
  CHECK(reference_config(TaskKind::kFinetuneIntent).batch_size == 1024);
  CHECK(TrainConfig{}.lr == 1e-4);
}

TEST_CASE("divergence alarm") {
  std::vector<LossRecord> flat;
  for (int i = 0; i < 800; ++i) flat.push_back({i + 1, 0, 2.0 - i * 1e-3, 0, 0});
  CHECK_FALSE(divergence_step(flat).has_value());
  for (int i = 600; i < 800; ++i) flat[i].loss = 5.0;
  CHECK(divergence_step(flat).has_value());
}

TEST_CASE("training is deterministic for a fixed seed") {
  for (TaskKind task : {TaskKind::kPretrainIntent, TaskKind::kPretrainRetrieval, TaskKind::kFinetuneIntent,
                        TaskKind::kFinetuneRetrieval}) {
    const TrainConfig cfg = tiny(task, 6);
    auto a = run_training(cfg, data_for(task));
    auto b = run_training(cfg, data_for(task));
    REQUIRE(a.trace.size() == 6);
    for (std::size_t i = 0; i < a.trace.size(); ++i) CHECK(a.trace[i].loss == b.trace[i].loss);
    CHECK(loss_trace_tsv(a.trace) == loss_trace_tsv(b.trace));
    TrainConfig other = cfg;
    other.seed = 99;
    CHECK(loss_trace_tsv(run_training(other, data_for(task)).trace) != loss_trace_tsv(a.trace));
  }
}

TEST_CASE("sequential phases split the objectives") {
  TrainConfig cfg = tiny(TaskKind::kPretrainIntent, 8);
  cfg.sequential_phases = true;
  auto r = run_training(cfg, data_for(cfg.task));
  for (int i = 0; i < 4; ++i) {
    CHECK(r.trace[i].mlm_loss == 0.0);
    CHECK(r.trace[i].task_loss > 0.0);
  }
  for (int i = 4; i < 8; ++i) {
    CHECK(r.trace[i].task_loss == 0.0);
    CHECK(r.trace[i].mlm_loss > 0.0);
  }
  cfg.sequential_phases = false;
  r = run_training(cfg, data_for(cfg.task));
  CHECK(r.trace[0].loss == doctest::Approx(r.trace[0].task_loss + r.trace[0].mlm_loss).epsilon(1e-6));
}

TEST_CASE("checkpoint round trip, corruption and shape checks") {
  const TrainConfig cfg = tiny(TaskKind::kPretrainIntent, 3);
  const auto r = run_training(cfg, data_for(cfg.task));
  const auto dir = std::filesystem::temp_directory_path() / "rsx_ckpt_test";
  std::filesystem::remove_all(dir);
  save_checkpoint(r.checkpoint, dir / "a");
  const Checkpoint back = load_checkpoint(dir / "a.json");
  save_checkpoint(back, dir / "b");
  CHECK(read_file(dir / "a.json") == read_file(dir / "b.json"));
  CHECK(read_file(dir / "a.bin") == read_file(dir / "b.bin"));
  CHECK(back.task_label() == "RSC+MLM");

  const auto m1 = intent_model_from(r.checkpoint);
  const auto m2 = intent_model_from(back);
  for (int q = 0; q < 10; ++q) {
    const auto seq = encode(world().intent.examples[q].query, world().vocab, 20);
    CHECK(intent_logits(m1, seq) == intent_logits(m2, seq));
  }

  std::string blob = read_file(dir / "a.bin");
  write_file(dir / "t.json", read_file(dir / "a.json"));
  write_file(dir / "t.bin", blob.substr(0, blob.size() / 2));
  CHECK_THROWS_AS(load_checkpoint(dir / "t"), ChecksumError);
  const std::string manifest = read_file(dir / "a.json");
  write_file(dir / "t.json", manifest.substr(0, manifest.size() / 2));
  write_file(dir / "t.bin", blob);
  CHECK_THROWS_AS(load_checkpoint(dir / "t"), ChecksumError);
  blob[10] ^= 0x40;
  write_file(dir / "t.json", manifest);
  write_file(dir / "t.bin", blob);
  CHECK_THROWS_AS(load_checkpoint(dir / "t"), ChecksumError);

  Checkpoint wrong = back;
  wrong.config["num_labels"] = 7;
  save_checkpoint(wrong, dir / "w");
  CHECK_THROWS_AS(load_checkpoint(dir / "w"), ShapeError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("warm start transfers every encoder tensor") {
  const TrainConfig pre = tiny(TaskKind::kPretrainIntent, 3);
  const auto r = run_training(pre, data_for(pre.task));

  TrainConfig ft = tiny(TaskKind::kFinetuneRetrieval, 1);
  ft.lr = 1e-12;
  ft.warmup_steps = 0;
  ft.weight_decay = 0.0;
  const auto out = run_training(ft, data_for(ft.task), &r.checkpoint);
  const auto tt = two_tower_from(out.checkpoint);
  std::size_t expected = 0;
  for (const auto* p : tt.parameters()) {
    ++expected;
    const std::string rest = p->name.substr(p->name.find("encoder.") + 8);
    const NamedTensor* src = r.checkpoint.find("encoder." + rest);
    REQUIRE(src != nullptr);
    CHECK((p->value - src->value).cwiseAbs().maxCoeff() < 1e-6f);
  }
  CHECK(out.loaded_parameters.size() == expected);
  CHECK(out.checkpoint.task_label() == "RSC+MLM");

  // Same label space: the head transfers as well. Different: fresh head.
  TrainConfig fi = tiny(TaskKind::kFinetuneIntent, 1);
  fi.warmup_steps = 0;
  auto same = run_training(fi, data_for(fi.task), &r.checkpoint);
  CHECK(std::find(same.loaded_parameters.begin(), same.loaded_parameters.end(), "head.weight") !=
        same.loaded_parameters.end());
  TrainData more = data_for(fi.task);
  more.labels.push_back("extra");
  auto fresh = run_training(fi, more, &r.checkpoint);
  CHECK(std::find(fresh.loaded_parameters.begin(), fresh.loaded_parameters.end(), "head.weight") ==
        fresh.loaded_parameters.end());
  CHECK(fresh.checkpoint.find("head.weight")->value.cols() == static_cast<Index>(more.labels.size()));

  TrainConfig bigger = fi;
  bigger.encoder.hidden_dim = 32;
  CHECK_THROWS_AS(run_training(bigger, data_for(fi.task), &r.checkpoint), ShapeError);
  CHECK(inherit_encoder(bigger, r.checkpoint).encoder.hidden_dim == 16);
}
