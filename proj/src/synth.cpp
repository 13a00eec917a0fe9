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

#include "rsx/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <span>

#include "rsx/error.hpp"
#include "rsx/hash.hpp"
#include "rsx/rng.hpp"
#include "rsx/tokenizer.hpp"

namespace rsx {

namespace {

std::string utf8(char32_t cp) {
  std::string out;
  out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
  out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
  out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  return out;
}

std::string two_digits(int v) { return (v < 10 ? "0" : "") + std::to_string(v); }

class Zipf {
 public:
  explicit Zipf(int n, double s = 1.0) {
    double acc = 0.0;
    for (int r = 0; r < n; ++r) cdf_.push_back(acc += 1.0 / std::pow(r + 1.0, s));
    for (double& c : cdf_) c /= acc;
  }
  int draw(Rng& rng) const {
    const double u = rng.uniform();
    return static_cast<int>(std::upper_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin());
  }

 private:
  std::vector<double> cdf_;
};

struct Lexicon {
  std::vector<std::vector<std::string>> chars;   // per category, Zipf ranked
  std::vector<std::vector<std::string>> brands;  // per category
  std::vector<std::string> generic;
};

Lexicon make_lexicon(const SynthConfig& cfg, Rng& rng) {
  const int needed = cfg.num_categories * cfg.chars_per_category + cfg.generic_chars;
  std::vector<char32_t> pool;
  for (char32_t cp = 0x4E00; cp < 0x4E00 + static_cast<char32_t>(std::max(2000, 2 * needed)); ++cp) pool.push_back(cp);
  shuffle(std::span<char32_t>(pool), rng);
  Lexicon lex;
  std::size_t next = 0;
  for (int c = 0; c < cfg.num_categories; ++c) {
    std::vector<std::string> cs;
    for (int k = 0; k < cfg.chars_per_category; ++k) cs.push_back(utf8(pool[next++]));
    lex.chars.push_back(std::move(cs));
    std::vector<std::string> bs;
    for (int b = 0; b < cfg.brands_per_category; ++b) bs.push_back("b" + two_digits(c) + static_cast<char>('a' + b));
    lex.brands.push_back(std::move(bs));
  }
  for (int k = 0; k < cfg.generic_chars; ++k) lex.generic.push_back(utf8(pool[next++]));
  return lex;
}

std::string category_name(int c) { return "c" + two_digits(c); }

std::string number(double v) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

}  // namespace

SynthCorpus generate_synthetic(const SynthConfig& cfg) {
  if (cfg.num_categories < 2 || cfg.num_titles < 1 || cfg.chars_per_category < 3 || cfg.brands_per_category < 1)
    throw InvalidArgument("synthetic corpus: sizes too small");
  Rng root(cfg.seed);
  Rng lex_rng = root.split(1);
  Rng title_rng = root.split(2);
  Rng intent_rng = root.split(3);
  Rng retr_rng = root.split(4);
  const Lexicon lex = make_lexicon(cfg, lex_rng);
  const Zipf zipf(cfg.chars_per_category);
  const auto cat_char = [&](int c, Rng& rng) { return lex.chars[static_cast<std::size_t>(c)][zipf.draw(rng)]; };
  const auto brand = [&](int c, Rng& rng) {
    return lex.brands[static_cast<std::size_t>(c)][rng.uniform_below(lex.brands[static_cast<std::size_t>(c)].size())];
  };
  const auto generic = [&](Rng& rng) { return lex.generic[rng.uniform_below(lex.generic.size())]; };

  SynthCorpus out;
  std::vector<std::vector<std::string>> title_units;
  std::vector<std::set<std::string>> title_sets;
  std::vector<int> title_cat;
  for (int i = 0; i < cfg.num_titles; ++i) {
    const int c = static_cast<int>(title_rng.uniform_below(static_cast<std::uint64_t>(cfg.num_categories)));
    const int n = title_rng.uniform_int(6, 14);
    std::vector<std::string> units;
    for (int k = 0; k < n; ++k) units.push_back(title_rng.bernoulli(0.65) ? cat_char(c, title_rng) : generic(title_rng));
    if (title_rng.bernoulli(0.8)) {
      const auto pos = title_rng.uniform_below(units.size() + 1);
      units.insert(units.begin() + static_cast<std::ptrdiff_t>(pos), brand(c, title_rng));
    }
    std::string id = std::to_string(i);
    id.insert(0, 5 - std::min<std::size_t>(5, id.size()), '0');
    out.items.push_back({"item" + id, join_units(units), category_name(c)});
    title_sets.emplace_back(units.begin(), units.end());
    title_units.push_back(std::move(units));
    title_cat.push_back(c);
  }

  const auto intent_query = [&](Rng& rng) {
    SynthIntentQuery q;
    const int c = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(cfg.num_categories)));
    std::vector<std::string> units;
    const int n = rng.uniform_int(1, 3);
    for (int k = 0; k < n; ++k) units.push_back(rng.bernoulli(0.15) ? brand(c, rng) : cat_char(c, rng));
    if (rng.bernoulli(cfg.multi_label_rate)) {
      int c2 = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(cfg.num_categories - 1)));
      if (c2 >= c) ++c2;
      units.push_back(cat_char(c2, rng));
      q.labels = {{category_name(c), 0.7}, {category_name(c2), 0.3}};
    } else {
      q.labels = {{category_name(c), 1.0}};
    }
    if (rng.bernoulli(0.2)) units.insert(units.begin() + static_cast<std::ptrdiff_t>(rng.uniform_below(units.size() + 1)), generic(rng));
    q.query = join_units(units);
    return q;
  };
  for (int i = 0; i < cfg.intent_train; ++i) out.intent_train.push_back(intent_query(intent_rng));
  for (int i = 0; i < cfg.intent_eval; ++i) out.intent_eval.push_back(intent_query(intent_rng));

  // A query picks 2-3 distinct non-generic units of one title, in title order.
  const std::set<std::string> generic_set(lex.generic.begin(), lex.generic.end());
  const auto retrieval_query = [&](Rng& rng, std::size_t& item, std::vector<std::string>& picked) {
    for (;;) {
      item = rng.uniform_below(title_units.size());
      std::vector<std::size_t> cand;
      std::set<std::string> seen;
      for (std::size_t k = 0; k < title_units[item].size(); ++k)
        if (!generic_set.count(title_units[item][k]) && seen.insert(title_units[item][k]).second) cand.push_back(k);
      if (cand.size() < 2) continue;
      shuffle(std::span<std::size_t>(cand), rng);
      cand.resize(std::min<std::size_t>(cand.size(), static_cast<std::size_t>(rng.uniform_int(2, 3))));
      std::sort(cand.begin(), cand.end());
      picked.clear();
      for (auto k : cand) picked.push_back(title_units[item][k]);
      std::vector<std::string> shown = picked;
      if (rng.bernoulli(0.3)) shown.push_back(generic(rng));
      return join_units(shown);
    }
  };
  std::vector<std::string> picked;
  for (int i = 0; i < cfg.retrieval_train; ++i) {
    std::size_t item = 0;
    const std::string q = retrieval_query(retr_rng, item, picked);
    out.retrieval_train.push_back({q, out.items[item].item_id, out.items[item].title});
  }
  for (int i = 0; i < cfg.retrieval_eval; ++i) {
    std::size_t item = 0;
    SynthRetrievalQuery rq;
    rq.query = retrieval_query(retr_rng, item, picked);
    for (std::size_t t = 0; t < title_sets.size(); ++t) {
      const bool all = std::all_of(picked.begin(), picked.end(), [&](const std::string& u) { return title_sets[t].count(u) > 0; });
      if (all) rq.relevant.push_back(out.items[t].item_id);
    }
    out.retrieval_eval.push_back(std::move(rq));
  }
  return out;
}

void SynthCorpus::write(const std::filesystem::path& dir) const {
  std::string pretrain, items_tsv, intent, eval_intent, retr, eval_retr;
  for (const auto& it : items) {
    pretrain += it.title + "\t" + it.category + "\n";
    items_tsv += it.item_id + "\t" + it.title + "\t" + it.category + "\n";
  }
  for (const auto& q : intent_train) {
    intent += q.query + "\t";
    for (std::size_t k = 0; k < q.labels.size(); ++k)
      intent += (k ? "," : "") + q.labels[k].first + ":" + number(q.labels[k].second);
    intent += "\n";
  }
  for (const auto& q : intent_eval) {
    eval_intent += q.query + "\t";
    for (std::size_t k = 0; k < q.labels.size(); ++k) eval_intent += (k ? "," : "") + q.labels[k].first;
    eval_intent += "\n";
  }
  for (const auto& p : retrieval_train) retr += p.query + "\t" + p.item_id + "\t" + p.title + "\n";
  for (const auto& q : retrieval_eval) {
    eval_retr += q.query + "\t";
    for (std::size_t k = 0; k < q.relevant.size(); ++k) eval_retr += (k ? "," : "") + q.relevant[k];
    eval_retr += "\n";
  }
  write_file(dir / "pretrain.tsv", pretrain);
  write_file(dir / "items.tsv", items_tsv);
  write_file(dir / "intent_finetune.tsv", intent);
  write_file(dir / "eval_intent.tsv", eval_intent);
  write_file(dir / "retrieval_finetune.tsv", retr);
  write_file(dir / "eval_retrieval.tsv", eval_retr);
}

}  // namespace rsx
