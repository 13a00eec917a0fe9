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

#include "rsx/corpus.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <unordered_set>

#include "rsx/error.hpp"
#include "rsx/hash.hpp"

namespace rsx {

std::string trim(std::string_view s) {
  const auto ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(delim, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

int LabelMap::intern(std::string_view raw) {
  std::string key(raw);
  if (auto it = ids_.find(key); it != ids_.end()) return it->second;
  const int id = size();
  ids_.emplace(key, id);
  names_.push_back(std::move(key));
  return id;
}

std::optional<int> LabelMap::find(std::string_view raw) const {
  if (auto it = ids_.find(std::string(raw)); it != ids_.end()) return it->second;
  return std::nullopt;
}

const std::string& LabelMap::name(int id) const {
  if (id < 0 || id >= size()) throw InvalidArgument("label id " + std::to_string(id) + " outside label map");
  return names_[static_cast<std::size_t>(id)];
}

std::string LabelMap::to_tsv() const {
  std::string out;
  for (int i = 0; i < size(); ++i) out += std::to_string(i) + "\t" + names_[static_cast<std::size_t>(i)] + "\n";
  return out;
}

LabelMap LabelMap::from_tsv(std::string_view tsv) {
  LabelMap m;
  std::istringstream in{std::string(tsv)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("label map line " + std::to_string(lineno) + ": expected 2 fields");
    if (std::stoi(line.substr(0, tab)) != m.size())
      throw ParseError("label map line " + std::to_string(lineno) + ": ids must be dense and ordered");
    m.intern(line.substr(tab + 1));
  }
  return m;
}

LabelMap LabelMap::load(const std::filesystem::path& path) { return from_tsv(read_file(path)); }

void LabelMap::save(const std::filesystem::path& path) const { write_file(path, to_tsv()); }

Schema Schema::parse(std::string_view spec) {
  Schema s;
  for (const auto& part : split(spec, ',')) {
    const std::string t = trim(part);
    int v = -1;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || v < 0)
      throw ParseError("bad schema column '" + t + "' in '" + std::string(spec) + "'");
    s.columns.push_back(v);
  }
  return s;
}

namespace {

// Returns an error message for a rejected row, or empty on success.
using RowHandler = std::function<std::string(const std::vector<std::string>& fields)>;

LoadStats read_rows(const std::filesystem::path& path, const LoadOptions& opts, std::size_t min_fields,
                    const RowHandler& handle) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  LoadStats stats;
  std::string line;
  std::size_t lineno = 0;
  const auto& cols = opts.schema.columns;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 && opts.schema.skip_header) continue;
    if (trim(line).empty()) continue;
    ++stats.lines;
    const auto raw = split(line, opts.schema.delimiter);
    std::vector<std::string> fields;
    std::string err;
    if (cols.empty()) {
      fields = raw;
    } else {
      for (int c : cols) {
        if (static_cast<std::size_t>(c) >= raw.size()) break;
        fields.push_back(raw[static_cast<std::size_t>(c)]);
      }
    }
    if (fields.size() < min_fields)
      err = "expected " + std::to_string(min_fields) + " fields, got " + std::to_string(fields.size());
    else
      err = handle(fields);
    if (err.empty()) {
      ++stats.loaded;
      continue;
    }
    if (opts.strict) throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + err);
    ++stats.skipped;
    if (stats.warnings.size() < 100) stats.warnings.push_back("line " + std::to_string(lineno) + ": " + err);
  }
  return stats;
}

void require_nonempty(const std::filesystem::path& path, std::size_t n) {
  if (n == 0) throw ParseError(path.string() + ": empty corpus");
}

bool parse_double(std::string_view s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  return ec == std::errc() && ptr == t.data() + t.size();
}

}  // namespace

PretrainCorpus load_pretrain_corpus(const std::filesystem::path& path, LabelMap& labels, const LoadOptions& opts) {
  PretrainCorpus corpus;
  corpus.stats = read_rows(path, opts, 2, [&](const std::vector<std::string>& f) -> std::string {
    std::string title = trim(f[0]);
    const std::string cat = trim(f[1]);
    if (title.empty()) return "empty title";
    if (cat.empty()) return "empty category";
    corpus.records.push_back({std::move(title), labels.intern(cat)});
    return {};
  });
  require_nonempty(path, corpus.records.size());
  corpus.labels = labels.space();
  return corpus;
}

IntentDataset load_intent_dataset(const std::filesystem::path& path, LabelMap& labels, const LoadOptions& opts) {
  IntentDataset ds;
  ds.stats = read_rows(path, opts, 2, [&](const std::vector<std::string>& f) -> std::string {
    std::string query = trim(f[0]);
    if (query.empty()) return "empty query";
    IntentExample ex{std::move(query), {}};
    std::vector<std::pair<std::string, std::optional<double>>> parsed;
    std::set<std::string> seen;
    std::string problem;
    for (const auto& item : split(f[1], ',')) {
      const std::string entry = trim(item);
      if (entry.empty()) continue;
      const auto colon = entry.rfind(':');
      std::string cat = trim(colon == std::string::npos ? entry : entry.substr(0, colon));
      std::optional<double> weight;
      if (colon != std::string::npos) {
        double w = 0.0;
        if (!parse_double(entry.substr(colon + 1), w)) {
          problem = "unparseable weight in '" + entry + "'";
          if (opts.strict) return problem;
          continue;
        }
        if (!(w > 0.0 && w <= 1.0)) {
          problem = "weight outside (0,1] in '" + entry + "'";
          if (opts.strict) return problem;
          continue;
        }
        weight = w;
      }
      if (cat.empty()) {
        problem = "empty category in '" + entry + "'";
        if (opts.strict) return problem;
        continue;
      }
      if (!seen.insert(cat).second) {
        problem = "duplicate category '" + cat + "'";
        if (opts.strict) return problem;
        continue;
      }
      parsed.emplace_back(std::move(cat), weight);
    }
    if (parsed.empty()) return problem.empty() ? "no labels" : "no valid labels (" + problem + ")";
    const bool weighted = parsed.front().second.has_value();
    double total = 0.0;
    for (const auto& [cat, w] : parsed) {
      if (w.has_value() != weighted) return "mixed weighted and unweighted labels";
      total += w.value_or(0.0);
    }
    if (weighted && total > 1.0 + 1e-6) return "label weights sum to " + std::to_string(total) + " > 1";
    for (const auto& [cat, w] : parsed)
      ex.labels.push_back({labels.intern(cat), weighted ? *w : 1.0 / static_cast<double>(parsed.size())});
    ds.examples.push_back(std::move(ex));
    return {};
  });
  require_nonempty(path, ds.examples.size());
  ds.labels = labels.space();
  return ds;
}

RetrievalDataset load_retrieval_dataset(const std::filesystem::path& path, const LoadOptions& opts) {
  RetrievalDataset ds;
  std::set<std::pair<std::string, std::string>> seen;
  std::unordered_set<std::string> queries;
  std::unordered_set<std::string> items;
  ds.stats = read_rows(path, opts, 3, [&](const std::vector<std::string>& f) -> std::string {
    std::string query = trim(f[0]);
    std::string item = trim(f[1]);
    std::string title = trim(f[2]);
    if (query.empty()) return "empty query";
    if (item.empty()) return "missing item_id";
    if (title.empty()) return "empty title";
    if (!seen.emplace(query, item).second) return {};
    queries.insert(query);
    items.insert(item);
    ds.pairs.push_back({std::move(query), std::move(item), std::move(title)});
    return {};
  });
  ds.stats.duplicates = ds.stats.loaded - ds.pairs.size();
  require_nonempty(path, ds.pairs.size());
  ds.distinct_queries = queries.size();
  ds.distinct_items = items.size();
  return ds;
}

std::vector<CatalogItem> load_items(const std::filesystem::path& path, LabelMap* labels, const LoadOptions& opts) {
  std::vector<CatalogItem> items;
  std::unordered_set<std::string> ids;
  read_rows(path, opts, 2, [&](const std::vector<std::string>& f) -> std::string {
    CatalogItem item{trim(f[0]), trim(f[1]), -1};
    if (item.item_id.empty()) return "missing item_id";
    if (item.title.empty()) return "empty title";
    if (!ids.insert(item.item_id).second) return "duplicate item_id '" + item.item_id + "'";
    if (f.size() > 2 && labels != nullptr && !trim(f[2]).empty()) item.category_id = labels->intern(trim(f[2]));
    items.push_back(std::move(item));
    return {};
  });
  require_nonempty(path, items.size());
  return items;
}

EvalDataset load_eval_dataset(const std::filesystem::path& path, const LoadOptions& opts) {
  EvalDataset ds;
  ds.stats = read_rows(path, opts, 2, [&](const std::vector<std::string>& f) -> std::string {
    EvalQuery q{trim(f[0]), {}};
    if (q.query.empty()) return "empty query";
    std::set<std::string> seen;
    for (const auto& part : split(f[1], ',')) {
      std::string id = trim(part);
      if (!id.empty() && seen.insert(id).second) q.relevant.push_back(std::move(id));
    }
    if (q.relevant.empty()) return "no relevant labels";
    ds.queries.push_back(std::move(q));
    return {};
  });
  require_nonempty(path, ds.queries.size());
  return ds;
}

}  // namespace rsx
