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

#include "rsx/tokenizer.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/uscript.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <map>
#include <sstream>

#include "rsx/error.hpp"
#include "rsx/hash.hpp"

namespace rsx {
namespace {

const icu::Normalizer2& nfkc() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* n = icu::Normalizer2::getNFKCInstance(status);
  if (U_FAILURE(status) || n == nullptr) throw Error("unicode", "NFKC normalizer unavailable");
  return *n;
}

bool is_latin(UChar32 c) {
  UErrorCode status = U_ZERO_ERROR;
  return uscript_getScript(c, &status) == USCRIPT_LATIN && U_SUCCESS(status);
}

bool is_run_char(UChar32 c) {
  if (c < 0x80) return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  return u_isalpha(c) && is_latin(c);
}

bool is_space(UChar32 c) { return u_isUWhiteSpace(c) || u_iscntrl(c); }

void append_utf8(std::string& out, UChar32 c) { icu::UnicodeString(c).toUTF8String(out); }

}  // namespace

std::string normalize_text(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const auto src = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  icu::UnicodeString norm = nfkc().normalize(src, status);
  if (U_FAILURE(status)) throw ParseError("NFKC normalization failed");
  std::string out;
  out.reserve(text.size());
  for (int32_t i = 0; i < norm.length();) {
    UChar32 c = norm.char32At(i);
    i += U16_LENGTH(c);
    if (is_latin(c)) c = u_tolower(c);
    append_utf8(out, c);
  }
  return out;
}

std::vector<std::string> split_units(std::string_view text) {
  const std::string norm = normalize_text(text);
  const auto u = icu::UnicodeString::fromUTF8(norm);
  std::vector<std::string> units;
  std::string run;
  auto flush = [&] {
    if (!run.empty()) units.push_back(std::move(run));
    run.clear();
  };
  for (int32_t i = 0; i < u.length();) {
    const UChar32 c = u.char32At(i);
    i += U16_LENGTH(c);
    if (is_space(c)) {
      flush();
    } else if (is_run_char(c)) {
      append_utf8(run, c);
    } else {
      flush();
      std::string single;
      append_utf8(single, c);
      units.push_back(std::move(single));
    }
  }
  flush();
  return units;
}

bool is_run_unit(std::string_view unit) {
  if (unit.empty()) return false;
  const auto u = icu::UnicodeString::fromUTF8(icu::StringPiece(unit.data(), static_cast<int32_t>(unit.size())));
  return is_run_char(u.char32At(0));
}

std::string join_units(std::span<const std::string> units) {
  std::string out;
  bool prev_run = false;
  for (const auto& unit : units) {
    const bool run = is_run_unit(unit);
    if (run && prev_run) out.push_back(' ');
    out += unit;
    prev_run = run;
  }
  return out;
}

Vocab::Vocab() {
  for (int i = 0; i < kNumSpecial; ++i) add(kSpecialNames[i], 0);
}

void Vocab::add(std::string token, std::int64_t freq) {
  if (index_.contains(token)) throw ParseError("duplicate vocabulary token '" + token + "'");
  index_.emplace(token, static_cast<int>(tokens_.size()));
  tokens_.push_back(std::move(token));
  freqs_.push_back(freq);
}

Vocab Vocab::build(std::span<const std::string> texts, int min_freq) {
  if (texts.empty()) throw InvalidArgument("build_vocab: empty corpus");
  if (min_freq < 1) throw InvalidArgument("build_vocab: min_freq must be >= 1");
  std::unordered_map<std::string, std::int64_t> counts;
  for (const auto& t : texts)
    for (auto& unit : split_units(t)) ++counts[unit];
  std::vector<std::pair<std::string, std::int64_t>> entries;
  for (auto& [tok, n] : counts) {
    if (n < min_freq) continue;
    bool special = false;
    for (const char* name : kSpecialNames) special = special || tok == name;
    if (!special) entries.emplace_back(tok, n);
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  Vocab v;
  for (auto& [tok, n] : entries) v.add(std::move(tok), n);
  return v;
}

Vocab build_vocab(std::span<const std::string> texts, int min_freq) { return Vocab::build(texts, min_freq); }

int Vocab::id(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocab::contains(std::string_view token) const { return index_.contains(std::string(token)); }

const std::string& Vocab::token(int id) const {
  if (id < 0 || id >= size())
    throw InvalidArgument("token id " + std::to_string(id) + " outside vocabulary of " + std::to_string(size()));
  return tokens_[static_cast<std::size_t>(id)];
}

std::int64_t Vocab::frequency(int id) const {
  token(id);
  return freqs_[static_cast<std::size_t>(id)];
}

std::string Vocab::to_tsv() const {
  std::string out;
  for (int i = 0; i < size(); ++i)
    out += std::to_string(i) + "\t" + tokens_[static_cast<std::size_t>(i)] + "\t" +
           std::to_string(freqs_[static_cast<std::size_t>(i)]) + "\n";
  return out;
}

Vocab Vocab::from_tsv(std::string_view tsv) {
  Vocab v;
  v.tokens_.clear();
  v.freqs_.clear();
  v.index_.clear();
  std::istringstream in{std::string(tsv)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) throw ParseError("vocab line " + std::to_string(lineno) + ": expected 3 fields");
    const int id = std::stoi(line.substr(0, t1));
    if (id != v.size()) throw ParseError("vocab line " + std::to_string(lineno) + ": ids must be dense and ordered");
    v.add(line.substr(t1 + 1, t2 - t1 - 1), std::stoll(line.substr(t2 + 1)));
  }
  for (int i = 0; i < kNumSpecial; ++i)
    if (v.size() <= i || v.tokens_[static_cast<std::size_t>(i)] != kSpecialNames[i])
      throw ParseError("vocab: special tokens must occupy ids 0-4");
  return v;
}

Vocab Vocab::load(const std::filesystem::path& path) { return from_tsv(read_file(path)); }

void Vocab::save(const std::filesystem::path& path) const { write_file(path, to_tsv()); }

std::string Vocab::checksum() const { return git_blob_hash(to_tsv()); }

int TokenSequence::non_special_count() const {
  return static_cast<int>(std::count(special_mask.begin(), special_mask.end(), std::uint8_t{0}));
}

std::vector<int> to_ids(std::span<const std::string> units, const Vocab& vocab) {
  std::vector<int> ids;
  ids.reserve(units.size());
  for (const auto& u : units) ids.push_back(vocab.id(u));
  return ids;
}

TokenSequence make_sequence(std::span<const int> unit_ids, int max_seq_len) {
  if (max_seq_len < 3) throw InvalidArgument("max_seq_len must be >= 3");
  const auto n = static_cast<int>(std::min<std::size_t>(unit_ids.size(), static_cast<std::size_t>(max_seq_len - 2)));
  TokenSequence seq;
  seq.ids.assign(static_cast<std::size_t>(max_seq_len), kPad);
  seq.special_mask.assign(static_cast<std::size_t>(max_seq_len), 1);
  seq.ids[0] = kCls;
  for (int i = 0; i < n; ++i) {
    seq.ids[static_cast<std::size_t>(i + 1)] = unit_ids[static_cast<std::size_t>(i)];
    seq.special_mask[static_cast<std::size_t>(i + 1)] = 0;
  }
  seq.ids[static_cast<std::size_t>(n + 1)] = kSep;
  seq.length = n + 2;
  return seq;
}

TokenSequence encode(std::string_view text, const Vocab& vocab, int max_seq_len) {
  const auto units = split_units(text);
  const auto ids = to_ids(units, vocab);
  return make_sequence(ids, max_seq_len);
}

std::string decode(std::span<const int> ids, const Vocab& vocab) {
  std::vector<std::string> units;
  for (int id : ids) {
    const std::string& tok = vocab.token(id);
    if (id == kPad || id == kCls || id == kSep) continue;
    units.push_back(id == kUnk ? std::string(kUnkMarker) : tok);
  }
  return join_units(units);
}

}  // namespace rsx
