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

#ifndef RSX_TOKENIZER_HPP_
#define RSX_TOKENIZER_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace rsx {

enum SpecialToken : int { kPad = 0, kUnk = 1, kCls = 2, kSep = 3, kMask = 4 };
inline constexpr int kNumSpecial = 5;
inline constexpr const char* kSpecialNames[kNumSpecial] = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};

// Rendered in place of [UNK] by decode().
inline constexpr std::string_view kUnkMarker = "\xEF\xBF\xBD";  // U+FFFD

// NFKC, then lowercase for Latin-script letters.
std::string normalize_text(std::string_view text);

// Splits normalized text into tokenization units: each CJK (and any other
// non-Latin, non-space) code point is its own unit; maximal runs of ASCII
// letters/digits and Latin letters form one unit. Whitespace separates units
// and is dropped. Normalizes first.
std::vector<std::string> split_units(std::string_view text);

// Inverse of split_units for canonical text: concatenates units, inserting a
// single space between two adjacent alphanumeric-run units.
std::string join_units(std::span<const std::string> units);

bool is_run_unit(std::string_view unit);

class Vocab {
 public:
  Vocab();

  // Units with corpus frequency >= min_freq, after the five special tokens,
  // ordered by descending frequency then bytewise token order.
  static Vocab build(std::span<const std::string> texts, int min_freq = 1);

  static Vocab from_tsv(std::string_view tsv);
  static Vocab load(const std::filesystem::path& path);
  std::string to_tsv() const;
  void save(const std::filesystem::path& path) const;

  int size() const { return static_cast<int>(tokens_.size()); }
  int id(std::string_view token) const;  // kUnk when absent
  bool contains(std::string_view token) const;
  const std::string& token(int id) const;
  std::int64_t frequency(int id) const;
  std::string checksum() const;

 private:
  void add(std::string token, std::int64_t freq);

  std::vector<std::string> tokens_;
  std::vector<std::int64_t> freqs_;
  std::unordered_map<std::string, int> index_;
};

Vocab build_vocab(std::span<const std::string> texts, int min_freq = 1);

// [CLS] content [SEP] followed by [PAD] up to the fixed length. `length`
// counts the non-pad positions.
struct TokenSequence {
  std::vector<int> ids;
  std::vector<std::uint8_t> special_mask;
  int length = 0;

  int content_length() const { return length - 2; }
  int non_special_count() const;
};

std::vector<int> to_ids(std::span<const std::string> units, const Vocab& vocab);

// Wraps already-mapped unit ids, truncating the content to max_seq_len - 2.
TokenSequence make_sequence(std::span<const int> unit_ids, int max_seq_len);

TokenSequence encode(std::string_view text, const Vocab& vocab, int max_seq_len);

// [PAD]/[CLS]/[SEP] are dropped, [UNK] renders as U+FFFD and [MASK] as its
// name.
std::string decode(std::span<const int> ids, const Vocab& vocab);

}  // namespace rsx

#endif  // RSX_TOKENIZER_HPP_
