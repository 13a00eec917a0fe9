// SPDX-License-Identifier: Apache-2.0

#include "rsx/tokenizer.hpp"

#include <string>
#include <vector>

#include "doctest.h"
#include "rsx/error.hpp"
#include "rsx/rng.hpp"

using namespace rsx;

namespace {

void check_invariants(const TokenSequence& s, int max_len) {
  REQUIRE(static_cast<int>(s.ids.size()) == max_len);
  REQUIRE(s.special_mask.size() == s.ids.size());
  CHECK(s.ids[0] == kCls);
  int seps = 0;
  for (int i = 0; i < max_len; ++i) {
    if (s.ids[i] == kSep) {
      ++seps;
      CHECK(i == s.length - 1);
    }
    if (s.ids[i] == kPad) CHECK(i >= s.length);
    const bool special = s.ids[i] == kCls || s.ids[i] == kSep || s.ids[i] == kPad;
    CHECK(static_cast<bool>(s.special_mask[i]) == special);
  }
  CHECK(seps == 1);
}

}  // namespace

TEST_CASE("vocab size from enumerable corpora") {
  std::vector<std::string> ab{"ab", "ab"};
  // "ab" is one alphanumeric run
  CHECK(build_vocab(ab, 1).size() == 6);
  std::vector<std::string> cjk{"手机", "手机"};
  CHECK(build_vocab(cjk, 1).size() == 7);
  std::vector<std::string> spaced{"a b", "a b"};
  CHECK(build_vocab(spaced, 1).size() == 7);
  std::vector<std::string> two{"a", "b"};
  CHECK(build_vocab(two, 2).size() == 5);
  std::vector<std::string> empty;
  CHECK_THROWS_AS(build_vocab(empty, 1), InvalidArgument);
  CHECK_THROWS_AS(build_vocab(two, 0), InvalidArgument);
}

TEST_CASE("special tokens occupy ids 0-4 and order is frequency then bytes") {
  std::vector<std::string> texts{"b a c", "c b", "c"};
  Vocab v = build_vocab(texts, 1);
  for (int i = 0; i < kNumSpecial; ++i) CHECK(v.token(i) == kSpecialNames[i]);
  CHECK(v.token(5) == "c");
  CHECK(v.token(6) == "b");
  CHECK(v.token(7) == "a");
  for (int i = 0; i < v.size(); ++i) CHECK(v.id(v.token(i)) == i);
  CHECK(v.id("zzz") == kUnk);
}

TEST_CASE("vocab files are byte-identical across builds and roundtrip") {
  std::vector<std::string> texts{"华为 P40 手机", "小米手机 redmi", "华为平板"};
  const std::string a = build_vocab(texts, 1).to_tsv();
  const std::string b = build_vocab(texts, 1).to_tsv();
  CHECK(a == b);
  Vocab back = Vocab::from_tsv(a);
  CHECK(back.to_tsv() == a);
  CHECK(back.checksum() == build_vocab(texts, 1).checksum());
}

TEST_CASE("normalization folds width and case") {
  CHECK(normalize_text("ＡＢＣ１２") == "abc12");
  CHECK(split_units("QS3518T2 电视") == std::vector<std::string>{"qs3518t2", "电", "视"});
  CHECK(split_units("  ") == std::vector<std::string>{});
}

TEST_CASE("encode of empty text") {
  std::vector<std::string> texts{"ab"};
  Vocab v = build_vocab(texts);
  auto s = encode("", v, 8);
  check_invariants(s, 8);
  CHECK(s.ids[0] == kCls);
  CHECK(s.ids[1] == kSep);
  CHECK(s.length == 2);
  CHECK(decode(s.ids, v) == "");
}

TEST_CASE("out-of-vocab units become UNK and decode with a marker") {
  std::vector<std::string> texts{"手机"};
  Vocab v = build_vocab(texts);
  auto s = encode("手表", v, 8);
  CHECK(s.ids[1] == v.id("手"));
  CHECK(s.ids[2] == kUnk);
  CHECK(decode(s.ids, v) == "手" + std::string(kUnkMarker));
}

TEST_CASE("truncation keeps the prefix and ends with SEP") {
  std::string text;
  std::vector<std::string> units;
  for (int i = 0; i < 100; ++i) {
    text += std::to_string(i % 10) + " ";
    units.push_back(std::to_string(i % 10));
  }
  Vocab v = build_vocab(units);
  auto s = encode(text, v, 10);
  check_invariants(s, 10);
  CHECK(s.ids[9] == kSep);
  for (int i = 1; i < 9; ++i) CHECK(s.ids[i] == v.id(std::to_string(i - 1)));
}

TEST_CASE("decode of a PAD tail and range errors") {
  std::vector<std::string> texts{"ab"};
  Vocab v = build_vocab(texts);
  std::vector<int> pads(6, kPad);
  CHECK(decode(pads, v) == "");
  std::vector<int> bad{kCls, 99};
  CHECK_THROWS_AS(decode(bad, v), InvalidArgument);
}

TEST_CASE("roundtrip on random in-vocab strings") {
  const std::vector<std::string> alphabet{"华", "为", "手", "机", "壳", "p40", "pro", "qs3518t2", "5g"};
  Vocab v = build_vocab(alphabet);
  Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = rng.uniform_int(0, 12);
    std::vector<std::string> units;
    for (int i = 0; i < n; ++i) units.push_back(alphabet[rng.uniform_below(alphabet.size())]);
    const std::string text = join_units(units);
    auto s = encode(text, v, 16);
    check_invariants(s, 16);
    CHECK(s.content_length() == n);
    CHECK(decode(s.ids, v) == text);
  }
}
