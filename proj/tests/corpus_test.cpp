// SPDX-License-Identifier: Apache-2.0

#include "rsx/corpus.hpp"

#include <filesystem>
#include <set>
#include <string>

#include "doctest.h"
#include "rsx/error.hpp"
#include "rsx/hash.hpp"

using namespace rsx;

namespace {

std::filesystem::path tmp_file(const std::string& name, const std::string& content) {
  const auto dir = std::filesystem::temp_directory_path() / "rsx_corpus_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / name;
  write_file(path, content);
  return path;
}

LoadOptions strict() {
  LoadOptions o;
  o.strict = true;
  return o;
}

}  // namespace

TEST_CASE("single pretrain row") {
  LabelMap labels;
  auto c = load_pretrain_corpus(tmp_file("one.tsv", "abc\t0\n"), labels);
  REQUIRE(c.records.size() == 1);
  CHECK(c.records[0].title == "abc");
  CHECK(c.records[0].category_id == 0);
  CHECK(c.labels.size == 1);
}

TEST_CASE("lenient loading skips an empty title with a warning") {
  LabelMap labels;
  const auto path = tmp_file("blank.tsv", "  \tphones\nred case\tphones\ngreen case\tcases\n");
  auto c = load_pretrain_corpus(path, labels);
  CHECK(c.records.size() == 2);
  CHECK(c.stats.skipped == 1);
  CHECK(c.stats.warnings.size() == 1);
  CHECK(c.stats.warnings[0].starts_with("line 1:"));
  CHECK(c.labels.size == 2);
  LabelMap again;
  CHECK_THROWS_AS(load_pretrain_corpus(path, again, strict()), ParseError);
}

TEST_CASE("pretrain errors") {
  LabelMap labels;
  CHECK_THROWS_AS(load_pretrain_corpus("/nonexistent/rsx.tsv", labels), IoError);
  CHECK_THROWS_AS(load_pretrain_corpus(tmp_file("empty.tsv", "\n\n"), labels), ParseError);
  CHECK_THROWS_AS(load_pretrain_corpus(tmp_file("onecol.tsv", "title only\n"), labels, strict()), ParseError);
}

TEST_CASE("categories are remapped densely and order is preserved") {
  LabelMap labels;
  auto c = load_pretrain_corpus(tmp_file("dense.tsv", "a\t907\nb\t12\nc\t907\nd\t5\n"), labels);
  CHECK(c.records[0].category_id == 0);
  CHECK(c.records[1].category_id == 1);
  CHECK(c.records[2].category_id == 0);
  CHECK(c.records[3].category_id == 2);
  CHECK(c.records[3].title == "d");
  CHECK(c.labels.size == 3);
  CHECK(labels.name(1) == "12");
  LabelMap back = LabelMap::from_tsv(labels.to_tsv());
  CHECK(back.to_tsv() == labels.to_tsv());
  CHECK(back.find("5") == 2);
}

TEST_CASE("schema remaps columns") {
  LabelMap labels;
  LoadOptions o;
  o.schema = Schema::parse("1,0");
  auto c = load_pretrain_corpus(tmp_file("swapped.tsv", "7\ttitle one\n"), labels, o);
  CHECK(c.records[0].title == "title one");
  CHECK(labels.name(0) == "7");
}

TEST_CASE("intent rows with weights") {
  LabelMap labels;
  auto ds = load_intent_dataset(tmp_file("intent.tsv", "q\t3:1.0\nr\t1:0.6,2:0.3\n"), labels);
  REQUIRE(ds.examples.size() == 2);
  REQUIRE(ds.examples[0].labels.size() == 1);
  CHECK(labels.name(ds.examples[0].labels[0].category_id) == "3");
  CHECK(ds.examples[0].labels[0].weight == 1.0);
  const auto& two = ds.examples[1].labels;
  REQUIRE(two.size() == 2);
  CHECK(two[0].weight + two[1].weight == doctest::Approx(0.9));
}

TEST_CASE("intent row errors") {
  LabelMap labels;
  CHECK_THROWS_AS(load_intent_dataset(tmp_file("w0.tsv", "q\t1:0\n"), labels, strict()), ParseError);
  CHECK_THROWS_AS(load_intent_dataset(tmp_file("w2.tsv", "q\t1:1.5\n"), labels, strict()), ParseError);
  CHECK_THROWS_AS(load_intent_dataset(tmp_file("dup.tsv", "q\t1:0.5,1:0.2\n"), labels, strict()), ParseError);
  CHECK_THROWS_AS(load_intent_dataset(tmp_file("nan.tsv", "q\t1:abc\n"), labels, strict()), ParseError);
  CHECK_THROWS_AS(load_intent_dataset(tmp_file("sum.tsv", "q\t1:0.7,2:0.7\n"), labels, strict()), ParseError);
  // lenient: invalid labels are dropped, all-invalid rows are skipped
  auto ds = load_intent_dataset(tmp_file("mixed.tsv", "q\t1:0.5,2:abc\nr\t3:0\ns\t4:1\n"), labels);
  REQUIRE(ds.examples.size() == 2);
  CHECK(ds.examples[0].labels.size() == 1);
  CHECK(ds.stats.skipped == 1);
}

TEST_CASE("retrieval dedup keeps first occurrence") {
  auto ds = load_retrieval_dataset(tmp_file("ret.tsv", "q\ti1\tt one\nq\ti1\tt one\nq\ti2\tt two\nr\ti1\tt one\n"));
  CHECK(ds.pairs.size() == 3);
  CHECK(ds.stats.duplicates == 1);
  CHECK(ds.distinct_queries == 2);
  CHECK(ds.distinct_items == 2);
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& p : ds.pairs) CHECK(seen.emplace(p.query, p.item_id).second);
  CHECK_THROWS_AS(load_retrieval_dataset(tmp_file("ret2.tsv", "q\ti1\t \n"), strict()), ParseError);
  CHECK_THROWS_AS(load_retrieval_dataset(tmp_file("ret3.tsv", "q\ti1\n"), strict()), ParseError);
}

TEST_CASE("eval and item files") {
  auto ev = load_eval_dataset(tmp_file("ev.tsv", "q\ta,b,a\nr\tc\n"));
  REQUIRE(ev.queries.size() == 2);
  CHECK(ev.queries[0].relevant == std::vector<std::string>{"a", "b"});
  LabelMap labels;
  auto items = load_items(tmp_file("items.tsv", "i1\tred case\tcases\ni2\tphone\tphones\n"), &labels);
  CHECK(items.size() == 2);
  CHECK(items[1].category_id == 1);
  CHECK_THROWS_AS(load_items(tmp_file("items2.tsv", "i1\ta\ni1\tb\n"), nullptr, strict()), ParseError);
}

TEST_CASE("loading is idempotent") {
  const auto path = tmp_file("idem.tsv", "华为手机\t1\n小米手机\t2\n苹果\t1\n");
  LabelMap a, b;
  auto x = load_pretrain_corpus(path, a);
  auto y = load_pretrain_corpus(path, b);
  REQUIRE(x.records.size() == y.records.size());
  for (std::size_t i = 0; i < x.records.size(); ++i) {
    CHECK(x.records[i].title == y.records[i].title);
    CHECK(x.records[i].category_id == y.records[i].category_id);
    CHECK(x.records[i].category_id < x.labels.size);
  }
}
