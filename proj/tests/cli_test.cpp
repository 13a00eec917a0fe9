// SPDX-License-Identifier: Apache-2.0

#include "rsx/cli.hpp"

#include <filesystem>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "rsx/hash.hpp"

using namespace rsx;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::filesystem::path scratch() {
  const auto dir = std::filesystem::temp_directory_path() / "rsx_cli_test";
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("eval-intent on perfect predictions") {
  const auto dir = scratch();
  write_file(dir / "t.tsv", "red case\tcases\nphone\tphones,cases\nlamp\tlights\n");
  write_file(dir / "p.tsv", "red case\tcases\nphone\tphones,cases\nlamp\tlights\n");
  auto r = cli({"eval-intent", "--pred", (dir / "p.tsv").string(), "--truth", (dir / "t.tsv").string(), "--k", "1"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["metrics"]["P@1"].get<double>() == 1.0);
  CHECK(j["metrics"]["F1"].get<double>() == 1.0);
  CHECK(j["query_count"].get<int>() == 3);
}

TEST_CASE("sample is deterministic per seed") {
  const auto dir = scratch();
  REQUIRE(cli({"synth", "--out", (dir / "data").string(), "--titles", "200", "--categories", "4"}).code == 0);
  const std::string input = (dir / "data" / "pretrain.tsv").string();
  auto a = cli({"sample", "--input", input, "--mode", "substring", "--n", "5", "--seed", "1"});
  auto b = cli({"sample", "--input", input, "--mode", "substring", "--n", "5", "--seed", "1"});
  auto c = cli({"sample", "--input", input, "--mode", "substring", "--n", "5", "--seed", "2"});
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out != c.out);
  int lines = 0;
  for (char ch : a.out) lines += ch == '\n';
  CHECK(lines == 5);
}

TEST_CASE("report regenerates a saved evaluation") {
  const auto dir = scratch();
  write_file(dir / "t2.tsv", "a\tx\nb\ty\n");
  write_file(dir / "p2.tsv", "a\tx\tx,y\nb\tx\tx,y\n");
  const auto save = (dir / "rep.json").string();
  auto first = cli({"eval-intent", "--pred", (dir / "p2.tsv").string(), "--truth", (dir / "t2.tsv").string(), "--save", save});
  REQUIRE(first.code == 0);
  auto again = cli({"report", "--task", "intent", "--pred", (dir / "p2.tsv").string(), "--truth", (dir / "t2.tsv").string()});
  CHECK(again.out == first.out);
  auto rerender = cli({"report", "--input", save});
  CHECK(rerender.out == first.out);
}

TEST_CASE("errors are one machine-parsable line") {
  for (const auto& args : std::vector<std::vector<std::string>>{
           {},
           {"frobnicate"},
           {"search", "--index", "x", "--unknown-flag", "1"},
           {"eval-intent", "--truth", "/nonexistent/t.tsv", "--pred", "/nonexistent/p.tsv"},
           {"eval-intent", "--truth", "/nonexistent/t.tsv", "--pred", "p", "--k", "0"}}) {
    auto r = cli(args);
    CHECK(r.code != 0);
    CHECK(r.out.empty());
    CHECK(r.err.starts_with("error\tkind="));
    CHECK(r.err.find('\n') == r.err.size() - 1);
  }
  CHECK(cli({"frobnicate"}).code == 2);
  auto io = cli({"eval-intent", "--truth", "/nonexistent/t.tsv", "--pred", "/nonexistent/p.tsv"});
  CHECK(io.code == 1);
  CHECK(io.err.find("kind=io") != std::string::npos);
  CHECK(io.err.find("/nonexistent/t.tsv") != std::string::npos);
}

TEST_CASE("help lists every subcommand") {
  auto r = cli({"--help"});
  CHECK(r.code == 0);
  for (const char* name : {"build-vocab", "sample", "pretrain", "finetune", "eval-intent", "eval-retrieval", "embed",
                           "index", "search", "report"})
    CHECK(r.out.find(name) != std::string::npos);
}
