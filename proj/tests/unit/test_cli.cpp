#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "vwp/chargrid.hpp"
#include "vwp/checkpoint.hpp"
#include "vwp/cli.hpp"
#include "vwp/dataset_io.hpp"
#include "vwp/synthetic.hpp"

using namespace vwp;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string fixture_path() {
  static const std::string path = [] {
    const auto dir = testing::temp_dir("cli_fixture");
    FixtureConfig fc;
    fc.sequences = 12;
    write_dataset((dir / "fixtures.jsonl").string(), make_fixture_dataset(fc));
    std::ofstream(dir / "names.csv") << fixture_gender_csv();
    return (dir / "fixtures.jsonl").string();
  }();
  return path;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("usage errors exit with 1") {
  auto r = run({});
  CHECK(r.code == 1);
  CHECK(r.err.find("Usage") != std::string::npos);
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({"grid", "--dataset", fixture_path(), "--sequence", "s1", "--bogus"}).code == 1);
  CHECK(run({"grid", "--dataset", fixture_path()}).code == 1);
  CHECK(run({"evaluate", "--input", "x.jsonl", "--format", "yaml"}).code == 1);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("grid csv equals compute_grid") {
  const auto r = run({"grid", "--dataset", fixture_path(), "--sequence", "s3", "--format", "csv"});
  REQUIRE(r.code == 0);
  const auto records = read_dataset(fixture_path(), {});
  const auto& seq = records[2];
  REQUIRE(seq.id == "s3");
  const CharacterGrid expected = compute_grid(seq);
  CHECK(r.out == grid_report(expected).csv);
  const CharacterGrid parsed = parse_grid_csv(r.out);
  CHECK(parsed.values == expected.values);
  CHECK(parsed.column_ids == expected.column_ids);

  const auto missing = run({"grid", "--dataset", fixture_path(), "--sequence", "s99"});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("s99") != std::string::npos);
}

TEST_CASE("evaluate on identical hypothesis and reference gives BLEU-1 100") {
  const auto dir = testing::temp_dir("cli_eval");
  const std::string path = (dir / "same.jsonl").string();
  {
    std::ofstream out(path);
    out << R"({"id":"a","hypothesis":"the cat sat on the mat","references":["the cat sat on the mat"]})" << "\n";
    out << R"({"id":"b","hypothesis":["a","dog","ran","far","away"],"references":[["a","dog","ran","far","away"]]})" << "\n";
  }
  auto r = run({"evaluate", "--input", path, "--format", "json"});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["systems"]["model"]["B-1"]["mean"].get<double>() == 100.0);
  CHECK(j["systems"]["model"]["R-L"]["mean"].get<double>() == doctest::Approx(100.0));

  r = run({"evaluate", "--input", path, "--metrics", "B-1,M"});
  CHECK(r.code == 0);
  CHECK(r.out.find("B-1") != std::string::npos);
  CHECK(r.out.find("R-L") == std::string::npos);
  CHECK(run({"evaluate", "--input", path, "--metrics", "SPICE"}).code == 1);

  {
    std::ofstream out(path, std::ios::app);
    out << R"({"id":"c","hypothesis":"x"})" << "\n";
  }
  r = run({"evaluate", "--input", path});
  CHECK(r.code == 2);
  CHECK(r.err.find("same.jsonl:3") != std::string::npos);
}

TEST_CASE("config file values yield to flags") {
  const auto dir = testing::temp_dir("cli_config");
  const std::string cfg = (dir / "grid.cfg").string();
  std::ofstream(cfg) << "# grid defaults\nsequence=s2\nformat = json\n";
  auto r = run({"grid", "--config", cfg, "--dataset", fixture_path()});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out)["sequence_id"] == "s2");
  r = run({"grid", "--config", cfg, "--dataset", fixture_path(), "--sequence", "s4"});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out)["sequence_id"] == "s4");

  std::ofstream(cfg) << "colour=blue\n";
  CHECK(run({"grid", "--config", cfg, "--dataset", fixture_path(), "--sequence", "s1"}).code == 1);
  std::ofstream(cfg) << "no equals sign\n";
  CHECK(run({"grid", "--config", cfg, "--dataset", fixture_path(), "--sequence", "s1"}).code == 1);
}

TEST_CASE("plan reports review counts and qualification") {
  const auto dir = testing::temp_dir("cli_plan");
  const std::string workers = (dir / "workers.csv").string();
  std::ofstream(workers) << "worker_id,acceptance_rate,quality,accepted,stories_written\n"
                            "a,0.95,3.5,6,5\nb,0.90,3.1,5,1000\n";
  const auto r = run({"plan", "--workers", workers, "--stories", "10", "--format", "json"});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["workers"][0]["qualified"] == true);
  CHECK(j["workers"][0]["review"] == 5);
  CHECK(j["workers"][1]["qualified"] == false);
  CHECK(j["workers"][1]["review"] == 30);
  CHECK(j["samples"][0]["review"] == 10);
  // keys come out sorted, so re-serialising the parsed object is a no-op
  CHECK(r.out == j.dump(2) + "\n");

  std::ofstream(workers) << "worker_id,acceptance_rate,quality,accepted,stories_written\nc,abc,3,1,1\n";
  const auto bad = run({"plan", "--workers", workers});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("workers.csv:2") != std::string::npos);
  CHECK(run({"plan"}).code == 1);
}

TEST_CASE("prepare, train, generate and evaluate compose deterministically") {
  const auto dir = testing::temp_dir("cli_pipeline");
  const std::string prep = (dir / "prep").string(), model = (dir / "model").string();
  const std::string names = (std::filesystem::path(fixture_path()).parent_path() / "names.csv").string();
  REQUIRE(run({"prepare", "--dataset", fixture_path(), "--names", names, "--out", prep, "--seed", "2"}).code == 0);
  for (const char* f : {"train.jsonl", "val.jsonl", "test.jsonl", "vocab.txt"}) {
    CHECK(std::filesystem::exists(std::filesystem::path(prep) / f));
  }
  const std::vector<std::string> train = {"train", "--dataset", prep, "--out", model, "--seeds", "1",
                                          "--epochs", "1", "--d-model", "16", "--layers", "1",
                                          "--heads", "2", "--d-ff", "32", "--format", "json"};
  auto r = run(train);
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out)["systems"].contains("char"));
  const std::string ckpt = model + "/seed1.ckpt";
  REQUIRE(std::filesystem::exists(ckpt));

  const std::string g1 = (dir / "g1.jsonl").string(), g2 = (dir / "g2.jsonl").string();
  for (const auto& out : {g1, g2}) {
    REQUIRE(run({"generate", "--checkpoint", ckpt, "--dataset", prep, "--decoding", "nucleus", "--p", "0.9",
                 "--seed", "7", "--out", out})
                .code == 0);
  }
  CHECK(slurp(g1) == slurp(g2));
  std::istringstream lines(slurp(g1));
  for (std::string line; std::getline(lines, line);) {
    const json j = json::parse(line);
    CHECK(j.contains("sequence_id"));
    CHECK(j["seed"] == 7);
    CHECK(j["tokens"].is_array());
    CHECK(j["text"].is_string());
  }
  r = run({"evaluate", "--input", g1, "--format", "json"});
  CHECK(r.code == 0);

  // a checkpoint with non-finite weights fails numerically
  StoryGenModel broken = load_checkpoint(ckpt);
  broken.params().value("head.b").fill(std::nan(""));
  save_checkpoint((dir / "broken.ckpt").string(), broken);
  r = run({"generate", "--checkpoint", (dir / "broken.ckpt").string(), "--dataset", prep});
  CHECK(r.code == 3);
  CHECK(r.err.find("sequence '") != std::string::npos);

  CHECK(run({"train", "--dataset", prep, "--out", model, "--grid-mode", "char", "--features", "global"}).code == 1);
  CHECK(run({"train", "--dataset", (dir / "nowhere").string(), "--out", model}).code == 2);
}

TEST_CASE("analyze subcommands over annotated stories") {
  const auto dir = testing::temp_dir("cli_analyze");
  const std::string path = (dir / "ann.jsonl").string();
  {
    std::ofstream out(path);
    for (const auto& l : make_annotated_fixture(read_dataset(fixture_path(), {}), 1)) out << l << "\n";
  }
  for (const char* kind : {"coherence", "jaccard", "diversity", "groundedness"}) {
    const auto r = run({"analyze", kind, "--input", path, "--format", "json"});
    CHECK_MESSAGE(r.code == 0, kind);
    CHECK(json::accept(r.out));
  }
  const auto stats = run({"analyze", "stats", "--dataset", fixture_path(), "--format", "json"});
  REQUIRE(stats.code == 0);
  CHECK(json::parse(stats.out)["texts"] == 24);
  CHECK(run({"analyze", "stats"}).code == 1);
  CHECK(run({"analyze", "sentiment", "--input", path}).code == 1);
}
