#include <algorithm>
#include <cstdlib>
#include <set>
#include <sstream>

#include "commands.hpp"
#include "doctest.h"
#include "json.hpp"
#include "runperf/report_io.hpp"
#include "test_util.hpp"

using namespace runperf;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "runperf");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<json> json_lines(const std::string& text) {
  std::vector<json> v;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) v.push_back(json::parse(line));
  return v;
}

json value_of(const std::vector<json>& events, const std::string& name) {
  for (const auto& e : events)
    if (e["event"] == "value" && e["name"] == name) return e["value"];
  return nullptr;
}

std::string trimmed(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

}  // namespace

TEST_CASE("synth writes the manifest files deterministically") {
  testing::TempDir a("cli_a"), b("cli_b");
  const auto ra = run_cli({"--json", "--seed", "3", "--out", a.path().string(), "synth"});
  REQUIRE(ra.code == 0);
  const auto rb = run_cli({"--json", "--seed", "3", "--out", b.path().string(), "synth"});
  REQUIRE(rb.code == 0);
  for (const char* f : {"embeddings.jsonl", "splits.csv", "detections.jsonl", "manifest.json"}) {
    CAPTURE(f);
    CHECK(std::filesystem::exists(a / f));
    CHECK(cli::fnv1a64_file(a / f) == cli::fnv1a64_file(b / f));
  }
  const auto events = json_lines(ra.out);
  std::size_t files = 0;
  for (const auto& e : events) files += e["event"] == "file";
  CHECK(files == 6);
  run_cli({"--seed", "4", "--out", (b / "x").string(), "synth"});
  CHECK(cli::fnv1a64_file(a / "embeddings.jsonl") != cli::fnv1a64_file(b / "x" / "embeddings.jsonl"));
}

TEST_CASE("fnv1a64 of known inputs") {
  testing::TempDir d("fnv");
  write_text_file(d / "empty", "");
  write_text_file(d / "a", "a");
  CHECK(cli::fnv1a64_file(d / "empty") == 0xcbf29ce484222325ULL);
  CHECK(cli::fnv1a64_file(d / "a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("balanced labels for four categories and sixteen runners") {
  testing::TempDir d("cli_c4");
  REQUIRE(run_cli({"--out", d.path().string(), "synth", "--runners", "16", "-C", "4", "--frames", "0"}).code == 0);
  const auto r = run_cli({"--json", "--out", d.path().string(), "dataset", "--embeddings",
                          (d / "embeddings.jsonl").string(), "--splits", (d / "splits.csv").string(), "-C", "4",
                          "--rp", "3"});
  REQUIRE(r.code == 0);
  CHECK(value_of(json_lines(r.out), "class_counts") == json({4, 4, 4, 4}));
}

TEST_CASE("tracking a clean sequence keeps one id, a dropout is bridged by the backup") {
  testing::TempDir d("cli_track");
  REQUIRE(run_cli({"--out", d.path().string(), "synth", "--frames", "175", "--dropout-start", "60",
                   "--dropout-length", "10"})
              .code == 0);
  const auto seed = trimmed(read_text_file(d / "seed_bbox.txt"));
  const auto r = run_cli({"--json", "--out", d.path().string(), "track", "--detections",
                          (d / "detections.jsonl").string(), "--seed-bbox", seed});
  REQUIRE(r.code == 0);
  std::set<int> ids;
  std::set<int> backup_frames;
  std::size_t lines = 0;
  for (const auto& j : json_lines(read_text_file(d / "tracks.jsonl"))) {
    ids.insert(j["id"].get<int>());
    if (j["source"] == "backup") backup_frames.insert(j["frame"].get<int>());
    ++lines;
  }
  CHECK(ids.size() == 1);
  for (int f = 60; f < 70; ++f) CHECK(backup_frames.count(f) == 1);
  CHECK(lines >= 175 - 2);
  CHECK(std::filesystem::exists(d / "tracks_all.jsonl"));

  testing::TempDir clean("cli_clean");
  REQUIRE(run_cli({"--out", clean.path().string(), "synth", "--frames", "175"}).code == 0);
  const auto rc = run_cli({"--out", clean.path().string(), "track", "--detections",
                           (clean / "detections.jsonl").string(), "--seed-bbox",
                           trimmed(read_text_file(clean / "seed_bbox.txt"))});
  REQUIRE(rc.code == 0);
  std::set<int> clean_ids;
  std::set<int> clean_frames;
  for (const auto& j : json_lines(read_text_file(clean / "tracks.jsonl"))) {
    clean_ids.insert(j["id"].get<int>());
    clean_frames.insert(j["frame"].get<int>());
    CHECK(j["source"] == "match");
  }
  CHECK(clean_ids.size() == 1);
  CHECK(clean_frames.size() == 175 - 2);
}

TEST_CASE("empty detections are an explicit error") {
  testing::TempDir d("cli_empty");
  write_text_file(d / "detections.jsonl", "");
  const auto r = run_cli({"--out", d.path().string(), "track", "--detections", (d / "detections.jsonl").string(),
                          "--seed-bbox", "10,10,5,5"});
  CHECK(r.code != 0);
  CHECK(r.err.find("no detections") != std::string::npos);
  const auto bad = run_cli({"--out", d.path().string(), "track", "--detections", (d / "detections.jsonl").string(),
                            "--seed-bbox", "10,10,5"});
  CHECK(bad.code != 0);
}

TEST_CASE("eval on the oracle, the single-RP next task and the ablation table") {
  testing::TempDir d("cli_eval");
  REQUIRE(run_cli({"--seed", "5", "--out", d.path().string(), "synth", "--runners", "120", "--separation", "6",
                   "--frames", "0", "--modes", "raw", "bb", "vibe"})
              .code == 0);
  const std::vector<std::string> data{"--embeddings", (d / "embeddings.jsonl").string(), "--splits",
                                      (d / "splits.csv").string()};
  auto args = std::vector<std::string>{"--json", "--seed", "5", "--out", (d / "eval").string(), "eval"};
  args.insert(args.end(), data.begin(), data.end());
  for (const char* a : {"--rp", "3", "--iterations", "5", "--rounds", "10", "--depth", "3"}) args.push_back(a);
  const auto r = run_cli(args);
  REQUIRE(r.code == 0);
  CHECK(value_of(json_lines(r.out), "accuracy_mean").get<double>() >= 0.95);
  for (const char* f : {"report.json", "confusion.csv", "roc.csv", "roc.svg", "confusion.svg"})
    CHECK(std::filesystem::exists(d / "eval" / f));
  auto args2 = args;
  args2[4] = (d / "eval2").string();
  REQUIRE(run_cli(args2).code == 0);
  CHECK(read_text_file(d / "eval" / "report.json") == read_text_file(d / "eval2" / "report.json"));

  testing::TempDir single("cli_single");
  REQUIRE(run_cli({"--out", single.path().string(), "synth", "--rps", "3", "--frames", "0"}).code == 0);
  const auto next = run_cli({"--out", single.path().string(), "eval", "--embeddings",
                             (single / "embeddings.jsonl").string(), "--splits", (single / "splits.csv").string(),
                             "--task", "next", "--iterations", "2"});
  CHECK(next.code != 0);
  CHECK(next.err.find("next RP unavailable") != std::string::npos);

  auto ablate = std::vector<std::string>{"--out", (d / "abl").string(), "ablate"};
  ablate.insert(ablate.end(), data.begin(), data.end());
  for (const char* a : {"--classifier", "logistic_regression", "--iterations", "2", "--epochs", "30"})
    ablate.push_back(a);
  REQUIRE(run_cli(ablate).code == 0);
  const auto csv = read_text_file(d / "abl" / "ablation.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 19);
  CHECK(read_text_file(d / "abl" / "ablation.txt").find("Next-4") != std::string::npos);

  const auto rep = run_cli({"report", (d / "eval" / "report.json").string()});
  REQUIRE(rep.code == 0);
  CHECK(rep.out.find("5 iterations x 4 folds") != std::string::npos);
}

TEST_CASE("config file supplies defaults and flags win") {
  testing::TempDir d("cli_config");
  write_text_file(d / "run.ini", "seed = 9\n[synth]\nrunners = 12\nframes = 0\n");
  REQUIRE(run_cli({"--config", (d / "run.ini").string(), "--out", d.path().string(), "synth"}).code == 0);
  const auto counted = run_cli({"--json", "--out", (d / "ds").string(), "dataset", "--embeddings",
                                (d / "embeddings.jsonl").string(), "--splits", (d / "splits.csv").string(), "--rp",
                                "3"});
  CHECK(value_of(json_lines(counted.out), "examples") == 12);
  REQUIRE(run_cli({"--config", (d / "run.ini").string(), "--out", (d / "o").string(), "synth", "--runners", "20"})
              .code == 0);
  const auto bigger = run_cli({"--json", "--out", (d / "ds2").string(), "dataset", "--embeddings",
                               (d / "o" / "embeddings.jsonl").string(), "--splits", (d / "o" / "splits.csv").string(),
                               "--rp", "3"});
  CHECK(value_of(json_lines(bigger.out), "examples") == 20);
}

TEST_CASE("the executable reports failures through its exit code") {
  const std::string exe = RUNPERF_EXE;
  CHECK(std::system((exe + " --help > /dev/null").c_str()) == 0);
  CHECK(std::system((exe + " report /nonexistent/report.json > /dev/null 2>&1").c_str()) != 0);
  CHECK(std::system((exe + " frobnicate > /dev/null 2>&1").c_str()) != 0);
}
