#include <cmath>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "runperf/dataio.hpp"
#include "runperf/synthetic.hpp"
#include "test_util.hpp"

using namespace runperf;

namespace {

std::string logits_json(std::size_t n, double value = 0.25) {
  std::string s = "[";
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += ',';
    s += std::to_string(value);
  }
  return s + "]";
}

std::string clip_line(const std::string& runner, int rp, const std::string& mode, std::size_t n = kLogitsDim) {
  return R"({"runner":")" + runner + R"(","rp":)" + std::to_string(rp) + R"(,"mode":")" + mode +
         R"(","logits":)" + logits_json(n) + "}";
}

std::vector<ClipRecord> parse_clips(const std::string& text) {
  std::istringstream in(text);
  return read_embeddings(in);
}

std::vector<SplitRecord> parse_splits(const std::string& text) {
  std::istringstream in(text);
  return read_split_times(in);
}

}  // namespace

TEST_CASE("one valid embedding line gives one record") {
  const auto recs = parse_clips(clip_line("r001", 3, "raw") + "\n");
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].runner == "r001");
  CHECK(recs[0].rp == 3);
  CHECK(recs[0].mode == ContextMode::kRaw);
  CHECK(recs[0].logits.size() == 400);
  CHECK(recs[0].logits[17] == doctest::Approx(0.25));
}

TEST_CASE("embedding with 399 logits names the expected length and the line") {
  const std::string text = clip_line("a", 3, "raw") + "\n" + clip_line("b", 3, "raw", 399) + "\n";
  CHECK_THROWS_WITH_AS(parse_clips(text), doctest::Contains("line 2: expected 400 logits, got 399"), Error);
}

TEST_CASE("embedding errors") {
  SUBCASE("duplicate key") {
    const std::string text = clip_line("a", 3, "bb") + "\n" + clip_line("a", 3, "bb") + "\n";
    CHECK_THROWS_WITH_AS(parse_clips(text), doctest::Contains("line 2: duplicate record"), Error);
  }
  SUBCASE("same runner in another mode is fine") {
    const std::string text = clip_line("a", 3, "bb") + "\n" + clip_line("a", 3, "vibe") + "\n";
    CHECK(parse_clips(text).size() == 2);
  }
  SUBCASE("malformed json") {
    CHECK_THROWS_WITH_AS(parse_clips("\n{not json\n"), doctest::Contains("line 2: malformed JSON"), Error);
  }
  SUBCASE("unknown mode") {
    CHECK_THROWS_WITH_AS(parse_clips(clip_line("a", 3, "rgb")), doctest::Contains("unknown context mode"), Error);
  }
  SUBCASE("missing field") {
    CHECK_THROWS_WITH_AS(parse_clips(R"({"runner":"a","rp":3,"mode":"raw"})"),
                         doctest::Contains("missing field 'logits'"), Error);
  }
  SUBCASE("overflowing value") {
    std::string line = clip_line("a", 3, "raw");
    line.replace(line.find("0.250000"), 8, "1e39");
    CHECK_THROWS_WITH_AS(parse_clips(line), doctest::Contains("non-finite logit"), Error);
  }
}

TEST_CASE("embeddings keep file order and skip blank lines") {
  const std::string text = clip_line("z", 5, "vibe") + "\r\n\n" + clip_line("a", 3, "raw") + "\n";
  const auto recs = parse_clips(text);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].runner == "z");
  CHECK(recs[1].runner == "a");
}

TEST_CASE("a file of RP3 records matching the reference annotation count") {
  SynthConfig cfg;
  cfg.runners = 203;
  cfg.rps = {3};
  cfg.frames = 0;
  const auto ds = generate_synthetic(cfg, 5);
  testing::TempDir dir("dataio");
  save_embeddings(dir / "e.jsonl", ds.clips);
  const auto back = load_embeddings(dir / "e.jsonl");
  CHECK(back.size() == 203);
  CHECK(back == ds.clips);
}

TEST_CASE("text and binary embeddings round-trip exactly") {
  SynthConfig cfg;
  cfg.runners = 12;
  cfg.modes = {ContextMode::kRaw, ContextMode::kBoundingBox, ContextMode::kVibe};
  cfg.frames = 0;
  const auto ds = generate_synthetic(cfg, 9);
  testing::TempDir dir("dataio");
  save_embeddings(dir / "e.jsonl", ds.clips);
  save_embeddings_binary(dir / "e.bin", ds.clips);
  CHECK(load_embeddings(dir / "e.jsonl") == ds.clips);
  CHECK(load_embeddings_binary(dir / "e.bin") == ds.clips);

  std::ofstream(dir / "bad.bin") << "RPEMB";
  CHECK_THROWS_AS(load_embeddings_binary(dir / "bad.bin"), Error);
  CHECK_THROWS_WITH_AS(load_embeddings(dir / "missing.jsonl"), doctest::Contains("cannot open"), Error);
}

TEST_CASE("split times parse") {
  const auto s = parse_splits("runner,rp,seconds\nr1,3,28200\n");
  REQUIRE(s.size() == 1);
  CHECK(s[0] == SplitRecord{"r1", 3, 28200.0});
}

TEST_CASE("split time errors") {
  CHECK_THROWS_WITH_AS(parse_splits("runner,rp,seconds\nr1,3,30000\nr1,4,29000\n"),
                       doctest::Contains("split time at rp 4 is not later than at rp 3"), Error);
  CHECK_THROWS_WITH_AS(parse_splits("runner,rp,seconds\nr1,3,0\n"), doctest::Contains("line 2: split time must be positive"),
                       Error);
  CHECK_THROWS_WITH_AS(parse_splits("runner,rp,seconds\nr1,3,-5\n"), doctest::Contains("must be positive"), Error);
  CHECK_THROWS_WITH_AS(parse_splits("runner,rp,seconds\nr1,3,100\nr1,3,200\n"), doctest::Contains("two split times"),
                       Error);
  CHECK_THROWS_WITH_AS(parse_splits("name,rp,seconds\n"), doctest::Contains("expected header"), Error);
  CHECK_THROWS_WITH_AS(parse_splits("runner,rp,seconds\nr1,x,100\n"), doctest::Contains("cannot parse rp"), Error);
}

TEST_CASE("winner-to-last spread of 13 h to 30 h is accepted") {
  const auto s = parse_splits("runner,rp,seconds\nfast,5,46800\nslow,5,108000\n");
  CHECK(s.size() == 2);
}

TEST_CASE("split times round-trip") {
  SynthConfig cfg;
  cfg.runners = 40;
  cfg.frames = 0;
  const auto ds = generate_synthetic(cfg, 3);
  std::stringstream ss;
  write_split_times(ss, ds.splits);
  CHECK(read_split_times(ss) == ds.splits);
}

TEST_CASE("detections are normalised and validated") {
  std::istringstream ok(R"({"frame":0,"bbox":[10,20,4,8],"conf":0.9,"feat":[3,4]})");
  const auto d = read_detections(ok);
  REQUIRE(d.size() == 1);
  CHECK(d[0].feature[0] == doctest::Approx(0.6));
  CHECK(d[0].feature[1] == doctest::Approx(0.8));

  auto fails = [](const std::string& text, const char* what) {
    std::istringstream in(text);
    CHECK_THROWS_WITH_AS(read_detections(in), doctest::Contains(what), Error);
  };
  fails(R"({"frame":0,"bbox":[10,20,-4,8],"conf":0.9,"feat":[1]})", "width and height must be positive");
  fails(R"({"frame":0,"bbox":[10,20,4,8],"conf":1.5,"feat":[1]})", "conf must lie in [0,1]");
  fails(R"({"frame":0,"bbox":[10,20,4,8],"conf":0.5,"feat":[0,0]})", "zero or non-finite norm");
  fails(R"({"frame":0,"bbox":[10,20,4],"conf":0.5,"feat":[1]})", "bbox must have 4 numbers");
  fails("{\"frame\":0,\"bbox\":[1,1,1,1],\"conf\":0.5,\"feat\":[1,0]}\n"
        "{\"frame\":1,\"bbox\":[1,1,1,1],\"conf\":0.5,\"feat\":[1]}",
        "line 2: expected feature dimension 2, got 1");

  std::istringstream wrong_dim(R"({"frame":0,"bbox":[10,20,4,8],"conf":0.9,"feat":[3,4]})");
  CHECK_THROWS_AS(read_detections(wrong_dim, 128), Error);
}

TEST_CASE("synthetic detections have unit-norm features and round-trip") {
  SynthConfig cfg;
  cfg.runners = 4;
  cfg.frames = 20;
  const auto ds = generate_synthetic(cfg, 1);
  for (const auto& d : ds.detections) {
    double norm = 0.0;
    for (double v : d.feature) norm += v * v;
    CHECK(std::abs(std::sqrt(norm) - 1.0) <= 1e-6);
    CHECK(d.feature.size() == kDefaultFeatureDim);
  }
  std::stringstream ss;
  write_detections(ss, ds.detections);
  const auto back = read_detections(ss, kDefaultFeatureDim);
  REQUIRE(back.size() == ds.detections.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].frame == ds.detections[i].frame);
    CHECK(back[i].bbox == ds.detections[i].bbox);
    CHECK(back[i].confidence == ds.detections[i].confidence);
  }
  const auto frames = group_by_frame(back);
  CHECK(frames.size() == 20);
  CHECK(frames[7].size() == 2);
}

TEST_CASE("reference recording points") {
  const auto rps = reference_recording_points();
  REQUIRE(rps.size() == 5);
  CHECK(rps[2] == RPInfo{3, 84.2, "07:50", 667872, 203});
  CHECK(rps[3] == RPInfo{4, 110.5, "10:20", 1001208, 139});
  CHECK(rps[4] == RPInfo{5, 124.5, "11:20", 1462056, 114});

  std::stringstream ss;
  write_rp_info(ss, rps);
  CHECK(read_rp_info(ss) == rps);

  std::istringstream bad("location,km,start_rec_time,footage_frames,annotated_runners\nRP3,84.2,07:50,1,1\nRP4,80,10:20,1,1\n");
  CHECK_THROWS_WITH_AS(read_rp_info(bad), doctest::Contains("km must increase"), Error);
  std::istringstream bad_time("location,km,start_rec_time,footage_frames,annotated_runners\nRP3,84.2,7h50,1,1\n");
  CHECK_THROWS_WITH_AS(read_rp_info(bad_time), doctest::Contains("hh:mm"), Error);
}

TEST_CASE("mask_context") {
  FrameBuffer frame(4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x)
      for (int c = 0; c < 3; ++c) frame.at(x, y, c) = static_cast<std::uint8_t>(1 + x + 4 * y + 16 * c);

  SUBCASE("whole frame is identity") { CHECK(mask_context(frame, {2, 2, 4, 4}, 0) == frame); }

  SUBCASE("zero width gives all fill") {
    const auto out = mask_context(frame, {2, 2, 0, 4}, 7);
    for (auto v : out.pixels) CHECK(v == 7);
  }

  SUBCASE("2x2 centre keeps 4 pixels and fills 12") {
    const auto out = mask_context(frame, {2, 2, 2, 2}, 0);
    int filled = 0;
    for (int y = 0; y < 4; ++y) {
      for (int x = 0; x < 4; ++x) {
        const bool inside = x >= 1 && x <= 2 && y >= 1 && y <= 2;
        if (!inside) {
          ++filled;
          for (int c = 0; c < 3; ++c) CHECK(out.at(x, y, c) == 0);
        } else {
          for (int c = 0; c < 3; ++c) CHECK(out.at(x, y, c) == frame.at(x, y, c));
        }
      }
    }
    CHECK(filled == 12);
  }

  SUBCASE("idempotent and clipped to the frame") {
    const BBox box{0.5, 3.5, 3, 5};
    const auto once = mask_context(frame, box, 9);
    CHECK(mask_context(once, box, 9) == once);
    CHECK(once.width == 4);
    CHECK(once.height == 4);
    CHECK(once.pixels.size() == 48);
  }
}

TEST_CASE("synthetic generator determinism") {
  SynthConfig cfg;
  cfg.runners = 30;
  cfg.frames = 30;
  const auto a = generate_synthetic(cfg, 42);
  const auto b = generate_synthetic(cfg, 42);
  const auto c = generate_synthetic(cfg, 43);
  CHECK(a.clips == b.clips);
  CHECK(a.splits == b.splits);
  REQUIRE(a.detections.size() == b.detections.size());
  std::stringstream sa, sb, sc;
  write_detections(sa, a.detections);
  write_detections(sb, b.detections);
  write_detections(sc, c.detections);
  CHECK(sa.str() == sb.str());
  CHECK(sa.str() != sc.str());
  CHECK(a.detections[0].bbox != c.detections[0].bbox);
}

TEST_CASE("synthetic config validation") {
  SynthConfig cfg;
  cfg.categories = 1;
  CHECK_THROWS_AS(validate(cfg), Error);
  cfg.categories = 4;
  cfg.runners = 3;
  CHECK_THROWS_AS(validate(cfg), Error);
  cfg.runners = 16;
  CHECK_NOTHROW(validate(cfg));
}

TEST_CASE("synthetic split times are strictly increasing per runner and lie in the race window") {
  SynthConfig cfg;
  cfg.runners = 100;
  cfg.frames = 0;
  const auto ds = generate_synthetic(cfg, 8);
  std::stringstream ss;
  write_split_times(ss, ds.splits);
  CHECK_NOTHROW(read_split_times(ss));
  for (const auto& s : ds.splits) {
    CHECK(s.seconds > 0.0);
    CHECK(s.seconds < 30.0 * 3600.0);
  }
}
