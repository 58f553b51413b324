#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "runperf/evalharness.hpp"
#include "runperf/report_io.hpp"
#include "runperf/synthetic.hpp"
#include "runperf/tracker.hpp"

namespace runperf::cli {

using nlohmann::json;
namespace fs = std::filesystem;

std::uint64_t fnv1a64_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Either one JSON object per line or plain text, both on `out`.
class Log {
 public:
  Log(bool json_mode, std::ostream& out) : json_(json_mode), out_(out) {}

  void file(const fs::path& path) {
    const auto bytes = fs::file_size(path);
    const auto sum = hex64(fnv1a64_file(path));
    if (json_) {
      emit({{"event", "file"}, {"path", path.string()}, {"bytes", bytes}, {"fnv1a64", sum}});
    } else {
      out_ << "wrote " << path.string() << "  " << bytes << " bytes  fnv1a64 " << sum << '\n';
    }
  }

  void value(const std::string& name, const json& v) {
    if (json_) {
      emit({{"event", "value"}, {"name", name}, {"value", v}});
    } else {
      out_ << name << ": " << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
    }
  }

  void text(const std::string& event, const std::string& body) {
    if (json_) {
      emit({{"event", event}, {"text", body}});
    } else {
      out_ << body;
    }
  }

  void error(const std::string& message) {
    if (json_) emit({{"event", "error"}, {"message", message}});
  }

 private:
  void emit(const json& j) { out_ << j.dump() << '\n'; }

  bool json_;
  std::ostream& out_;
};

struct Globals {
  std::uint64_t seed = 0;
  std::string out = ".";
  bool json = false;
};

struct SynthOptions {
  SynthConfig cfg;
  std::vector<std::string> modes{"raw"};
};

struct TrackOptions {
  std::string detections;
  std::string seed_bbox;
  bool no_backup = false;
  TrackerConfig tracker;
};

struct DataOptions {
  std::string embeddings;
  std::string splits;
  std::string task = "current";
  int categories = 2;
  std::string mode = "raw";
  int rp = 0;  // 0 selects the union of every RP
};

struct EvalOptions {
  std::string classifier = "boosted";
  int iterations = 100;
  int folds = 4;
  int rounds = 200;
  int depth = 7;
  double learning_rate = 0.1;
  int trees = 100;
  int epochs = 300;
  bool sequential = false;
  int threads = 0;
  bool no_svg = false;
  bool sample_std = false;
  bool ablate = false;
};

BBox parse_bbox(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error("seed bbox: cannot parse '" + text + "', expected cx,cy,w,h");
    }
  }
  if (v.size() != 4) throw Error("seed bbox: expected 4 comma-separated numbers, got " + std::to_string(v.size()));
  if (!(v[2] > 0 && v[3] > 0)) throw Error("seed bbox: width and height must be positive");
  return {v[0], v[1], v[2], v[3]};
}

std::string bbox_text(const BBox& b) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g", b.cx, b.cy, b.w, b.h);
  return buf;
}

fs::path prepare_out(const Globals& g) {
  const fs::path dir(g.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error("cannot create output directory " + dir.string());
  return dir;
}

void cmd_synth(const Globals& g, SynthOptions opt, Log& log) {
  opt.cfg.modes.clear();
  for (const auto& m : opt.modes) opt.cfg.modes.push_back(parse_context_mode(m));
  const auto ds = generate_synthetic(opt.cfg, g.seed);
  const fs::path dir = prepare_out(g);
  std::vector<fs::path> files;
  save_embeddings(dir / "embeddings.jsonl", ds.clips);
  files.push_back(dir / "embeddings.jsonl");
  save_split_times(dir / "splits.csv", ds.splits);
  files.push_back(dir / "splits.csv");
  if (!ds.detections.empty()) {
    save_detections(dir / "detections.jsonl", ds.detections);
    files.push_back(dir / "detections.jsonl");
    write_text_file(dir / "seed_bbox.txt", bbox_text(ds.initial_boxes.front()) + "\n");
    files.push_back(dir / "seed_bbox.txt");
  }
  save_rp_info(dir / "rp_info.csv", reference_recording_points());
  files.push_back(dir / "rp_info.csv");

  json manifest = json::object();
  for (const auto& f : files) {
    manifest[f.filename().string()] = {{"bytes", fs::file_size(f)}, {"fnv1a64", hex64(fnv1a64_file(f))}};
  }
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
  files.push_back(dir / "manifest.json");
  for (const auto& f : files) log.file(f);
  log.value("runners", opt.cfg.runners);
  log.value("clips", ds.clips.size());
  log.value("detections", ds.detections.size());
}

std::string track_line(const TrackOutput& o) {
  json j;
  j["frame"] = o.frame;
  j["id"] = o.id;
  j["bbox"] = {o.bbox.cx, o.bbox.cy, o.bbox.w, o.bbox.h};
  j["source"] = o.source == TrackSource::kBackup ? "backup" : "match";
  return j.dump() + "\n";
}

void cmd_track(const Globals& g, TrackOptions opt, Log& log) {
  const auto detections = load_detections(opt.detections);
  if (detections.empty()) throw Error("track: " + opt.detections + " contains no detections");
  opt.tracker.seed_bbox = parse_bbox(opt.seed_bbox);
  const auto frames = group_by_frame(detections);

  Tracker tracker(opt.tracker);
  ConstantVelocityBackup backup;
  std::vector<TrackOutput> all;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const auto out = tracker.step(static_cast<int>(f), frames[f], opt.no_backup ? nullptr : &backup);
    all.insert(all.end(), out.begin(), out.end());
  }
  const int roi = tracker.runner_of_interest() ? *tracker.runner_of_interest()
                                               : select_runner_of_interest(tracker.tracks(), *opt.tracker.seed_bbox);

  const fs::path dir = prepare_out(g);
  std::string roi_text, all_text;
  std::size_t roi_frames = 0, backup_frames = 0;
  for (const auto& o : all) {
    const auto line = track_line(o);
    all_text += line;
    if (o.id == roi) {
      roi_text += line;
      ++roi_frames;
      backup_frames += o.source == TrackSource::kBackup;
    }
  }
  write_text_file(dir / "tracks.jsonl", roi_text);
  write_text_file(dir / "tracks_all.jsonl", all_text);
  log.file(dir / "tracks.jsonl");
  log.file(dir / "tracks_all.jsonl");
  log.value("frames", frames.size());
  log.value("runner_of_interest", roi);
  log.value("roi_frames", roi_frames);
  log.value("backup_frames", backup_frames);
  log.value("tracks", tracker.tracks().size());
}

struct LoadedData {
  std::vector<ClipRecord> clips;
  std::vector<SplitRecord> splits;
};

LoadedData load_data(const DataOptions& d) {
  return {load_embeddings(d.embeddings), load_split_times(d.splits)};
}

DatasetSlice build_slice(const LoadedData& data, Task task, int categories, ContextMode mode, int rp) {
  const auto order = rp_order_of(data.splits);
  if (rp > 0) {
    return task == Task::kCurrent ? build_current(data.clips, data.splits, rp, mode, categories)
                                  : build_next(data.clips, data.splits, rp, mode, categories, order);
  }
  std::set<int> with_clips;
  for (const auto& c : data.clips) {
    if (c.mode == mode) with_clips.insert(c.rp);
  }
  std::vector<int> rps;
  for (int r : order) {
    if (with_clips.count(r)) rps.push_back(r);
  }
  if (task == Task::kNext) {
    // The next task reads the label from the following RP in the split table.
    std::vector<int> keep;
    for (int r : rps) {
      const auto it = std::find(order.begin(), order.end(), r);
      if (it + 1 != order.end()) keep.push_back(r);
    }
    if (keep.empty()) throw Error("next RP unavailable for the selected recording points");
    DatasetSlice merged;
    merged.categories = categories;
    for (int r : keep) {
      auto part = build_next(data.clips, data.splits, r, mode, categories, order);
      for (auto& e : part.examples) merged.examples.push_back(std::move(e));
    }
    if (keep.size() == 1) merged.rp = keep.front();
    return merged;
  }
  if (rps.empty()) throw Error("no embeddings with mode " + std::string(to_string(mode)));
  return build_union(data.clips, data.splits, rps, mode, categories, Task::kCurrent);
}

ProtocolConfig protocol_of(const Globals& g, const EvalOptions& e) {
  ProtocolConfig c;
  c.iterations = e.iterations;
  c.folds = e.folds;
  c.master_seed = g.seed;
  c.sample_std = e.sample_std;
  c.classifier.kind = parse_model_kind(e.classifier);
  c.classifier.boosted.n_rounds = e.rounds;
  c.classifier.boosted.max_depth = e.depth;
  c.classifier.boosted.learning_rate = e.learning_rate;
  c.classifier.forest.n_trees = e.trees;
  c.classifier.linear.epochs = e.epochs;
  if (c.classifier.kind == ModelKind::kBoosted) c.classifier.boosted.validate();
  return c;
}

void write_ablation(const Globals& g, const LoadedData& data, const ProtocolConfig& base, Execution exec, Log& log) {
  std::map<AblationKey, std::optional<DatasetSlice>> cells;
  for (Task task : {Task::kCurrent, Task::kNext}) {
    for (int categories : {2, 3, 4}) {
      for (ContextMode mode : kAllContextModes) {
        try {
          cells[{task, categories, mode}] = build_slice(data, task, categories, mode, 0);
        } catch (const Error& e) {
          cells[{task, categories, mode}] = std::nullopt;
          log.value(std::string(to_string(task)) + "-" + std::to_string(categories) + "-" +
                        std::string(to_string(mode)),
                    std::string("n/a (") + e.what() + ")");
        }
      }
    }
  }
  const auto rows = ablation_table(cells, base, exec);
  const fs::path dir = prepare_out(g);
  write_text_file(dir / "ablation.csv", ablation_csv(rows));
  const auto grid = ablation_grid(rows);
  write_text_file(dir / "ablation.txt", grid);
  log.file(dir / "ablation.csv");
  log.file(dir / "ablation.txt");
  log.text("ablation", grid);
}

void cmd_dataset(const Globals& g, const DataOptions& d, Log& log) {
  const auto data = load_data(d);
  const auto slice = build_slice(data, parse_task(d.task), d.categories, parse_context_mode(d.mode), d.rp);
  const fs::path dir = prepare_out(g);
  save_dataset(dir / "dataset.jsonl", slice);
  log.file(dir / "dataset.jsonl");
  log.value("examples", slice.examples.size());
  log.value("class_counts", slice.class_counts());
}

void cmd_eval(const Globals& g, const DataOptions& d, const EvalOptions& e, Log& log) {
  const auto data = load_data(d);
  const Task task = parse_task(d.task);
  const ContextMode mode = parse_context_mode(d.mode);
  ProtocolConfig config = protocol_of(g, e);
  const auto exec = e.sequential ? Execution::kSequential : Execution::kParallel;

  const auto slice = build_slice(data, task, d.categories, mode, d.rp);
  config.tags = {{"task", std::string(to_string(task))},
                 {"categories", std::to_string(d.categories)},
                 {"mode", std::string(to_string(mode))},
                 {"rp", d.rp > 0 ? std::to_string(d.rp) : std::string("union")}};
  const EvalReport report = run_protocol(slice, config, exec, e.threads);
  for (const auto& f : write_report_files(report, prepare_out(g), !e.no_svg)) log.file(f);
  log.value("examples", report.examples);
  log.value("accuracy_mean", report.accuracy_mean);
  log.value("accuracy_std", report.accuracy_std);
  log.value("fold_accuracy_std", report.fold_accuracy_std);
  log.value("pooled_accuracy", report.pooled_accuracy);
  log.value("auc", report.auc);
  if (e.ablate) write_ablation(g, data, protocol_of(g, e), exec, log);
}

void add_data_options(CLI::App* cmd, DataOptions& d, bool cell) {
  cmd->add_option("--embeddings", d.embeddings, "embeddings.jsonl")->required()->check(CLI::ExistingFile);
  cmd->add_option("--splits", d.splits, "splits.csv")->required()->check(CLI::ExistingFile);
  if (!cell) return;
  cmd->add_option("--task", d.task, "current or next")->check(CLI::IsMember({"current", "next"}))->capture_default_str();
  cmd->add_option("--categories,-C", d.categories, "number of performance categories")
      ->check(CLI::Range(2, 64))
      ->capture_default_str();
  cmd->add_option("--mode", d.mode, "context mode: raw, bb or vibe")
      ->check(CLI::IsMember({"raw", "bb", "vibe"}))
      ->capture_default_str();
  cmd->add_option("--rp", d.rp, "recording point id; 0 uses the union of all RPs")->capture_default_str();
}

void add_eval_options(CLI::App* cmd, EvalOptions& e) {
  cmd->add_option("--classifier", e.classifier, "boosted, decision_tree, random_forest, logistic_regression, linear_svm")
      ->capture_default_str();
  cmd->add_option("--iterations", e.iterations, "cross-validation repetitions")->capture_default_str();
  cmd->add_option("--folds", e.folds, "folds per repetition")->capture_default_str();
  cmd->add_option("--rounds", e.rounds, "boosting rounds")->capture_default_str();
  cmd->add_option("--depth", e.depth, "boosted tree depth")->capture_default_str();
  cmd->add_option("--learning-rate", e.learning_rate, "boosting shrinkage")->capture_default_str();
  cmd->add_option("--trees", e.trees, "random forest size")->capture_default_str();
  cmd->add_option("--epochs", e.epochs, "linear model epochs")->capture_default_str();
  cmd->add_option("--threads", e.threads, "OpenMP threads, 0 for the default")->capture_default_str();
  cmd->add_flag("--sequential", e.sequential, "run iterations one after another");
  cmd->add_flag("--sample-std", e.sample_std, "report the n-1 standard deviation");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Runner performance toolkit: tracking, dataset building and evaluation"};
  app.name("runperf");
  app.set_config("--config", "", "INI file with option defaults; command-line flags win");
  app.require_subcommand(1);

  Globals g;
  app.add_option("--seed", g.seed, "master seed for all randomness")->capture_default_str();
  app.add_option("--out", g.out, "output directory")->capture_default_str();
  app.add_flag("--json", g.json, "emit a JSON line per event on standard output");

  SynthOptions synth;
  auto* s = app.add_subcommand("synth", "write a seeded synthetic dataset");
  s->add_option("--runners", synth.cfg.runners)->capture_default_str();
  s->add_option("--categories,-C", synth.cfg.categories)->capture_default_str();
  s->add_option("--separation", synth.cfg.separation, "class mean spacing in noise sigmas")->capture_default_str();
  s->add_option("--rps", synth.cfg.rps, "recording point ids")->capture_default_str();
  s->add_option("--modes", synth.modes, "context modes to emit")->capture_default_str();
  s->add_option("--flip-rate", synth.cfg.next_flip_rate, "label change rate between RPs")->capture_default_str();
  s->add_option("--attrition", synth.cfg.attrition, "drop-out rate between RPs")->capture_default_str();
  s->add_option("--informative-dims", synth.cfg.informative_dims)->capture_default_str();
  s->add_option("--frames", synth.cfg.frames, "detection frames, 0 for none")->capture_default_str();
  s->add_option("--track-runners", synth.cfg.track_runners)->capture_default_str();
  s->add_option("--dropout-start", synth.cfg.dropout_start)->capture_default_str();
  s->add_option("--dropout-length", synth.cfg.dropout_length)->capture_default_str();

  TrackOptions track;
  auto* t = app.add_subcommand("track", "track the runner of interest through detections");
  t->add_option("--detections", track.detections, "detections.jsonl")->required()->check(CLI::ExistingFile);
  t->add_option("--seed-bbox", track.seed_bbox, "cx,cy,w,h of the runner in the first frame")->required();
  t->add_flag("--no-backup", track.no_backup, "disable the single-object backup tracker");
  t->add_option("--max-age", track.tracker.max_age)->capture_default_str();
  t->add_option("--n-init", track.tracker.n_init)->capture_default_str();
  t->add_option("--max-cosine-distance", track.tracker.max_cosine_distance)->capture_default_str();

  DataOptions dataset_opts;
  auto* d = app.add_subcommand("dataset", "build a labelled dataset from embeddings and split times");
  add_data_options(d, dataset_opts, true);

  DataOptions eval_data;
  EvalOptions eval_opts;
  auto* e = app.add_subcommand("eval", "run repeated stratified cross-validation and write the report");
  add_data_options(e, eval_data, true);
  add_eval_options(e, eval_opts);
  e->add_flag("--no-svg", eval_opts.no_svg, "skip roc.svg and confusion.svg");
  e->add_flag("--ablate", eval_opts.ablate, "also evaluate the full task x categories x mode table");

  DataOptions ablate_data;
  EvalOptions ablate_opts;
  auto* a = app.add_subcommand("ablate", "evaluate the task x categories x mode table");
  add_data_options(a, ablate_data, false);
  add_eval_options(a, ablate_opts);

  std::string report_path;
  auto* r = app.add_subcommand("report", "summarize a report.json");
  r->add_option("input", report_path, "report.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    return app.exit(ex, out, err);
  }

  Log log(g.json, out);
  try {
    if (*s) cmd_synth(g, synth, log);
    if (*t) cmd_track(g, track, log);
    if (*d) cmd_dataset(g, dataset_opts, log);
    if (*e) cmd_eval(g, eval_data, eval_opts, log);
    if (*a) {
      const auto exec = ablate_opts.sequential ? Execution::kSequential : Execution::kParallel;
      write_ablation(g, load_data(ablate_data), protocol_of(g, ablate_opts), exec, log);
    }
    if (*r) log.text("report", summarize_report_json(read_text_file(report_path)));
  } catch (const std::exception& ex) {
    log.error(ex.what());
    err << "runperf: error: " << ex.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace runperf::cli
