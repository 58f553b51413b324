#include "runperf/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace runperf {

using nlohmann::json;

namespace {

json classifier_json(const ClassifierSpec& c) {
  json j;
  j["kind"] = std::string(to_string(c.kind));
  switch (c.kind) {
    case ModelKind::kBoosted:
      j["n_rounds"] = c.boosted.n_rounds;
      j["max_depth"] = c.boosted.max_depth;
      j["learning_rate"] = c.boosted.learning_rate;
      j["l2"] = c.boosted.l2;
      j["min_samples_leaf"] = c.boosted.min_samples_leaf;
      j["min_child_hessian"] = c.boosted.min_child_hessian;
      j["feature_fraction"] = c.boosted.feature_fraction;
      j["loss"] = "softmax_cross_entropy";
      break;
    case ModelKind::kDecisionTree:
      j["max_depth"] = c.tree.max_depth;
      j["min_samples_leaf"] = c.tree.min_samples_leaf;
      break;
    case ModelKind::kRandomForest:
      j["n_trees"] = c.forest.n_trees;
      j["max_depth"] = c.forest.max_depth;
      j["min_samples_leaf"] = c.forest.min_samples_leaf;
      j["max_features"] = c.forest.max_features;
      j["bootstrap"] = c.forest.bootstrap;
      break;
    case ModelKind::kLogisticRegression:
    case ModelKind::kLinearSvm:
      j["epochs"] = c.linear.epochs;
      j["learning_rate"] = c.linear.learning_rate;
      j["l2"] = c.linear.l2;
      break;
  }
  return j;
}

json confusion_json(const ConfusionMatrix& m) {
  json rows = json::array();
  for (int t = 1; t <= m.categories(); ++t) {
    json row = json::array();
    for (int p = 1; p <= m.categories(); ++p) row.push_back(m.at(t, p));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string num(double v, const char* fmt = "%.17g") {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

}  // namespace

std::string report_to_json(const EvalReport& r, int indent) {
  json j;
  j["format"] = "runperf-report";
  j["version"] = 1;
  json cfg;
  cfg["iterations"] = r.config.iterations;
  cfg["folds"] = r.config.folds;
  cfg["master_seed"] = r.config.master_seed;
  cfg["sample_std"] = r.config.sample_std;
  cfg["classifier"] = classifier_json(r.config.classifier);
  cfg["tags"] = r.config.tags;
  j["config"] = std::move(cfg);
  j["categories"] = r.categories;
  j["examples"] = r.examples;
  j["accuracy"] = {{"mean", r.accuracy_mean},           {"std", r.accuracy_std},
                   {"fold_std", r.fold_accuracy_std},   {"min", r.accuracy_min},
                   {"max", r.accuracy_max},             {"pooled", r.pooled_accuracy},
                   {"per_iteration", r.iteration_accuracies}, {"per_fold", r.fold_accuracies}};
  j["confusion"] = confusion_json(r.confusion);
  json per_iter = json::array();
  for (const auto& m : r.iteration_confusion) per_iter.push_back(confusion_json(m));
  j["iteration_confusion"] = std::move(per_iter);
  json roc = json::array();
  for (std::size_t k = 0; k < r.roc.size(); ++k) {
    json curve;
    curve["positive_class"] = r.roc.size() == 1 ? 2 : static_cast<int>(k) + 1;
    curve["auc"] = r.roc[k].auc;
    json pts = json::array();
    for (const auto& p : r.roc[k].points) {
      pts.push_back({p.fpr, p.tpr, std::isinf(p.threshold) ? json(nullptr) : json(p.threshold)});
    }
    curve["points"] = std::move(pts);
    roc.push_back(std::move(curve));
  }
  j["roc"] = std::move(roc);
  j["auc"] = r.auc;
  return j.dump(indent) + "\n";
}

std::string confusion_csv(const ConfusionMatrix& m) {
  std::ostringstream out;
  out << "true\\pred";
  for (int p = 1; p <= m.categories(); ++p) out << ',' << p;
  out << '\n';
  for (int t = 1; t <= m.categories(); ++t) {
    out << t;
    for (int p = 1; p <= m.categories(); ++p) out << ',' << m.at(t, p);
    out << '\n';
  }
  return out.str();
}

std::string roc_csv(const std::vector<RocCurve>& curves) {
  std::ostringstream out;
  const bool binary = curves.size() == 1;
  out << (binary ? "fpr,tpr,threshold\n" : "class,fpr,tpr,threshold\n");
  for (std::size_t k = 0; k < curves.size(); ++k) {
    for (const auto& p : curves[k].points) {
      if (!binary) out << k + 1 << ',';
      out << num(p.fpr) << ',' << num(p.tpr) << ',' << num(p.threshold) << '\n';
    }
  }
  return out.str();
}

std::string roc_svg(const std::vector<RocCurve>& curves) {
  constexpr double size = 400.0, pad = 40.0;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"480\" viewBox=\"0 0 480 480\">\n"
      << "<rect x=\"40\" y=\"40\" width=\"400\" height=\"400\" fill=\"none\" stroke=\"black\"/>\n"
      << "<line x1=\"40\" y1=\"440\" x2=\"440\" y2=\"40\" stroke=\"gray\" stroke-dasharray=\"4\"/>\n"
      << "<text x=\"240\" y=\"470\" text-anchor=\"middle\" font-size=\"14\">False positive rate</text>\n"
      << "<text x=\"14\" y=\"240\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 14 240)\">"
      << "True positive rate</text>\n";
  for (std::size_t k = 0; k < curves.size(); ++k) {
    out << "<polyline fill=\"none\" stroke=\"" << kPalette[k % 4] << "\" stroke-width=\"2\" points=\"";
    for (const auto& p : curves[k].points) {
      out << num(pad + p.fpr * size, "%.2f") << ',' << num(pad + (1.0 - p.tpr) * size, "%.2f") << ' ';
    }
    out << "\"/>\n";
    out << "<text x=\"300\" y=\"" << 400 - 18 * static_cast<int>(k) << "\" font-size=\"12\" fill=\"" << kPalette[k % 4]
        << "\">" << (curves.size() == 1 ? std::string("AUC") : "class " + std::to_string(k + 1) + " AUC") << " = "
        << num(curves[k].auc, "%.3f") << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string confusion_svg(const ConfusionMatrix& m) {
  const int C = m.categories();
  const double cell = 320.0 / C;
  long long peak = 1;
  for (int t = 1; t <= C; ++t) {
    for (int p = 1; p <= C; ++p) peak = std::max(peak, m.at(t, p));
  }
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"400\" height=\"400\" viewBox=\"0 0 400 400\">\n"
      << "<text x=\"220\" y=\"30\" text-anchor=\"middle\" font-size=\"14\">Predicted</text>\n"
      << "<text x=\"20\" y=\"220\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 20 220)\">True</text>\n";
  for (int t = 1; t <= C; ++t) {
    for (int p = 1; p <= C; ++p) {
      const double shade = static_cast<double>(m.at(t, p)) / static_cast<double>(peak);
      const int level = 255 - static_cast<int>(std::lround(200.0 * shade));
      const double x = 60.0 + (p - 1) * cell;
      const double y = 60.0 + (t - 1) * cell;
      out << "<rect x=\"" << num(x, "%.2f") << "\" y=\"" << num(y, "%.2f") << "\" width=\"" << num(cell, "%.2f")
          << "\" height=\"" << num(cell, "%.2f") << "\" fill=\"rgb(" << level << ',' << level << ",255)\" stroke=\"black\"/>\n"
          << "<text x=\"" << num(x + cell / 2, "%.2f") << "\" y=\"" << num(y + cell / 2, "%.2f")
          << "\" text-anchor=\"middle\" font-size=\"14\">" << m.at(t, p) << "</text>\n";
    }
  }
  out << "</svg>\n";
  return out.str();
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  out << "task,categories,mode,mean,std,cell\n";
  for (const auto& r : rows) {
    out << to_string(r.key.task) << ',' << r.key.categories << ',' << to_string(r.key.mode) << ',';
    if (r.mean && r.std) {
      out << num(100.0 * *r.mean, "%.4f") << ',' << num(100.0 * *r.std, "%.4f") << ',';
    } else {
      out << ",,";
    }
    out << format_cell(r) << '\n';
  }
  return out.str();
}

std::string ablation_grid(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-12s| %-14s| %-14s| %-14s\n", "RP-#Categ.", "Raw", "BB", "VIBE");
  out << buf;
  for (Task task : {Task::kCurrent, Task::kNext}) {
    for (int categories : {2, 3, 4}) {
      std::string cells[3] = {"n/a", "n/a", "n/a"};
      for (const auto& r : rows) {
        if (r.key.task == task && r.key.categories == categories) {
          cells[static_cast<int>(r.key.mode)] = format_cell(r);
        }
      }
      const std::string label = std::string(task == Task::kCurrent ? "Curr-" : "Next-") + std::to_string(categories);
      // "±" is two bytes but one column wide.
      const auto pad = [](const std::string& s) {
        const std::size_t width = s.size() - (s.find("\xC2\xB1") != std::string::npos ? 1 : 0);
        return s + std::string(width < 14 ? 14 - width : 0, ' ');
      };
      out << label << std::string(12 - label.size(), ' ') << "| " << pad(cells[0]) << "| " << pad(cells[1]) << "| "
          << cells[2] << '\n';
    }
  }
  return out.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::filesystem::path> write_report_files(const EvalReport& report, const std::filesystem::path& dir,
                                                      bool svg) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  const auto put = [&](const char* name, const std::string& text) {
    write_text_file(dir / name, text);
    written.push_back(dir / name);
  };
  put("report.json", report_to_json(report));
  put("confusion.csv", confusion_csv(report.confusion));
  if (!report.roc.empty()) put("roc.csv", roc_csv(report.roc));
  if (svg) {
    if (!report.roc.empty()) put("roc.svg", roc_svg(report.roc));
    put("confusion.svg", confusion_svg(report.confusion));
  }
  return written;
}

std::string summarize_report_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("report: malformed JSON: ") + e.what());
  }
  if (j.value("format", "") != "runperf-report") throw Error("report: not a runperf report");
  std::ostringstream out;
  const auto& acc = j.at("accuracy");
  char buf[128];
  std::snprintf(buf, sizeof buf, "accuracy %.1f \xC2\xB1 %.1f %% (fold std %.1f, pooled %.1f %%)\n",
                100.0 * acc.at("mean").get<double>(), 100.0 * acc.at("std").get<double>(),
                100.0 * acc.at("fold_std").get<double>(), 100.0 * acc.at("pooled").get<double>());
  const auto& cfg = j.at("config");
  out << "classifier " << cfg.at("classifier").at("kind").get<std::string>() << ", " << cfg.at("iterations")
      << " iterations x " << cfg.at("folds") << " folds, seed " << cfg.at("master_seed") << '\n';
  for (const auto& [k, v] : cfg.at("tags").items()) out << k << ": " << v.get<std::string>() << '\n';
  out << "examples " << j.at("examples") << ", categories " << j.at("categories") << '\n' << buf;
  std::snprintf(buf, sizeof buf, "auc %.4f\n", j.at("auc").get<double>());
  out << buf << "confusion (rows = true category):\n";
  for (const auto& row : j.at("confusion")) {
    for (const auto& v : row) {
      std::snprintf(buf, sizeof buf, "%8lld", v.get<long long>());
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace runperf
