#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "runperf/evalharness.hpp"

namespace runperf {

/// Full report as JSON text (sorted keys, deterministic).
std::string report_to_json(const EvalReport& report, int indent = 2);

std::string confusion_csv(const ConfusionMatrix& confusion);
std::string roc_csv(const std::vector<RocCurve>& curves);
std::string roc_svg(const std::vector<RocCurve>& curves);
std::string confusion_svg(const ConfusionMatrix& confusion);

/// Long form, one row per (task, C, mode).
std::string ablation_csv(const std::vector<AblationRow>& rows);
/// Grid with Curr-2 .. Next-4 rows and Raw | BB | VIBE columns.
std::string ablation_grid(const std::vector<AblationRow>& rows);

/// Writes report.json, confusion.csv, roc.csv and, when `svg` is set,
/// roc.svg and confusion.svg. Returns the written paths.
std::vector<std::filesystem::path> write_report_files(const EvalReport& report, const std::filesystem::path& dir,
                                                      bool svg = true);

/// Human-readable summary of a report.json document.
std::string summarize_report_json(const std::string& json_text);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace runperf
