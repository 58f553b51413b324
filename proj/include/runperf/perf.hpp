#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "runperf/dataio.hpp"

namespace runperf {

/// One training example: an embedding and its 1-based performance category.
struct LabeledExample {
  std::vector<float> x;
  int label = 1;
  std::string runner;
  int rp = 0;
  ContextMode mode = ContextMode::kRaw;
};

/// Examples of one RP (or the union of several) sharing a category count.
struct DatasetSlice {
  std::optional<int> rp;  // empty for a union of RPs
  int categories = 2;
  std::vector<LabeledExample> examples;

  std::vector<int> labels() const;
  std::vector<std::size_t> class_counts() const;
};

/// Maps split times at one RP to categories by rank: runners are ordered by
/// (time, runner id) and rank r of n falls in category floor(r*C/n) + 1, so
/// faster runners get lower categories and class sizes differ by at most one.
std::map<std::string, int> discretize(const std::vector<std::pair<std::string, double>>& times, int categories);

/// Examples at `rp` and `mode`, labelled from split times at the same RP.
/// Quantiles are taken over the runners that have a clip there.
DatasetSlice build_current(const std::vector<ClipRecord>& records, const std::vector<SplitRecord>& splits, int rp,
                           ContextMode mode, int categories);

/// Embeddings at `rp` labelled by the category at the next RP in `rp_order`.
/// Only runners with both a clip at `rp` and a split at the next RP are kept,
/// and the quantiles are computed over that population.
DatasetSlice build_next(const std::vector<ClipRecord>& records, const std::vector<SplitRecord>& splits, int rp,
                        ContextMode mode, int categories, const std::vector<int>& rp_order);

/// Union of per-RP slices over `rps` (each labelled independently). For the
/// next task the last RP of `rps` contributes nothing.
DatasetSlice build_union(const std::vector<ClipRecord>& records, const std::vector<SplitRecord>& splits,
                         const std::vector<int>& rps, ContextMode mode, int categories, Task task);

/// Sorted distinct RP ids present in split records.
std::vector<int> rp_order_of(const std::vector<SplitRecord>& splits);

void write_dataset(std::ostream& out, const DatasetSlice& slice);
void save_dataset(const std::filesystem::path& path, const DatasetSlice& slice);

}  // namespace runperf
