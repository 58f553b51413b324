#include "runperf/perf.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "json.hpp"

namespace runperf {

std::vector<int> DatasetSlice::labels() const {
  std::vector<int> out;
  out.reserve(examples.size());
  for (const auto& e : examples) out.push_back(e.label);
  return out;
}

std::vector<std::size_t> DatasetSlice::class_counts() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(categories), 0);
  for (const auto& e : examples) ++counts[static_cast<std::size_t>(e.label - 1)];
  return counts;
}

std::map<std::string, int> discretize(const std::vector<std::pair<std::string, double>>& times, int categories) {
  if (categories < 1) throw Error("discretize: category count must be positive");
  const std::size_t n = times.size();
  if (n < static_cast<std::size_t>(categories)) {
    throw Error("discretize: " + std::to_string(n) + " runners cannot fill " + std::to_string(categories) +
                " categories");
  }
  for (const auto& [runner, t] : times) {
    if (!(t > 0.0)) throw Error("discretize: non-positive split time for runner '" + runner + "'");
  }
  std::vector<const std::pair<std::string, double>*> order;
  order.reserve(n);
  for (const auto& entry : times) order.push_back(&entry);
  std::sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
    return a->second != b->second ? a->second < b->second : a->first < b->first;
  });
  std::map<std::string, int> labels;
  for (std::size_t r = 0; r < n; ++r) {
    const int label = static_cast<int>(r * static_cast<std::size_t>(categories) / n) + 1;
    if (!labels.emplace(order[r]->first, label).second) {
      throw Error("discretize: runner '" + order[r]->first + "' appears twice");
    }
  }
  return labels;
}

namespace {

std::map<std::string, double> times_at(const std::vector<SplitRecord>& splits, int rp) {
  std::map<std::string, double> out;
  for (const auto& s : splits) {
    if (s.rp == rp) out[s.runner] = s.seconds;
  }
  return out;
}

std::vector<const ClipRecord*> clips_at(const std::vector<ClipRecord>& records, int rp, ContextMode mode) {
  std::vector<const ClipRecord*> out;
  for (const auto& r : records) {
    if (r.rp == rp && r.mode == mode) out.push_back(&r);
  }
  return out;
}

DatasetSlice assemble(const std::vector<const ClipRecord*>& clips, const std::map<std::string, int>& labels, int rp,
                      int categories) {
  DatasetSlice slice;
  slice.rp = rp;
  slice.categories = categories;
  for (const auto* clip : clips) {
    slice.examples.push_back({clip->logits, labels.at(clip->runner), clip->runner, clip->rp, clip->mode});
  }
  return slice;
}

}  // namespace

DatasetSlice build_current(const std::vector<ClipRecord>& records, const std::vector<SplitRecord>& splits, int rp,
                           ContextMode mode, int categories) {
  const auto clips = clips_at(records, rp, mode);
  if (clips.empty()) {
    throw Error("no embeddings at rp " + std::to_string(rp) + " with mode " + std::string(to_string(mode)));
  }
  const auto times = times_at(splits, rp);
  std::vector<std::pair<std::string, double>> population;
  for (const auto* clip : clips) {
    const auto it = times.find(clip->runner);
    if (it == times.end()) {
      throw Error("runner '" + clip->runner + "' has an embedding but no split time at rp " + std::to_string(rp));
    }
    population.emplace_back(clip->runner, it->second);
  }
  return assemble(clips, discretize(population, categories), rp, categories);
}

DatasetSlice build_next(const std::vector<ClipRecord>& records, const std::vector<SplitRecord>& splits, int rp,
                        ContextMode mode, int categories, const std::vector<int>& rp_order) {
  const auto pos = std::find(rp_order.begin(), rp_order.end(), rp);
  if (pos == rp_order.end() || std::next(pos) == rp_order.end()) {
    throw Error("next RP unavailable after rp " + std::to_string(rp));
  }
  const int next_rp = *std::next(pos);
  const auto next_times = times_at(splits, next_rp);
  std::vector<const ClipRecord*> kept;
  std::vector<std::pair<std::string, double>> population;
  for (const auto* clip : clips_at(records, rp, mode)) {
    const auto it = next_times.find(clip->runner);
    if (it == next_times.end()) continue;
    kept.push_back(clip);
    population.emplace_back(clip->runner, it->second);
  }
  if (kept.empty()) {
    throw Error("no runner with an embedding at rp " + std::to_string(rp) + " has a split time at rp " +
                std::to_string(next_rp));
  }
  return assemble(kept, discretize(population, categories), rp, categories);
}

DatasetSlice build_union(const std::vector<ClipRecord>& records, const std::vector<SplitRecord>& splits,
                         const std::vector<int>& rps, ContextMode mode, int categories, Task task) {
  DatasetSlice slice;
  slice.categories = categories;
  const auto order = rp_order_of(splits);
  for (int rp : rps) {
    if (task == Task::kNext) {
      const auto pos = std::find(order.begin(), order.end(), rp);
      if (pos == order.end() || std::next(pos) == order.end()) continue;
    }
    DatasetSlice part = task == Task::kCurrent ? build_current(records, splits, rp, mode, categories)
                                               : build_next(records, splits, rp, mode, categories, order);
    std::move(part.examples.begin(), part.examples.end(), std::back_inserter(slice.examples));
  }
  if (slice.examples.empty()) {
    throw Error(task == Task::kNext ? "next RP unavailable for the selected recording points"
                                    : "no examples for the selected recording points");
  }
  if (rps.size() == 1) slice.rp = rps.front();
  return slice;
}

std::vector<int> rp_order_of(const std::vector<SplitRecord>& splits) {
  std::set<int> ids;
  for (const auto& s : splits) ids.insert(s.rp);
  return {ids.begin(), ids.end()};
}

void write_dataset(std::ostream& out, const DatasetSlice& slice) {
  std::string line;
  char buf[32];
  for (const auto& e : slice.examples) {
    line = "{\"runner\":" + nlohmann::json(e.runner).dump() + ",\"rp\":" + std::to_string(e.rp) + ",\"mode\":\"" +
           std::string(to_string(e.mode)) + "\",\"label\":" + std::to_string(e.label) +
           ",\"C\":" + std::to_string(slice.categories) + ",\"logits\":[";
    for (std::size_t i = 0; i < e.x.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%s%.9g", i ? "," : "", static_cast<double>(e.x[i]));
      line += buf;
    }
    line += "]}\n";
    out << line;
  }
}

void save_dataset(const std::filesystem::path& path, const DatasetSlice& slice) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_dataset(out, slice);
}

}  // namespace runperf
