#include "runperf/split_search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include "runperf/common.hpp"

namespace runperf {

std::size_t Tree::leaf_of(std::span<const double> x) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return i;
}

int Tree::depth() const {
  int d = 0;
  for (const auto& n : nodes) d = std::max(d, n.depth);
  return d;
}

PresortedColumns::PresortedColumns(const FeatureMatrix& x)
    : rows_(x.rows), order_(x.rows * x.cols), values_(x.rows * x.cols) {
  std::vector<int> idx(x.rows);
  for (std::size_t f = 0; f < x.cols; ++f) {
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
      return x(static_cast<std::size_t>(a), f) < x(static_cast<std::size_t>(b), f);
    });
    std::copy(idx.begin(), idx.end(), order_.begin() + static_cast<std::ptrdiff_t>(f * rows_));
    for (std::size_t k = 0; k < rows_; ++k) values_[f * rows_ + k] = x(static_cast<std::size_t>(idx[k]), f);
  }
}

namespace {

struct NodeStats {
  double g = 0.0;
  double h = 0.0;
  std::size_t count = 0;
  double parent_score = 0.0;
  bool splittable = false;
};

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

// Running left-hand sums while scanning one node along one feature.
struct ScanState {
  double gl = 0.0;
  double hl = 0.0;
  std::size_t count = 0;
  double last = 0.0;
};

inline void consider(const ScanState& s, double value, const NodeStats& node, const GrowParams& p, int feature,
                     Split& best) {
  if (s.count == 0 || !(value > s.last)) return;
  const std::size_t right_count = node.count - s.count;
  const auto min_leaf = static_cast<std::size_t>(p.min_samples_leaf);
  if (s.count < min_leaf || right_count < min_leaf) return;
  const double gr = node.g - s.gl;
  const double hr = node.h - s.hl;
  if (s.hl < p.min_child_hessian || hr < p.min_child_hessian) return;
  const double gain = 0.5 * (s.gl * s.gl / (s.hl + p.l2) + gr * gr / (hr + p.l2) - node.parent_score);
  if (std::isnan(gain) || (best.feature >= 0 && !(gain > best.gain))) return;
  double threshold = 0.5 * (s.last + value);
  if (!(threshold < value)) threshold = s.last;
  best = {feature, threshold, gain};
}

inline void accumulate(ScanState& s, double value, const GradientPair& gp) {
  s.gl += gp.g;
  s.hl += gp.h;
  ++s.count;
  s.last = value;
}

// Chooses the better of two candidates under the fixed tie-break order; `b`
// comes from a later feature than `a`.
inline void merge(Split& a, const Split& b) {
  if (b.feature < 0) return;
  if (a.feature < 0 || b.gain > a.gain) a = b;
}

// Same candidates and arithmetic as consider()/accumulate() over one node's
// rows in value order. Prefix sums and masked gains go through `scratch`
// (3n doubles) so the gain loop vectorises.
Split scan_segment(const int* rows, const double* vals, std::size_t n, const NodeStats& node,
                   std::span<const GradientPair> grad, const GrowParams& p, int feature, double* scratch) {
  const auto min_leaf = static_cast<std::size_t>(p.min_samples_leaf);
  Split best;
  if (n < 2 * min_leaf) return best;
  double* gl = scratch;
  double* hl = scratch + n;
  double* gain = scratch + 2 * n;
  double sg = 0.0;
  double sh = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    gl[k] = sg;
    hl[k] = sh;
    const GradientPair& gp = grad[static_cast<std::size_t>(rows[k])];
    sg += gp.g;
    sh += gp.h;
  }
  const double total_g = node.g;
  const double total_h = node.h;
  const double parent = node.parent_score;
  const double l2 = p.l2;
  const double min_h = p.min_child_hessian;
  constexpr double kNone = -std::numeric_limits<double>::infinity();
  gain[0] = kNone;
#pragma omp simd
  for (std::size_t k = 1; k < n; ++k) {
    const double gr = total_g - gl[k];
    const double hr = total_h - hl[k];
    gain[k] = 0.5 * (gl[k] * gl[k] / (hl[k] + l2) + gr * gr / (hr + l2) - parent);
  }
#pragma omp simd
  for (std::size_t k = 1; k < n; ++k) {
    const bool ok = (vals[k] > vals[k - 1]) & (hl[k] >= min_h) & (total_h - hl[k] >= min_h);
    gain[k] = ok ? gain[k] : kNone;
  }
  const std::size_t last = n - min_leaf;
  std::size_t at = 0;
  double top = kNone;
  for (std::size_t k = std::max<std::size_t>(min_leaf, 1); k <= last; ++k) {
    if (gain[k] > top) {
      top = gain[k];
      at = k;
    }
  }
  if (at == 0) return best;
  double threshold = 0.5 * (vals[at - 1] + vals[at]);
  if (!(threshold < vals[at])) threshold = vals[at - 1];
  best = {feature, threshold, top};
  return best;
}

template <typename Finder>
Tree grow(const FeatureMatrix& x, std::span<const GradientPair> grad, const GrowParams& p, Finder&& find) {
  if (grad.size() != x.rows) throw Error("grow_tree: gradient count does not match row count");
  if (p.max_depth < 0 || p.min_samples_leaf < 1 || !(p.l2 >= 0.0)) throw Error("grow_tree: invalid parameters");
  Tree tree;
  tree.nodes.push_back({});
  std::vector<int> node_of(x.rows, 0);
  std::vector<int> frontier{0};

  while (!frontier.empty()) {
    std::vector<int> slot_of(tree.nodes.size(), -1);
    for (std::size_t s = 0; s < frontier.size(); ++s) slot_of[static_cast<std::size_t>(frontier[s])] = static_cast<int>(s);
    std::vector<NodeStats> stats(frontier.size());
    for (std::size_t r = 0; r < x.rows; ++r) {
      const int node = node_of[r];
      if (node < 0) continue;
      auto& st = stats[static_cast<std::size_t>(slot_of[static_cast<std::size_t>(node)])];
      st.g += grad[r].g;
      st.h += grad[r].h;
      ++st.count;
    }
    for (std::size_t s = 0; s < frontier.size(); ++s) {
      auto& st = stats[s];
      st.parent_score = st.g * st.g / (st.h + p.l2);
      st.splittable = tree.nodes[static_cast<std::size_t>(frontier[s])].depth < p.max_depth &&
                      st.count >= 2 * static_cast<std::size_t>(p.min_samples_leaf);
    }

    const std::vector<Split> best = find(node_of, slot_of, stats);

    std::vector<int> next;
    for (std::size_t s = 0; s < frontier.size(); ++s) {
      const auto node = static_cast<std::size_t>(frontier[s]);
      const Split& b = best[s];
      if (stats[s].splittable && b.feature >= 0 && b.gain >= p.min_split_gain) {
        const int depth = tree.nodes[node].depth + 1;
        const int left = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({-1, 0.0, -1, -1, depth});
        tree.nodes.push_back({-1, 0.0, -1, -1, depth});
        tree.nodes[node].feature = b.feature;
        tree.nodes[node].threshold = b.threshold;
        tree.nodes[node].left = left;
        tree.nodes[node].right = left + 1;
        next.push_back(left);
        next.push_back(left + 1);
      }
    }
    tree.values.resize(tree.nodes.size(), 0.0);
    for (std::size_t s = 0; s < frontier.size(); ++s) {
      const auto node = static_cast<std::size_t>(frontier[s]);
      if (tree.nodes[node].feature < 0) tree.values[node] = -stats[s].g / (stats[s].h + p.l2) * p.leaf_scale;
    }
    for (std::size_t r = 0; r < x.rows; ++r) {
      const int node = node_of[r];
      if (node < 0) continue;
      const auto& n = tree.nodes[static_cast<std::size_t>(node)];
      node_of[r] = n.feature < 0 ? -1 : (x(r, static_cast<std::size_t>(n.feature)) <= n.threshold ? n.left : n.right);
    }
    frontier = std::move(next);
  }
  tree.values.resize(tree.nodes.size(), 0.0);
  return tree;
}

}  // namespace

Tree grow_tree(const FeatureMatrix& x, const PresortedColumns& sorted, std::span<const GradientPair> grad,
               std::span<const int> features, const GrowParams& params, bool parallel) {
  const std::size_t nf = features.size();
  // Per feature, the rows of the splittable frontier nodes in value order,
  // grouped into one contiguous segment per node. Rebuilt each level by a
  // stable bucket pass over the previous level's layout. While every row
  // still sits in one splittable node the presorted columns are read in place.
  auto rows_buf = std::make_unique_for_overwrite<int[]>(nf * x.rows);
  auto rows_next = std::make_unique_for_overwrite<int[]>(nf * x.rows);
  auto vals_buf = std::make_unique_for_overwrite<double[]>(nf * x.rows);
  auto vals_next = std::make_unique_for_overwrite<double[]>(nf * x.rows);
  bool presorted = true;
  std::size_t active = x.rows;
  std::vector<int> row_slot(x.rows);
  std::vector<std::size_t> offset;

  return grow(x, grad, params,
              [&](const std::vector<int>& node_of, const std::vector<int>& slot_of, const std::vector<NodeStats>& stats) {
                const std::size_t slots = stats.size();
                offset.assign(slots + 1, 0);
                for (std::size_t r = 0; r < x.rows; ++r) {
                  const int node = node_of[r];
                  row_slot[r] = -1;
                  if (node < 0) continue;
                  const int slot = slot_of[static_cast<std::size_t>(node)];
                  if (!stats[static_cast<std::size_t>(slot)].splittable) continue;
                  row_slot[r] = slot;
                  ++offset[static_cast<std::size_t>(slot) + 1];
                }
                for (std::size_t s = 0; s < slots; ++s) offset[s + 1] += offset[s];
                const std::size_t kept = offset[slots];
                if (kept == 0) {
                  active = 0;
                  return std::vector<Split>(slots);
                }
                const auto n_features = static_cast<std::ptrdiff_t>(nf);
                const bool in_place = presorted && slots == 1 && kept == x.rows;
                std::vector<Split> per_feature(nf * slots);

#pragma omp parallel if (parallel)
                {
                  std::vector<std::size_t> cursor(slots);
                  std::vector<double> scratch(3 * x.rows);
#pragma omp for schedule(static)
                  for (std::ptrdiff_t fi = 0; fi < n_features; ++fi) {
                    const auto base = static_cast<std::size_t>(fi) * x.rows;
                    const auto f = features[static_cast<std::size_t>(fi)];
                    const int* src_rows = presorted ? sorted.order(static_cast<std::size_t>(f)).data()
                                                    : rows_buf.get() + base;
                    const double* src_vals = presorted ? sorted.values(static_cast<std::size_t>(f)).data()
                                                       : vals_buf.get() + base;
                    const int* seg_rows = src_rows;
                    const double* seg_vals = src_vals;
                    if (!in_place) {
                      int* dst_rows = rows_next.get() + base;
                      double* dst_vals = vals_next.get() + base;
                      std::copy(offset.begin(), offset.end() - 1, cursor.begin());
                      for (std::size_t k = 0; k < active; ++k) {
                        const int slot = row_slot[static_cast<std::size_t>(src_rows[k])];
                        if (slot < 0) continue;
                        const std::size_t at = cursor[static_cast<std::size_t>(slot)]++;
                        dst_rows[at] = src_rows[k];
                        dst_vals[at] = src_vals[k];
                      }
                      seg_rows = dst_rows;
                      seg_vals = dst_vals;
                    }
                    Split* best = per_feature.data() + static_cast<std::size_t>(fi) * slots;
                    for (std::size_t s = 0; s < slots; ++s) {
                      best[s] = scan_segment(seg_rows + offset[s], seg_vals + offset[s], offset[s + 1] - offset[s],
                                             stats[s], grad, params, f, scratch.data());
                    }
                  }
                }
                if (!in_place) {
                  rows_buf.swap(rows_next);
                  vals_buf.swap(vals_next);
                  presorted = false;
                }
                active = kept;

                std::vector<Split> best(slots);
                for (std::size_t fi = 0; fi < nf; ++fi) {
                  for (std::size_t s = 0; s < slots; ++s) merge(best[s], per_feature[fi * slots + s]);
                }
                return best;
              });
}

Tree grow_tree_reference(const FeatureMatrix& x, std::span<const GradientPair> grad, std::span<const int> features,
                         const GrowParams& params) {
  return grow(x, grad, params,
              [&](const std::vector<int>& node_of, const std::vector<int>& slot_of, const std::vector<NodeStats>& stats) {
                std::vector<Split> best(stats.size());
                std::vector<std::vector<int>> members(stats.size());
                for (std::size_t r = 0; r < x.rows; ++r) {
                  if (node_of[r] >= 0) {
                    members[static_cast<std::size_t>(slot_of[static_cast<std::size_t>(node_of[r])])].push_back(
                        static_cast<int>(r));
                  }
                }
                for (std::size_t s = 0; s < stats.size(); ++s) {
                  if (!stats[s].splittable) continue;
                  for (int f : features) {
                    const auto fu = static_cast<std::size_t>(f);
                    std::vector<int> rows = members[s];
                    std::stable_sort(rows.begin(), rows.end(), [&](int a, int b) {
                      return x(static_cast<std::size_t>(a), fu) < x(static_cast<std::size_t>(b), fu);
                    });
                    ScanState scan;
                    Split candidate;
                    for (int row : rows) {
                      const double v = x(static_cast<std::size_t>(row), fu);
                      consider(scan, v, stats[s], params, f, candidate);
                      accumulate(scan, v, grad[static_cast<std::size_t>(row)]);
                    }
                    merge(best[s], candidate);
                  }
                }
                return best;
              });
}

}  // namespace runperf
