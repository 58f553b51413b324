#include <cmath>
#include <random>

#include "doctest.h"
#include "runperf/common.hpp"
#include "runperf/metrics.hpp"

using namespace runperf;

namespace {

// Probability that a random positive outscores a random negative, ties half.
double pairwise_auc(const std::vector<double>& s, const std::vector<int>& pos) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!pos[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (pos[j]) continue;
      wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
      pairs += 1.0;
    }
  }
  return wins / pairs;
}

}  // namespace

TEST_CASE("perfect ranking has unit area") {
  const std::vector<double> s{0.9, 0.8, 0.3, 0.1};
  const std::vector<int> p{1, 1, 0, 0};
  const auto c = roc_curve(s, p);
  CHECK(std::abs(c.auc - 1.0) <= 1e-12);
  CHECK(c.points.front().fpr == 0.0);
  CHECK(c.points.back().tpr == 1.0);
  CHECK(std::isinf(c.points.front().threshold));
}

TEST_CASE("all-tied scores give the diagonal") {
  const auto c = roc_curve(std::vector<double>{0.5, 0.5, 0.5}, std::vector<int>{1, 0, 1});
  CHECK(c.points.size() == 2);
  CHECK(c.auc == doctest::Approx(0.5));
}

TEST_CASE("area equals the pairwise oracle and the curve is monotone") {
  std::mt19937_64 gen(1);
  std::uniform_int_distribution<int> coarse(0, 5);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + gen() % 60;
    std::vector<double> s(n);
    std::vector<int> p(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = static_cast<int>(gen() % 2);
      s[i] = trial % 2 ? coarse(gen) : n01(gen) + p[i];
    }
    p[0] = 1;
    p[1] = 0;
    const auto c = roc_curve(s, p);
    CHECK(c.auc == doctest::Approx(pairwise_auc(s, p)).epsilon(1e-12));
    for (std::size_t i = 1; i < c.points.size(); ++i) {
      CHECK(c.points[i].fpr >= c.points[i - 1].fpr);
      CHECK(c.points[i].tpr >= c.points[i - 1].tpr);
    }
    CHECK(c.points.back().fpr == 1.0);
    CHECK(c.points.back().tpr == 1.0);

    std::vector<double> warped(n);
    for (std::size_t i = 0; i < n; ++i) warped[i] = std::exp(2.0 * s[i]) + 7.0;
    CHECK(roc_curve(warped, p).auc == c.auc);
  }
}

TEST_CASE("shuffled labels hover around one half") {
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> u;
  std::vector<double> s(1000);
  std::vector<int> p(1000);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = u(gen);
    p[i] = static_cast<int>(i % 2);
  }
  const double auc = roc_curve(s, p).auc;
  CHECK(auc >= 0.45);
  CHECK(auc <= 0.55);
}

TEST_CASE("roc errors") {
  CHECK_THROWS_AS(roc_curve(std::vector<double>{1, 2}, std::vector<int>{1, 1}), Error);
  CHECK_THROWS_AS(roc_curve(std::vector<double>{1}, std::vector<int>{1, 0}), Error);
}

TEST_CASE("one-vs-rest curves") {
  const std::vector<double> proba{0.8, 0.1, 0.1, 0.1, 0.8, 0.1, 0.1, 0.1, 0.8};
  const std::vector<int> labels{1, 2, 3};
  const auto m = roc_one_vs_rest(proba, labels, 3);
  REQUIRE(m.per_class.size() == 3);
  CHECK(m.macro_auc == doctest::Approx(1.0));
  CHECK_THROWS_AS(roc_one_vs_rest(proba, std::vector<int>{1, 2}, 3), Error);
}

TEST_CASE("confusion matrix bookkeeping") {
  ConfusionMatrix m(3);
  m.add(1, 1);
  m.add(1, 2, 2);
  m.add(3, 3, 4);
  CHECK(m.at(1, 2) == 2);
  CHECK(m.total() == 7);
  CHECK(m.trace() == 5);
  CHECK(m.accuracy() == doctest::Approx(5.0 / 7.0));
  ConfusionMatrix other(3);
  other.add(2, 1);
  m.merge(other);
  CHECK(m.total() == 8);
  CHECK(m.at(2, 1) == 1);
  CHECK_THROWS_AS(m.add(4, 1), Error);
  CHECK_THROWS_AS(m.merge(ConfusionMatrix(2)), Error);
  CHECK(ConfusionMatrix(2).accuracy() == 0.0);
}
