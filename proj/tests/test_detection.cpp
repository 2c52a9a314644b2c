#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "msvdd/detection.hpp"
#include "msvdd/errors.hpp"
#include "msvdd/exact.hpp"
#include "test_support.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace msvdd;
using msvdd::testing::points_2d;
using msvdd::testing::random_points;

namespace {

// One sphere centered at the single training point (0, 0).
DetectionModel origin_sphere(double radius_sq) {
  return DetectionModel(KernelSpec::linear(), points_2d({{0, 0}}), {SphereModel{{0}, {1.0}, radius_sq, 0.0}});
}

constexpr Label R = Label::Regular;
constexpr Label O = Label::Outlier;

}  // namespace

TEST_CASE("anomaly_score and classify examples") {
  const DetectionModel m = origin_sphere(1.0);
  const std::vector<double> at_center{0, 0};
  const std::vector<double> on_boundary{1, 0};
  const std::vector<double> outside{2, 0};
  CHECK(m.anomaly_score(at_center) == doctest::Approx(-1.0));
  CHECK(m.classify(at_center) == Label::Regular);
  CHECK(m.anomaly_score(on_boundary) == doctest::Approx(0.0));
  CHECK(m.classify(on_boundary) == Label::Regular);
  CHECK(m.anomaly_score(outside) == doctest::Approx(3.0));
  CHECK(m.classify(outside) == Label::Outlier);

  const std::vector<double> wrong_dim{1, 2, 3};
  CHECK_THROWS_AS(m.anomaly_score(wrong_dim), InputError);
  CHECK_THROWS_AS(m.classify(wrong_dim), InputError);
}

TEST_CASE("RBF lone-sphere center scores -R") {
  const PointMatrix x = points_2d({{1, 1}});
  const DetectionModel m(KernelSpec::rbf(0.5), x, {SphereModel{{0}, {1.0}, 0.3, 1.0}});
  const std::vector<double> c{1, 1};
  CHECK(m.anomaly_score(c) == doctest::Approx(-0.3));
}

TEST_CASE("rule and score agree on solved models") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (unsigned seed = 1; seed <= 5; ++seed) {
    const PointMatrix x = random_points(12, 2, seed);
    for (const KernelSpec& spec : {KernelSpec::linear(), KernelSpec::rbf(0.5)}) {
      const GramMatrix g = gram(spec, x);
      MsvddConfig cfg;
      cfg.p = 2;
      cfg.C = 0.25;
      const MsvddSolution s = solve_exact({g, cfg});
      const DetectionModel m = DetectionModel::from_solution(spec, x, s);
      for (int t = 0; t < 200; ++t) {
        const std::vector<double> q{u(rng), u(rng)};
        CHECK((m.classify(q) == Label::Regular) == (m.anomaly_score(q) <= 1e-9));
      }
      // Training scores agree with the solver's own distances.
      for (const auto& sphere : s.spheres) {
        for (std::size_t k = 0; k < sphere.members.size(); ++k) {
          const int i = sphere.members[k];
          CHECK(m.anomaly_score(row_span(x, i)) <= sphere.distances_sq[k] - sphere.radius_sq + 1e-9);
        }
      }
    }
  }
}

TEST_CASE("linear kernel expansion equals the direct geometric score") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (unsigned seed = 1; seed <= 5; ++seed) {
    const PointMatrix x = random_points(12, 2, seed);
    MsvddConfig cfg;
    cfg.p = 2;
    cfg.C = 0.2;
    const MsvddSolution s = solve_exact({gram(KernelSpec::linear(), x), cfg});
    const DetectionModel m = DetectionModel::from_solution(KernelSpec::linear(), x, s);
    for (int t = 0; t < 100; ++t) {
      const std::vector<double> q{u(rng), u(rng)};
      CHECK(std::abs(m.anomaly_score(q) - m.direct_score(q)) <= 1e-9);
    }
  }
  const DetectionModel rbf(KernelSpec::rbf(1.0), points_2d({{0, 0}}), {SphereModel{{0}, {1.0}, 0.1, 1.0}});
  CHECK_THROWS_AS(rbf.center(0), InputError);
}

TEST_CASE("auc_roc examples") {
  const std::vector<double> s{1, 2, 3, 4};
  CHECK(auc_roc(s, std::vector<Label>{R, R, O, O}).auc == 1.0);
  CHECK(auc_roc(s, std::vector<Label>{O, O, R, R}).auc == 0.0);
  const std::vector<double> tied{1, 1, 2, 2};
  CHECK(auc_roc(tied, std::vector<Label>{R, O, R, O}).auc == 0.5);
  CHECK_THROWS_AS(auc_roc(s, std::vector<Label>{R, R, R, R}), UndefinedMetricError);
  CHECK_THROWS_AS(auc_roc(s, std::vector<Label>{O, O, O, O}), UndefinedMetricError);
  CHECK_THROWS_AS(auc_roc(s, std::vector<Label>{O, R}), InputError);
}

TEST_CASE("auc_roc properties on random scores") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> coarse(0, 6);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 5 + trial % 30;
    std::vector<double> scores(n);
    std::vector<Label> labels(n);
    for (int i = 0; i < n; ++i) {
      scores[i] = coarse(rng) * 0.5;
      labels[i] = i % 3 == 0 ? O : R;
    }
    const RocResult roc = auc_roc(scores, labels);
    CHECK(roc.auc >= 0.0);
    CHECK(roc.auc <= 1.0);
    CHECK(std::abs(roc.auc - trapezoid_auc(roc)) <= 1e-12);
    for (std::size_t k = 1; k < roc.fpr.size(); ++k) {
      CHECK(roc.fpr[k] >= roc.fpr[k - 1]);
      CHECK(roc.tpr[k] >= roc.tpr[k - 1]);
      CHECK(roc.thresholds[k] < roc.thresholds[k - 1]);
    }
    CHECK(roc.fpr.back() == 1.0);
    CHECK(roc.tpr.back() == 1.0);

    // Pairwise definition.
    double wins = 0.0;
    double pairs = 0.0;
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        if (labels[a] != O || labels[b] != R) continue;
        pairs += 1.0;
        wins += scores[a] > scores[b] ? 1.0 : scores[a] == scores[b] ? 0.5 : 0.0;
      }
    }
    CHECK(roc.auc == doctest::Approx(wins / pairs).epsilon(1e-12));

    // Strictly increasing transforms leave the AUC unchanged.
    std::vector<double> warped(n);
    for (int i = 0; i < n; ++i) warped[i] = std::exp(3.0 * scores[i]) - 7.0;
    CHECK(auc_roc(warped, labels).auc == roc.auc);
  }
}

TEST_CASE("ROC CSV export") {
  const std::vector<double> s{0.5, 2.0};
  const RocResult roc = auc_roc(s, std::vector<Label>{R, O});
  std::ostringstream out;
  write_roc_csv(out, roc);
  CHECK(out.str() == "threshold,fpr,tpr\ninf,0,0\n2,0,1\n0.5,1,1\n");
}
