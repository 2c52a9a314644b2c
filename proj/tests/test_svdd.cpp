#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "msvdd/errors.hpp"
#include "msvdd/svdd.hpp"
#include "test_support.hpp"

#include <numeric>
#include <random>

using namespace msvdd;
using msvdd::testing::points_1d;
using msvdd::testing::points_2d;
using msvdd::testing::random_points;
using msvdd::testing::svdd_1d_bruteforce;

namespace {

std::vector<int> iota_members(int n) {
  std::vector<int> m(n);
  std::iota(m.begin(), m.end(), 0);
  return m;
}

void check_solution_invariants(const SvddSolution& s, double C) {
  double total = 0.0;
  for (double a : s.alpha) {
    CHECK(a >= 0.0);
    CHECK(a <= C + 1e-10);
    total += a;
  }
  CHECK(std::abs(total - 1.0) <= 1e-8);
  double excess = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(std::abs(s.errors[i] - std::max(0.0, s.distances_sq[i] - s.radius_sq)) <= 1e-7);
    excess += s.errors[i];
  }
  CHECK(std::abs(s.objective - (s.radius_sq + C * excess)) <= 1e-8);
  CHECK(std::abs(s.objective - s.dual_objective) <= 1e-6);
  // KKT complementarity.
  std::size_t strict_outside = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.distances_sq[i] < s.radius_sq - 1e-6) CHECK(s.alpha[i] <= 1e-6);
    if (s.distances_sq[i] > s.radius_sq + 1e-6) {
      CHECK(s.alpha[i] >= C - 1e-6);
      ++strict_outside;
    }
  }
  CHECK(strict_outside <= static_cast<std::size_t>(std::floor(1.0 / C + 1e-9)));
}

}  // namespace

TEST_CASE("recover_radius") {
  SUBCASE("all equal distances") {
    const std::vector<double> d{4, 4, 4};
    const RadiusFit fit = recover_radius(d, 1.0);
    CHECK(fit.radius_sq == 4.0);
    CHECK(fit.errors == std::vector<double>{0, 0, 0});
  }
  SUBCASE("tie at C * n = 1 takes the smallest minimizer") {
    const std::vector<double> d{9};
    const RadiusFit fit = recover_radius(d, 1.0);
    CHECK(fit.radius_sq == 0.0);
    CHECK(fit.errors == std::vector<double>{9});
    CHECK(fit.objective == 9.0);
  }
  SUBCASE("one far point") {
    const std::vector<double> d{1, 100};
    const RadiusFit fit = recover_radius(d, 0.6);
    CHECK(fit.radius_sq == 1.0);
    CHECK(fit.errors == std::vector<double>{0, 99});
  }
  SUBCASE("matches exhaustive breakpoint search") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> d(1 + trial % 9);
      for (double& v : d) v = u(rng);
      const double C = 0.05 + 0.1 * (trial % 10);
      CHECK(recover_radius(d, C).objective ==
            doctest::Approx(msvdd::testing::best_radius_value(d, C)).epsilon(1e-12));
    }
  }
}

TEST_CASE("project_capped_simplex") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal(0.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = 2 + trial % 12;
    const double cap = std::max(1.0 / m, 0.05 + 0.07 * (trial % 15));
    std::vector<double> v(m);
    for (double& x : v) x = normal(rng);
    const auto p = project_capped_simplex(v, cap);
    CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    for (double x : p) {
      CHECK(x >= 0.0);
      CHECK(x <= cap);
    }
    // Optimality: <v - p, q - p> <= 0 for feasible q (test against vertices-ish samples).
    for (int s = 0; s < 5; ++s) {
      std::vector<double> q(m, 0.0);
      double left = 1.0;
      std::vector<int> order(m);
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      for (int idx : order) {
        q[idx] = std::min(cap, left);
        left -= q[idx];
      }
      double inner = 0.0;
      for (int i = 0; i < m; ++i) inner += (v[i] - p[i]) * (q[i] - p[i]);
      CHECK(inner <= 1e-9);
    }
  }
  const std::vector<double> v{1, 2, 3};
  CHECK_THROWS_AS(project_capped_simplex(v, 0.2), InfeasibleSubproblemError);
}

TEST_CASE("solve_svdd examples") {
  SUBCASE("single point") {
    const GramMatrix g = gram(KernelSpec::linear(), points_2d({{3, 4}}));
    const std::vector<int> members{0};
    const SvddSolution s = solve_svdd(g, members, 1.0);
    CHECK(s.alpha == std::vector<double>{1.0});
    CHECK(s.radius_sq == 0.0);
    CHECK(s.errors == std::vector<double>{0.0});
    CHECK(s.objective == doctest::Approx(0.0));
  }
  SUBCASE("two identical points") {
    const GramMatrix g = gram(KernelSpec::linear(), points_2d({{1, 1}, {1, 1}}));
    const SvddSolution s = solve_svdd(g, iota_members(2), 1.0);
    CHECK(s.radius_sq == doctest::Approx(0.0));
    CHECK(s.objective == doctest::Approx(0.0));
  }
  SUBCASE("1-D {0, 1, 10}, C = 0.4 against brute force") {
    const std::vector<double> xs{0, 1, 10};
    const GramMatrix g = gram(KernelSpec::linear(), points_1d(xs));
    const SvddSolution s = solve_svdd(g, iota_members(3), 0.4);
    const double oracle = svdd_1d_bruteforce(xs, 0.4);
    CHECK(std::abs(s.objective - oracle) <= 1e-4);
    check_solution_invariants(s, 0.4);
  }
  SUBCASE("infeasible cap") {
    const GramMatrix g = gram(KernelSpec::linear(), points_1d({0, 1, 2}));
    CHECK_THROWS_AS(solve_svdd(g, iota_members(3), 0.2), InfeasibleSubproblemError);
  }
}

TEST_CASE("solve_svdd matches the 1-D brute force on random instances") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 2 + trial % 7;
    std::vector<double> xs(n);
    for (double& x : xs) x = u(rng);
    const double C = std::max(1.0 / n, 0.15 + 0.1 * (trial % 8));
    const GramMatrix g = gram(KernelSpec::linear(), points_1d(xs));
    const SvddSolution s = solve_svdd(g, iota_members(n), C);
    CHECK(std::abs(s.objective - svdd_1d_bruteforce(xs, C)) <= 1e-4);
  }
}

TEST_CASE("solve_svdd invariants on random planar and RBF instances") {
  for (unsigned seed = 1; seed <= 30; ++seed) {
    const int n = 5 + seed % 20;
    const PointMatrix x = random_points(n, 2, seed);
    const double C = std::max(1.0 / n, 0.05 * (1 + seed % 10));
    for (const KernelSpec& spec : {KernelSpec::linear(), KernelSpec::rbf(0.5 + seed % 3)}) {
      const GramMatrix g = gram(spec, x);
      const SvddSolution s = solve_svdd(g, iota_members(n), C);
      check_solution_invariants(s, C);
    }
  }
}

TEST_CASE("warm start reaches the same optimum") {
  const PointMatrix x = random_points(15, 2, 77);
  const GramMatrix g = gram(KernelSpec::linear(), x);
  const auto members = iota_members(15);
  const SvddSolution cold = solve_svdd(g, members, 0.2);
  SvddOptions warm;
  warm.warm_start = cold.alpha;
  const SvddSolution again = solve_svdd(g, members, 0.2, warm);
  CHECK(again.objective == doctest::Approx(cold.objective).epsilon(1e-9));
  warm.warm_start = std::vector<double>(15, 0.0);  // unusable: falls back to uniform
  CHECK(solve_svdd(g, members, 0.2, warm).objective == doctest::Approx(cold.objective).epsilon(1e-9));
}

TEST_CASE("relaxed sphere below the cardinality threshold") {
  const GramMatrix g = gram(KernelSpec::linear(), points_1d({0, 2}));
  const SvddSolution s = solve_sphere(g, iota_members(2), 0.25);
  CHECK(s.relaxed);
  CHECK(s.radius_sq == 0.0);
  // Center at the mean 1: C * (1 + 1).
  CHECK(s.objective == doctest::Approx(0.5));
  CHECK_FALSE(solve_sphere(g, iota_members(2), 0.5).relaxed);
}

TEST_CASE("objective is monotone under adding points") {
  SUBCASE("duplicate point") {
    const GramMatrix g = gram(KernelSpec::linear(), points_1d({3, 3}));
    const std::vector<int> members{0};
    CHECK(svdd_objective_monotone_check(g, members, 1, 1.0));
  }
  SUBCASE("far point strictly increases") {
    const std::vector<double> xs{0, 1, 50};
    const GramMatrix g = gram(KernelSpec::linear(), points_1d(xs));
    const std::vector<int> members{0, 1};
    CHECK(svdd_objective_monotone_check(g, members, 2, 1.0));
    const double before = svdd_1d_bruteforce({0, 1}, 1.0);
    const double after = svdd_1d_bruteforce(xs, 1.0);
    CHECK(after > before + 1.0);
    const std::vector<int> all{0, 1, 2};
    CHECK(solve_svdd(g, all, 1.0).objective > solve_svdd(g, members, 1.0).objective);
  }
  SUBCASE("random 1-D instances, C = 1") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> xs(6);
      for (double& v : xs) v = u(rng);
      const GramMatrix g = gram(KernelSpec::linear(), points_1d(xs));
      for (int size = 1; size < 6; ++size) {
        CHECK(svdd_objective_monotone_check(g, iota_members(size), size, 1.0));
        const std::vector<double> prefix(xs.begin(), xs.begin() + size);
        const std::vector<double> grown(xs.begin(), xs.begin() + size + 1);
        CHECK(svdd_1d_bruteforce(grown, 1.0) >= svdd_1d_bruteforce(prefix, 1.0) - 1e-7);
      }
    }
  }
}

TEST_CASE("scale equivariance under the linear kernel") {
  for (unsigned seed = 1; seed <= 10; ++seed) {
    const PointMatrix x = random_points(12, 2, seed);
    const double C = 0.25;
    const double base = solve_svdd(gram(KernelSpec::linear(), x), iota_members(12), C).objective;
    for (double scale : {0.5, 3.0}) {
      const PointMatrix xs = x * scale;
      const double scaled = solve_svdd(gram(KernelSpec::linear(), xs), iota_members(12), C).objective;
      CHECK(std::abs(scaled - scale * scale * base) <= 1e-6 * std::max(1.0, scaled));
    }
  }
}

TEST_CASE("point block and Gram block agree") {
  for (unsigned seed = 1; seed <= 10; ++seed) {
    const PointMatrix x = random_points(14, 2, seed);
    const auto members = iota_members(14);
    const double C = 0.2;
    const SvddSolution via_gram = solve_svdd_block(GramBlock(gram(KernelSpec::linear(), x), members), C);
    const SvddSolution via_points = solve_svdd_block(PointBlock(x, members), C);
    CHECK(std::abs(via_gram.objective - via_points.objective) <= 1e-9);
    CHECK(std::abs(via_gram.radius_sq - via_points.radius_sq) <= 1e-9);
  }
}
