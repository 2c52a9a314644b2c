#pragma once

// Shared fixtures and independent oracles for the test suites. Nothing here
// calls into the solver paths it is used to check unless stated.

#include "msvdd/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace msvdd::testing {

inline PointMatrix random_points(int n, int d, unsigned seed, double spread = 3.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, spread);
  PointMatrix x(n, d);
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < d; ++t) x(i, t) = normal(rng);
  return x;
}

inline PointMatrix points_1d(const std::vector<double>& xs) {
  PointMatrix x(static_cast<Eigen::Index>(xs.size()), 1);
  for (std::size_t i = 0; i < xs.size(); ++i) x(static_cast<Eigen::Index>(i), 0) = xs[i];
  return x;
}

inline PointMatrix points_2d(const std::vector<std::pair<double, double>>& xs) {
  PointMatrix x(static_cast<Eigen::Index>(xs.size()), 2);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    x(static_cast<Eigen::Index>(i), 0) = xs[i].first;
    x(static_cast<Eigen::Index>(i), 1) = xs[i].second;
  }
  return x;
}

// min over R >= 0 of R + C * sum max(0, d_i - R): convex piecewise linear,
// so the minimum sits at R = 0 or at one of the d_i.
inline double best_radius_value(const std::vector<double>& d, double C) {
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> candidates = d;
  candidates.push_back(0.0);
  for (double r : candidates) {
    if (r < 0.0) continue;
    double v = r;
    for (double di : d) v += C * std::max(0.0, di - r);
    best = std::min(best, v);
  }
  return best;
}

inline double svdd_1d_value(const std::vector<double>& xs, double c, double C) {
  std::vector<double> d;
  for (double x : xs) d.push_back((x - c) * (x - c));
  return best_radius_value(d, C);
}

// Brute-force 1-D SVDD: grid over the center at step 1e-4 on [lo, hi], then
// ternary refinement around the best grid cell (the value is convex in c).
inline double svdd_1d_bruteforce(const std::vector<double>& xs, double C) {
  const double lo = *std::min_element(xs.begin(), xs.end());
  const double hi = *std::max_element(xs.begin(), xs.end());
  const double step = 1e-4;
  double best_c = lo;
  double best = std::numeric_limits<double>::infinity();
  for (double c = lo; c <= hi + step / 2; c += step) {
    const double v = svdd_1d_value(xs, c, C);
    if (v < best) {
      best = v;
      best_c = c;
    }
  }
  double a = best_c - step;
  double b = best_c + step;
  for (int it = 0; it < 200; ++it) {
    const double m1 = a + (b - a) / 3.0;
    const double m2 = b - (b - a) / 3.0;
    if (svdd_1d_value(xs, m1, C) < svdd_1d_value(xs, m2, C)) {
      b = m2;
    } else {
      a = m1;
    }
  }
  return std::min(best, svdd_1d_value(xs, 0.5 * (a + b), C));
}

}  // namespace msvdd::testing

#include "msvdd/svdd.hpp"

#include <cstdint>
#include <unordered_map>

namespace msvdd::testing {

struct EnumerationResult {
  double objective = std::numeric_limits<double>::infinity();
  std::vector<int> sphere_of;
};

// Full p^n enumeration over labelings. Each sphere objective comes from
// solve_sphere on the member subset, cached per subset bitmask. `fixed`
// pins a prefix of labels (kUnassigned = free) for bound-validity checks.
inline EnumerationResult enumerate_optimum(const GramMatrix& gram, int p, double C, int required,
                                           const std::vector<int>& fixed = {}) {
  const int n = static_cast<int>(gram.size());
  std::unordered_map<std::uint32_t, double> cache;
  auto subset_value = [&](std::uint32_t mask) {
    auto it = cache.find(mask);
    if (it != cache.end()) return it->second;
    std::vector<int> members;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) members.push_back(i);
    const double v = solve_sphere(gram, members, C).objective;
    cache.emplace(mask, v);
    return v;
  };
  EnumerationResult best;
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  std::uint64_t total = 1;
  for (int i = 0; i < n; ++i) total *= static_cast<std::uint64_t>(p);
  for (std::uint64_t code = 0; code < total; ++code) {
    std::uint64_t c = code;
    bool ok = true;
    std::vector<std::uint32_t> masks(static_cast<std::size_t>(p), 0);
    for (int i = 0; i < n; ++i) {
      labels[i] = static_cast<int>(c % p);
      c /= p;
      if (!fixed.empty() && fixed[i] >= 0 && fixed[i] != labels[i]) ok = false;
      masks[labels[i]] |= 1u << i;
    }
    if (!ok) continue;
    double value = 0.0;
    for (std::uint32_t m : masks) {
      if (__builtin_popcount(m) < required) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    for (std::uint32_t m : masks) value += subset_value(m);
    if (value < best.objective) {
      best.objective = value;
      best.sphere_of = labels;
    }
  }
  return best;
}

}  // namespace msvdd::testing
