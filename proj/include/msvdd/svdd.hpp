#pragma once

#include "msvdd/kernel.hpp"
#include "msvdd/sphere_block.hpp"

#include <optional>
#include <span>
#include <vector>

namespace msvdd {

/// One solved sphere. Index sets hold global point indices; per-point
/// vectors are aligned with `members`.
struct SvddSolution {
  std::vector<int> members;
  std::vector<double> alpha;
  double radius_sq = 0.0;
  std::vector<double> errors;
  std::vector<double> distances_sq;
  double objective = 0.0;       // R + C * sum(xi)
  double dual_objective = 0.0;  // sum a_i K_ii - a'Ka; a lower bound on `objective`
  double center_norm_sq = 0.0;  // a'Ka
  double C = 0.0;
  // C * |members| < 1 and R >= 0 imposed: R = 0 and the center is the
  // unweighted mean, so alpha = 1/|members| exceeds the cap.
  bool relaxed = false;
  std::vector<int> support_free;
  std::vector<int> support_bound;
  int iterations = 0;

  double gap() const { return objective - dual_objective; }
  std::size_t size() const { return members.size(); }
  bool empty() const { return members.empty(); }
};

struct SvddOptions {
  int max_iterations = 50000;
  double gap_tolerance = 1e-8;  // relative to max(1, |objective|)
  bool polish = true;
  std::optional<std::vector<double>> warm_start;  // aligned with members
};

struct RadiusFit {
  double radius_sq = 0.0;
  std::vector<double> errors;
  double objective = 0.0;
};

/// Smallest minimizer over R >= 0 of R + C * sum max(0, d_i - R).
RadiusFit recover_radius(std::span<const double> distances_sq, double C);

/// Euclidean projection of v onto {0 <= a_i <= cap, sum a = total}.
std::vector<double> project_capped_simplex(std::span<const double> v, double cap, double total = 1.0);

/// Dual SVDD on a prepared block. Requires C * block.size() >= 1.
/// The returned solution has empty `members`; callers fill them in.
template <class Block>
SvddSolution solve_svdd_block(const Block& block, double C, const SvddOptions& options = {});

/// R >= 0 closed form used when C * |members| < 1.
template <class Block>
SvddSolution solve_relaxed_block(const Block& block, double C);

/// Classical single-sphere SVDD over `members` (global indices into gram).
SvddSolution solve_svdd(const GramMatrix& gram, std::span<const int> members, double C,
                        const SvddOptions& options = {});

/// solve_svdd when C * |members| >= 1, otherwise the R >= 0 relaxed closed
/// form. Valid for any nonempty member set; monotone under adding points.
SvddSolution solve_sphere(const GramMatrix& gram, std::span<const int> members, double C,
                          const SvddOptions& options = {});

/// objective(members + extra) >= objective(members) - 1e-7.
bool svdd_objective_monotone_check(const GramMatrix& gram, std::span<const int> members, int extra,
                                   double C);

}  // namespace msvdd
