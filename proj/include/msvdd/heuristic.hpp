#pragma once

#include "msvdd/kernel.hpp"
#include "msvdd/solution.hpp"

#include <cstdint>
#include <optional>
#include <span>

namespace msvdd {

/// Alternating location-allocation baseline (ClusterSVDD style).
struct HeuristicConfig {
  int p = 1;
  double nu = 0.1;  // sphere k uses C_k = 1 / (nu * N_k)
  int max_iters = 100;
  int restarts = 10;
  std::uint64_t seed = 0;
  // Restarts are independent; results do not depend on this.
  int workers = 1;
  // When set, every sphere uses this C instead of the nu rule.
  std::optional<double> fixed_C;

  void validate(int n) const;
  double sphere_C(int members) const;
};

MsvddSolution solve_heuristic(const GramMatrix& gram, const HeuristicConfig& config);

/// Each point goes to argmin_j max(0, d_ij - R_j); ties by d_ij, then lowest j.
Assignment reassign(const GramMatrix& gram, std::span<const SvddSolution> spheres);

template <class Geometry>
MsvddSolution run_heuristic(const Geometry& geometry, const HeuristicConfig& config);

template <class Geometry>
Assignment reassign_points(const Geometry& geometry, std::span<const SvddSolution> spheres);

}  // namespace msvdd
