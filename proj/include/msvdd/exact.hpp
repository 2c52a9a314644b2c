#pragma once

#include "msvdd/kernel.hpp"
#include "msvdd/solution.hpp"

#include <cstdint>
#include <vector>

namespace msvdd {

struct MsvddConfig {
  int p = 1;
  double C = 1.0;
  // Each sphere must hold at least ceil(1/C) points (sum_i C z_ij >= 1).
  // Off: plain primal with R_j >= 0 and at least one point per sphere.
  bool enforce_cardinality = true;
  double time_limit_s = 60.0;
  std::uint64_t seed = 0;
  int workers = 1;
  int heuristic_restarts = 5;

  void validate(int n) const;
  /// Minimum members per sphere at a leaf.
  int required_members() const;
  bool feasible(int n) const { return p * required_members() <= n; }
};

struct MsvddProblem {
  const GramMatrix& gram;
  MsvddConfig config;
};

/// Exact branch-and-bound over assignments with the per-sphere decomposition
/// bound. Linear Gram recovers the primal geometry.
MsvddSolution solve_exact(const MsvddProblem& problem);

/// Same search, with every distance formed from explicit input-space centers.
MsvddSolution solve_exact_euclidean(const PointMatrix& points, const MsvddConfig& config);

/// Sum over nonempty spheres of the single-sphere objective of their current
/// members; never exceeds the objective of any completion.
double lower_bound(const Assignment& node, const GramMatrix& gram, double C);

/// Point the search branches on next: the unassigned point with the largest
/// gap between its best and second-best insertion cost (distance to each
/// nonempty center, 0 for a fresh sphere). Ties go to the lowest index.
int select_branch_point(const Assignment& node, int p, const GramMatrix& gram, double C);

/// Children of `node` placing `point` in every nonempty sphere plus the
/// lowest-index empty one.
std::vector<Assignment> branch(const Assignment& node, int p, int point);
std::vector<Assignment> branch(const Assignment& node, int p, const GramMatrix& gram, double C);

/// Per-sphere solve of a complete assignment under one global C.
MsvddSolution evaluate_assignment(const GramMatrix& gram, const Assignment& assignment, int p, double C);

/// Moves points until every sphere has `required` members. Donors are spheres
/// above the requirement; the moved point is the donor member nearest to the
/// receiving sphere's center (farthest from its own center if the receiver is
/// empty).
Assignment repair_cardinality(const GramMatrix& gram, const Assignment& assignment, int p, double C,
                              int required);

/// Heuristic assignment mapped into the exact model: cardinality repaired,
/// spheres re-solved with the global C.
MsvddSolution evaluate_under_global_C(const GramMatrix& gram, const Assignment& assignment,
                                      const MsvddConfig& config);

/// max_i' |x_i - x_i'|^2.
double compute_delta_primal(const PointMatrix& points, int i);

/// Big-M for the kernel constraint: K_ii + 2 C sum_{K_ik < 0} |K_ik| +
/// sum_{k,l} (C - pi_kl)^2 K_kl with pi_kl = C when K_kl < 0, else 0.
/// Bounds |Phi(x_i) - c|^2 over every center with weights in the capped simplex.
double compute_delta_dual(const GramMatrix& gram, double C, int i);

/// The constant exactly as printed, K_ii + 2 sum_k pi_ik K_ik + ..., which
/// undercovers when the Gram has negative entries.
double compute_delta_dual_literal(const GramMatrix& gram, double C, int i);

std::vector<double> compute_deltas_primal(const PointMatrix& points);
std::vector<double> compute_deltas_dual(const GramMatrix& gram, double C);

/// Checks d_ij <= R_j + xi_i + Delta_i (1 - z_ij) for all (i, j) at 1e-6.
bool verify_bigM_feasibility(const GramMatrix& gram, const MsvddSolution& solution,
                             const std::vector<double>& deltas);

}  // namespace msvdd
