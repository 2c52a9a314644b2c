#pragma once

#include "msvdd/svdd.hpp"

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace msvdd {

inline constexpr int kUnassigned = -1;

/// Point-to-sphere map; kUnassigned marks points not yet placed.
struct Assignment {
  std::vector<int> sphere_of;

  static Assignment unassigned(int n) { return {std::vector<int>(static_cast<std::size_t>(n), kUnassigned)}; }

  int size() const { return static_cast<int>(sphere_of.size()); }
  bool complete() const;
  int assigned_count() const;
  /// Members of spheres 0..p-1 in increasing point order.
  std::vector<std::vector<int>> members(int p) const;

  bool operator==(const Assignment&) const = default;
};

enum class SolveStatus { Optimal, TimeLimitIncumbent, Infeasible, Heuristic };

std::string to_string(SolveStatus status);

struct IncumbentRecord {
  double objective = 0.0;
  double wall_time_s = 0.0;
  std::vector<int> sphere_of;
};

struct MsvddSolution {
  Assignment assignment;
  std::vector<SvddSolution> spheres;
  double objective = 0.0;
  double lower_bound = 0.0;
  SolveStatus status = SolveStatus::Infeasible;
  std::uint64_t node_count = 0;
  std::vector<IncumbentRecord> incumbent_log;
  double wall_time_s = 0.0;
  // Heuristic only: objective after each accepted alternation step.
  std::vector<double> objective_trace;
  int iterations = 0;

  double relative_gap() const;
};

/// Sum of per-sphere objectives taken in ascending order, so any relabeling
/// of the spheres yields a bit-identical total.
double canonical_objective(const std::vector<SvddSolution>& spheres);

/// Relabels spheres: new sphere j is old sphere perm[j].
MsvddSolution permute_labels(const MsvddSolution& solution, const std::vector<int>& perm);

/// CSV with columns wall_time_s,objective,gap where
/// gap = (Z_incumbent - reference) / Z_incumbent.
void write_incumbent_csv(std::ostream& out, const std::vector<IncumbentRecord>& log, double reference);

}  // namespace msvdd
