#include "msvdd/solution.hpp"

#include "msvdd/errors.hpp"

#include <algorithm>
#include <iomanip>

namespace msvdd {

bool Assignment::complete() const {
  return std::none_of(sphere_of.begin(), sphere_of.end(), [](int j) { return j == kUnassigned; });
}

int Assignment::assigned_count() const {
  return static_cast<int>(
      std::count_if(sphere_of.begin(), sphere_of.end(), [](int j) { return j != kUnassigned; }));
}

std::vector<std::vector<int>> Assignment::members(int p) const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(p));
  for (int i = 0; i < size(); ++i) {
    const int j = sphere_of[i];
    if (j == kUnassigned) continue;
    if (j < 0 || j >= p) throw InputError("sphere label out of range");
    out[j].push_back(i);
  }
  return out;
}

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::TimeLimitIncumbent: return "time_limit_incumbent";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Heuristic: return "heuristic";
  }
  return "unknown";
}

double MsvddSolution::relative_gap() const {
  if (objective == 0.0) return objective - lower_bound > 0.0 ? 1.0 : 0.0;
  return (objective - lower_bound) / objective;
}

double canonical_objective(const std::vector<SvddSolution>& spheres) {
  std::vector<double> parts;
  parts.reserve(spheres.size());
  for (const auto& s : spheres) parts.push_back(s.objective);
  std::sort(parts.begin(), parts.end());
  double total = 0.0;
  for (double v : parts) total += v;
  return total;
}

MsvddSolution permute_labels(const MsvddSolution& solution, const std::vector<int>& perm) {
  const auto p = solution.spheres.size();
  if (perm.size() != p) throw InputError("permutation size does not match sphere count");
  std::vector<int> inverse(p, -1);
  for (std::size_t j = 0; j < p; ++j) {
    if (perm[j] < 0 || static_cast<std::size_t>(perm[j]) >= p || inverse[perm[j]] != -1) {
      throw InputError("not a permutation");
    }
    inverse[perm[j]] = static_cast<int>(j);
  }
  MsvddSolution out = solution;
  for (std::size_t j = 0; j < p; ++j) out.spheres[j] = solution.spheres[perm[j]];
  for (int& j : out.assignment.sphere_of) {
    if (j != kUnassigned) j = inverse[j];
  }
  out.objective = canonical_objective(out.spheres);
  return out;
}

void write_incumbent_csv(std::ostream& out, const std::vector<IncumbentRecord>& log, double reference) {
  out << "wall_time_s,objective,gap\n";
  out << std::setprecision(17);
  for (const auto& rec : log) {
    const double gap = rec.objective == 0.0 ? 0.0 : (rec.objective - reference) / rec.objective;
    out << rec.wall_time_s << ',' << rec.objective << ',' << gap << '\n';
  }
}

}  // namespace msvdd
