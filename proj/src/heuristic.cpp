#include "msvdd/heuristic.hpp"

#include "msvdd/errors.hpp"
#include "msvdd/geometry.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

namespace msvdd {

void HeuristicConfig::validate(int n) const {
  if (p < 1) throw InputError("p must be at least 1");
  if (p > n) throw InputError("p must not exceed the number of points");
  if (!(nu > 0.0 && nu <= 1.0)) throw InputError("nu must lie in (0, 1]");
  if (max_iters < 1) throw InputError("max_iters must be at least 1");
  if (restarts < 1) throw InputError("restarts must be at least 1");
  if (workers < 1) throw InputError("workers must be at least 1");
  if (fixed_C && !(*fixed_C > 0.0)) throw InputError("C must be positive");
}

double HeuristicConfig::sphere_C(int members) const {
  if (fixed_C) return *fixed_C;
  return 1.0 / (nu * static_cast<double>(members));
}

template <class Geometry>
Assignment reassign_points(const Geometry& geometry, std::span<const SvddSolution> spheres) {
  const int n = geometry.size();
  Assignment out = Assignment::unassigned(n);
  for (int i = 0; i < n; ++i) {
    int best = -1;
    double best_excess = std::numeric_limits<double>::infinity();
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < spheres.size(); ++j) {
      if (spheres[j].empty()) continue;
      const double d = geometry.distance_sq(i, spheres[j]);
      const double excess = std::max(0.0, d - spheres[j].radius_sq);
      if (excess < best_excess || (excess == best_excess && d < best_dist)) {
        best = static_cast<int>(j);
        best_excess = excess;
        best_dist = d;
      }
    }
    out.sphere_of[i] = best;
  }
  return out;
}

namespace {

template <class Geometry>
std::vector<SvddSolution> fit_all(const Geometry& geometry, const Assignment& a, const HeuristicConfig& cfg) {
  std::vector<SvddSolution> spheres;
  for (const auto& members : a.members(cfg.p)) {
    spheres.push_back(members.empty() ? SvddSolution{}
                                      : fit_sphere(geometry, members, cfg.sphere_C(static_cast<int>(members.size()))));
  }
  return spheres;
}

// Reseeds each empty cluster with the point of largest boundary excess
// under the spheres that produced the assignment.
template <class Geometry>
void repair_empty(const Geometry& geometry, Assignment& a, const std::vector<SvddSolution>& spheres, int p) {
  for (int j = 0; j < p; ++j) {
    std::vector<int> counts(static_cast<std::size_t>(p), 0);
    for (int s : a.sphere_of) ++counts[s];
    if (counts[j] > 0) continue;
    int pick = -1;
    double worst = -1.0;
    for (int i = 0; i < a.size(); ++i) {
      const int owner = a.sphere_of[i];
      if (counts[owner] <= 1 || spheres[owner].empty()) continue;
      const double excess =
          std::max(0.0, geometry.distance_sq(i, spheres[owner]) - spheres[owner].radius_sq);
      if (excess > worst) {
        worst = excess;
        pick = i;
      }
    }
    if (pick >= 0) a.sphere_of[pick] = j;
  }
}

template <class Geometry>
MsvddSolution single_run(const Geometry& geometry, const HeuristicConfig& cfg, std::uint64_t seed) {
  const int n = geometry.size();
  std::mt19937_64 rng(seed);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::uniform_int_distribution<int> label(0, cfg.p - 1);
  Assignment current = Assignment::unassigned(n);
  for (int r = 0; r < n; ++r) current.sphere_of[order[r]] = r < cfg.p ? r : label(rng);

  std::vector<SvddSolution> spheres = fit_all(geometry, current, cfg);
  double objective = canonical_objective(spheres);
  MsvddSolution out;
  out.objective_trace.push_back(objective);
  int it = 0;
  for (it = 1; it <= cfg.max_iters; ++it) {
    Assignment next = reassign_points(geometry, std::span<const SvddSolution>(spheres));
    repair_empty(geometry, next, spheres, cfg.p);
    if (next == current) break;
    std::vector<SvddSolution> next_spheres = fit_all(geometry, next, cfg);
    const double next_objective = canonical_objective(next_spheres);
    // The nu rule rescales C_k with cluster sizes, so a step can raise the
    // objective; stop at the last non-increasing state instead.
    if (next_objective > objective) break;
    current = std::move(next);
    spheres = std::move(next_spheres);
    objective = next_objective;
    out.objective_trace.push_back(objective);
  }
  out.assignment = std::move(current);
  out.spheres = std::move(spheres);
  out.objective = objective;
  out.lower_bound = -std::numeric_limits<double>::infinity();
  out.status = SolveStatus::Heuristic;
  out.iterations = std::min(it, cfg.max_iters);
  return out;
}

}  // namespace

template <class Geometry>
MsvddSolution run_heuristic(const Geometry& geometry, const HeuristicConfig& config) {
  config.validate(geometry.size());
  std::seed_seq base{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                     std::uint32_t{0x5eed}};
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(config.restarts));
  base.generate(seeds.begin(), seeds.end());
  std::vector<MsvddSolution> runs(seeds.size());
  const int workers = std::clamp(config.workers, 1, static_cast<int>(seeds.size()));
  if (workers == 1) {
    for (std::size_t r = 0; r < seeds.size(); ++r) runs[r] = single_run(geometry, config, seeds[r]);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t r = next++; r < seeds.size(); r = next++) {
            runs[r] = single_run(geometry, config, seeds[r]);
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  // Lowest objective wins; the earliest restart breaks ties.
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].objective < runs[best].objective) best = r;
  }
  return std::move(runs[best]);
}

template MsvddSolution run_heuristic<GramGeometry>(const GramGeometry&, const HeuristicConfig&);
template MsvddSolution run_heuristic<EuclideanGeometry>(const EuclideanGeometry&, const HeuristicConfig&);
template Assignment reassign_points<GramGeometry>(const GramGeometry&, std::span<const SvddSolution>);
template Assignment reassign_points<EuclideanGeometry>(const EuclideanGeometry&, std::span<const SvddSolution>);

MsvddSolution solve_heuristic(const GramMatrix& gram, const HeuristicConfig& config) {
  return run_heuristic(GramGeometry(gram), config);
}

Assignment reassign(const GramMatrix& gram, std::span<const SvddSolution> spheres) {
  return reassign_points(GramGeometry(gram), spheres);
}

}  // namespace msvdd
