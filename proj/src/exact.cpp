#include "msvdd/exact.hpp"

#include "msvdd/errors.hpp"
#include "msvdd/geometry.hpp"
#include "msvdd/heuristic.hpp"
#include "msvdd/tolerances.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <limits>
#include <memory>
#include <mutex>
#include <thread>

namespace msvdd {

void MsvddConfig::validate(int n) const {
  if (p < 1) throw InputError("p must be at least 1");
  if (p > n) throw InputError("p must not exceed the number of points");
  if (!(C > 0.0)) throw InputError("C must be positive");
  if (!(time_limit_s > 0.0)) throw InputError("time limit must be positive");
  if (workers < 1) throw InputError("workers must be at least 1");
  if (heuristic_restarts < 0) throw InputError("heuristic_restarts must be nonnegative");
}

int MsvddConfig::required_members() const {
  if (!enforce_cardinality) return 1;
  return static_cast<int>(std::ceil((1.0 - 1e-12) / C));
}

namespace {

template <class Geometry>
std::vector<SvddSolution> fit_spheres(const Geometry& geometry, const Assignment& a, int p, double C) {
  std::vector<SvddSolution> spheres;
  spheres.reserve(static_cast<std::size_t>(p));
  for (const auto& members : a.members(p)) {
    spheres.push_back(members.empty() ? SvddSolution{} : fit_sphere(geometry, members, C));
  }
  return spheres;
}

template <class Geometry>
Assignment repair_cardinality_in(const Geometry& geometry, Assignment a, int p, double C, int required) {
  const int n = a.size();
  for (int guard = 0; guard < n * p + 1; ++guard) {
    std::vector<int> counts(static_cast<std::size_t>(p), 0);
    for (int j : a.sphere_of) ++counts[j];
    int receiver = -1;
    for (int j = 0; j < p; ++j) {
      if (counts[j] < required) {
        receiver = j;
        break;
      }
    }
    if (receiver < 0) return a;
    const auto spheres = fit_spheres(geometry, a, p, C);
    int pick = -1;
    double best = 0.0;
    for (int i = 0; i < n; ++i) {
      const int owner = a.sphere_of[i];
      if (counts[owner] <= required) continue;
      double score;
      if (counts[receiver] == 0) {
        score = -geometry.distance_sq(i, spheres[owner]);
      } else {
        score = geometry.distance_sq(i, spheres[receiver]);
      }
      if (pick < 0 || score < best) {
        pick = i;
        best = score;
      }
    }
    if (pick < 0) throw InputError("cardinality requirement cannot be met: p * ceil(1/C) > n");
    a.sphere_of[pick] = receiver;
  }
  return a;
}

template <class Geometry>
int select_point_in(const Geometry& geometry, const std::vector<int>& sphere_of,
                    const std::vector<const SvddSolution*>& spheres) {
  bool has_empty = false;
  for (const auto* s : spheres) has_empty = has_empty || s == nullptr || s->empty();
  int best_point = -1;
  double best_gap = -1.0;
  std::vector<double> costs;
  for (int i = 0; i < static_cast<int>(sphere_of.size()); ++i) {
    if (sphere_of[i] != kUnassigned) continue;
    costs.clear();
    for (const auto* s : spheres) {
      if (s != nullptr && !s->empty()) costs.push_back(geometry.distance_sq(i, *s));
    }
    if (has_empty) costs.push_back(0.0);
    double gap = 0.0;
    if (costs.size() >= 2) {
      std::partial_sort(costs.begin(), costs.begin() + 2, costs.end());
      gap = costs[1] - costs[0];
    }
    if (gap > best_gap) {
      best_gap = gap;
      best_point = i;
    }
  }
  return best_point;
}

template <class Geometry>
class Search {
 public:
  Search(const Geometry& geometry, const MsvddConfig& config)
      : geometry_(geometry),
        config_(config),
        n_(geometry.size()),
        required_(config.required_members()),
        start_(std::chrono::steady_clock::now()) {}

  MsvddSolution run() {
    MsvddSolution out;
    if (!config_.feasible(n_)) {
      out.status = SolveStatus::Infeasible;
      out.objective = std::numeric_limits<double>::infinity();
      out.lower_bound = std::numeric_limits<double>::infinity();
      out.wall_time_s = elapsed();
      return out;
    }
    seed_incumbent();

    auto root = std::make_unique<Node>();
    root->sphere_of.assign(static_cast<std::size_t>(n_), kUnassigned);
    root->spheres.resize(static_cast<std::size_t>(config_.p));
    root->bound = 0.0;
    root->depth = 0;
    root->seq = seq_++;
    heap_.push_back(std::move(root));

    if (config_.workers == 1) {
      work();
    } else {
      std::vector<std::thread> pool;
      for (int w = 0; w < config_.workers; ++w) pool.emplace_back([this] { work(); });
      for (auto& t : pool) t.join();
    }
    if (failure_) std::rethrow_exception(failure_);

    out.wall_time_s = elapsed();
    out.node_count = nodes_.load();
    out.incumbent_log = log_;
    out.assignment.sphere_of = incumbent_assignment_;
    out.spheres = incumbent_spheres_;
    out.objective = canonical_objective(out.spheres);
    if (timed_out_) {
      out.status = SolveStatus::TimeLimitIncumbent;
      double open = out.objective;
      for (const auto& node : heap_) open = std::min(open, node->bound);
      out.lower_bound = open;
    } else {
      out.status = SolveStatus::Optimal;
      out.lower_bound = out.objective;
    }
    return out;
  }

 private:
  using SpherePtr = std::shared_ptr<const SvddSolution>;

  struct Node {
    std::vector<int> sphere_of;
    std::vector<SpherePtr> spheres;
    double bound = 0.0;
    int depth = 0;
    std::uint64_t seq = 0;
  };
  using NodePtr = std::unique_ptr<Node>;

  // Heap order: lowest bound first, then deeper, then older.
  static bool lower_priority(const NodePtr& a, const NodePtr& b) {
    if (a->bound != b->bound) return a->bound > b->bound;
    if (a->depth != b->depth) return a->depth < b->depth;
    return a->seq > b->seq;
  }

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  static double prune_tolerance(double incumbent) { return 1e-9 * std::max(1.0, std::abs(incumbent)); }

  bool prunable(double bound) const {
    const double inc = incumbent_value_.load();
    return bound >= inc - prune_tolerance(inc);
  }

  void seed_incumbent() {
    if (config_.heuristic_restarts == 0) return;
    HeuristicConfig hc;
    hc.p = config_.p;
    hc.fixed_C = config_.C;
    hc.restarts = config_.heuristic_restarts;
    hc.seed = config_.seed;
    hc.max_iters = 100;
    const MsvddSolution h = run_heuristic(geometry_, hc);
    const Assignment a = repair_cardinality_in(geometry_, h.assignment, config_.p, config_.C, required_);
    auto spheres = fit_spheres(geometry_, a, config_.p, config_.C);
    const double objective = canonical_objective(spheres);
    offer(objective, std::move(spheres), a.sphere_of);
  }

  void offer(double objective, std::vector<SvddSolution> spheres, const std::vector<int>& sphere_of) {
    std::lock_guard<std::mutex> lock(incumbent_mutex_);
    const double current = incumbent_value_.load();
    if (std::isfinite(current) && objective >= current - 1e-12 * std::max(1.0, std::abs(current))) return;
    incumbent_value_.store(objective);
    incumbent_spheres_ = std::move(spheres);
    incumbent_assignment_ = sphere_of;
    log_.push_back({objective, elapsed(), sphere_of});
  }

  SpherePtr solve(const std::vector<int>& members, const SvddSolution* parent) {
    SvddOptions options;
    if (parent != nullptr && !parent->empty()) {
      std::vector<double> warm(members.size(), 0.0);
      std::size_t k = 0;
      for (std::size_t a = 0; a < members.size() && k < parent->members.size(); ++a) {
        if (members[a] == parent->members[k]) warm[a] = parent->alpha[k++];
      }
      options.warm_start = std::move(warm);
    }
    try {
      return std::make_shared<const SvddSolution>(fit_sphere(geometry_, members, config_.C, options));
    } catch (const ConvergenceError&) {
      options.warm_start.reset();
    }
    try {
      return std::make_shared<const SvddSolution>(fit_sphere(geometry_, members, config_.C, options));
    } catch (const ConvergenceError& e) {
      throw SolverError(std::string("sphere subproblem failed from a cold start (") + e.what() +
                        ", gap " + std::to_string(e.gap()) + ", " + std::to_string(members.size()) +
                        " members)");
    }
  }

  std::vector<NodePtr> expand(const Node& node) {
    std::vector<const SvddSolution*> view;
    for (const auto& s : node.spheres) view.push_back(s.get());
    const int point = select_point_in(geometry_, node.sphere_of, view);

    int used = 0;
    while (used < config_.p && node.spheres[used] && !node.spheres[used]->empty()) ++used;
    const int child_count = used < config_.p ? used + 1 : used;
    const int unassigned_after = n_ - (node.depth + 1);

    std::vector<NodePtr> children;
    for (int j = 0; j < child_count; ++j) {
      int deficit = 0;
      for (int k = 0; k < config_.p; ++k) {
        int size = node.spheres[k] ? static_cast<int>(node.spheres[k]->size()) : 0;
        if (k == j) ++size;
        deficit += std::max(0, required_ - size);
      }
      if (deficit > unassigned_after) continue;

      const SvddSolution* parent = node.spheres[j].get();
      std::vector<int> members = parent ? parent->members : std::vector<int>{};
      members.insert(std::upper_bound(members.begin(), members.end(), point), point);

      auto child = std::make_unique<Node>();
      child->sphere_of = node.sphere_of;
      child->sphere_of[point] = j;
      child->spheres = node.spheres;
      child->spheres[j] = solve(members, parent);
      child->depth = node.depth + 1;
      double bound = 0.0;
      for (const auto& s : child->spheres) {
        if (s) bound += s->dual_objective;
      }
      child->bound = bound;
      if (prunable(bound)) continue;

      if (child->depth == n_) {
        std::vector<SvddSolution> spheres;
        for (const auto& s : child->spheres) spheres.push_back(*s);
        const double objective = canonical_objective(spheres);
        offer(objective, std::move(spheres), child->sphere_of);
        continue;
      }
      children.push_back(std::move(child));
    }
    return children;
  }

  void work() {
    std::unique_lock<std::mutex> lock(queue_mutex_);
    for (;;) {
      queue_cv_.wait(lock, [this] { return !heap_.empty() || busy_ == 0 || stop_; });
      if (stop_ || (heap_.empty() && busy_ == 0)) {
        queue_cv_.notify_all();
        return;
      }
      if (elapsed() > config_.time_limit_s) {
        timed_out_ = true;
        stop_ = true;
        queue_cv_.notify_all();
        return;
      }
      std::pop_heap(heap_.begin(), heap_.end(), lower_priority);
      NodePtr node = std::move(heap_.back());
      heap_.pop_back();
      if (prunable(node->bound)) continue;
      ++busy_;
      lock.unlock();

      std::vector<NodePtr> children;
      try {
        children = expand(*node);
        ++nodes_;
      } catch (...) {
        lock.lock();
        if (!failure_) failure_ = std::current_exception();
        stop_ = true;
        --busy_;
        queue_cv_.notify_all();
        return;
      }

      lock.lock();
      for (auto& child : children) {
        child->seq = seq_++;
        heap_.push_back(std::move(child));
        std::push_heap(heap_.begin(), heap_.end(), lower_priority);
      }
      --busy_;
      queue_cv_.notify_all();
    }
  }

  const Geometry& geometry_;
  MsvddConfig config_;
  int n_;
  int required_;
  std::chrono::steady_clock::time_point start_;

  std::mutex incumbent_mutex_;
  std::atomic<double> incumbent_value_{std::numeric_limits<double>::infinity()};
  std::vector<SvddSolution> incumbent_spheres_;
  std::vector<int> incumbent_assignment_;
  std::vector<IncumbentRecord> log_;

  std::mutex queue_mutex_;
  std::condition_variable queue_cv_;
  std::vector<NodePtr> heap_;
  int busy_ = 0;
  bool stop_ = false;
  bool timed_out_ = false;
  std::exception_ptr failure_;
  std::uint64_t seq_ = 0;
  std::atomic<std::uint64_t> nodes_{0};
};

}  // namespace

MsvddSolution solve_exact(const MsvddProblem& problem) {
  problem.config.validate(static_cast<int>(problem.gram.size()));
  GramGeometry geometry(problem.gram);
  return Search<GramGeometry>(geometry, problem.config).run();
}

MsvddSolution solve_exact_euclidean(const PointMatrix& points, const MsvddConfig& config) {
  config.validate(static_cast<int>(points.rows()));
  EuclideanGeometry geometry(points);
  return Search<EuclideanGeometry>(geometry, config).run();
}

double lower_bound(const Assignment& node, const GramMatrix& gram, double C) {
  int p = 0;
  for (int j : node.sphere_of) p = std::max(p, j + 1);
  double total = 0.0;
  for (const auto& members : node.members(p)) {
    if (!members.empty()) total += solve_sphere(gram, members, C).objective;
  }
  return total;
}

int select_branch_point(const Assignment& node, int p, const GramMatrix& gram, double C) {
  GramGeometry geometry(gram);
  const auto spheres = fit_spheres(geometry, node, p, C);
  std::vector<const SvddSolution*> view;
  for (const auto& s : spheres) view.push_back(&s);
  return select_point_in(geometry, node.sphere_of, view);
}

std::vector<Assignment> branch(const Assignment& node, int p, int point) {
  if (point < 0 || point >= node.size() || node.sphere_of[point] != kUnassigned) {
    throw InputError("branch point must be an unassigned index");
  }
  std::vector<bool> used(static_cast<std::size_t>(p), false);
  for (int j : node.sphere_of) {
    if (j != kUnassigned) used[j] = true;
  }
  std::vector<Assignment> children;
  bool fresh_taken = false;
  for (int j = 0; j < p; ++j) {
    if (!used[j]) {
      if (fresh_taken) continue;
      fresh_taken = true;
    }
    Assignment child = node;
    child.sphere_of[point] = j;
    children.push_back(std::move(child));
  }
  return children;
}

std::vector<Assignment> branch(const Assignment& node, int p, const GramMatrix& gram, double C) {
  if (node.complete()) throw InputError("cannot branch on a complete assignment");
  return branch(node, p, select_branch_point(node, p, gram, C));
}

MsvddSolution evaluate_assignment(const GramMatrix& gram, const Assignment& assignment, int p, double C) {
  if (!assignment.complete()) throw InputError("assignment is incomplete");
  MsvddSolution out;
  out.assignment = assignment;
  out.spheres = fit_spheres(GramGeometry(gram), assignment, p, C);
  out.objective = canonical_objective(out.spheres);
  out.lower_bound = -std::numeric_limits<double>::infinity();
  out.status = SolveStatus::Heuristic;
  return out;
}

Assignment repair_cardinality(const GramMatrix& gram, const Assignment& assignment, int p, double C,
                              int required) {
  return repair_cardinality_in(GramGeometry(gram), assignment, p, C, required);
}

MsvddSolution evaluate_under_global_C(const GramMatrix& gram, const Assignment& assignment,
                                      const MsvddConfig& config) {
  const Assignment repaired =
      repair_cardinality(gram, assignment, config.p, config.C, config.required_members());
  return evaluate_assignment(gram, repaired, config.p, config.C);
}

double compute_delta_primal(const PointMatrix& points, int i) {
  if (i < 0 || i >= points.rows()) throw InputError("point index out of range");
  double best = 0.0;
  for (Eigen::Index k = 0; k < points.rows(); ++k) {
    best = std::max(best, (points.row(i) - points.row(k)).squaredNorm());
  }
  return best;
}

namespace {

double quadratic_cover(const GramMatrix& gram, double C) {
  double total = 0.0;
  for (Eigen::Index k = 0; k < gram.size(); ++k) {
    for (Eigen::Index l = 0; l < gram.size(); ++l) {
      const double pi = gram(k, l) < 0.0 ? C : 0.0;
      total += (C - pi) * (C - pi) * gram(k, l);
    }
  }
  return total;
}

double linear_cover(const GramMatrix& gram, double C, int i) {
  double total = 0.0;
  for (Eigen::Index k = 0; k < gram.size(); ++k) {
    const double pi = gram(i, k) < 0.0 ? C : 0.0;
    total += pi * gram(i, k);
  }
  return total;
}

}  // namespace

double compute_delta_dual(const GramMatrix& gram, double C, int i) {
  if (i < 0 || i >= gram.size()) throw InputError("point index out of range");
  return gram(i, i) - 2.0 * linear_cover(gram, C, i) + quadratic_cover(gram, C);
}

double compute_delta_dual_literal(const GramMatrix& gram, double C, int i) {
  if (i < 0 || i >= gram.size()) throw InputError("point index out of range");
  return gram(i, i) + 2.0 * linear_cover(gram, C, i) + quadratic_cover(gram, C);
}

std::vector<double> compute_deltas_primal(const PointMatrix& points) {
  std::vector<double> out;
  for (int i = 0; i < points.rows(); ++i) out.push_back(compute_delta_primal(points, i));
  return out;
}

std::vector<double> compute_deltas_dual(const GramMatrix& gram, double C) {
  const double quad = quadratic_cover(gram, C);
  std::vector<double> out;
  for (int i = 0; i < gram.size(); ++i) out.push_back(gram(i, i) - 2.0 * linear_cover(gram, C, i) + quad);
  return out;
}

bool verify_bigM_feasibility(const GramMatrix& gram, const MsvddSolution& solution,
                             const std::vector<double>& deltas) {
  const int n = static_cast<int>(gram.size());
  if (static_cast<int>(deltas.size()) != n || solution.assignment.size() != n) {
    throw InputError("deltas and assignment must cover every point");
  }
  std::vector<double> xi(static_cast<std::size_t>(n), 0.0);
  for (const auto& s : solution.spheres) {
    for (std::size_t a = 0; a < s.members.size(); ++a) xi[s.members[a]] = s.errors[a];
  }
  const GramGeometry geometry(gram);
  for (int i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < solution.spheres.size(); ++j) {
      const auto& s = solution.spheres[j];
      if (s.empty()) continue;
      const bool assigned = solution.assignment.sphere_of[i] == static_cast<int>(j);
      const double lhs = geometry.distance_sq(i, s);
      const double rhs = s.radius_sq + xi[i] + (assigned ? 0.0 : deltas[i]);
      if (lhs > rhs + tol::kBigM * std::max(1.0, std::abs(rhs))) return false;
    }
  }
  return true;
}

}  // namespace msvdd
