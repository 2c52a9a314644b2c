#include "msvdd/svdd.hpp"

#include "msvdd/errors.hpp"
#include "msvdd/tolerances.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace msvdd {

RadiusFit recover_radius(std::span<const double> distances_sq, double C) {
  if (!(C > 0.0)) throw InputError("C must be positive");
  std::vector<double> sorted(distances_sq.begin(), distances_sq.end());
  for (double& d : sorted) {
    if (d < -tol::kDistanceClamp) throw InputError("negative squared distance");
    d = std::max(d, 0.0);
  }
  std::sort(sorted.begin(), sorted.end(), std::greater<>());

  // g(R) = R + C * sum max(0, d_i - R) has right slope 1 - C * #{d_i > R};
  // the smallest minimizer leaves at most floor(1/C) points strictly outside.
  const auto max_outside = static_cast<std::size_t>(std::floor(1.0 / C + 1e-9));
  RadiusFit fit;
  fit.radius_sq = max_outside < sorted.size() ? sorted[max_outside] : 0.0;
  fit.errors.reserve(distances_sq.size());
  double excess = 0.0;
  for (double d : distances_sq) {
    const double xi = std::max(0.0, d - fit.radius_sq);
    fit.errors.push_back(xi);
    excess += xi;
  }
  fit.objective = fit.radius_sq + C * excess;
  return fit;
}

std::vector<double> project_capped_simplex(std::span<const double> v, double cap, double total) {
  const std::size_t m = v.size();
  if (m == 0) throw InputError("cannot project an empty vector");
  if (!(cap > 0.0) || cap * static_cast<double>(m) < total * (1.0 - 1e-12)) {
    throw InfeasibleSubproblemError("capped simplex is empty: cap * size < total");
  }
  std::vector<double> out(m);
  if (cap * static_cast<double>(m) <= total) {
    std::fill(out.begin(), out.end(), total / static_cast<double>(m));
    return out;
  }

  // h(tau) = sum clamp(v_i - tau, 0, cap) is nonincreasing and piecewise
  // linear with kinks at v_i - cap (entry leaves the cap) and v_i (hits 0).
  struct Event {
    double tau;
    int slope_change;
  };
  std::vector<Event> events;
  events.reserve(2 * m);
  for (double x : v) {
    events.push_back({x - cap, -1});
    events.push_back({x, +1});
  }
  std::sort(events.begin(), events.end(),
            [](const Event& a, const Event& b) { return a.tau < b.tau; });

  double h = cap * static_cast<double>(m);
  double tau = events.front().tau;
  int slope = 0;
  double solution = tau;
  bool found = false;
  for (const Event& e : events) {
    const double next_h = h + slope * (e.tau - tau);
    if (slope < 0 && next_h <= total) {
      solution = tau + (h - total) / static_cast<double>(-slope);
      found = true;
      break;
    }
    h = next_h;
    tau = e.tau;
    slope += e.slope_change;
  }
  if (!found) solution = tau;
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    out[i] = std::clamp(v[i] - solution, 0.0, cap);
    sum += out[i];
  }
  // Push the rounding residual onto a free coordinate.
  const double residual = total - sum;
  if (residual != 0.0) {
    for (std::size_t i = 0; i < m; ++i) {
      const double adjusted = out[i] + residual;
      if (out[i] > 0.0 && out[i] < cap && adjusted >= 0.0 && adjusted <= cap) {
        out[i] = adjusted;
        break;
      }
    }
  }
  return out;
}

namespace {

struct Evaluation {
  double primal = std::numeric_limits<double>::infinity();
  double dual = -std::numeric_limits<double>::infinity();
  double gap() const { return primal - dual; }
};

template <class Block>
Evaluation evaluate(const Block& block, const Eigen::VectorXd& alpha, const Eigen::VectorXd& k_alpha,
                    double C) {
  const Eigen::VectorXd dist = block.distances_sq(alpha, k_alpha);
  Evaluation ev;
  ev.primal = recover_radius({dist.data(), static_cast<std::size_t>(dist.size())}, C).objective;
  ev.dual = alpha.dot(block.diag()) - alpha.dot(k_alpha);
  return ev;
}

bool converged(const Evaluation& ev, double tolerance) {
  return ev.gap() <= tolerance * std::max(1.0, std::abs(ev.primal));
}

Eigen::VectorXd project(const Eigen::VectorXd& v, double C) {
  const auto p = project_capped_simplex({v.data(), static_cast<std::size_t>(v.size())}, C);
  return Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
}

// Solves the equality-constrained QP on the face picked out by the current
// iterate: capped coordinates stay at C, zero coordinates stay at 0.
template <class Block>
std::optional<Eigen::VectorXd> polish(const Block& block, const Eigen::VectorXd& alpha, double C) {
  const double edge = 1e-12 * C;
  std::vector<Eigen::Index> free_set;
  Eigen::VectorXd fixed = Eigen::VectorXd::Zero(alpha.size());
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    if (alpha[i] >= C - edge) {
      fixed[i] = C;
    } else if (alpha[i] > edge) {
      free_set.push_back(i);
    }
  }
  const auto f = static_cast<Eigen::Index>(free_set.size());
  if (f == 0) return std::nullopt;

  const Eigen::VectorXd k_fixed = block.apply(fixed);
  const Eigen::MatrixXd k_free = block.restricted(free_set);
  Eigen::MatrixXd system = Eigen::MatrixXd::Zero(f + 1, f + 1);
  Eigen::VectorXd rhs(f + 1);
  system.topLeftCorner(f, f) = 2.0 * k_free;
  system.topRightCorner(f, 1).setOnes();
  system.bottomLeftCorner(1, f).setOnes();
  for (Eigen::Index a = 0; a < f; ++a) {
    rhs[a] = block.diag()[free_set[a]] - 2.0 * k_fixed[free_set[a]];
  }
  rhs[f] = 1.0 - fixed.sum();
  const Eigen::VectorXd sol = system.completeOrthogonalDecomposition().solve(rhs);
  if (!sol.allFinite()) return std::nullopt;

  Eigen::VectorXd candidate = fixed;
  for (Eigen::Index a = 0; a < f; ++a) {
    const double v = sol[a];
    if (v < -1e-12 || v > C + 1e-12) return std::nullopt;
    candidate[free_set[a]] = std::clamp(v, 0.0, C);
  }
  if (std::abs(candidate.sum() - 1.0) > 1e-12) return std::nullopt;
  return candidate;
}

template <class Block>
double lipschitz_estimate(const Block& block) {
  const Eigen::Index m = block.size();
  Eigen::VectorXd v = Eigen::VectorXd::Constant(m, 1.0 / std::sqrt(static_cast<double>(m)));
  double lambda = 0.0;
  for (int it = 0; it < 30; ++it) {
    const Eigen::VectorXd kv = block.apply(v);
    lambda = kv.norm();
    if (lambda <= 0.0) break;
    v = kv / lambda;
  }
  return std::max(2.0 * lambda * 1.05, 1e-12);
}

template <class Block>
SvddSolution assemble(const Block& block, const Eigen::VectorXd& alpha, double C, int iterations) {
  const Eigen::VectorXd k_alpha = block.apply(alpha);
  const Eigen::VectorXd dist = block.distances_sq(alpha, k_alpha);
  SvddSolution s;
  s.C = C;
  s.alpha.assign(alpha.data(), alpha.data() + alpha.size());
  s.distances_sq.assign(dist.data(), dist.data() + dist.size());
  RadiusFit fit = recover_radius(s.distances_sq, C);
  s.radius_sq = fit.radius_sq;
  s.errors = std::move(fit.errors);
  s.objective = fit.objective;
  s.center_norm_sq = alpha.dot(k_alpha);
  s.dual_objective = alpha.dot(block.diag()) - s.center_norm_sq;
  s.iterations = iterations;
  return s;
}

}  // namespace

template <class Block>
SvddSolution solve_svdd_block(const Block& block, double C, const SvddOptions& options) {
  const Eigen::Index m = block.size();
  if (m == 0) throw InputError("sphere has no members");
  if (!(C > 0.0)) throw InputError("C must be positive");
  if (C * static_cast<double>(m) < 1.0 - 1e-12) {
    throw InfeasibleSubproblemError("C * |members| < 1: no dual-feasible weights");
  }

  Eigen::VectorXd alpha;
  if (options.warm_start && static_cast<Eigen::Index>(options.warm_start->size()) == m) {
    Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(options.warm_start->data(), m);
    const double total = w.sum();
    if (w.allFinite() && total > 0.0) alpha = project(w / total, C);
  }
  if (alpha.size() != m) alpha = project(Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m)), C);

  Eigen::VectorXd k_alpha = block.apply(alpha);
  Evaluation current = evaluate(block, alpha, k_alpha, C);
  Eigen::VectorXd best = alpha;
  Evaluation best_ev = current;
  if (converged(current, options.gap_tolerance)) return assemble(block, alpha, C, 0);

  double lipschitz = lipschitz_estimate(block);
  Eigen::VectorXd y = alpha;
  Eigen::VectorXd k_y = k_alpha;
  double t = 1.0;
  int it = 0;
  bool done = false;
  for (it = 1; it <= options.max_iterations && !done; ++it) {
    // Ascent step on D(a) = a'diag - a'Ka with backtracking on the curvature.
    const Eigen::VectorXd grad = block.diag() - 2.0 * k_y;
    Eigen::VectorXd candidate;
    Eigen::VectorXd k_candidate;
    for (;;) {
      candidate = project(y + grad / lipschitz, C);
      // Fresh products keep rounding from accumulating across iterations.
      k_candidate = block.apply(candidate);
      const Eigen::VectorXd delta = candidate - y;
      const double curvature = delta.dot(k_candidate - k_y);
      if (curvature <= 0.5 * lipschitz * delta.squaredNorm() * (1.0 + 1e-12) + 1e-300) break;
      lipschitz *= 2.0;
    }

    const Evaluation cand_ev = evaluate(block, candidate, k_candidate, C);
    if (t > 1.0 && cand_ev.dual < current.dual) {
      // Momentum overshot; restart from the last accepted iterate.
      y = alpha;
      k_y = k_alpha;
      t = 1.0;
      continue;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double momentum = (t - 1.0) / t_next;
    y = candidate + momentum * (candidate - alpha);
    k_y = k_candidate + momentum * (k_candidate - k_alpha);
    alpha = std::move(candidate);
    k_alpha = std::move(k_candidate);
    current = cand_ev;
    t = t_next;

    if (current.gap() < best_ev.gap()) {
      best = alpha;
      best_ev = current;
    }
    if (converged(current, options.gap_tolerance)) {
      done = true;
      break;
    }
    if (options.polish && (it % 20 == 0 || current.gap() < 1e-5 * std::max(1.0, current.primal))) {
      if (auto refined = polish(block, alpha, C)) {
        const Eigen::VectorXd k_refined = block.apply(*refined);
        const Evaluation refined_ev = evaluate(block, *refined, k_refined, C);
        if (refined_ev.gap() < best_ev.gap()) {
          best = *refined;
          best_ev = refined_ev;
        }
        if (refined_ev.dual >= current.dual) {
          alpha = *refined;
          k_alpha = k_refined;
          current = refined_ev;
          y = alpha;
          k_y = k_alpha;
          t = 1.0;
        }
        if (converged(refined_ev, options.gap_tolerance)) {
          done = true;
          break;
        }
      }
    }
  }
  if (!done && !converged(best_ev, options.gap_tolerance)) {
    throw ConvergenceError("SVDD dual did not reach the duality-gap tolerance",
                           std::vector<double>(best.data(), best.data() + best.size()), best_ev.gap());
  }
  // Return the iterate with the smallest certified gap.
  SvddSolution out = assemble(block, best_ev.gap() <= current.gap() ? best : alpha, C, it);
  const double edge = tol::kFeasibility * C;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (out.alpha[i] >= C - edge) {
      out.support_bound.push_back(static_cast<int>(i));
    } else if (out.alpha[i] > edge) {
      out.support_free.push_back(static_cast<int>(i));
    }
  }
  return out;
}

template <class Block>
SvddSolution solve_relaxed_block(const Block& block, double C) {
  const Eigen::Index m = block.size();
  if (m == 0) throw InputError("sphere has no members");
  const Eigen::VectorXd alpha = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
  const Eigen::VectorXd k_alpha = block.apply(alpha);
  const Eigen::VectorXd dist = block.distances_sq(alpha, k_alpha);
  SvddSolution s;
  s.C = C;
  s.relaxed = true;
  s.alpha.assign(alpha.data(), alpha.data() + m);
  s.distances_sq.assign(dist.data(), dist.data() + m);
  s.errors = s.distances_sq;
  s.radius_sq = 0.0;
  s.objective = C * dist.sum();
  s.dual_objective = s.objective;
  s.center_norm_sq = alpha.dot(k_alpha);
  return s;
}

template SvddSolution solve_svdd_block<GramBlock>(const GramBlock&, double, const SvddOptions&);
template SvddSolution solve_svdd_block<PointBlock>(const PointBlock&, double, const SvddOptions&);
template SvddSolution solve_relaxed_block<GramBlock>(const GramBlock&, double);
template SvddSolution solve_relaxed_block<PointBlock>(const PointBlock&, double);

namespace {

void attach_members(SvddSolution& s, std::span<const int> members) {
  s.members.assign(members.begin(), members.end());
  for (int& i : s.support_free) i = s.members[i];
  for (int& i : s.support_bound) i = s.members[i];
}

}  // namespace

SvddSolution solve_svdd(const GramMatrix& gram, std::span<const int> members, double C,
                        const SvddOptions& options) {
  SvddSolution s = solve_svdd_block(GramBlock(gram, members), C, options);
  attach_members(s, members);
  return s;
}

SvddSolution solve_sphere(const GramMatrix& gram, std::span<const int> members, double C,
                          const SvddOptions& options) {
  if (C * static_cast<double>(members.size()) >= 1.0 - 1e-12) {
    return solve_svdd(gram, members, C, options);
  }
  SvddSolution s = solve_relaxed_block(GramBlock(gram, members), C);
  attach_members(s, members);
  return s;
}

bool svdd_objective_monotone_check(const GramMatrix& gram, std::span<const int> members, int extra,
                                   double C) {
  if (std::find(members.begin(), members.end(), extra) != members.end()) {
    throw InputError("extra point is already a member");
  }
  std::vector<int> grown(members.begin(), members.end());
  grown.push_back(extra);
  const double before = solve_svdd(gram, members, C).objective;
  const double after = solve_svdd(gram, grown, C).objective;
  return after >= before - 1e-7;
}

}  // namespace msvdd
