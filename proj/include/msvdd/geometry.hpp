#pragma once

#include "msvdd/kernel.hpp"
#include "msvdd/sphere_block.hpp"
#include "msvdd/svdd.hpp"

#include <span>

namespace msvdd {

// Dataset-level geometry used by the multi-sphere solvers. GramGeometry works
// in any kernel feature space through Gram entries; EuclideanGeometry keeps
// raw coordinates and forms centers explicitly (the Linear-kernel primal).

class GramGeometry {
 public:
  using Block = GramBlock;

  explicit GramGeometry(const GramMatrix& gram) : gram_(&gram) {}

  int size() const { return static_cast<int>(gram_->size()); }
  Block block(std::span<const int> members) const { return GramBlock(*gram_, members); }
  /// |Phi(x_i) - c|^2 for the center of a solved sphere.
  double distance_sq(int i, const SvddSolution& sphere) const;
  const GramMatrix& gram() const { return *gram_; }

 private:
  const GramMatrix* gram_;
};

class EuclideanGeometry {
 public:
  using Block = PointBlock;

  explicit EuclideanGeometry(const PointMatrix& points) : points_(&points) {}

  int size() const { return static_cast<int>(points_->rows()); }
  Block block(std::span<const int> members) const { return PointBlock(*points_, members); }
  double distance_sq(int i, const SvddSolution& sphere) const;
  Eigen::RowVectorXd center(const SvddSolution& sphere) const;

 private:
  const PointMatrix* points_;
};

/// Sphere over `members`: dual SVDD when C * |members| >= 1, else the R >= 0
/// closed form. `members` must be nonempty.
template <class Geometry>
SvddSolution fit_sphere(const Geometry& geometry, std::span<const int> members, double C,
                        const SvddOptions& options = {}) {
  const auto block = geometry.block(members);
  SvddSolution s = C * static_cast<double>(members.size()) >= 1.0 - 1e-12
                       ? solve_svdd_block(block, C, options)
                       : solve_relaxed_block(block, C);
  s.members.assign(members.begin(), members.end());
  for (int& i : s.support_free) i = s.members[i];
  for (int& i : s.support_bound) i = s.members[i];
  return s;
}

}  // namespace msvdd
