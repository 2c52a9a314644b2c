#pragma once

#include "msvdd/kernel.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace msvdd {

// Kernel data of one sphere's members, as consumed by the single-sphere dual
// solver. Two interchangeable backings: a slice of a precomputed Gram matrix,
// or raw coordinates with an explicit center (Linear geometry only).

class GramBlock {
 public:
  GramBlock(const GramMatrix& gram, std::span<const int> members);

  Eigen::Index size() const { return sub_.rows(); }
  const Eigen::VectorXd& diag() const { return diag_; }
  Eigen::VectorXd apply(const Eigen::VectorXd& alpha) const { return sub_ * alpha; }
  /// Squared feature distances of every member to the center sum_k alpha_k Phi(x_k).
  Eigen::VectorXd distances_sq(const Eigen::VectorXd& alpha, const Eigen::VectorXd& k_alpha) const;
  Eigen::MatrixXd restricted(const std::vector<Eigen::Index>& local) const;

 private:
  Eigen::MatrixXd sub_;
  Eigen::VectorXd diag_;
};

class PointBlock {
 public:
  PointBlock(const PointMatrix& points, std::span<const int> members);

  Eigen::Index size() const { return coords_.rows(); }
  const Eigen::VectorXd& diag() const { return diag_; }
  Eigen::VectorXd apply(const Eigen::VectorXd& alpha) const;
  /// |x_i - c|^2 with c = sum_k alpha_k x_k formed explicitly.
  Eigen::VectorXd distances_sq(const Eigen::VectorXd& alpha, const Eigen::VectorXd& k_alpha) const;
  Eigen::MatrixXd restricted(const std::vector<Eigen::Index>& local) const;

 private:
  Eigen::MatrixXd coords_;
  Eigen::VectorXd diag_;
};

}  // namespace msvdd
