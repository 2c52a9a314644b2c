#include "msvdd/geometry.hpp"

#include "msvdd/tolerances.hpp"

namespace msvdd {

double GramGeometry::distance_sq(int i, const SvddSolution& sphere) const {
  double cross = 0.0;
  for (std::size_t k = 0; k < sphere.members.size(); ++k) {
    cross += sphere.alpha[k] * (*gram_)(i, sphere.members[k]);
  }
  const double d = (*gram_)(i, i) - 2.0 * cross + sphere.center_norm_sq;
  return d < 0.0 && d > -tol::kDistanceClamp ? 0.0 : d;
}

Eigen::RowVectorXd EuclideanGeometry::center(const SvddSolution& sphere) const {
  Eigen::RowVectorXd c = Eigen::RowVectorXd::Zero(points_->cols());
  for (std::size_t k = 0; k < sphere.members.size(); ++k) {
    c += sphere.alpha[k] * points_->row(sphere.members[k]);
  }
  return c;
}

double EuclideanGeometry::distance_sq(int i, const SvddSolution& sphere) const {
  return (points_->row(i) - center(sphere)).squaredNorm();
}

}  // namespace msvdd
