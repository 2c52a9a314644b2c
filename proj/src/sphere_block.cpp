#include "msvdd/sphere_block.hpp"

#include "msvdd/errors.hpp"
#include "msvdd/tolerances.hpp"

namespace msvdd {

namespace {

Eigen::VectorXd clamp_rounding(Eigen::VectorXd d) {
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d[i] < 0.0 && d[i] > -tol::kDistanceClamp) d[i] = 0.0;
  }
  return d;
}

}  // namespace

GramBlock::GramBlock(const GramMatrix& gram, std::span<const int> members) {
  const auto m = static_cast<Eigen::Index>(members.size());
  sub_.resize(m, m);
  diag_.resize(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    const int i = members[a];
    if (i < 0 || i >= gram.size()) throw InputError("member index out of range");
    for (Eigen::Index b = 0; b < m; ++b) sub_(a, b) = gram(i, members[b]);
    diag_[a] = sub_(a, a);
  }
}

Eigen::VectorXd GramBlock::distances_sq(const Eigen::VectorXd& alpha,
                                        const Eigen::VectorXd& k_alpha) const {
  const double center = alpha.dot(k_alpha);
  return clamp_rounding(diag_ - 2.0 * k_alpha + Eigen::VectorXd::Constant(size(), center));
}

Eigen::MatrixXd GramBlock::restricted(const std::vector<Eigen::Index>& local) const {
  return sub_(local, local);
}

PointBlock::PointBlock(const PointMatrix& points, std::span<const int> members) {
  const auto m = static_cast<Eigen::Index>(members.size());
  coords_.resize(m, points.cols());
  for (Eigen::Index a = 0; a < m; ++a) {
    const int i = members[a];
    if (i < 0 || i >= points.rows()) throw InputError("member index out of range");
    coords_.row(a) = points.row(i);
  }
  diag_ = coords_.rowwise().squaredNorm();
}

Eigen::VectorXd PointBlock::apply(const Eigen::VectorXd& alpha) const {
  const Eigen::VectorXd center = coords_.transpose() * alpha;
  return coords_ * center;
}

Eigen::VectorXd PointBlock::distances_sq(const Eigen::VectorXd& alpha,
                                         const Eigen::VectorXd& /*k_alpha*/) const {
  const Eigen::RowVectorXd center = (coords_.transpose() * alpha).transpose();
  return (coords_.rowwise() - center).rowwise().squaredNorm();
}

Eigen::MatrixXd PointBlock::restricted(const std::vector<Eigen::Index>& local) const {
  const Eigen::MatrixXd sub = coords_(local, Eigen::all);
  return sub * sub.transpose();
}

}  // namespace msvdd
