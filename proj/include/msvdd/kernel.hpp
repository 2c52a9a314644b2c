#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>

namespace msvdd {

/// Row-major n x d point storage; row i is point x_i.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline std::span<const double> row_span(const PointMatrix& points, Eigen::Index i) {
  return {points.data() + i * points.cols(), static_cast<std::size_t>(points.cols())};
}

enum class KernelKind { Linear, Rbf };

struct KernelSpec {
  KernelKind kind = KernelKind::Linear;
  double sigma_squared = 1.0;  // RBF only

  static KernelSpec linear() { return {KernelKind::Linear, 1.0}; }
  static KernelSpec rbf(double sigma_squared);

  void validate() const;
  std::string name() const;
};

/// Linear: <x, y>. RBF: exp(-|x - y|^2 / sigma^2).
double eval_kernel(const KernelSpec& spec, std::span<const double> x, std::span<const double> y);

/// Immutable symmetric kernel matrix over a fixed point set.
class GramMatrix {
 public:
  GramMatrix(KernelSpec spec, Eigen::MatrixXd values);

  Eigen::Index size() const { return values_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index k) const { return values_(i, k); }
  const Eigen::MatrixXd& values() const { return values_; }
  const KernelSpec& spec() const { return spec_; }

 private:
  KernelSpec spec_;
  Eigen::MatrixXd values_;
};

GramMatrix gram(const KernelSpec& spec, const PointMatrix& points);

/// |Phi(x_i) - sum_k alpha_k Phi(x_k)|^2 from Gram entries only.
/// alpha must have length n and sum to 1.
double feature_distance_sq(const GramMatrix& gram, Eigen::Index i, std::span<const double> alpha);

}  // namespace msvdd
