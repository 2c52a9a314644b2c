#include "msvdd/kernel.hpp"

#include "msvdd/errors.hpp"
#include "msvdd/tolerances.hpp"

#include <cmath>
#include <sstream>

namespace msvdd {

KernelSpec KernelSpec::rbf(double sigma_squared) {
  KernelSpec spec{KernelKind::Rbf, sigma_squared};
  spec.validate();
  return spec;
}

void KernelSpec::validate() const {
  if (kind == KernelKind::Rbf && !(sigma_squared > 0.0)) {
    throw InputError("RBF kernel requires sigma_squared > 0");
  }
}

std::string KernelSpec::name() const {
  if (kind == KernelKind::Linear) return "linear";
  std::ostringstream out;
  out << "rbf(" << sigma_squared << ")";
  return out.str();
}

double eval_kernel(const KernelSpec& spec, std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw InputError("kernel arguments differ in dimension: " + std::to_string(x.size()) + " vs " +
                     std::to_string(y.size()));
  }
  if (spec.kind == KernelKind::Linear) {
    double dot = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) dot += x[t] * y[t];
    return dot;
  }
  double dist = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    const double diff = x[t] - y[t];
    dist += diff * diff;
  }
  return std::exp(-dist / spec.sigma_squared);
}

GramMatrix::GramMatrix(KernelSpec spec, Eigen::MatrixXd values)
    : spec_(spec), values_(std::move(values)) {
  if (values_.rows() != values_.cols()) throw InputError("Gram matrix must be square");
}

GramMatrix gram(const KernelSpec& spec, const PointMatrix& points) {
  spec.validate();
  const Eigen::Index n = points.rows();
  if (n == 0) throw InputError("cannot build a Gram matrix over an empty point set");
  Eigen::MatrixXd values(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = i; k < n; ++k) {
      const double v = eval_kernel(spec, row_span(points, i), row_span(points, k));
      values(i, k) = v;
      values(k, i) = v;
    }
  }
  return GramMatrix(spec, std::move(values));
}

double feature_distance_sq(const GramMatrix& gram, Eigen::Index i, std::span<const double> alpha) {
  const Eigen::Index n = gram.size();
  if (static_cast<Eigen::Index>(alpha.size()) != n) {
    throw InputError("weight vector length does not match the Gram matrix");
  }
  if (i < 0 || i >= n) throw InputError("point index out of range");
  double total = 0.0;
  for (double a : alpha) total += a;
  if (std::abs(total - 1.0) > tol::kSimplexSum) {
    throw InputError("center weights must sum to 1");
  }
  const Eigen::Map<const Eigen::VectorXd> a(alpha.data(), n);
  const double cross = gram.values().row(i).dot(a);
  const double center = a.dot(gram.values() * a);
  const double d = gram(i, i) - 2.0 * cross + center;
  return d < 0.0 && d > -tol::kDistanceClamp ? 0.0 : d;
}

}  // namespace msvdd
