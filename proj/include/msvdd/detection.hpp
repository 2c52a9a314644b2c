#pragma once

#include "msvdd/kernel.hpp"
#include "msvdd/solution.hpp"

#include <ostream>
#include <span>
#include <vector>

namespace msvdd {

enum class Label { Regular, Outlier };

/// One trained sphere: center sum_k alpha_k Phi(x_{members[k]}).
struct SphereModel {
  std::vector<int> members;
  std::vector<double> alpha;
  double radius_sq = 0.0;
  double center_norm_sq = 0.0;  // alpha' K alpha over the members
};

/// Decision rule over a set of spheres, evaluated through the kernel only.
class DetectionModel {
 public:
  DetectionModel(KernelSpec spec, PointMatrix training, std::vector<SphereModel> spheres);

  /// Keeps the nonempty spheres of a solved model.
  static DetectionModel from_solution(const KernelSpec& spec, const PointMatrix& training,
                                      const MsvddSolution& solution);

  const KernelSpec& spec() const { return spec_; }
  const PointMatrix& training() const { return training_; }
  const std::vector<SphereModel>& spheres() const { return spheres_; }
  Eigen::Index dimension() const { return training_.cols(); }

  /// Kernel-expansion squared distance from x to the center of sphere j.
  double distance_sq(std::span<const double> x, std::size_t j) const;

  /// min_j (d_j^2(x) - R_j); at most 0 exactly when x lies in some sphere.
  double anomaly_score(std::span<const double> x) const;
  std::vector<double> anomaly_scores(const PointMatrix& points) const;

  /// Regular iff anomaly_score(x) <= 1e-9.
  Label classify(std::span<const double> x) const;

  /// Linear kernel only: explicit center coordinates.
  Eigen::RowVectorXd center(std::size_t j) const;
  /// Linear kernel only: min_j (|x - c_j|^2 - R_j) from explicit centers.
  double direct_score(std::span<const double> x) const;

 private:
  KernelSpec spec_;
  PointMatrix training_;
  std::vector<SphereModel> spheres_;
};

struct RocResult {
  double auc = 0.0;
  // Curve points in order of decreasing threshold; the first threshold is
  // +infinity (nothing flagged), the last flags every point.
  std::vector<double> thresholds;
  std::vector<double> fpr;
  std::vector<double> tpr;
};

/// Mann-Whitney AUC with average ranks for ties. Outliers are expected to
/// score higher. Throws UndefinedMetricError unless both classes occur.
RocResult auc_roc(std::span<const double> scores, std::span<const Label> labels);

/// Area under the emitted curve by the trapezoid rule.
double trapezoid_auc(const RocResult& roc);

/// CSV with header threshold,fpr,tpr.
void write_roc_csv(std::ostream& out, const RocResult& roc);

}  // namespace msvdd
