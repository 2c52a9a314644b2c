#include "msvdd/detection.hpp"

#include "msvdd/errors.hpp"
#include "msvdd/tolerances.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>

namespace msvdd {

DetectionModel::DetectionModel(KernelSpec spec, PointMatrix training, std::vector<SphereModel> spheres)
    : spec_(spec), training_(std::move(training)), spheres_(std::move(spheres)) {
  spec_.validate();
  if (spheres_.empty()) throw InputError("detection model needs at least one sphere");
  for (const auto& s : spheres_) {
    if (s.members.empty() || s.members.size() != s.alpha.size()) {
      throw InputError("sphere members and weights must be nonempty and of equal length");
    }
    for (int i : s.members) {
      if (i < 0 || i >= training_.rows()) throw InputError("sphere member index out of range");
    }
  }
}

DetectionModel DetectionModel::from_solution(const KernelSpec& spec, const PointMatrix& training,
                                             const MsvddSolution& solution) {
  std::vector<SphereModel> spheres;
  for (const auto& s : solution.spheres) {
    if (s.empty()) continue;
    spheres.push_back({s.members, s.alpha, s.radius_sq, s.center_norm_sq});
  }
  return DetectionModel(spec, training, std::move(spheres));
}

double DetectionModel::distance_sq(std::span<const double> x, std::size_t j) const {
  if (static_cast<Eigen::Index>(x.size()) != dimension()) {
    throw InputError("point dimension does not match the training data");
  }
  const SphereModel& s = spheres_.at(j);
  double cross = 0.0;
  for (std::size_t k = 0; k < s.members.size(); ++k) {
    cross += s.alpha[k] * eval_kernel(spec_, x, row_span(training_, s.members[k]));
  }
  const double d = eval_kernel(spec_, x, x) - 2.0 * cross + s.center_norm_sq;
  return d < 0.0 && d > -tol::kDistanceClamp ? 0.0 : d;
}

double DetectionModel::anomaly_score(std::span<const double> x) const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < spheres_.size(); ++j) {
    best = std::min(best, distance_sq(x, j) - spheres_[j].radius_sq);
  }
  return best;
}

std::vector<double> DetectionModel::anomaly_scores(const PointMatrix& points) const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index i = 0; i < points.rows(); ++i) out.push_back(anomaly_score(row_span(points, i)));
  return out;
}

Label DetectionModel::classify(std::span<const double> x) const {
  return anomaly_score(x) <= tol::kBoundary ? Label::Regular : Label::Outlier;
}

Eigen::RowVectorXd DetectionModel::center(std::size_t j) const {
  if (spec_.kind != KernelKind::Linear) throw InputError("explicit centers exist only for the linear kernel");
  const SphereModel& s = spheres_.at(j);
  Eigen::RowVectorXd c = Eigen::RowVectorXd::Zero(dimension());
  for (std::size_t k = 0; k < s.members.size(); ++k) c += s.alpha[k] * training_.row(s.members[k]);
  return c;
}

double DetectionModel::direct_score(std::span<const double> x) const {
  if (static_cast<Eigen::Index>(x.size()) != dimension()) {
    throw InputError("point dimension does not match the training data");
  }
  const Eigen::Map<const Eigen::RowVectorXd> point(x.data(), dimension());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < spheres_.size(); ++j) {
    best = std::min(best, (point - center(j)).squaredNorm() - spheres_[j].radius_sq);
  }
  return best;
}

RocResult auc_roc(std::span<const double> scores, std::span<const Label> labels) {
  if (scores.size() != labels.size()) throw InputError("scores and labels differ in length");
  const std::size_t n = scores.size();
  std::size_t positives = 0;
  for (Label l : labels) positives += l == Label::Outlier ? 1 : 0;
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) {
    throw UndefinedMetricError("AUC needs both regular and outlier labels");
  }
  for (double s : scores) {
    if (std::isnan(s)) throw InputError("scores must not be NaN");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Average ranks (1-based) over tie groups.
  double outlier_rank_sum = 0.0;
  for (std::size_t start = 0; start < n;) {
    std::size_t end = start;
    while (end < n && scores[order[end]] == scores[order[start]]) ++end;
    const double rank = 0.5 * static_cast<double>(start + 1 + end);
    for (std::size_t k = start; k < end; ++k) {
      if (labels[order[k]] == Label::Outlier) outlier_rank_sum += rank;
    }
    start = end;
  }
  const double p = static_cast<double>(positives);
  const double q = static_cast<double>(negatives);

  RocResult roc;
  roc.auc = (outlier_rank_sum - p * (p + 1.0) / 2.0) / (p * q);
  roc.thresholds.push_back(std::numeric_limits<double>::infinity());
  roc.fpr.push_back(0.0);
  roc.tpr.push_back(0.0);
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t end = n; end > 0;) {
    std::size_t start = end;
    const double threshold = scores[order[end - 1]];
    while (start > 0 && scores[order[start - 1]] == threshold) {
      --start;
      if (labels[order[start]] == Label::Outlier) {
        ++tp;
      } else {
        ++fp;
      }
    }
    roc.thresholds.push_back(threshold);
    roc.fpr.push_back(static_cast<double>(fp) / q);
    roc.tpr.push_back(static_cast<double>(tp) / p);
    end = start;
  }
  return roc;
}

double trapezoid_auc(const RocResult& roc) {
  double area = 0.0;
  for (std::size_t k = 1; k < roc.fpr.size(); ++k) {
    area += 0.5 * (roc.fpr[k] - roc.fpr[k - 1]) * (roc.tpr[k] + roc.tpr[k - 1]);
  }
  return area;
}

void write_roc_csv(std::ostream& out, const RocResult& roc) {
  out << "threshold,fpr,tpr\n" << std::setprecision(17);
  for (std::size_t k = 0; k < roc.thresholds.size(); ++k) {
    out << roc.thresholds[k] << ',' << roc.fpr[k] << ',' << roc.tpr[k] << '\n';
  }
}

}  // namespace msvdd
