#pragma once

#include "msvdd/detection.hpp"
#include "msvdd/kernel.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace msvdd {

enum class Split { Train, Validation, Test };

std::string to_string(Split split);
Split split_from_string(std::string_view text);
std::string to_string(Label label);
Label label_from_string(std::string_view text);

/// Points plus optional per-point tags. Empty tag vectors mean "absent".
struct Dataset {
  PointMatrix points;
  std::vector<Label> labels;
  std::vector<int> raw_labels;  // class ids from the source file
  std::vector<Split> split;
  std::string provenance;

  Eigen::Index size() const { return points.rows(); }
  Eigen::Index dimension() const { return points.cols(); }
  void validate() const;

  /// Rows in the given order, tags carried along.
  Dataset rows(const std::vector<int>& indices) const;
  /// Points tagged with `which`, in their original order.
  Dataset subset(Split which) const;
  std::size_t outlier_count() const;
};

struct SyntheticSpec {
  int n_train = 60;
  int n_val = 66;
  int n_test = 166;
  double noise_level = 0.10;
  std::array<double, 2> cluster_sigmas{0.5, 0.6};
  std::uint64_t seed = 0;

  void validate() const;
};

void to_json(nlohmann::json& j, const SyntheticSpec& spec);
void from_json(const nlohmann::json& j, SyntheticSpec& spec);

/// Regular cluster centers; the generator places clusters at these points.
inline constexpr std::array<std::array<double, 2>, 2> kSyntheticCenters{{{-2.0, -2.0}, {2.0, 2.0}}};

/// Two planar Gaussian clusters split evenly, with round(noise_level * m)
/// of each split's m points replaced by anomalies. An anomaly picks a
/// cluster k uniformly and sits at a uniform angle and a uniform radius in
/// [3 sigma_k, 5 sigma_k] around that cluster's center.
Dataset generate_synthetic(const SyntheticSpec& spec);

struct LibsvmOptions {
  // Strict: feature indices must increase within a line.
  bool strict = true;
  // 0 infers the dimension from the largest index seen.
  int dimension = 0;
};

/// Parses "label idx:val idx:val ..." with 1-based indices. Absent features
/// are 0; blank lines are skipped. Errors carry the 1-based line number.
Dataset parse_libsvm(std::string_view text, const LibsvmOptions& options = {});
Dataset read_libsvm_file(const std::string& path, const LibsvmOptions& options = {});

/// Inverse of parse_libsvm on canonical input: zero features omitted,
/// values in shortest round-trip form.
std::string serialize_libsvm(const Dataset& data);

/// Per-feature affine map fitted on a training set: min -> -1, max -> +1,
/// constant features -> 0. Values outside the fitted range extrapolate.
class UnitBoxScaler {
 public:
  static UnitBoxScaler fit(const PointMatrix& train);

  PointMatrix apply(const PointMatrix& points) const;
  Dataset apply(Dataset data) const;

  const Eigen::RowVectorXd& minimum() const { return min_; }
  const Eigen::RowVectorXd& maximum() const { return max_; }

 private:
  Eigen::RowVectorXd min_;
  Eigen::RowVectorXd max_;
};

/// Fits on `train` and maps it together with `others`. The train result is
/// first in the returned vector.
std::vector<Dataset> scale_to_unit_box(const Dataset& train, const std::vector<Dataset>& others);

struct RealSplitSpec {
  std::array<double, 3> fractions{0.3, 0.2, 0.5};
  // Classes designated regular; empty means every class not in anomaly_classes.
  std::vector<int> regular_classes;
  // Classes the anomalies are drawn from. Empty: anomalies are drawn
  // uniformly from the bounding box of the regular points.
  std::vector<int> anomaly_classes;
  // Anomalies per split = round(anomaly_fraction * regular points in the split).
  double anomaly_fraction = 0.1;
  std::uint64_t seed = 0;
};

/// Seeded shuffle of the regular classes into train/validation/test, each
/// split then receiving its anomalies. Needs raw labels.
Dataset split_real(const Dataset& data, const RealSplitSpec& spec);

/// Header x1,...,xd,label,split; empty fields for absent tags.
void write_csv(std::ostream& out, const Dataset& data);
Dataset read_csv(std::istream& in);

}  // namespace msvdd
