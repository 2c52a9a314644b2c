#pragma once

#include "msvdd/data_io.hpp"
#include "msvdd/detection.hpp"
#include "msvdd/exact.hpp"
#include "msvdd/heuristic.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace msvdd {

enum class Mode { Exact, Heuristic, Both };

std::string to_string(Mode mode);
Mode mode_from_string(std::string_view text);

enum class Model { Msvdd, ClusterSvdd };

std::string to_string(Model model);

struct DataSource {
  enum class Kind { Synthetic, Libsvm };
  Kind kind = Kind::Synthetic;
  SyntheticSpec synthetic;  // seed and noise level are set per run
  std::string path;
  // "iris", "ionosphere", "segment" or "custom" (classes given explicitly).
  std::string protocol = "custom";
  std::vector<int> regular_classes;
  std::vector<int> anomaly_classes;
};

struct ExperimentConfig {
  Mode mode = Mode::Both;
  std::vector<int> p_grid{1, 2, 3};
  std::vector<double> C_grid{0.1, 0.15, 0.2, 0.25, 0.4, 0.8};
  std::vector<double> nu_grid{0.025, 0.05, 0.075, 0.1, 0.15, 0.2};
  bool linear = true;
  std::vector<double> rbf_sigma2_grid;  // e.g. {0.05, 0.1, 0.25, 0.5}
  DataSource data;
  // Synthetic noise level or real-data anomaly fraction per table block.
  std::vector<double> anomaly_levels{0.10};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  double time_limit_s = 60.0;
  // Grid cells solved concurrently. Results do not depend on it.
  int workers = 1;
  bool cardinality = true;
  int heuristic_restarts = 10;
  std::string output_dir = "out";

  void validate() const;
  std::vector<KernelSpec> kernels() const;
};

/// Known protocol presets: class designations and the per-dataset grids.
/// Explicit entries in `overrides` win over the preset.
void apply_protocol_defaults(ExperimentConfig& config, const nlohmann::json& overrides = {});

void to_json(nlohmann::json& j, const ExperimentConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Train/validation/test data for one (anomaly level, seed) instance.
/// Real data are scaled to [-1, 1] with the map fitted on train.
struct Instance {
  Dataset train;
  Dataset validation;
  Dataset test;
};

Instance build_instance(const ExperimentConfig& config, double level, std::uint64_t seed);

/// One solver invocation.
struct RunRecord {
  int run_id = 0;
  Model model = Model::Msvdd;
  std::string kernel;
  double level = 0.0;
  std::uint64_t seed = 0;
  int p = 1;
  double param = 0.0;       // C for MSVDD, nu for ClusterSVDD
  double implied_C = 0.0;   // p / (nu N) for ClusterSVDD rows, C otherwise
  std::string status;
  double objective = 0.0;
  double lower_bound = 0.0;
  std::uint64_t nodes = 0;
  double val_auc = 0.0;     // NaN when the run failed
  double test_auc = 0.0;
  double wall_time_s = 0.0;
  std::string error;
};

/// One selected cell: the parameter with the best mean validation AUC over
/// seeds, reported with its test AUC statistics.
struct CvRow {
  Model model = Model::Msvdd;
  std::string kernel;
  double level = 0.0;
  int p = 1;
  double param = 0.0;
  double implied_C = 0.0;   // mean over seeds for ClusterSVDD rows
  double mean_val_auc = 0.0;
  double mean_test_auc = 0.0;
  double std_test_auc = 0.0;  // sample standard deviation
  int count = 0;              // AUCs behind the mean
  bool best_in_row = false;   // best mean over p for this model/kernel/level
  std::vector<int> run_ids;
};

struct CvReport {
  std::vector<RunRecord> runs;
  std::vector<CvRow> rows;
};

CvReport run_cross_validation(const ExperimentConfig& config);

/// Writes report.csv, report.txt, runs.csv, timings.csv and
/// resolved_config.json into `dir`. Every file except timings.csv is a pure
/// function of the config when the solves finish within their time limit.
void write_cv_outputs(const std::filesystem::path& dir, const ExperimentConfig& config, const CvReport& report);
void write_report_table(std::ostream& out, const CvReport& report);

struct GapOptions {
  int p = 2;
  double C = 0.1;
  KernelSpec kernel = KernelSpec::linear();
  double level = 0.10;
  std::uint64_t seed = 1;
};

/// Options taken from the first entry of each grid.
GapOptions gap_options_from(const ExperimentConfig& config);

struct GapRow {
  int index = 0;
  double wall_time_s = 0.0;
  double objective = 0.0;
  double gap = 0.0;        // (objective - reference) / objective
  double test_auc = 0.0;
};

struct GapStudy {
  MsvddSolution solution;
  double reference = 0.0;            // optimum, or the proven lower bound
  bool reference_is_lower_bound = false;
  std::vector<GapRow> rows;
};

GapStudy run_gap_study(const ExperimentConfig& config, const GapOptions& options);

/// incumbents.csv (index,wall_time_s,objective,gap,test_auc,reference_kind)
/// plus gap_summary.json and resolved_config.json.
void write_gap_outputs(const std::filesystem::path& dir, const ExperimentConfig& config, const GapOptions& options,
                       const GapStudy& study);

/// Everything the plot CSVs are built from; absent parts are skipped.
struct PlotInputs {
  std::optional<Dataset> dataset;
  std::optional<DetectionModel> model;
  std::vector<int> assignment;     // training-point sphere labels
  std::vector<RunRecord> runs;
  std::vector<CvRow> rows;
  std::vector<GapRow> gap;
};

/// Writes scatter.csv, spheres.csv, sphere_alphas.csv, performance_profile.csv,
/// auc_curve.csv and gap_auc.csv as far as the inputs allow. Returns the
/// files written.
std::vector<std::filesystem::path> emit_plot_data(const std::filesystem::path& dir, const PlotInputs& inputs);

/// Reads back what the cv, gap and solve commands wrote into `dir`.
PlotInputs load_plot_inputs(const std::filesystem::path& dir);

/// Trained model in JSON: kernel, training points, spheres, assignment.
nlohmann::json model_to_json(const DetectionModel& model, const MsvddSolution& solution);
DetectionModel model_from_json(const nlohmann::json& j, std::vector<int>* assignment = nullptr);

std::vector<RunRecord> read_runs_csv(std::istream& in);
void write_runs_csv(std::ostream& out, const std::vector<RunRecord>& runs);
std::vector<GapRow> read_gap_csv(std::istream& in);
void write_report_csv(std::ostream& out, const std::vector<CvRow>& rows);
std::vector<CvRow> read_report_csv(std::istream& in);

}  // namespace msvdd
