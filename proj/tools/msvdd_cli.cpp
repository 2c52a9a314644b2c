// msvdd: generate data, solve single instances and run the experiment grids.
//
// Exit codes: 0 success, 1 input error, 2 solver failure,
// 3 time limit reached with an incumbent.

#include "msvdd/errors.hpp"
#include "msvdd/experiments.hpp"
#include "msvdd/text.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"

namespace fs = std::filesystem;
using namespace msvdd;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitSolver = 2;
constexpr int kExitTimeLimit = 3;

struct KernelFlags {
  std::string kind = "linear";
  double sigma2 = 0.5;

  KernelSpec spec() const {
    if (kind == "linear") return KernelSpec::linear();
    if (kind == "rbf") return KernelSpec::rbf(sigma2);
    throw InputError("--kernel must be linear or rbf");
  }
};

bool on_off(const std::string& value) { return value == "on"; }

void add_kernel_flags(CLI::App* cmd, KernelFlags& k) {
  cmd->add_option("--kernel", k.kind, "linear or rbf")->check(CLI::IsMember({"linear", "rbf"}));
  cmd->add_option("--sigma2", k.sigma2, "RBF width sigma^2");
}

std::ofstream open_file(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  return out;
}

// CSV files keep their split and label tags; anything else is read as libSVM
// and scaled to [-1, 1].
Dataset load_points(const std::string& path) {
  if (fs::path(path).extension() == ".csv") {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read '" + path + "'");
    return read_csv(in);
  }
  return scale_to_unit_box(read_libsvm_file(path), {})[0];
}

int status_exit(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal:
    case SolveStatus::Heuristic: return kExitOk;
    case SolveStatus::TimeLimitIncumbent: return kExitTimeLimit;
    case SolveStatus::Infeasible: return kExitSolver;
  }
  return kExitSolver;
}

struct GenerateArgs {
  SyntheticSpec spec;
  std::string format = "csv";
  std::string out = "-";
};

int run_generate(const GenerateArgs& a) {
  const Dataset d = generate_synthetic(a.spec);
  auto emit = [&](std::ostream& os) {
    if (a.format == "csv") {
      write_csv(os, d);
    } else {
      Dataset tagged = d;
      tagged.raw_labels.clear();
      for (Label l : d.labels) tagged.raw_labels.push_back(l == Label::Regular ? 1 : -1);
      os << serialize_libsvm(tagged);
    }
  };
  if (a.out == "-") {
    emit(std::cout);
  } else {
    auto f = open_file(a.out);
    emit(f);
    std::cerr << "wrote " << d.size() << " points to " << a.out << "\n";
  }
  return kExitOk;
}

struct SolveArgs {
  std::string data;
  std::string method = "exact";
  int p = 2;
  double C = 0.1;
  double nu = 0.1;
  KernelFlags kernel;
  std::uint64_t seed = 1;
  double noise = 0.10;
  double time_limit = 60.0;
  int workers = 1;
  std::string cardinality = "on";
  std::string out = "out/solve";
};

int run_solve(const SolveArgs& a) {
  Dataset all;
  if (a.data.empty()) {
    SyntheticSpec spec;
    spec.seed = a.seed;
    spec.noise_level = a.noise;
    all = generate_synthetic(spec);
  } else {
    all = load_points(a.data);
  }
  all.validate();
  const bool has_split = !all.split.empty();
  const Dataset train = has_split ? all.subset(Split::Train) : all;
  const Dataset test = has_split ? all.subset(Split::Test) : Dataset{};
  if (train.size() == 0) throw InputError("no training points");

  const KernelSpec spec = a.kernel.spec();
  const GramMatrix g = gram(spec, train.points);
  MsvddSolution sol;
  if (a.method == "exact") {
    MsvddConfig mc;
    mc.p = a.p;
    mc.C = a.C;
    mc.enforce_cardinality = on_off(a.cardinality);
    mc.time_limit_s = a.time_limit;
    mc.seed = a.seed;
    mc.workers = a.workers;
    sol = solve_exact({g, mc});
  } else {
    HeuristicConfig hc;
    hc.p = a.p;
    hc.nu = a.nu;
    hc.seed = a.seed;
    hc.workers = a.workers;
    sol = solve_heuristic(g, hc);
  }

  std::cout << "status     " << to_string(sol.status) << "\n";
  if (sol.status == SolveStatus::Infeasible) {
    std::cout << "no assignment satisfies the cardinality requirement\n";
    return kExitSolver;
  }
  const DetectionModel model = DetectionModel::from_solution(spec, train.points, sol);
  std::optional<double> test_auc;
  if (test.size() > 0 && !test.labels.empty()) {
    try {
      test_auc = auc_roc(model.anomaly_scores(test.points), test.labels).auc;
    } catch (const UndefinedMetricError&) {
    }
  }
  std::size_t outliers = 0;
  for (Eigen::Index i = 0; i < train.size(); ++i) {
    outliers += model.classify(row_span(train.points, i)) == Label::Outlier ? 1 : 0;
  }
  std::cout << "objective  " << text::format_double(sol.objective) << "\n";
  if (sol.status != SolveStatus::Heuristic) {
    std::cout << "bound      " << text::format_double(sol.lower_bound) << "\n"
              << "gap        " << text::format_double(sol.relative_gap()) << "\n"
              << "nodes      " << sol.node_count << "\n";
  }
  std::cout << "time_s     " << text::format_double(sol.wall_time_s) << "\n"
            << "outliers   " << outliers << " of " << train.size() << " training points\n";
  for (std::size_t j = 0; j < sol.spheres.size(); ++j) {
    std::cout << "sphere " << j << "   R^2=" << text::format_double(sol.spheres[j].radius_sq)
              << " members=" << sol.spheres[j].members.size() << "\n";
  }
  if (test_auc) std::cout << "test_auc   " << text::format_double(*test_auc) << "\n";

  nlohmann::json summary = model_to_json(model, sol);
  summary.erase("training");
  summary["wall_time_s"] = sol.wall_time_s;
  summary["training_outliers"] = outliers;
  summary["test_auc"] = test_auc ? nlohmann::json(*test_auc) : nlohmann::json(nullptr);
  std::cout << summary.dump() << "\n";

  fs::create_directories(a.out);
  {
    auto f = open_file(fs::path(a.out) / "model.json");
    f << model_to_json(model, sol).dump(2) << "\n";
  }
  {
    auto f = open_file(fs::path(a.out) / "dataset.csv");
    write_csv(f, train);
  }
  return status_exit(sol.status);
}

// Flags that override entries of an experiment config.
struct GridArgs {
  std::string config;
  std::string mode;
  std::vector<int> p;
  std::vector<double> C;
  std::vector<double> nu;
  std::string kernel;
  std::vector<double> sigma2;
  std::vector<std::uint64_t> seeds;
  std::vector<double> levels;
  std::string data;
  std::string protocol;
  std::optional<double> time_limit;
  std::optional<int> workers;
  std::string cardinality;
  std::string out;
};

void add_grid_flags(CLI::App* cmd, GridArgs& g) {
  cmd->add_option("--config", g.config, "JSON experiment config")->check(CLI::ExistingFile);
  cmd->add_option("--mode", g.mode, "exact, heuristic or both")->check(CLI::IsMember({"exact", "heuristic", "both"}));
  cmd->add_option("--p", g.p, "sphere counts")->delimiter(',');
  cmd->add_option("--C", g.C, "MSVDD C grid")->delimiter(',');
  cmd->add_option("--nu", g.nu, "ClusterSVDD nu grid")->delimiter(',');
  cmd->add_option("--kernel", g.kernel, "linear, rbf or both")->check(CLI::IsMember({"linear", "rbf", "both"}));
  cmd->add_option("--sigma2", g.sigma2, "RBF sigma^2 grid")->delimiter(',');
  cmd->add_option("--seed", g.seeds, "instance seeds")->delimiter(',');
  cmd->add_option("--levels", g.levels, "anomaly levels")->delimiter(',');
  cmd->add_option("--data", g.data, "libSVM file instead of synthetic data")->check(CLI::ExistingFile);
  cmd->add_option("--protocol", g.protocol, "iris, ionosphere, segment or custom");
  cmd->add_option("--time-limit", g.time_limit, "seconds per exact solve");
  cmd->add_option("--workers", g.workers, "concurrent workers");
  cmd->add_option("--cardinality", g.cardinality, "on or off")->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--out", g.out, "output directory");
}

ExperimentConfig resolve_config(const GridArgs& g) {
  nlohmann::json j = nlohmann::json::object();
  if (!g.config.empty()) {
    std::ifstream in(g.config);
    try {
      in >> j;
    } catch (const nlohmann::json::parse_error& e) {
      throw InputError("config '" + g.config + "': " + e.what());
    }
    if (!j.is_object()) throw InputError("config must be a JSON object");
  }
  if (!g.mode.empty()) j["mode"] = g.mode;
  if (!g.p.empty()) j["p"] = g.p;
  if (!g.C.empty()) j["C"] = g.C;
  if (!g.nu.empty()) j["nu"] = g.nu;
  if (!g.sigma2.empty()) j["rbf_sigma2"] = g.sigma2;
  if (!g.kernel.empty()) {
    j["linear"] = g.kernel != "rbf";
    if (g.kernel == "linear") j["rbf_sigma2"] = nlohmann::json::array();
    if (g.kernel != "linear" && !j.contains("rbf_sigma2")) j["rbf_sigma2"] = {0.05, 0.1, 0.25, 0.5};
  }
  if (!g.seeds.empty()) j["seeds"] = g.seeds;
  if (!g.levels.empty()) j["anomaly_levels"] = g.levels;
  if (!g.data.empty() || !g.protocol.empty()) {
    nlohmann::json& d = j["data"];
    d["source"] = "libsvm";
    if (!g.data.empty()) d["path"] = g.data;
    if (!g.protocol.empty()) d["protocol"] = g.protocol;
  }
  if (g.time_limit) j["time_limit_s"] = *g.time_limit;
  if (g.workers) j["workers"] = *g.workers;
  if (!g.cardinality.empty()) j["cardinality"] = on_off(g.cardinality);
  if (!g.out.empty()) j["output_dir"] = g.out;
  return config_from_json(j);
}

int run_cv(const GridArgs& g) {
  const ExperimentConfig config = resolve_config(g);
  const CvReport report = run_cross_validation(config);
  write_cv_outputs(config.output_dir, config, report);
  write_report_table(std::cout, report);
  int failed = 0;
  bool timed_out = false;
  for (const auto& r : report.runs) {
    failed += r.error.empty() ? 0 : 1;
    timed_out = timed_out || r.status == to_string(SolveStatus::TimeLimitIncumbent);
  }
  std::cout << "\n" << report.runs.size() << " runs, " << failed << " failed; outputs in " << config.output_dir
            << "\n";
  return timed_out ? kExitTimeLimit : kExitOk;
}

// The study runs on the first entry of each grid.
int run_gap(GridArgs g) {
  if (g.mode.empty()) g.mode = "exact";
  const ExperimentConfig config = resolve_config(g);
  const GapOptions o = gap_options_from(config);
  const GapStudy study = run_gap_study(config, o);
  write_gap_outputs(config.output_dir, config, o, study);
  std::cout << "status " << to_string(study.solution.status) << ", " << study.rows.size() << " incumbents, reference "
            << (study.reference_is_lower_bound ? "lower bound " : "optimum ")
            << text::format_double(study.reference) << "\n";
  std::cout << "index,wall_time_s,objective,gap,test_auc\n";
  for (const auto& r : study.rows) {
    std::cout << r.index << ',' << text::format_double(r.wall_time_s) << ',' << text::format_double(r.objective)
              << ',' << text::format_double(r.gap) << ',' << text::format_double(r.test_auc) << "\n";
  }
  return status_exit(study.solution.status);
}

int run_plotdata(const std::vector<std::string>& inputs, const std::string& out) {
  PlotInputs merged;
  for (const auto& dir : inputs) {
    PlotInputs in = load_plot_inputs(dir);
    if (in.dataset) merged.dataset = std::move(in.dataset);
    if (in.model) {
      merged.model = std::move(in.model);
      merged.assignment = std::move(in.assignment);
    }
    merged.runs.insert(merged.runs.end(), in.runs.begin(), in.runs.end());
    merged.rows.insert(merged.rows.end(), in.rows.begin(), in.rows.end());
    merged.gap.insert(merged.gap.end(), in.gap.begin(), in.gap.end());
  }
  const auto written = emit_plot_data(out, merged);
  if (written.empty()) throw InputError("no results found in the input directories");
  for (const auto& p : written) std::cout << p.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact multisphere SVDD solver and experiment driver"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write a seeded synthetic dataset");
  generate->add_option("--seed", gen.spec.seed, "generator seed");
  generate->add_option("--noise", gen.spec.noise_level, "anomaly fraction per split");
  generate->add_option("--n-train", gen.spec.n_train);
  generate->add_option("--n-val", gen.spec.n_val);
  generate->add_option("--n-test", gen.spec.n_test);
  generate->add_option("--format", gen.format, "csv or libsvm")->check(CLI::IsMember({"csv", "libsvm"}));
  generate->add_option("--out", gen.out, "output file, - for stdout");

  SolveArgs sol;
  auto* solve = app.add_subcommand("solve", "Solve one instance and print the solution");
  solve->add_option("--data", sol.data, "CSV (with split tags) or libSVM file; synthetic when absent")
      ->check(CLI::ExistingFile);
  solve->add_option("--method", sol.method, "exact or heuristic")->check(CLI::IsMember({"exact", "heuristic"}));
  solve->add_option("--p", sol.p, "number of spheres");
  solve->add_option("--C", sol.C, "outlier penalty (exact)");
  solve->add_option("--nu", sol.nu, "outlier fraction (heuristic)");
  add_kernel_flags(solve, sol.kernel);
  solve->add_option("--seed", sol.seed, "data and restart seed");
  solve->add_option("--noise", sol.noise, "synthetic anomaly fraction");
  solve->add_option("--time-limit", sol.time_limit, "seconds");
  solve->add_option("--workers", sol.workers, "search threads");
  solve->add_option("--cardinality", sol.cardinality, "on or off")->check(CLI::IsMember({"on", "off"}));
  solve->add_option("--out", sol.out, "directory for model.json and dataset.csv");

  GridArgs cv_args;
  auto* cv = app.add_subcommand("cv", "Cross-validated grid study");
  add_grid_flags(cv, cv_args);

  GridArgs gap_args;
  auto* gap = app.add_subcommand("gap", "Incumbent gap versus test AUC study (first entry of each grid)");
  add_grid_flags(gap, gap_args);

  std::vector<std::string> plot_in;
  std::string plot_out = "out/plots";
  auto* plot = app.add_subcommand("plotdata", "Emit plot-ready CSVs from result directories");
  plot->add_option("--in", plot_in, "result directories")->required()->check(CLI::ExistingDirectory);
  plot->add_option("--out", plot_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*generate) return run_generate(gen);
    if (*solve) return run_solve(sol);
    if (*cv) return run_cv(cv_args);
    if (*gap) return run_gap(gap_args);
    if (*plot) return run_plotdata(plot_in, plot_out);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  }
  return kExitInput;
}
