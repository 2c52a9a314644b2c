#include "msvdd/experiments.hpp"

#include "msvdd/errors.hpp"
#include "msvdd/text.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

namespace msvdd {

namespace fs = std::filesystem;
using nlohmann::json;
using text::format_double;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path.string() + "'");
  return in;
}

json kernel_to_json(const KernelSpec& spec) {
  if (spec.kind == KernelKind::Linear) return {{"kind", "linear"}};
  return {{"kind", "rbf"}, {"sigma2", spec.sigma_squared}};
}

KernelSpec kernel_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "linear") return KernelSpec::linear();
  if (kind == "rbf") return KernelSpec::rbf(j.at("sigma2").get<double>());
  throw InputError("unknown kernel '" + kind + "'");
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double auc_or_nan(const DetectionModel& model, const Dataset& data) {
  const std::vector<double> scores = model.anomaly_scores(data.points);
  return auc_roc(scores, data.labels).auc;
}

// Reads a CSV with a fixed header into rows of fields.
std::vector<std::vector<std::string>> read_table(std::istream& in, const std::vector<std::string>& header) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto found = text::split_char(line, ',');
  if (found.size() != header.size() || !std::equal(found.begin(), found.end(), header.begin())) {
    throw ParseError(1, "unexpected header '" + line + "'");
  }
  std::vector<std::vector<std::string>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = text::split_char(line, ',');
    if (fields.size() != header.size()) {
      throw ParseError(line_no, "expected " + std::to_string(header.size()) + " fields");
    }
    rows.emplace_back(fields.begin(), fields.end());
  }
  return rows;
}

double field_double(const std::string& s) {
  double v = 0.0;
  if (!text::parse_double(s, v, true)) throw InputError("bad number '" + s + "'");
  return v;
}

long long field_int(const std::string& s) {
  long long v = 0;
  if (!text::parse_int(s, v)) throw InputError("bad integer '" + s + "'");
  return v;
}

Model model_from_string(const std::string& s) {
  if (s == "MSVDD") return Model::Msvdd;
  if (s == "ClusterSVDD") return Model::ClusterSvdd;
  throw InputError("unknown model '" + s + "'");
}

const std::vector<std::string> kRunsHeader{"run_id", "model",     "kernel",      "level", "seed",
                                           "p",      "param",     "implied_C",   "status", "objective",
                                           "lower_bound", "nodes", "val_auc",    "test_auc", "error"};
const std::vector<std::string> kReportHeader{"model",         "kernel",        "level",        "p",
                                             "param",         "implied_C",     "mean_val_auc", "mean_test_auc",
                                             "std_test_auc",  "count",         "best_in_row",  "run_ids"};
const std::vector<std::string> kGapHeader{"index", "wall_time_s", "objective", "gap", "test_auc", "reference_kind"};

}  // namespace

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::Exact: return "exact";
    case Mode::Heuristic: return "heuristic";
    case Mode::Both: return "both";
  }
  return "unknown";
}

Mode mode_from_string(std::string_view text) {
  if (text == "exact") return Mode::Exact;
  if (text == "heuristic") return Mode::Heuristic;
  if (text == "both") return Mode::Both;
  throw InputError("mode must be exact, heuristic or both");
}

std::string to_string(Model model) { return model == Model::Msvdd ? "MSVDD" : "ClusterSVDD"; }

void ExperimentConfig::validate() const {
  if (p_grid.empty()) throw InputError("p grid is empty");
  for (int p : p_grid) {
    if (p < 1) throw InputError("p grid entries must be at least 1");
  }
  if (mode != Mode::Heuristic) {
    if (C_grid.empty()) throw InputError("C grid is empty");
    for (double c : C_grid) {
      if (!(c > 0.0)) throw InputError("C grid entries must be positive");
    }
  }
  if (mode != Mode::Exact) {
    if (nu_grid.empty()) throw InputError("nu grid is empty");
    for (double nu : nu_grid) {
      if (!(nu > 0.0 && nu <= 1.0)) throw InputError("nu grid entries must lie in (0, 1]");
    }
  }
  for (double s : rbf_sigma2_grid) KernelSpec::rbf(s);
  if (!linear && rbf_sigma2_grid.empty()) throw InputError("kernel grid is empty");
  if (anomaly_levels.empty()) throw InputError("anomaly level list is empty");
  for (double a : anomaly_levels) {
    if (data.kind == DataSource::Kind::Synthetic ? !(a > 0.0 && a < 0.5) : !(a >= 0.0)) {
      throw InputError("anomaly level " + format_double(a) + " out of range");
    }
  }
  if (seeds.empty()) throw InputError("seed list is empty");
  if (!(time_limit_s > 0.0)) throw InputError("time limit must be positive");
  if (workers < 1) throw InputError("workers must be at least 1");
  if (heuristic_restarts < 1) throw InputError("heuristic_restarts must be at least 1");
  if (data.kind == DataSource::Kind::Libsvm && data.path.empty()) throw InputError("libSVM source needs a path");
  if (data.kind == DataSource::Kind::Synthetic) data.synthetic.validate();
}

std::vector<KernelSpec> ExperimentConfig::kernels() const {
  std::vector<KernelSpec> out;
  if (linear) out.push_back(KernelSpec::linear());
  for (double s : rbf_sigma2_grid) out.push_back(KernelSpec::rbf(s));
  return out;
}

void apply_protocol_defaults(ExperimentConfig& config, const json& overrides) {
  const std::string& protocol = config.data.protocol;
  const bool has_C = overrides.contains("C");
  const bool has_nu = overrides.contains("nu");
  const json data = overrides.value("data", json::object());
  const bool has_regular = data.contains("regular_classes");
  const bool has_anomaly = data.contains("anomaly_classes");
  const std::vector<double> real_nu{0.05, 0.075, 0.1, 0.125, 0.15, 0.175, 0.2};
  auto set = [&](std::vector<double> C, std::vector<int> regular, std::vector<int> anomaly) {
    if (!has_C) config.C_grid = std::move(C);
    if (!has_nu) config.nu_grid = real_nu;
    if (!has_regular) config.data.regular_classes = std::move(regular);
    if (!has_anomaly) config.data.anomaly_classes = std::move(anomaly);
  };
  if (protocol == "iris") {
    set({0.07, 0.08, 0.09, 0.1, 0.11, 0.12, 0.13}, {}, {});
  } else if (protocol == "ionosphere") {
    set({0.025, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5}, {1}, {-1});
  } else if (protocol == "segment") {
    set({0.025, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5}, {1, 2, 3}, {4, 5, 6, 7});
  } else if (protocol != "custom") {
    throw InputError("unknown protocol '" + protocol + "'");
  }
}

void to_json(json& j, const ExperimentConfig& c) {
  json data;
  if (c.data.kind == DataSource::Kind::Synthetic) {
    data = {{"source", "synthetic"}, {"synthetic", c.data.synthetic}};
  } else {
    data = {{"source", "libsvm"},
            {"path", c.data.path},
            {"protocol", c.data.protocol},
            {"regular_classes", c.data.regular_classes},
            {"anomaly_classes", c.data.anomaly_classes}};
  }
  j = json{{"mode", to_string(c.mode)},
           {"p", c.p_grid},
           {"C", c.C_grid},
           {"nu", c.nu_grid},
           {"linear", c.linear},
           {"rbf_sigma2", c.rbf_sigma2_grid},
           {"data", data},
           {"anomaly_levels", c.anomaly_levels},
           {"seeds", c.seeds},
           {"time_limit_s", c.time_limit_s},
           {"workers", c.workers},
           {"cardinality", c.cardinality},
           {"heuristic_restarts", c.heuristic_restarts},
           {"output_dir", c.output_dir}};
}

ExperimentConfig config_from_json(const json& j) {
  static const std::set<std::string> known{"mode",   "p",     "C",       "nu",           "linear",
                                           "rbf_sigma2", "data", "anomaly_levels", "seeds", "time_limit_s",
                                           "workers", "cardinality", "heuristic_restarts", "output_dir"};
  if (!j.is_object()) throw InputError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (known.count(key) == 0) throw InputError("unknown config key '" + key + "'");
  }
  ExperimentConfig c;
  try {
    if (j.contains("mode")) c.mode = mode_from_string(j.at("mode").get<std::string>());
    c.p_grid = j.value("p", c.p_grid);
    c.C_grid = j.value("C", c.C_grid);
    c.nu_grid = j.value("nu", c.nu_grid);
    c.linear = j.value("linear", c.linear);
    c.rbf_sigma2_grid = j.value("rbf_sigma2", c.rbf_sigma2_grid);
    c.anomaly_levels = j.value("anomaly_levels", c.anomaly_levels);
    c.seeds = j.value("seeds", c.seeds);
    c.time_limit_s = j.value("time_limit_s", c.time_limit_s);
    c.workers = j.value("workers", c.workers);
    c.cardinality = j.value("cardinality", c.cardinality);
    c.heuristic_restarts = j.value("heuristic_restarts", c.heuristic_restarts);
    c.output_dir = j.value("output_dir", c.output_dir);
    if (j.contains("data")) {
      const json& d = j.at("data");
      const std::string source = d.value("source", std::string("synthetic"));
      if (source == "synthetic") {
        c.data.kind = DataSource::Kind::Synthetic;
        if (d.contains("synthetic")) c.data.synthetic = d.at("synthetic").get<SyntheticSpec>();
      } else if (source == "libsvm") {
        c.data.kind = DataSource::Kind::Libsvm;
        c.data.path = d.value("path", std::string());
        c.data.protocol = d.value("protocol", std::string("custom"));
        c.data.regular_classes = d.value("regular_classes", std::vector<int>{});
        c.data.anomaly_classes = d.value("anomaly_classes", std::vector<int>{});
        apply_protocol_defaults(c, j);
      } else {
        throw InputError("data source must be synthetic or libsvm");
      }
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in = open_in(path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw InputError("config '" + path.string() + "': " + e.what());
  }
  return config_from_json(j);
}

namespace {

Dataset load_source(const ExperimentConfig& config) {
  if (config.data.kind != DataSource::Kind::Libsvm) return {};
  return read_libsvm_file(config.data.path);
}

Instance make_instance(const ExperimentConfig& config, const Dataset& source, double level, std::uint64_t seed) {
  Dataset all;
  if (config.data.kind == DataSource::Kind::Synthetic) {
    SyntheticSpec spec = config.data.synthetic;
    spec.seed = seed;
    spec.noise_level = level;
    all = generate_synthetic(spec);
    return {all.subset(Split::Train), all.subset(Split::Validation), all.subset(Split::Test)};
  }
  RealSplitSpec spec;
  spec.regular_classes = config.data.regular_classes;
  spec.anomaly_classes = config.data.anomaly_classes;
  spec.anomaly_fraction = level;
  spec.seed = seed;
  all = split_real(source, spec);
  const auto scaled =
      scale_to_unit_box(all.subset(Split::Train), {all.subset(Split::Validation), all.subset(Split::Test)});
  return {scaled[0], scaled[1], scaled[2]};
}

struct Task {
  std::size_t instance = 0;
  std::size_t kernel = 0;
  Model model = Model::Msvdd;
  int p = 1;
  double param = 0.0;
};

}  // namespace

Instance build_instance(const ExperimentConfig& config, double level, std::uint64_t seed) {
  return make_instance(config, load_source(config), level, seed);
}

CvReport run_cross_validation(const ExperimentConfig& config) {
  config.validate();
  const Dataset source = load_source(config);
  const std::vector<KernelSpec> kernels = config.kernels();

  struct InstanceKey {
    double level;
    std::uint64_t seed;
  };
  std::vector<InstanceKey> keys;
  std::vector<Instance> instances;
  for (double level : config.anomaly_levels) {
    for (std::uint64_t seed : config.seeds) {
      keys.push_back({level, seed});
      instances.push_back(make_instance(config, source, level, seed));
    }
  }
  std::vector<std::vector<std::optional<GramMatrix>>> grams(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    for (const auto& k : kernels) grams[i].emplace_back(gram(k, instances[i].train.points));
  }

  std::vector<Task> tasks;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    for (std::size_t k = 0; k < kernels.size(); ++k) {
      for (int p : config.p_grid) {
        if (config.mode != Mode::Heuristic) {
          for (double C : config.C_grid) tasks.push_back({i, k, Model::Msvdd, p, C});
        }
        if (config.mode != Mode::Exact) {
          for (double nu : config.nu_grid) tasks.push_back({i, k, Model::ClusterSvdd, p, nu});
        }
      }
    }
  }

  CvReport report;
  report.runs.resize(tasks.size());
  auto run_task = [&](std::size_t t) {
    const Task& task = tasks[t];
    const Instance& inst = instances[task.instance];
    const GramMatrix& g = *grams[task.instance][task.kernel];
    const KernelSpec& spec = kernels[task.kernel];
    RunRecord r;
    r.run_id = static_cast<int>(t) + 1;
    r.model = task.model;
    r.kernel = spec.name();
    r.level = keys[task.instance].level;
    r.seed = keys[task.instance].seed;
    r.p = task.p;
    r.param = task.param;
    r.val_auc = kNaN;
    r.test_auc = kNaN;
    r.objective = kNaN;
    r.lower_bound = kNaN;
    const double n = static_cast<double>(inst.train.size());
    r.implied_C = task.model == Model::Msvdd ? task.param : task.p / (task.param * n);
    const auto start = std::chrono::steady_clock::now();
    try {
      MsvddSolution sol;
      if (task.model == Model::Msvdd) {
        MsvddConfig mc;
        mc.p = task.p;
        mc.C = task.param;
        mc.enforce_cardinality = config.cardinality;
        mc.time_limit_s = config.time_limit_s;
        mc.seed = r.seed;
        sol = solve_exact({g, mc});
      } else {
        HeuristicConfig hc;
        hc.p = task.p;
        hc.nu = task.param;
        hc.restarts = config.heuristic_restarts;
        hc.seed = r.seed;
        sol = solve_heuristic(g, hc);
      }
      r.status = to_string(sol.status);
      if (sol.status == SolveStatus::Infeasible) {
        r.error = "infeasible: p * ceil(1/C) exceeds the training size";
      } else {
        r.objective = sol.objective;
        r.lower_bound = sol.lower_bound;
        r.nodes = sol.node_count;
        const DetectionModel model = DetectionModel::from_solution(spec, inst.train.points, sol);
        r.val_auc = auc_or_nan(model, inst.validation);
        r.test_auc = auc_or_nan(model, inst.test);
      }
    } catch (const std::exception& e) {
      if (r.status.empty()) r.status = "failed";
      r.error = text::csv_safe(e.what());
      r.val_auc = kNaN;
      r.test_auc = kNaN;
    }
    r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.runs[t] = std::move(r);
  };

  const int workers = std::clamp(config.workers, 1, std::max<int>(1, static_cast<int>(tasks.size())));
  if (workers == 1) {
    for (std::size_t t = 0; t < tasks.size(); ++t) run_task(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < tasks.size(); t = next++) run_task(t);
      });
    }
    for (auto& th : pool) th.join();
  }

  // Selection: per (model, kernel, level, p), the parameter with the best
  // mean validation AUC over seeds; the first grid entry wins ties.
  struct GroupKey {
    int model;
    std::string kernel;
    double level;
    int p;
    auto operator<=>(const GroupKey&) const = default;
  };
  std::map<GroupKey, std::vector<std::pair<double, std::vector<const RunRecord*>>>> groups;
  std::vector<GroupKey> order;
  for (const RunRecord& r : report.runs) {
    const GroupKey key{static_cast<int>(r.model), r.kernel, r.level, r.p};
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    auto& params = it->second;
    auto slot = std::find_if(params.begin(), params.end(), [&](const auto& e) { return e.first == r.param; });
    if (slot == params.end()) {
      params.push_back({r.param, {}});
      slot = params.end() - 1;
    }
    slot->second.push_back(&r);
  }
  for (const GroupKey& key : order) {
    const auto& params = groups.at(key);
    std::size_t best = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < params.size(); ++k) {
      std::vector<double> vals;
      for (const RunRecord* r : params[k].second) {
        if (!std::isnan(r->val_auc)) vals.push_back(r->val_auc);
      }
      const double m = vals.empty() ? -std::numeric_limits<double>::infinity() : mean_of(vals);
      if (m > best_val) {
        best_val = m;
        best = k;
      }
    }
    CvRow row;
    row.model = static_cast<Model>(key.model);
    row.kernel = key.kernel;
    row.level = key.level;
    row.p = key.p;
    row.param = params[best].first;
    std::vector<double> tests;
    std::vector<double> vals;
    std::vector<double> implied;
    for (const RunRecord* r : params[best].second) {
      row.run_ids.push_back(r->run_id);
      implied.push_back(r->implied_C);
      if (!std::isnan(r->test_auc)) tests.push_back(r->test_auc);
      if (!std::isnan(r->val_auc)) vals.push_back(r->val_auc);
    }
    row.implied_C = mean_of(implied);
    row.mean_val_auc = mean_of(vals);
    row.mean_test_auc = mean_of(tests);
    row.std_test_auc = tests.empty() ? kNaN : sample_std(tests);
    row.count = static_cast<int>(tests.size());
    report.rows.push_back(std::move(row));
  }
  // Best p per model/kernel/level row of the table.
  for (auto& row : report.rows) {
    bool best = !std::isnan(row.mean_test_auc);
    for (const auto& other : report.rows) {
      if (other.model != row.model || other.kernel != row.kernel || other.level != row.level) continue;
      if (other.mean_test_auc > row.mean_test_auc || (other.mean_test_auc == row.mean_test_auc && other.p < row.p)) {
        best = false;
      }
    }
    row.best_in_row = best;
  }
  return report;
}

void write_runs_csv(std::ostream& out, const std::vector<RunRecord>& runs) {
  for (std::size_t k = 0; k < kRunsHeader.size(); ++k) out << (k ? "," : "") << kRunsHeader[k];
  out << '\n';
  for (const RunRecord& r : runs) {
    out << r.run_id << ',' << to_string(r.model) << ',' << r.kernel << ',' << format_double(r.level) << ',' << r.seed
        << ',' << r.p << ',' << format_double(r.param) << ',' << format_double(r.implied_C) << ',' << r.status << ','
        << format_double(r.objective) << ',' << format_double(r.lower_bound) << ',' << r.nodes << ','
        << format_double(r.val_auc) << ',' << format_double(r.test_auc) << ',' << text::csv_safe(r.error) << '\n';
  }
}

std::vector<RunRecord> read_runs_csv(std::istream& in) {
  std::vector<RunRecord> out;
  for (const auto& f : read_table(in, kRunsHeader)) {
    RunRecord r;
    r.run_id = static_cast<int>(field_int(f[0]));
    r.model = model_from_string(f[1]);
    r.kernel = f[2];
    r.level = field_double(f[3]);
    r.seed = static_cast<std::uint64_t>(field_int(f[4]));
    r.p = static_cast<int>(field_int(f[5]));
    r.param = field_double(f[6]);
    r.implied_C = field_double(f[7]);
    r.status = f[8];
    r.objective = field_double(f[9]);
    r.lower_bound = field_double(f[10]);
    r.nodes = static_cast<std::uint64_t>(field_int(f[11]));
    r.val_auc = field_double(f[12]);
    r.test_auc = field_double(f[13]);
    r.error = f[14];
    out.push_back(std::move(r));
  }
  return out;
}

void write_report_csv(std::ostream& out, const std::vector<CvRow>& rows) {
  for (std::size_t k = 0; k < kReportHeader.size(); ++k) out << (k ? "," : "") << kReportHeader[k];
  out << '\n';
  for (const CvRow& r : rows) {
    std::string ids;
    for (std::size_t k = 0; k < r.run_ids.size(); ++k) ids += (k ? ";" : "") + std::to_string(r.run_ids[k]);
    out << to_string(r.model) << ',' << r.kernel << ',' << format_double(r.level) << ',' << r.p << ','
        << format_double(r.param) << ',' << format_double(r.implied_C) << ',' << format_double(r.mean_val_auc) << ','
        << format_double(r.mean_test_auc) << ',' << format_double(r.std_test_auc) << ',' << r.count << ','
        << (r.best_in_row ? 1 : 0) << ',' << ids << '\n';
  }
}

std::vector<CvRow> read_report_csv(std::istream& in) {
  std::vector<CvRow> out;
  for (const auto& f : read_table(in, kReportHeader)) {
    CvRow r;
    r.model = model_from_string(f[0]);
    r.kernel = f[1];
    r.level = field_double(f[2]);
    r.p = static_cast<int>(field_int(f[3]));
    r.param = field_double(f[4]);
    r.implied_C = field_double(f[5]);
    r.mean_val_auc = field_double(f[6]);
    r.mean_test_auc = field_double(f[7]);
    r.std_test_auc = field_double(f[8]);
    r.count = static_cast<int>(field_int(f[9]));
    r.best_in_row = f[10] == "1";
    for (auto id : text::split_char(f[11], ';')) {
      if (!id.empty()) r.run_ids.push_back(static_cast<int>(field_int(std::string(id))));
    }
    out.push_back(std::move(r));
  }
  return out;
}

void write_report_table(std::ostream& out, const CvReport& report) {
  std::vector<int> ps;
  std::vector<std::string> kernels;
  for (const auto& r : report.rows) {
    if (std::find(ps.begin(), ps.end(), r.p) == ps.end()) ps.push_back(r.p);
    if (std::find(kernels.begin(), kernels.end(), r.kernel) == kernels.end()) kernels.push_back(r.kernel);
  }
  std::sort(ps.begin(), ps.end());
  auto cell = [](const CvRow& r) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << r.mean_test_auc << " / " << r.std_test_auc << " ("
      << format_double(r.param) << ")" << (r.best_in_row ? "*" : " ");
    return s.str();
  };
  for (const auto& kernel : kernels) {
    out << "Kernel: " << kernel << "\n";
    out << std::left << std::setw(12) << "Model" << std::setw(8) << "% anom";
    for (int p : ps) out << std::setw(28) << ("p=" + std::to_string(p));
    out << "\n";
    std::vector<std::pair<double, Model>> blocks;
    for (const auto& r : report.rows) {
      if (r.kernel != kernel) continue;
      const std::pair<double, Model> b{r.level, r.model};
      if (std::find(blocks.begin(), blocks.end(), b) == blocks.end()) blocks.push_back(b);
    }
    std::stable_sort(blocks.begin(), blocks.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first < b.first : a.second < b.second;
    });
    for (const auto& [level, model] : blocks) {
      std::ostringstream pct;
      pct << format_double(100.0 * level);
      out << std::setw(12) << to_string(model) << std::setw(8) << pct.str();
      for (int p : ps) {
        auto it = std::find_if(report.rows.begin(), report.rows.end(), [&](const CvRow& r) {
          return r.kernel == kernel && r.level == level && r.model == model && r.p == p;
        });
        out << std::setw(28) << (it == report.rows.end() ? std::string("-") : cell(*it));
      }
      out << "\n";
    }
    out << "\n";
  }
  out << "Cells: mean / std of test AUC (selected C or nu); * marks the best p in the row.\n";
  bool heuristic = false;
  for (const auto& r : report.rows) heuristic = heuristic || r.model == Model::ClusterSvdd;
  if (heuristic) {
    out << "\nImplied C = p / (nu N) for the selected ClusterSVDD cells:\n";
    for (const auto& r : report.rows) {
      if (r.model != Model::ClusterSvdd) continue;
      out << "  " << r.kernel << " level " << format_double(r.level) << " p=" << r.p << " nu=" << format_double(r.param)
          << " -> C=" << format_double(r.implied_C) << "\n";
    }
  }
}

void write_cv_outputs(const fs::path& dir, const ExperimentConfig& config, const CvReport& report) {
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "resolved_config.json");
    out << json(config).dump(2) << '\n';
  }
  {
    auto out = open_out(dir / "runs.csv");
    write_runs_csv(out, report.runs);
  }
  {
    auto out = open_out(dir / "timings.csv");
    out << "run_id,wall_time_s\n";
    for (const auto& r : report.runs) out << r.run_id << ',' << format_double(r.wall_time_s) << '\n';
  }
  {
    auto out = open_out(dir / "report.csv");
    write_report_csv(out, report.rows);
  }
  {
    auto out = open_out(dir / "report.txt");
    write_report_table(out, report);
  }
}

GapOptions gap_options_from(const ExperimentConfig& config) {
  GapOptions o;
  o.p = config.p_grid.front();
  o.C = config.C_grid.front();
  o.kernel = config.kernels().front();
  o.level = config.anomaly_levels.front();
  o.seed = config.seeds.front();
  return o;
}

GapStudy run_gap_study(const ExperimentConfig& config, const GapOptions& options) {
  if (config.mode == Mode::Heuristic) throw InputError("the gap study needs the exact solver");
  config.validate();
  const Instance inst = build_instance(config, options.level, options.seed);
  const GramMatrix g = gram(options.kernel, inst.train.points);
  MsvddConfig mc;
  mc.p = options.p;
  mc.C = options.C;
  mc.enforce_cardinality = config.cardinality;
  mc.time_limit_s = config.time_limit_s;
  mc.seed = options.seed;
  mc.workers = config.workers;

  GapStudy study;
  study.solution = solve_exact({g, mc});
  if (study.solution.status == SolveStatus::Infeasible) {
    throw InputError("infeasible: p * ceil(1/C) exceeds the training size");
  }
  study.reference_is_lower_bound = study.solution.status != SolveStatus::Optimal;
  study.reference = study.reference_is_lower_bound ? study.solution.lower_bound : study.solution.objective;
  int index = 0;
  for (const auto& rec : study.solution.incumbent_log) {
    GapRow row;
    row.index = index++;
    row.wall_time_s = rec.wall_time_s;
    row.objective = rec.objective;
    row.gap = rec.objective == 0.0 ? 0.0 : (rec.objective - study.reference) / rec.objective;
    const MsvddSolution refit = evaluate_assignment(g, Assignment{rec.sphere_of}, options.p, options.C);
    const DetectionModel model = DetectionModel::from_solution(options.kernel, inst.train.points, refit);
    row.test_auc = auc_or_nan(model, inst.test);
    study.rows.push_back(row);
  }
  return study;
}

void write_gap_outputs(const fs::path& dir, const ExperimentConfig& config, const GapOptions& options,
                       const GapStudy& study) {
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "resolved_config.json");
    json j = config;
    j["gap_study"] = {{"p", options.p},
                      {"C", options.C},
                      {"kernel", kernel_to_json(options.kernel)},
                      {"level", options.level},
                      {"seed", options.seed}};
    out << j.dump(2) << '\n';
  }
  {
    auto out = open_out(dir / "incumbents.csv");
    for (std::size_t k = 0; k < kGapHeader.size(); ++k) out << (k ? "," : "") << kGapHeader[k];
    out << '\n';
    const char* kind = study.reference_is_lower_bound ? "lower_bound" : "optimal";
    for (const auto& r : study.rows) {
      out << r.index << ',' << format_double(r.wall_time_s) << ',' << format_double(r.objective) << ','
          << format_double(r.gap) << ',' << format_double(r.test_auc) << ',' << kind << '\n';
    }
  }
  {
    auto out = open_out(dir / "gap_summary.json");
    const json j{{"status", to_string(study.solution.status)},
                 {"objective", study.solution.objective},
                 {"lower_bound", study.solution.lower_bound},
                 {"reference", study.reference},
                 {"reference_is_lower_bound", study.reference_is_lower_bound},
                 {"nodes", study.solution.node_count},
                 {"wall_time_s", study.solution.wall_time_s},
                 {"incumbents", study.rows.size()}};
    out << j.dump(2) << '\n';
  }
}

std::vector<GapRow> read_gap_csv(std::istream& in) {
  std::vector<GapRow> out;
  for (const auto& f : read_table(in, kGapHeader)) {
    GapRow r;
    r.index = static_cast<int>(field_int(f[0]));
    r.wall_time_s = field_double(f[1]);
    r.objective = field_double(f[2]);
    r.gap = field_double(f[3]);
    r.test_auc = field_double(f[4]);
    out.push_back(r);
  }
  return out;
}

json model_to_json(const DetectionModel& model, const MsvddSolution& solution) {
  json training = json::array();
  for (Eigen::Index i = 0; i < model.training().rows(); ++i) {
    const auto row = row_span(model.training(), i);
    training.push_back(std::vector<double>(row.begin(), row.end()));
  }
  json spheres = json::array();
  for (const auto& s : model.spheres()) {
    spheres.push_back({{"members", s.members},
                       {"alpha", s.alpha},
                       {"radius_sq", s.radius_sq},
                       {"center_norm_sq", s.center_norm_sq}});
  }
  return json{{"kernel", kernel_to_json(model.spec())},
              {"status", to_string(solution.status)},
              {"objective", solution.objective},
              {"lower_bound", solution.lower_bound},
              {"nodes", solution.node_count},
              {"assignment", solution.assignment.sphere_of},
              {"training", training},
              {"spheres", spheres}};
}

DetectionModel model_from_json(const json& j, std::vector<int>* assignment) {
  try {
    const KernelSpec spec = kernel_from_json(j.at("kernel"));
    const auto rows = j.at("training").get<std::vector<std::vector<double>>>();
    if (rows.empty()) throw InputError("model has no training points");
    PointMatrix training(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.front().size()) throw InputError("training rows differ in length");
      for (std::size_t t = 0; t < rows[i].size(); ++t) {
        training(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = rows[i][t];
      }
    }
    std::vector<SphereModel> spheres;
    for (const auto& s : j.at("spheres")) {
      spheres.push_back({s.at("members").get<std::vector<int>>(), s.at("alpha").get<std::vector<double>>(),
                         s.at("radius_sq").get<double>(), s.at("center_norm_sq").get<double>()});
    }
    if (assignment != nullptr) *assignment = j.value("assignment", std::vector<int>{});
    return DetectionModel(spec, std::move(training), std::move(spheres));
  } catch (const json::exception& e) {
    throw InputError(std::string("model JSON: ") + e.what());
  }
}

std::vector<fs::path> emit_plot_data(const fs::path& dir, const PlotInputs& in) {
  fs::create_directories(dir);
  std::vector<fs::path> written;

  if (in.dataset) {
    const Dataset& d = *in.dataset;
    const fs::path path = dir / "scatter.csv";
    auto out = open_out(path);
    for (Eigen::Index t = 0; t < d.dimension(); ++t) out << 'x' << t + 1 << ',';
    out << "label,split,score,sphere\n";
    const bool scored = in.model && in.model->dimension() == d.dimension();
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      for (Eigen::Index t = 0; t < d.dimension(); ++t) out << format_double(d.points(i, t)) << ',';
      out << (d.labels.empty() ? "" : to_string(d.labels[i])) << ',' << (d.split.empty() ? "" : to_string(d.split[i]))
          << ',';
      if (scored) {
        const auto x = row_span(d.points, i);
        std::size_t nearest = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < in.model->spheres().size(); ++j) {
          const double s = in.model->distance_sq(x, j) - in.model->spheres()[j].radius_sq;
          if (s < best) {
            best = s;
            nearest = j;
          }
        }
        out << format_double(best) << ',' << nearest;
      } else {
        out << ',';
      }
      out << '\n';
    }
    written.push_back(path);
  }

  if (in.model) {
    const DetectionModel& m = *in.model;
    const bool linear = m.spec().kind == KernelKind::Linear;
    const fs::path path = dir / "spheres.csv";
    auto out = open_out(path);
    out << "sphere,radius_sq,radius,members";
    for (Eigen::Index t = 0; t < m.dimension(); ++t) out << ",c" << t + 1;
    out << ",alpha_ref\n";
    for (std::size_t j = 0; j < m.spheres().size(); ++j) {
      const auto& s = m.spheres()[j];
      out << j << ',' << format_double(s.radius_sq) << ',' << format_double(std::sqrt(std::max(0.0, s.radius_sq)))
          << ',' << s.members.size();
      const Eigen::RowVectorXd c = linear ? m.center(j) : Eigen::RowVectorXd();
      for (Eigen::Index t = 0; t < m.dimension(); ++t) out << ',' << (linear ? format_double(c[t]) : std::string());
      out << ",sphere_alphas.csv\n";
    }
    written.push_back(path);

    const fs::path alphas = dir / "sphere_alphas.csv";
    auto a = open_out(alphas);
    a << "sphere,point,alpha\n";
    for (std::size_t j = 0; j < m.spheres().size(); ++j) {
      const auto& s = m.spheres()[j];
      for (std::size_t k = 0; k < s.members.size(); ++k) {
        a << j << ',' << s.members[k] << ',' << format_double(s.alpha[k]) << '\n';
      }
    }
    written.push_back(alphas);
  }

  if (!in.runs.empty()) {
    // Fraction of each series' runs that finished successfully within t.
    std::map<std::string, std::vector<double>> times;
    std::map<std::string, std::size_t> totals;
    std::vector<std::string> series_order;
    for (const auto& r : in.runs) {
      const std::string series = to_string(r.model) + " " + r.kernel + " p=" + std::to_string(r.p);
      if (totals.count(series) == 0) series_order.push_back(series);
      ++totals[series];
      if (r.error.empty() && (r.status == "optimal" || r.status == "heuristic")) times[series].push_back(r.wall_time_s);
    }
    const fs::path path = dir / "performance_profile.csv";
    auto out = open_out(path);
    out << "series,time_s,fraction\n";
    for (const auto& series : series_order) {
      auto& ts = times[series];
      std::sort(ts.begin(), ts.end());
      const double total = static_cast<double>(totals[series]);
      out << series << ",0,0\n";
      for (std::size_t k = 0; k < ts.size(); ++k) {
        out << series << ',' << format_double(ts[k]) << ',' << format_double(static_cast<double>(k + 1) / total)
            << '\n';
      }
    }
    written.push_back(path);

    // One row per (p, parameter) in the grid for each model/kernel/level.
    struct CurveKey {
      int model;
      std::string kernel;
      double level;
      int p;
      double param;
      auto operator<=>(const CurveKey&) const = default;
    };
    std::map<CurveKey, std::pair<std::vector<double>, std::vector<double>>> curve;
    std::vector<CurveKey> curve_order;
    for (const auto& r : in.runs) {
      const CurveKey key{static_cast<int>(r.model), r.kernel, r.level, r.p, r.param};
      auto [it, inserted] = curve.try_emplace(key);
      if (inserted) curve_order.push_back(key);
      if (!std::isnan(r.val_auc)) it->second.first.push_back(r.val_auc);
      if (!std::isnan(r.test_auc)) it->second.second.push_back(r.test_auc);
    }
    const fs::path curve_path = dir / "auc_curve.csv";
    auto c = open_out(curve_path);
    c << "model,kernel,level,p,param,mean_val_auc,mean_test_auc,std_test_auc,count\n";
    for (const auto& key : curve_order) {
      const auto& [vals, tests] = curve.at(key);
      c << to_string(static_cast<Model>(key.model)) << ',' << key.kernel << ',' << format_double(key.level) << ','
        << key.p << ',' << format_double(key.param) << ',' << format_double(mean_of(vals)) << ','
        << format_double(mean_of(tests)) << ',' << format_double(tests.empty() ? kNaN : sample_std(tests)) << ','
        << tests.size() << '\n';
    }
    written.push_back(curve_path);
  }

  if (!in.gap.empty()) {
    const fs::path path = dir / "gap_auc.csv";
    auto out = open_out(path);
    out << "index,gap,test_auc,objective,wall_time_s\n";
    for (const auto& r : in.gap) {
      out << r.index << ',' << format_double(r.gap) << ',' << format_double(r.test_auc) << ','
          << format_double(r.objective) << ',' << format_double(r.wall_time_s) << '\n';
    }
    written.push_back(path);
  }
  return written;
}

PlotInputs load_plot_inputs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError("'" + dir.string() + "' is not a directory");
  PlotInputs in;
  if (fs::exists(dir / "dataset.csv")) {
    auto f = open_in(dir / "dataset.csv");
    in.dataset = read_csv(f);
  }
  if (fs::exists(dir / "model.json")) {
    auto f = open_in(dir / "model.json");
    json j;
    try {
      f >> j;
    } catch (const json::parse_error& e) {
      throw InputError(std::string("model.json: ") + e.what());
    }
    in.model = model_from_json(j, &in.assignment);
  }
  if (fs::exists(dir / "runs.csv")) {
    auto f = open_in(dir / "runs.csv");
    in.runs = read_runs_csv(f);
    if (fs::exists(dir / "timings.csv")) {
      auto t = open_in(dir / "timings.csv");
      std::map<int, double> times;
      for (const auto& row : read_table(t, {"run_id", "wall_time_s"})) {
        times[static_cast<int>(field_int(row[0]))] = field_double(row[1]);
      }
      for (auto& r : in.runs) {
        if (auto it = times.find(r.run_id); it != times.end()) r.wall_time_s = it->second;
      }
    }
  }
  if (fs::exists(dir / "report.csv")) {
    auto f = open_in(dir / "report.csv");
    in.rows = read_report_csv(f);
  }
  if (fs::exists(dir / "incumbents.csv")) {
    auto f = open_in(dir / "incumbents.csv");
    in.gap = read_gap_csv(f);
  }
  return in;
}

}  // namespace msvdd
