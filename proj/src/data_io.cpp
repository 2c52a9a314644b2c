#include "msvdd/data_io.hpp"

#include "msvdd/errors.hpp"
#include "msvdd/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

namespace msvdd {

using text::format_double;
using text::parse_double;
using text::parse_int;
using text::split_char;
using text::split_whitespace;

namespace {

// Independent generator per (seed, stream) so splits do not share draws.
std::mt19937_64 stream_rng(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
  return std::mt19937_64(seq);
}

int round_count(double fraction, std::size_t total) {
  return static_cast<int>(std::lround(fraction * static_cast<double>(total)));
}

}  // namespace

std::string to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Validation: return "val";
    case Split::Test: return "test";
  }
  return "unknown";
}

Split split_from_string(std::string_view text) {
  if (text == "train") return Split::Train;
  if (text == "val" || text == "validation") return Split::Validation;
  if (text == "test") return Split::Test;
  throw InputError("unknown split tag '" + std::string(text) + "'");
}

std::string to_string(Label label) { return label == Label::Regular ? "regular" : "outlier"; }

Label label_from_string(std::string_view text) {
  if (text == "regular" || text == "0") return Label::Regular;
  if (text == "outlier" || text == "1") return Label::Outlier;
  throw InputError("unknown label '" + std::string(text) + "'");
}

void Dataset::validate() const {
  const auto n = static_cast<std::size_t>(size());
  if (!labels.empty() && labels.size() != n) throw InputError("label count does not match point count");
  if (!raw_labels.empty() && raw_labels.size() != n) throw InputError("class count does not match point count");
  if (!split.empty() && split.size() != n) throw InputError("split tag count does not match point count");
  if (!points.allFinite()) throw InputError("points must be finite");
}

Dataset Dataset::rows(const std::vector<int>& indices) const {
  Dataset out;
  out.provenance = provenance;
  out.points.resize(static_cast<Eigen::Index>(indices.size()), dimension());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const int i = indices[r];
    if (i < 0 || i >= size()) throw InputError("row index out of range");
    out.points.row(static_cast<Eigen::Index>(r)) = points.row(i);
    if (!labels.empty()) out.labels.push_back(labels[i]);
    if (!raw_labels.empty()) out.raw_labels.push_back(raw_labels[i]);
    if (!split.empty()) out.split.push_back(split[i]);
  }
  return out;
}

Dataset Dataset::subset(Split which) const {
  if (split.empty()) throw InputError("dataset has no split tags");
  std::vector<int> keep;
  for (int i = 0; i < static_cast<int>(size()); ++i) {
    if (split[i] == which) keep.push_back(i);
  }
  return rows(keep);
}

std::size_t Dataset::outlier_count() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label::Outlier));
}

void SyntheticSpec::validate() const {
  if (n_train < 1 || n_val < 1 || n_test < 1) throw InputError("split sizes must be positive");
  if (!(noise_level > 0.0 && noise_level < 0.5)) throw InputError("noise_level must lie in (0, 0.5)");
  for (double s : cluster_sigmas) {
    if (!(s > 0.0) || !std::isfinite(s)) throw InputError("cluster sigmas must be positive");
  }
}

void to_json(nlohmann::json& j, const SyntheticSpec& spec) {
  j = nlohmann::json{{"n_train", spec.n_train},
                     {"n_val", spec.n_val},
                     {"n_test", spec.n_test},
                     {"noise_level", spec.noise_level},
                     {"cluster_sigmas", spec.cluster_sigmas},
                     {"seed", spec.seed}};
}

void from_json(const nlohmann::json& j, SyntheticSpec& spec) {
  SyntheticSpec out;
  out.n_train = j.value("n_train", out.n_train);
  out.n_val = j.value("n_val", out.n_val);
  out.n_test = j.value("n_test", out.n_test);
  out.noise_level = j.value("noise_level", out.noise_level);
  out.cluster_sigmas = j.value("cluster_sigmas", out.cluster_sigmas);
  out.seed = j.value("seed", out.seed);
  spec = out;
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Dataset out;
  const std::array<std::pair<Split, int>, 3> parts{
      {{Split::Train, spec.n_train}, {Split::Validation, spec.n_val}, {Split::Test, spec.n_test}}};
  const int total = spec.n_train + spec.n_val + spec.n_test;
  out.points.resize(total, 2);
  Eigen::Index row = 0;
  for (std::size_t part = 0; part < parts.size(); ++part) {
    const auto [tag, m] = parts[part];
    std::mt19937_64 rng = stream_rng(spec.seed, static_cast<std::uint32_t>(part));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);

    const int outliers = round_count(spec.noise_level, static_cast<std::size_t>(m));
    const int regular = m - outliers;
    PointMatrix block(m, 2);
    std::vector<Label> labels;
    for (int i = 0; i < m; ++i) {
      if (i < regular) {
        const int k = i % 2;
        const double sigma = spec.cluster_sigmas[k];
        block(i, 0) = kSyntheticCenters[k][0] + sigma * normal(rng);
        block(i, 1) = kSyntheticCenters[k][1] + sigma * normal(rng);
        labels.push_back(Label::Regular);
      } else {
        const int k = coin(rng) ? 1 : 0;
        const double sigma = spec.cluster_sigmas[k];
        const double angle = 2.0 * std::numbers::pi * unit(rng);
        const double radius = sigma * (3.0 + 2.0 * unit(rng));
        block(i, 0) = kSyntheticCenters[k][0] + radius * std::cos(angle);
        block(i, 1) = kSyntheticCenters[k][1] + radius * std::sin(angle);
        labels.push_back(Label::Outlier);
      }
    }
    std::vector<int> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (int i : order) {
      out.points.row(row++) = block.row(i);
      out.labels.push_back(labels[i]);
      out.split.push_back(tag);
    }
  }
  std::ostringstream prov;
  prov << "synthetic " << nlohmann::json(spec).dump();
  out.provenance = prov.str();
  return out;
}

Dataset parse_libsvm(std::string_view text, const LibsvmOptions& options) {
  if (options.dimension < 0) throw InputError("dimension must be nonnegative");
  std::vector<std::vector<std::pair<int, double>>> rows;
  std::vector<int> classes;
  int max_index = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tokens = split_whitespace(line);
    if (tokens.empty()) {
      if (end == text.size()) break;
      continue;
    }

    double label_value = 0.0;
    if (!parse_double(tokens[0], label_value) || label_value != std::floor(label_value) ||
        std::abs(label_value) > 1e9) {
      throw ParseError(line_no, "label '" + std::string(tokens[0]) + "' is not an integer");
    }
    classes.push_back(static_cast<int>(label_value));

    std::vector<std::pair<int, double>> features;
    std::set<int> seen;
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const auto colon = tokens[t].find(':');
      if (colon == std::string_view::npos) {
        throw ParseError(line_no, "expected index:value, got '" + std::string(tokens[t]) + "'");
      }
      long long index = 0;
      double value = 0.0;
      if (!parse_int(tokens[t].substr(0, colon), index) || index < 1 || index > 100000000) {
        throw ParseError(line_no, "bad feature index in '" + std::string(tokens[t]) + "'");
      }
      if (!parse_double(tokens[t].substr(colon + 1), value)) {
        throw ParseError(line_no, "bad feature value in '" + std::string(tokens[t]) + "'");
      }
      const int idx = static_cast<int>(index);
      if (options.strict && !features.empty() && idx <= features.back().first) {
        throw ParseError(line_no, "feature indices must increase (" + std::to_string(idx) + " after " +
                                      std::to_string(features.back().first) + ")");
      }
      if (!seen.insert(idx).second) throw ParseError(line_no, "duplicate feature index " + std::to_string(idx));
      if (options.dimension > 0 && idx > options.dimension) {
        throw ParseError(line_no, "feature index " + std::to_string(idx) + " exceeds dimension " +
                                      std::to_string(options.dimension));
      }
      max_index = std::max(max_index, idx);
      features.emplace_back(idx, value);
    }
    rows.push_back(std::move(features));
    if (end == text.size()) break;
  }

  Dataset out;
  const int d = options.dimension > 0 ? options.dimension : max_index;
  out.points = PointMatrix::Zero(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (const auto& [idx, value] : rows[r]) out.points(static_cast<Eigen::Index>(r), idx - 1) = value;
  }
  out.raw_labels = std::move(classes);
  out.provenance = "libsvm";
  return out;
}

Dataset read_libsvm_file(const std::string& path, const LibsvmOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  Dataset out = parse_libsvm(buf.str(), options);
  out.provenance = "libsvm " + path;
  return out;
}

std::string serialize_libsvm(const Dataset& data) {
  if (data.raw_labels.size() != static_cast<std::size_t>(data.size())) {
    throw InputError("libSVM output needs one class label per point");
  }
  std::string out;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    out += std::to_string(data.raw_labels[i]);
    for (Eigen::Index t = 0; t < data.dimension(); ++t) {
      const double v = data.points(i, t);
      if (v == 0.0) continue;
      out += ' ';
      out += std::to_string(t + 1);
      out += ':';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

UnitBoxScaler UnitBoxScaler::fit(const PointMatrix& train) {
  if (train.rows() == 0) throw InputError("cannot fit a scaler on an empty training set");
  UnitBoxScaler s;
  s.min_ = train.colwise().minCoeff();
  s.max_ = train.colwise().maxCoeff();
  return s;
}

PointMatrix UnitBoxScaler::apply(const PointMatrix& points) const {
  if (points.cols() != min_.size()) throw InputError("point dimension does not match the fitted scaler");
  PointMatrix out(points.rows(), points.cols());
  for (Eigen::Index t = 0; t < points.cols(); ++t) {
    const double range = max_[t] - min_[t];
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      out(i, t) = range > 0.0 ? 2.0 * ((points(i, t) - min_[t]) / range) - 1.0 : 0.0;
    }
  }
  return out;
}

Dataset UnitBoxScaler::apply(Dataset data) const {
  data.points = apply(data.points);
  return data;
}

std::vector<Dataset> scale_to_unit_box(const Dataset& train, const std::vector<Dataset>& others) {
  const UnitBoxScaler scaler = UnitBoxScaler::fit(train.points);
  std::vector<Dataset> out;
  out.push_back(scaler.apply(train));
  for (const auto& d : others) out.push_back(scaler.apply(d));
  return out;
}

Dataset split_real(const Dataset& data, const RealSplitSpec& spec) {
  data.validate();
  if (data.raw_labels.empty()) throw InputError("splitting needs class labels");
  const double sum = spec.fractions[0] + spec.fractions[1] + spec.fractions[2];
  if (std::abs(sum - 1.0) > 1e-9) throw InputError("split fractions must sum to 1");
  for (double f : spec.fractions) {
    if (f < 0.0) throw InputError("split fractions must be nonnegative");
  }
  if (!(spec.anomaly_fraction >= 0.0)) throw InputError("anomaly fraction must be nonnegative");
  const std::set<int> anomaly(spec.anomaly_classes.begin(), spec.anomaly_classes.end());
  for (int c : spec.regular_classes) {
    if (anomaly.count(c) != 0) throw InputError("regular and anomaly classes overlap");
  }
  const std::set<int> regular_set(spec.regular_classes.begin(), spec.regular_classes.end());

  std::vector<int> regular;
  std::vector<int> pool;
  for (int i = 0; i < static_cast<int>(data.size()); ++i) {
    const int c = data.raw_labels[i];
    if (anomaly.count(c) != 0) {
      pool.push_back(i);
    } else if (regular_set.empty() || regular_set.count(c) != 0) {
      regular.push_back(i);
    }
  }
  if (regular.empty()) throw InputError("no regular points to split");

  std::mt19937_64 rng = stream_rng(spec.seed, 0);
  std::shuffle(regular.begin(), regular.end(), rng);
  std::shuffle(pool.begin(), pool.end(), rng);

  const std::size_t n = regular.size();
  const std::size_t n_train = static_cast<std::size_t>(round_count(spec.fractions[0], n));
  const std::size_t n_val = std::min(n - n_train, static_cast<std::size_t>(round_count(spec.fractions[1], n)));
  const std::array<std::size_t, 4> cut{0, n_train, n_train + n_val, n};
  const std::array<Split, 3> tags{Split::Train, Split::Validation, Split::Test};

  std::array<int, 3> wanted{};
  int total_wanted = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    wanted[s] = round_count(spec.anomaly_fraction, cut[s + 1] - cut[s]);
    total_wanted += wanted[s];
  }
  const bool synthetic_anomalies = spec.anomaly_classes.empty();
  if (!synthetic_anomalies && total_wanted > static_cast<int>(pool.size())) {
    throw InputError("anomaly pool has " + std::to_string(pool.size()) + " points, " +
                     std::to_string(total_wanted) + " needed");
  }

  Eigen::RowVectorXd lo = Eigen::RowVectorXd::Zero(data.dimension());
  Eigen::RowVectorXd hi = lo;
  if (synthetic_anomalies && total_wanted > 0) {
    lo = data.points(regular, Eigen::all).colwise().minCoeff();
    hi = data.points(regular, Eigen::all).colwise().maxCoeff();
  }

  Dataset out;
  out.points.resize(static_cast<Eigen::Index>(n) + total_wanted, data.dimension());
  Eigen::Index row = 0;
  std::size_t next_pool = 0;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t s = 0; s < 3; ++s) {
    std::vector<std::pair<Eigen::RowVectorXd, std::pair<Label, int>>> items;
    for (std::size_t k = cut[s]; k < cut[s + 1]; ++k) {
      items.push_back({data.points.row(regular[k]), {Label::Regular, data.raw_labels[regular[k]]}});
    }
    for (int a = 0; a < wanted[s]; ++a) {
      if (synthetic_anomalies) {
        Eigen::RowVectorXd x(data.dimension());
        for (Eigen::Index t = 0; t < x.size(); ++t) x[t] = lo[t] + (hi[t] - lo[t]) * unit(rng);
        items.push_back({x, {Label::Outlier, 0}});
      } else {
        const int i = pool[next_pool++];
        items.push_back({data.points.row(i), {Label::Outlier, data.raw_labels[i]}});
      }
    }
    std::shuffle(items.begin(), items.end(), rng);
    for (auto& [x, tag] : items) {
      out.points.row(row++) = x;
      out.labels.push_back(tag.first);
      out.raw_labels.push_back(tag.second);
      out.split.push_back(tags[s]);
    }
  }
  out.provenance = data.provenance + " split seed=" + std::to_string(spec.seed);
  return out;
}

void write_csv(std::ostream& out, const Dataset& data) {
  data.validate();
  for (Eigen::Index t = 0; t < data.dimension(); ++t) out << 'x' << t + 1 << ',';
  out << "label,split\n";
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (Eigen::Index t = 0; t < data.dimension(); ++t) out << format_double(data.points(i, t)) << ',';
    if (!data.labels.empty()) out << to_string(data.labels[i]);
    out << ',';
    if (!data.split.empty()) out << to_string(data.split[i]);
    out << '\n';
  }
}

Dataset read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_char(line, ',');
  if (header.size() < 2 || header[header.size() - 2] != "label" || header.back() != "split") {
    throw ParseError(1, "header must be x1,...,xd,label,split");
  }
  const std::size_t d = header.size() - 2;
  for (std::size_t t = 0; t < d; ++t) {
    if (header[t] != "x" + std::to_string(t + 1)) throw ParseError(1, "unexpected column '" + std::string(header[t]) + "'");
  }

  std::vector<double> values;
  std::vector<std::optional<Label>> labels;
  std::vector<std::optional<Split>> splits;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_char(line, ',');
    if (fields.size() != d + 2) {
      throw ParseError(line_no, "expected " + std::to_string(d + 2) + " fields, got " + std::to_string(fields.size()));
    }
    for (std::size_t t = 0; t < d; ++t) {
      double v = 0.0;
      if (!parse_double(fields[t], v)) throw ParseError(line_no, "bad number '" + std::string(fields[t]) + "'");
      values.push_back(v);
    }
    try {
      labels.push_back(fields[d].empty() ? std::nullopt : std::optional<Label>(label_from_string(fields[d])));
      splits.push_back(fields[d + 1].empty() ? std::nullopt
                                             : std::optional<Split>(split_from_string(fields[d + 1])));
    } catch (const InputError& e) {
      throw ParseError(line_no, e.what());
    }
  }

  Dataset out;
  const auto n = static_cast<Eigen::Index>(labels.size());
  out.points = Eigen::Map<const PointMatrix>(values.data(), n, static_cast<Eigen::Index>(d));
  const bool all_labels = std::all_of(labels.begin(), labels.end(), [](const auto& l) { return l.has_value(); });
  const bool no_labels = std::none_of(labels.begin(), labels.end(), [](const auto& l) { return l.has_value(); });
  const bool all_splits = std::all_of(splits.begin(), splits.end(), [](const auto& s) { return s.has_value(); });
  const bool no_splits = std::none_of(splits.begin(), splits.end(), [](const auto& s) { return s.has_value(); });
  if (!all_labels && !no_labels) throw InputError("label column must be filled on every row or on none");
  if (!all_splits && !no_splits) throw InputError("split column must be filled on every row or on none");
  if (n > 0 && all_labels) {
    for (const auto& l : labels) out.labels.push_back(*l);
  }
  if (n > 0 && all_splits) {
    for (const auto& s : splits) out.split.push_back(*s);
  }
  out.provenance = "csv";
  return out;
}

}  // namespace msvdd
