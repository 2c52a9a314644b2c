#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "msvdd/data_io.hpp"
#include "msvdd/errors.hpp"

#include <cmath>
#include <sstream>

using namespace msvdd;

namespace {

bool bit_identical(const Dataset& a, const Dataset& b) {
  if (a.points.rows() != b.points.rows() || a.points.cols() != b.points.cols()) return false;
  for (Eigen::Index i = 0; i < a.points.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(a.points.data()[i]) != std::bit_cast<std::uint64_t>(b.points.data()[i])) {
      return false;
    }
  }
  return a.labels == b.labels && a.split == b.split && a.raw_labels == b.raw_labels;
}

int parse_error_line(std::string_view text, const LibsvmOptions& options = {}) {
  try {
    parse_libsvm(text, options);
  } catch (const ParseError& e) {
    return static_cast<int>(e.line());
  }
  return -1;
}

}  // namespace

TEST_CASE("parse_libsvm examples") {
  SUBCASE("single line") {
    const Dataset d = parse_libsvm("1 1:0.5 3:-1\n");
    REQUIRE(d.size() == 1);
    REQUIRE(d.dimension() == 3);
    CHECK(d.points(0, 0) == 0.5);
    CHECK(d.points(0, 1) == 0.0);
    CHECK(d.points(0, 2) == -1.0);
    CHECK(d.raw_labels == std::vector<int>{1});
  }
  SUBCASE("empty feature list") {
    const Dataset d = parse_libsvm("1 2:1\n2\n");
    CHECK(d.points.row(1).isZero());
    CHECK(d.raw_labels == std::vector<int>{1, 2});
  }
  SUBCASE("rows padded to the largest index") {
    const Dataset d = parse_libsvm("+1 4:2.5\n-1 2:7\n");
    CHECK(d.dimension() == 4);
    CHECK(d.points(0, 3) == 2.5);
    CHECK(d.points(1, 1) == 7.0);
    CHECK(d.points(1, 3) == 0.0);
    CHECK(d.raw_labels == std::vector<int>{1, -1});
  }
  SUBCASE("explicit dimension") {
    LibsvmOptions o;
    o.dimension = 6;
    CHECK(parse_libsvm("3 2:1\n", o).dimension() == 6);
    CHECK(parse_error_line("3 7:1\n", o) == 1);
  }
  SUBCASE("blank lines and no trailing newline") {
    const Dataset d = parse_libsvm("\n1 1:1\n\n2 1:2");
    CHECK(d.size() == 2);
    CHECK(d.points(1, 0) == 2.0);
  }
}

TEST_CASE("parse_libsvm errors carry line numbers") {
  CHECK(parse_error_line("1 1:0.5\n1 2:x\n") == 2);
  CHECK(parse_error_line("1 1:0.5\n\n1 0:1\n") == 3);
  CHECK(parse_error_line("a 1:1\n") == 1);
  CHECK(parse_error_line("1.5 1:1\n") == 1);
  CHECK(parse_error_line("1 11\n") == 1);
  CHECK(parse_error_line("1 1:1 1:2\n") == 1);
  CHECK(parse_error_line("1 1:1\n1 3:1 2:1\n") == 2);
  LibsvmOptions lax;
  lax.strict = false;
  const Dataset d = parse_libsvm("1 3:1 2:5\n", lax);
  CHECK(d.points(0, 1) == 5.0);
  CHECK(parse_error_line("1 3:1 3:5\n", lax) == 1);
  CHECK_THROWS_AS(parse_libsvm("1 2:1e999\n"), ParseError);
}

TEST_CASE("libsvm round trip") {
  const std::string canonical = "1 1:0.5 3:-1\n-1 2:0.1 4:12345.678\n2\n";
  const Dataset a = parse_libsvm(canonical);
  CHECK(serialize_libsvm(a) == canonical);
  const Dataset b = parse_libsvm(serialize_libsvm(a));
  CHECK(bit_identical(a, b));
}

TEST_CASE("scale_to_unit_box") {
  Dataset train;
  train.points = PointMatrix(3, 2);
  train.points << 0, 5, 10, 5, 3, 5;
  Dataset test;
  test.points = PointMatrix(2, 2);
  test.points << 20, 5, -5, 7;
  const auto scaled = scale_to_unit_box(train, {test});
  CHECK(scaled[0].points(0, 0) == -1.0);
  CHECK(scaled[0].points(1, 0) == 1.0);
  CHECK(scaled[0].points.col(1).isZero());
  CHECK(scaled[1].points(0, 0) == doctest::Approx(3.0));
  CHECK(scaled[1].points(1, 0) == doctest::Approx(-2.0));
  CHECK(scaled[1].points(1, 1) == 0.0);

  // Awkward ranges still land exactly on the endpoints.
  Dataset odd;
  odd.points = PointMatrix(3, 1);
  odd.points << 0.1, 0.7, 0.3;
  const auto s = scale_to_unit_box(odd, {});
  CHECK(s[0].points(0, 0) == -1.0);
  CHECK(s[0].points(1, 0) == 1.0);
  CHECK(s[0].points.maxCoeff() <= 1.0);
  CHECK(s[0].points.minCoeff() >= -1.0);

  CHECK_THROWS_AS(scale_to_unit_box(Dataset{}, {}), InputError);
}

TEST_CASE("generate_synthetic") {
  SyntheticSpec spec;
  spec.seed = 7;
  const Dataset a = generate_synthetic(spec);
  CHECK(a.size() == 60 + 66 + 166);
  CHECK(a.dimension() == 2);
  CHECK(bit_identical(a, generate_synthetic(spec)));
  spec.seed = 8;
  CHECK_FALSE(bit_identical(a, generate_synthetic(spec)));

  for (double noise : {0.05, 0.10, 0.15, 0.20, 0.33}) {
    spec.noise_level = noise;
    const Dataset d = generate_synthetic(spec);
    for (auto [tag, m] : {std::pair{Split::Train, 60}, std::pair{Split::Validation, 66}, std::pair{Split::Test, 166}}) {
      const Dataset part = d.subset(tag);
      CHECK(part.size() == m);
      CHECK(part.outlier_count() == static_cast<std::size_t>(std::lround(noise * m)));
    }
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      if (d.labels[i] != Label::Outlier) continue;
      // Reference cluster: the one whose annulus contains the point.
      bool in_band = false;
      for (int k = 0; k < 2; ++k) {
        const double dx = d.points(i, 0) - kSyntheticCenters[k][0];
        const double dy = d.points(i, 1) - kSyntheticCenters[k][1];
        const double r = std::sqrt(dx * dx + dy * dy);
        const double sigma = spec.cluster_sigmas[k];
        in_band = in_band || (r >= 3.0 * sigma * (1 - 1e-12) && r <= 5.0 * sigma * (1 + 1e-12));
      }
      CHECK(in_band);
    }
  }

  spec.noise_level = 0.5;
  CHECK_THROWS_AS(generate_synthetic(spec), InputError);
  spec.noise_level = 0.1;
  spec.n_val = 0;
  CHECK_THROWS_AS(generate_synthetic(spec), InputError);
}

TEST_CASE("synthetic spec JSON") {
  SyntheticSpec spec;
  spec.n_train = 100;
  spec.noise_level = 0.15;
  spec.seed = 42;
  const nlohmann::json j = spec;
  const SyntheticSpec back = j.get<SyntheticSpec>();
  CHECK(back.n_train == 100);
  CHECK(back.n_val == 66);
  CHECK(back.noise_level == 0.15);
  CHECK(back.seed == 42);
  CHECK(back.cluster_sigmas == spec.cluster_sigmas);
}

TEST_CASE("split_real") {
  Dataset iris;
  iris.points = PointMatrix(150, 4);
  for (int i = 0; i < 150; ++i) {
    iris.raw_labels.push_back(1 + i / 50);
    for (int t = 0; t < 4; ++t) iris.points(i, t) = i * 0.1 + t;
  }
  RealSplitSpec spec;
  spec.anomaly_fraction = 0.0;
  const Dataset plain = split_real(iris, spec);
  CHECK(plain.subset(Split::Train).size() == 45);
  CHECK(plain.subset(Split::Validation).size() == 30);
  CHECK(plain.subset(Split::Test).size() == 75);
  CHECK(plain.outlier_count() == 0);

  spec.anomaly_fraction = 0.1;
  spec.seed = 3;
  const Dataset with_noise = split_real(iris, spec);
  CHECK(with_noise.subset(Split::Train).outlier_count() == 5);   // round(4.5)
  CHECK(with_noise.subset(Split::Validation).outlier_count() == 3);
  CHECK(with_noise.subset(Split::Test).outlier_count() == 8);    // round(7.5)
  CHECK(bit_identical(with_noise, split_real(iris, spec)));

  // Class-based anomalies: regular = class 1, anomalies from classes 2 and 3.
  spec.regular_classes = {1};
  spec.anomaly_classes = {2, 3};
  spec.anomaly_fraction = 0.2;
  const Dataset cls = split_real(iris, spec);
  CHECK(cls.size() == 50 + 3 + 2 + 5);
  for (Eigen::Index i = 0; i < cls.size(); ++i) {
    CHECK((cls.labels[i] == Label::Outlier) == (cls.raw_labels[i] != 1));
  }

  spec.anomaly_classes = {1};
  CHECK_THROWS_AS(split_real(iris, spec), InputError);
  spec.regular_classes = {1, 2};
  spec.anomaly_classes = {3};
  spec.anomaly_fraction = 0.9;
  CHECK_THROWS_AS(split_real(iris, spec), InputError);
}

TEST_CASE("dataset CSV round trip") {
  SyntheticSpec spec;
  spec.n_train = 10;
  spec.n_val = 5;
  spec.n_test = 5;
  spec.seed = 1;
  const Dataset d = generate_synthetic(spec);
  std::stringstream buf;
  write_csv(buf, d);
  const std::string text = buf.str();
  CHECK(text.rfind("x1,x2,label,split\n", 0) == 0);
  const Dataset back = read_csv(buf);
  CHECK(back.points == d.points);
  CHECK(back.labels == d.labels);
  CHECK(back.split == d.split);

  std::istringstream bad("x1,label,split\n1,regular,train\nq,regular,train\n");
  try {
    read_csv(bad);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  std::istringstream untagged("x1,x2,label,split\n1,2,,\n");
  const Dataset plain = read_csv(untagged);
  CHECK(plain.labels.empty());
  CHECK(plain.split.empty());
}
