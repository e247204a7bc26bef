#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mopup/error.hpp"
#include "mopup/io.hpp"
#include "mopup/study.hpp"
#include "support.hpp"

using namespace mopup;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "mopup_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::size_t parse_error_line(const std::string& text) {
  std::istringstream in(text);
  try {
    read_matrix_set(in);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

std::string csv_of(const std::vector<ExperimentRecord>& r) {
  std::ostringstream out;
  write_csv(out, r, CsvOptions{false});
  return out.str();
}

}  // namespace

TEST_CASE("matrix set round trip is exact") {
  MatrixModelParams params = random_matrix_params(5, 4, 2, 1, 3, ScoreDist::gaussian_std, {NoiseFamily::student_t3, 0.7});
  const MatrixSampleSet set = sample_matrix_set(params, 6, 4);
  const auto path = scratch("round.mst");
  write_matrix_set(path, set);
  const MatrixSampleSet back = read_matrix_set(path);
  REQUIRE(back.n() == set.n());
  for (std::size_t i = 0; i < set.n(); ++i) CHECK(back.samples[i] == set.samples[i]);
}

TEST_CASE("tensor set round trip is exact") {
  const TensorSampleSet set = sample_tensor_set(
      random_tensor_params({3, 4, 5}, {1, 2, 2}, 5, ScoreDist::gaussian_std, {NoiseFamily::gaussian, 0.2}), 3, 6);
  std::stringstream buf;
  write_tensor_set(buf, set);
  const TensorSampleSet back = read_tensor_set(buf);
  REQUIRE(back.n() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(max_abs_diff(back.samples[i], set.samples[i]) == 0.0);
  // mode 0 fastest on disk
  std::stringstream one;
  one << "TST1 1 3 2 2 2\n1 2 3 4 5 6 7 8\n";
  const TensorSampleSet t = read_tensor_set(one);
  Matrix m(2, 4);
  m << 1, 3, 5, 7, 2, 4, 6, 8;
  CHECK(unfold(t.samples[0], 0) == m);
}

TEST_CASE("comments and blank lines") {
  std::istringstream in("# header comment\nMST1 2 2 2\n\n1 2\n  # between rows\n3 4\n5 6\n7 8\n");
  const MatrixSampleSet set = read_matrix_set(in);
  CHECK(set.samples[1](1, 0) == 7.0);
}

TEST_CASE("malformed input") {
  CHECK(parse_error_line("MST1 0 2 2\n") == 1);
  CHECK(parse_error_line("MST2 1 2 2\n1 2\n3 4\n") == 1);
  CHECK(parse_error_line("MST1 1 2 2\n1 2\n3 x\n") == 3);
  CHECK(parse_error_line("MST1 1 2 2\n1 2\n3 4 5\n") == 3);
  CHECK(parse_error_line("MST1 1 2 2\n1 nan\n3 4\n") == 2);
  CHECK(parse_error_line("MST1 1 2 2\n1 2\n3 4\n5 6\n") == 4);

  std::istringstream truncated("MST1 2 2 2\n1 2\n3 4\n5 6\n");
  try {
    read_matrix_set(truncated);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("expected 4 data rows, found 3") != std::string::npos);
  }

  std::istringstream tensor_short("TST1 1 3 2 2 2\n1 2 3 4 5 6 7\n");
  CHECK_THROWS_AS(read_tensor_set(tensor_short), ParseError);
  CHECK_THROWS_AS(read_matrix_set(std::filesystem::path("/nonexistent/dir/x.mst")), IoError);
}

TEST_CASE("format_double is exact") {
  for (double v : {0.1, 1.0 / 3, -2.5e-300, 6.02214076e23}) CHECK(std::stod(format_double(v)) == v);
}

TEST_CASE("study config validation") {
  ExperimentConfig c = ExperimentConfig::defaults(Study::scale_n);
  CHECK_NOTHROW(c.validate());
  c.sweep.clear();
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ExperimentConfig::defaults(Study::scale_p1);
  c.r1 = 20;
  c.r2 = 15;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ExperimentConfig::defaults(Study::scale_n);
  c.replicates = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ExperimentConfig::defaults(Study::scale_n);
  c.sweep = {4.5};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(parse_study("scale_q"), ConfigError);
}

TEST_CASE("config from JSON") {
  const ExperimentConfig c = config_from_json(R"({"study": "scale_R", "sweep": [0.1, 0.2], "replicates": 3,
                                                 "p1": 20, "noise": "uniform", "base_seed": 9, "max_iter": 4})");
  CHECK(c.study == Study::scale_R);
  CHECK(c.sweep.size() == 2);
  CHECK(c.replicates == 3);
  CHECK(c.p1 == 20);
  CHECK(c.noise == NoiseFamily::uniform);
  CHECK(c.base_seed == 9);
  CHECK(c.solver.max_iter == 4);
  CHECK_THROWS_AS(config_from_json("{\"p1\": 3}"), ConfigError);
  CHECK_THROWS_AS(config_from_json("{\"study\": \"scale_n\", \"p1\": \"x\"}"), ConfigError);
  CHECK_THROWS_AS(config_from_json("{not json"), ParseError);
}

TEST_CASE("run_study is deterministic and schedule independent") {
  ExperimentConfig c = ExperimentConfig::defaults(Study::scale_n);
  c.sweep = {8, 16};
  c.replicates = 3;
  c.p1 = 12;
  c.p2 = 10;
  c.r1 = 2;
  c.r2 = 2;
  c.exec = test::serial();
  const auto serial = run_study(c);
  REQUIRE(serial.size() == 6);
  c.exec = ExecPolicy{true, true, 3};
  const auto parallel = run_study(c);
  CHECK(csv_of(serial) == csv_of(parallel));
  CHECK(csv_of(run_study(c)) == csv_of(parallel));
  for (std::size_t k = 0; k < serial.size(); ++k) {
    CHECK(serial[k].sweep_value == c.sweep[k / 3]);
    CHECK(serial[k].replicate == k % 3);
    CHECK(serial[k].err_max >= 0.0);
    CHECK(serial[k].err_max <= 1.0);
    CHECK(serial[k].err_max == std::max(serial[k].err_u, serial[k].err_v));
  }
  c.base_seed += 1;
  CHECK(csv_of(run_study(c)) != csv_of(parallel));
}

TEST_CASE("single record study") {
  ExperimentConfig c = ExperimentConfig::defaults(Study::scale_R);
  c.sweep = {0.1};
  c.replicates = 1;
  c.p1 = 10;
  c.p2 = 10;
  c.r1 = 2;
  c.r2 = 2;
  c.n = 20;
  const auto a = run_study(c), b = run_study(c);
  REQUIRE(a.size() == 1);
  CHECK(csv_of(a) == csv_of(b));
  const StudySummary s = summarize(a);
  REQUIRE(s.rows.size() == 1);
  CHECK(s.rows[0].mean == a[0].err_max);
  CHECK(s.rows[0].stddev == 0.0);
  CHECK_FALSE(s.loglog_slope.has_value());
}

TEST_CASE("CSV layout") {
  ExperimentConfig c = ExperimentConfig::defaults(Study::verify_bounds);
  c.sweep = {6};
  c.replicates = 2;
  const auto recs = run_study(c);
  std::ostringstream out;
  write_csv(out, recs);
  const std::string s = out.str();
  CHECK(s.rfind("study,sweep_value,replicate,seed,err_max,err_u,err_v,iterations,wall_ms,r,rhs_gap", 0) == 0);
  CHECK(s.find('\r') == std::string::npos);
  CHECK(std::count(s.begin(), s.end(), '\n') == 3);
  for (const auto& r : recs) {
    if (r.extra_value("applicable_gap") == 1.0) CHECK(r.extra_value("satisfied_gap") == 1.0);
  }
  CHECK_THROWS_AS(write_csv(std::filesystem::path("/nonexistent/dir/out.csv"), recs), IoError);
}

TEST_CASE("summary statistics and slope oracle") {
  std::vector<ExperimentRecord> recs;
  // err = 2 n^{-1/2}, two replicates per n at +-10%
  for (double n : {4.0, 16.0, 64.0, 256.0}) {
    for (double f : {0.9, 1.1}) {
      ExperimentRecord r;
      r.study = "scale_n";
      r.sweep_value = n;
      r.err_max = f * 2 / std::sqrt(n);
      recs.push_back(r);
    }
  }
  const StudySummary s = summarize(recs);
  REQUIRE(s.rows.size() == 4);
  CHECK(s.rows[0].mean == doctest::Approx(1.0));
  CHECK(s.rows[0].stddev == doctest::Approx(std::sqrt(2 * 0.01)));
  REQUIRE(s.loglog_slope);
  CHECK(*s.loglog_slope == doctest::Approx(-0.5).epsilon(1e-12));

  CHECK(least_squares_slope({1, 2, 3}, {2, 4, 6}) == doctest::Approx(2.0));
  CHECK_THROWS_AS(least_squares_slope({1, 1}, {2, 3}), ArgumentError);
}

TEST_CASE("scale_R slope skips saturated points") {
  std::vector<ExperimentRecord> recs;
  for (double R : {0.01, 0.1, 1.0, 5.0}) {
    ExperimentRecord r;
    r.study = "scale_R";
    r.sweep_value = R;
    r.err_max = R >= 1.0 ? 0.9 : 0.3 * R;
    recs.push_back(r);
  }
  const StudySummary s = summarize(recs);
  CHECK(s.slope_points == 2);
  CHECK(*s.loglog_slope == doctest::Approx(1.0));
}
