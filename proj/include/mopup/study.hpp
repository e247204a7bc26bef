#pragma once

// Monte-Carlo experiment drivers: error scaling in p1, R and n, BIC rank
// selection, the MOP-UP vs MPCA comparison and the perturbation-bound
// sweep. Each (sweep value, replicate) cell draws from its own seed, so
// results do not depend on how cells are scheduled.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mopup/matrix_fit.hpp"
#include "mopup/spiked_model.hpp"

namespace mopup {

enum class Study { scale_p1, scale_R, scale_n, rank_bic, compare_mpca, verify_bounds };

std::string to_string(Study s);
Study parse_study(const std::string& name);  // throws ConfigError
std::string to_string(NoiseFamily f);
NoiseFamily parse_noise(const std::string& name);
std::string to_string(ScoreDist s);
ScoreDist parse_scores(const std::string& name);

struct ExperimentConfig {
  Study study = Study::scale_n;
  Index p1 = 40;
  Index p2 = 30;
  Index r1 = 5;
  Index r2 = 7;
  std::size_t n = 256;
  double noise_scale = 0.1;  // R
  NoiseFamily noise = NoiseFamily::gaussian;
  ScoreDist scores = ScoreDist::uniform_pm1;
  std::vector<double> sweep;  // meaning depends on the study
  std::size_t replicates = 10;
  std::uint64_t base_seed = 20240601;
  ApOptions solver;
  Index rank_lo = 2;  // rank_bic grid bounds, both modes
  Index rank_hi = 9;
  ExecPolicy exec;  // replicate-level worker pool

  // Defaults for each study; the swept quantity is listed first.
  //   scale_p1       p1 in {30,40,50,60,80,100}, n = 256, R = 0.1
  //   scale_R        R in {0.001,...,5}, p1 = 40, n = 256
  //   scale_n        n in {4,...,4096}, p1 = 40, R = 0.1
  //   rank_bic       R in {0.05,0.1,0.15,0.2}, p1 = p2 = 30, r = (3,4), n = 5, 20 reps
  //   compare_mpca   R in {0.05,0.1,0.2}, p1 = p2 = 30, r = (5,7), n = 64
  //   verify_bounds  matrix dimension in {5,10,20,30}
  // Solver budget is 10 iterations throughout.
  static ExperimentConfig defaults(Study study);

  void validate() const;  // throws ConfigError
};

// Reads a JSON object; absent keys keep the study defaults.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig config_from_json(const std::string& json_text);

struct ExperimentRecord {
  std::string study;
  double sweep_value = 0.0;
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  double err_max = 0.0;
  double err_u = 0.0;
  double err_v = 0.0;
  std::size_t iterations = 0;
  double wall_ms = 0.0;
  std::vector<std::pair<std::string, double>> extra;

  double extra_value(const std::string& key) const;  // throws std::out_of_range
};

std::uint64_t replicate_seed(std::uint64_t base_seed, std::size_t sweep_index, std::size_t replicate);

std::vector<ExperimentRecord> run_study(const ExperimentConfig& cfg);

struct CsvOptions {
  bool include_wall_ms = true;
};

void write_csv(std::ostream& out, const std::vector<ExperimentRecord>& records, const CsvOptions& opts = {});
void write_csv(const std::filesystem::path& path, const std::vector<ExperimentRecord>& records,
               const CsvOptions& opts = {});

struct SummaryRow {
  double sweep_value = 0.0;
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for a single record
};

struct StudySummary {
  std::vector<SummaryRow> rows;  // ascending sweep value
  // Least-squares slope of log(mean err_max) against log(x): x = n for
  // scale_n, R for scale_R (rows with mean >= saturation excluded),
  // p1 sqrt(log p1) for scale_p1.
  std::optional<double> loglog_slope;
  std::size_t slope_points = 0;
};

inline constexpr double kSaturationError = 0.5;

StudySummary summarize(const std::vector<ExperimentRecord>& records);

void write_summary(std::ostream& out, const StudySummary& summary);

// Ordinary least squares slope of y on x; needs two distinct x values.
double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace mopup
