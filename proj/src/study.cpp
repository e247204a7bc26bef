#include "mopup/study.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mopup/baselines.hpp"
#include "mopup/error.hpp"
#include "mopup/io.hpp"
#include "mopup/oracles.hpp"
#include "mopup/rng.hpp"

namespace mopup {

namespace {

constexpr std::pair<Study, const char*> kStudyNames[] = {
    {Study::scale_p1, "scale_p1"},         {Study::scale_R, "scale_R"},
    {Study::scale_n, "scale_n"},           {Study::rank_bic, "rank_bic"},
    {Study::compare_mpca, "compare_mpca"}, {Study::verify_bounds, "verify_bounds"},
};

bool is_integer(double v) { return std::isfinite(v) && v == std::floor(v); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

struct Cell {
  std::size_t sweep_index;
  std::size_t replicate;
};

std::pair<double, double> loading_errors(const MatrixModelParams& truth, const Subspace& u, const Subspace& v) {
  return {sin_theta(truth.u, u), sin_theta(truth.v, v)};
}

void run_matrix_cell(const ExperimentConfig& cfg, double x, ExperimentRecord& rec, const ExecPolicy& inner) {
  Index p1 = cfg.p1;
  std::size_t n = cfg.n;
  double R = cfg.noise_scale;
  switch (cfg.study) {
    case Study::scale_p1: p1 = static_cast<Index>(x); break;
    case Study::scale_n: n = static_cast<std::size_t>(x); break;
    case Study::scale_R:
    case Study::rank_bic:
    case Study::compare_mpca: R = x; break;
    case Study::verify_bounds: break;
  }
  MatrixModelParams params =
      random_matrix_params(p1, cfg.p2, cfg.r1, cfg.r2, rec.seed, cfg.scores, NoiseSpec{cfg.noise, R});
  const MatrixSampleSet set = sample_matrix_set(params, n, mix64(rec.seed + 1), inner);
  ApOptions opts = cfg.solver;
  opts.exec = inner;
  opts.record_trace = false;

  if (cfg.study == Study::rank_bic) {
    const RankSelection sel = select_rank(set, rank_grid(cfg.rank_lo, cfg.rank_hi, cfg.rank_lo, cfg.rank_hi), opts);
    // Errors are reported at the true rank so the column stays comparable.
    const FitResult fit = mopup_fit(set, cfg.r1, cfg.r2, opts);
    std::tie(rec.err_u, rec.err_v) = loading_errors(params, fit.u_hat, fit.v_hat);
    rec.iterations = fit.iterations_run;
    rec.extra = {{"r1_hat", static_cast<double>(sel.chosen.r1)},
                 {"r2_hat", static_cast<double>(sel.chosen.r2)},
                 {"abs_err_r1", std::abs(static_cast<double>(sel.chosen.r1 - cfg.r1))},
                 {"abs_err_r2", std::abs(static_cast<double>(sel.chosen.r2 - cfg.r2))}};
  } else if (cfg.study == Study::compare_mpca) {
    const FitResult fit = mopup_fit(set, cfg.r1, cfg.r2, opts);
    const FitResult mpca = hooi_mpca_fit(set, cfg.r1, cfg.r2, opts);
    const SubspacePair hosvd = hosvd_matrix_init(set, cfg.r1, cfg.r2, inner);
    std::tie(rec.err_u, rec.err_v) = loading_errors(params, fit.u_hat, fit.v_hat);
    rec.iterations = fit.iterations_run;
    const auto [mu, mv] = loading_errors(params, mpca.u_hat, mpca.v_hat);
    const auto [hu, hv] = loading_errors(params, hosvd.u, hosvd.v);
    const double obj_mopup = objective(set, fit.u_hat, fit.v_hat);
    const double obj_mpca = objective(set, mpca.u_hat, mpca.v_hat);
    rec.extra = {{"err_mpca", std::max(mu, mv)},
                 {"err_hosvd", std::max(hu, hv)},
                 {"obj_mopup", obj_mopup},
                 {"obj_mpca", obj_mpca},
                 {"mopup_lower_obj", obj_mopup < obj_mpca ? 1.0 : 0.0}};
  } else {
    const FitResult fit = mopup_fit(set, cfg.r1, cfg.r2, opts);
    std::tie(rec.err_u, rec.err_v) = loading_errors(params, fit.u_hat, fit.v_hat);
    rec.iterations = fit.iterations_run;
    rec.extra = {{"converged", fit.converged ? 1.0 : 0.0}};
  }
  rec.err_max = std::max(rec.err_u, rec.err_v);
}

void run_bounds_cell(double x, std::size_t cell_index, ExperimentRecord& rec) {
  const PerturbationFixture f = random_perturbation_fixture(rec.seed, cell_index, static_cast<Index>(x));
  const Index r = f.r;
  const DavisKahanComparison cmp = check_davis_kahan_comparison(f.x, f.z, r);
  const BoundReport& b = cmp.blockwise;
  rec.err_u = b.lhs;
  rec.err_v = b.lhs_frobenius / std::sqrt(static_cast<double>(r));
  rec.err_max = std::max(rec.err_u, rec.err_v);
  rec.iterations = 0;
  rec.extra = {{"r", static_cast<double>(r)},
               {"rhs_gap", b.gap.rhs},
               {"applicable_gap", b.gap.applicable ? 1.0 : 0.0},
               {"satisfied_gap", b.gap.satisfied ? 1.0 : 0.0},
               {"rhs_separated", b.separated.rhs},
               {"applicable_separated", b.separated.applicable ? 1.0 : 0.0},
               {"satisfied_separated", b.separated.satisfied ? 1.0 : 0.0},
               {"rhs_frobenius", b.frobenius.rhs},
               {"satisfied_frobenius", b.frobenius.satisfied ? 1.0 : 0.0},
               {"rhs_davis_kahan", cmp.davis_kahan_rhs},
               {"blockwise_tighter", cmp.tighter == TighterBound::blockwise ? 1.0 : 0.0}};
}

}  // namespace

std::string to_string(Study s) {
  for (const auto& [value, name] : kStudyNames)
    if (value == s) return name;
  return "unknown";
}

Study parse_study(const std::string& name) {
  for (const auto& [value, label] : kStudyNames)
    if (name == label) return value;
  throw ConfigError("unknown study '" + name +
                    "' (expected scale_p1, scale_R, scale_n, rank_bic, compare_mpca, verify_bounds)");
}

std::string to_string(NoiseFamily f) {
  switch (f) {
    case NoiseFamily::none: return "none";
    case NoiseFamily::uniform: return "uniform";
    case NoiseFamily::gaussian: return "gaussian";
    case NoiseFamily::student_t3: return "student_t3";
  }
  return "unknown";
}

NoiseFamily parse_noise(const std::string& name) {
  if (name == "none") return NoiseFamily::none;
  if (name == "uniform") return NoiseFamily::uniform;
  if (name == "gaussian") return NoiseFamily::gaussian;
  if (name == "student_t3" || name == "t3") return NoiseFamily::student_t3;
  throw ConfigError("unknown noise family '" + name + "' (expected none, uniform, gaussian, student_t3)");
}

std::string to_string(ScoreDist s) { return s == ScoreDist::uniform_pm1 ? "uniform_pm1" : "gaussian_std"; }

ScoreDist parse_scores(const std::string& name) {
  if (name == "uniform_pm1" || name == "uniform") return ScoreDist::uniform_pm1;
  if (name == "gaussian_std" || name == "gaussian") return ScoreDist::gaussian_std;
  throw ConfigError("unknown score distribution '" + name + "' (expected uniform_pm1, gaussian_std)");
}

ExperimentConfig ExperimentConfig::defaults(Study study) {
  ExperimentConfig c;
  c.study = study;
  c.solver.max_iter = 10;
  switch (study) {
    case Study::scale_p1:
      c.sweep = {30, 40, 50, 60, 80, 100};
      break;
    case Study::scale_R:
      c.sweep = {0.001, 0.005, 0.01, 0.05, 0.1, 0.5, 1, 2, 5};
      break;
    case Study::scale_n:
      for (int i = 2; i <= 12; ++i) c.sweep.push_back(std::ldexp(1.0, i));
      break;
    case Study::rank_bic:
      c.p1 = c.p2 = 30;
      c.r1 = 3;
      c.r2 = 4;
      c.n = 5;
      c.replicates = 20;
      c.sweep = {0.05, 0.1, 0.15, 0.2};
      break;
    case Study::compare_mpca:
      c.p1 = c.p2 = 30;
      c.n = 64;
      c.sweep = {0.05, 0.1, 0.2};
      break;
    case Study::verify_bounds:
      c.sweep = {5, 10, 20, 30};
      c.replicates = 50;
      break;
  }
  return c;
}

void ExperimentConfig::validate() const {
  if (sweep.empty()) throw ConfigError("sweep must list at least one value");
  if (replicates < 1) throw ConfigError("replicates must be at least 1");
  solver.validate();
  if (study == Study::verify_bounds) {
    for (double x : sweep) {
      if (!is_integer(x) || x < 2) throw ConfigError("verify_bounds sweeps integer dimensions >= 2");
    }
    return;
  }
  if (r1 < 1 || r2 < 1) throw ConfigError("ranks must be at least 1");
  if (noise_scale < 0) throw ConfigError("noise scale R must be non-negative");
  auto check_dims = [&](Index p1v, std::size_t nv) {
    if (r1 >= p1v || r2 >= p2) {
      throw ConfigError("need r1 < p1 and r2 < p2 (p1=" + std::to_string(p1v) + ", p2=" + std::to_string(p2) + ")");
    }
    if (r1 + r2 >= p2 || r1 + r2 >= p1v) {
      throw ConfigError("r1 + r2 = " + std::to_string(r1 + r2) + " must be below p1 = " + std::to_string(p1v) +
                        " and p2 = " + std::to_string(p2) + " for the ASC initializer to be informative");
    }
    if (nv < 2) throw ConfigError("n must be at least 2 (samples are centered)");
  };
  switch (study) {
    case Study::scale_p1:
      for (double x : sweep) {
        if (!is_integer(x) || x < 2) throw ConfigError("scale_p1 sweeps integer p1 values");
        check_dims(static_cast<Index>(x), n);
      }
      break;
    case Study::scale_n:
      for (double x : sweep) {
        if (!is_integer(x) || x < 2) throw ConfigError("scale_n sweeps integer n >= 2");
        check_dims(p1, static_cast<std::size_t>(x));
      }
      break;
    case Study::scale_R:
    case Study::compare_mpca:
    case Study::rank_bic:
      for (double x : sweep) {
        if (!(x >= 0) || !std::isfinite(x)) throw ConfigError("noise levels must be finite and non-negative");
      }
      check_dims(p1, n);
      if (study == Study::rank_bic && (rank_lo < 1 || rank_lo > rank_hi || rank_hi >= std::min(p1, p2))) {
        throw ConfigError("rank grid must satisfy 1 <= rank_lo <= rank_hi < min(p1, p2)");
      }
      break;
    case Study::verify_bounds:
      break;
  }
}

ExperimentConfig config_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what(), 0);
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  if (!j.contains("study")) throw ConfigError("config needs a 'study' key");
  try {
    ExperimentConfig c = ExperimentConfig::defaults(parse_study(j.at("study").get<std::string>()));
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
    };
    get("p1", c.p1);
    get("p2", c.p2);
    get("r1", c.r1);
    get("r2", c.r2);
    get("n", c.n);
    get("R", c.noise_scale);
    get("sweep", c.sweep);
    get("replicates", c.replicates);
    get("base_seed", c.base_seed);
    get("max_iter", c.solver.max_iter);
    get("tol", c.solver.tol);
    get("rank_lo", c.rank_lo);
    get("rank_hi", c.rank_hi);
    if (j.contains("noise")) c.noise = parse_noise(j.at("noise").get<std::string>());
    if (j.contains("scores")) c.scores = parse_scores(j.at("scores").get<std::string>());
    if (j.contains("update_order")) {
      const auto order = j.at("update_order").get<std::string>();
      if (order == "paper") c.solver.update_order = UpdateOrder::paper_jacobi;
      else if (order == "gauss-seidel") c.solver.update_order = UpdateOrder::gauss_seidel;
      else throw ConfigError("update_order must be 'paper' or 'gauss-seidel'");
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return config_from_json(text);
}

double ExperimentRecord::extra_value(const std::string& key) const {
  for (const auto& [k, v] : extra)
    if (k == key) return v;
  throw std::out_of_range("record has no column '" + key + "'");
}

std::uint64_t replicate_seed(std::uint64_t base_seed, std::size_t sweep_index, std::size_t replicate) {
  return mix64(mix64(base_seed ^ mix64(sweep_index + 1)) ^ (replicate + 0x9E37ull));
}

std::vector<ExperimentRecord> run_study(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<Cell> cells;
  for (std::size_t s = 0; s < cfg.sweep.size(); ++s)
    for (std::size_t r = 0; r < cfg.replicates; ++r) cells.push_back({s, r});
  std::vector<ExperimentRecord> records(cells.size());

  // Replicates are the unit of parallel work; kernels inside run serially.
  ExecPolicy inner = cfg.exec;
  const bool outer_parallel = cfg.exec.parallel && cells.size() > 1;
  if (outer_parallel) inner.parallel = false;

  auto run_cell = [&](std::size_t c) {
    const Cell cell = cells[c];
    ExperimentRecord& rec = records[c];
    rec.study = to_string(cfg.study);
    rec.sweep_value = cfg.sweep[cell.sweep_index];
    rec.replicate = cell.replicate;
    rec.seed = replicate_seed(cfg.base_seed, cell.sweep_index, cell.replicate);
    const auto start = std::chrono::steady_clock::now();
    if (cfg.study == Study::verify_bounds) {
      run_bounds_cell(rec.sweep_value, c, rec);
    } else {
      run_matrix_cell(cfg, rec.sweep_value, rec, inner);
    }
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  };

#ifdef _OPENMP
  if (outer_parallel) {
    const int threads = cfg.exec.threads > 0 ? cfg.exec.threads : omp_get_max_threads();
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(cells.size()); ++c) {
      try {
        run_cell(static_cast<std::size_t>(c));
      } catch (...) {
#pragma omp critical(mopup_study_error)
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
    return records;
  }
#endif
  for (std::size_t c = 0; c < cells.size(); ++c) run_cell(c);
  return records;
}

void write_csv(std::ostream& out, const std::vector<ExperimentRecord>& records, const CsvOptions& opts) {
  out << "study,sweep_value,replicate,seed,err_max,err_u,err_v,iterations";
  if (opts.include_wall_ms) out << ",wall_ms";
  if (!records.empty())
    for (const auto& [key, value] : records.front().extra) out << ',' << csv_field(key);
  out << '\n';
  for (const ExperimentRecord& r : records) {
    out << csv_field(r.study) << ',' << format_double(r.sweep_value) << ',' << r.replicate << ',' << r.seed << ','
        << format_double(r.err_max) << ',' << format_double(r.err_u) << ',' << format_double(r.err_v) << ','
        << r.iterations;
    if (opts.include_wall_ms) out << ',' << format_double(r.wall_ms);
    for (const auto& [key, value] : r.extra) out << ',' << format_double(value);
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const std::vector<ExperimentRecord>& records,
               const CsvOptions& opts) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_csv(out, records, opts);
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ArgumentError("slope needs at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw ArgumentError("slope needs two distinct x values");
  return sxy / sxx;
}

StudySummary summarize(const std::vector<ExperimentRecord>& records) {
  if (records.empty()) throw ArgumentError("summarize: no records");
  std::map<double, std::vector<double>> groups;
  for (const ExperimentRecord& r : records) groups[r.sweep_value].push_back(r.err_max);

  StudySummary s;
  for (const auto& [x, errs] : groups) {
    SummaryRow row;
    row.sweep_value = x;
    row.count = errs.size();
    for (double e : errs) row.mean += e;
    row.mean /= static_cast<double>(errs.size());
    if (errs.size() > 1) {
      double ss = 0;
      for (double e : errs) ss += (e - row.mean) * (e - row.mean);
      row.stddev = std::sqrt(ss / static_cast<double>(errs.size() - 1));
    }
    s.rows.push_back(row);
  }

  const std::string& study = records.front().study;
  std::vector<double> lx, ly;
  for (const SummaryRow& row : s.rows) {
    if (row.mean <= 0.0) continue;
    if (study == "scale_n") {
      lx.push_back(std::log(row.sweep_value));
    } else if (study == "scale_R") {
      if (row.mean >= kSaturationError || row.sweep_value <= 0.0) continue;
      lx.push_back(std::log(row.sweep_value));
    } else if (study == "scale_p1") {
      lx.push_back(std::log(row.sweep_value * std::sqrt(std::log(row.sweep_value))));
    } else {
      continue;
    }
    ly.push_back(std::log(row.mean));
  }
  s.slope_points = lx.size();
  if (lx.size() >= 2) s.loglog_slope = least_squares_slope(lx, ly);
  return s;
}

void write_summary(std::ostream& out, const StudySummary& summary) {
  out << "sweep_value,count,mean_err_max,std_err_max\n";
  for (const SummaryRow& r : summary.rows) {
    out << format_double(r.sweep_value) << ',' << r.count << ',' << format_double(r.mean) << ','
        << format_double(r.stddev) << '\n';
  }
  if (summary.loglog_slope) {
    out << "# loglog_slope," << format_double(*summary.loglog_slope) << " (" << summary.slope_points << " points)\n";
  }
}

}  // namespace mopup
