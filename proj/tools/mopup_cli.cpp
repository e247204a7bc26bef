// Command-line front end: data generation, fitting, rank selection,
// denoising, Monte-Carlo studies and the oracle suites.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mopup/baselines.hpp"
#include "mopup/error.hpp"
#include "mopup/io.hpp"
#include "mopup/matrix_fit.hpp"
#include "mopup/oracles.hpp"
#include "mopup/spiked_model.hpp"
#include "mopup/study.hpp"
#include "mopup/tensor_fit.hpp"

namespace {

using namespace mopup;

constexpr int kExitConfig = 2;
constexpr int kExitParse = 3;
constexpr int kExitNumerical = 4;
constexpr int kExitIo = 5;
constexpr int kExitVerifyFailed = 1;

struct Globals {
  std::uint64_t seed = 1;
  int threads = 0;
  bool deterministic = true;
  std::string out;
  std::string format = "csv";

  ExecPolicy exec() const {
    ExecPolicy e;
    e.threads = threads;
    e.deterministic = deterministic;
    e.parallel = threads != 1;
    return e;
  }
};

// Writes to --out when given, stdout otherwise.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw IoError("cannot open '" + path + "' for writing");
    }
    path_ = path;
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }
  void close() {
    stream().flush();
    if (!stream()) throw IoError("write to '" + (path_.empty() ? std::string("stdout") : path_) + "' failed");
  }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::string path_;
};

std::vector<Index> parse_index_list(const std::string& text, const char* what) {
  std::vector<Index> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      out.push_back(static_cast<Index>(v));
    } catch (const std::logic_error&) {
      throw ConfigError(std::string("bad ") + what + " '" + text + "': expected comma-separated integers");
    }
  }
  if (out.empty()) throw ConfigError(std::string(what) + " is empty");
  return out;
}

std::pair<Index, Index> parse_rank_pair(const std::string& text) {
  const auto v = parse_index_list(text, "--rank");
  if (v.size() != 2) throw ConfigError("--rank takes two values, r1,r2");
  return {v[0], v[1]};
}

UpdateOrder parse_order(const std::string& s) {
  return s == "gauss-seidel" ? UpdateOrder::gauss_seidel : UpdateOrder::paper_jacobi;
}

struct FitFlags {
  std::string rank;
  std::string init = "asc";
  std::string init_u, init_v;
  std::size_t max_iter = 100;
  double tol = 1e-8;
  std::string update_order = "paper";

  void add_to(CLI::App* app) {
    app->add_option("--rank", rank, "target ranks r1,r2")->required();
    app->add_option("--init", init, "initializer")->check(CLI::IsMember({"asc", "hosvd", "random", "file"}));
    app->add_option("--init-u", init_u, "U basis (MST1, one sample) for --init file");
    app->add_option("--init-v", init_v, "V basis (MST1, one sample) for --init file");
    app->add_option("--max-iter", max_iter, "iteration budget")->check(CLI::PositiveNumber);
    app->add_option("--tol", tol, "stop when the max sin-theta change is at most this");
    app->add_option("--update-order", update_order, "paper (Jacobi) or gauss-seidel")
        ->check(CLI::IsMember({"paper", "gauss-seidel"}));
  }

  ApOptions options(const Globals& g) const {
    ApOptions o;
    o.max_iter = max_iter;
    o.tol = tol;
    o.update_order = parse_order(update_order);
    o.exec = g.exec();
    o.validate();
    return o;
  }

  SubspacePair initial(const MatrixSampleSet& set, Index r1, Index r2, const Globals& g) const {
    if (init == "asc") return asc_init(set, r1, r2, g.exec());
    if (init == "hosvd") return hosvd_matrix_init(set, r1, r2, g.exec());
    if (init == "random") {
      return {random_subspace(set.p1(), r1, mix64(g.seed) ^ 1), random_subspace(set.p2(), r2, mix64(g.seed) ^ 2)};
    }
    if (init_u.empty() || init_v.empty()) throw ConfigError("--init file needs --init-u and --init-v");
    return {read_subspace(init_u), read_subspace(init_v)};
  }
};

void write_trace(std::ostream& out, const FitResult& fit) {
  out << "iteration,objective,step\n";
  for (std::size_t t = 0; t < fit.objective_trace.size(); ++t) {
    out << t << ',' << format_double(fit.objective_trace[t]) << ',';
    if (t > 0 && t - 1 < fit.step_trace.size()) out << format_double(fit.step_trace[t - 1]);
    out << '\n';
  }
}

int cmd_generate(const Globals& g, const std::string& dims_s, const std::string& ranks_s, std::size_t n,
                 const std::string& noise, double R, const std::string& scores, const std::string& truth_prefix) {
  if (g.out.empty()) throw ConfigError("generate needs --out");
  const auto dims = parse_index_list(dims_s, "--dims");
  const auto ranks = parse_index_list(ranks_s, "--ranks");
  if (dims.size() != ranks.size()) throw ConfigError("--dims and --ranks must have the same length");
  const NoiseSpec ns{parse_noise(noise), R};
  const ScoreDist sd = parse_scores(scores);
  std::vector<Subspace> truth;
  if (dims.size() == 2) {
    const MatrixModelParams params = random_matrix_params(dims[0], dims[1], ranks[0], ranks[1], g.seed, sd, ns);
    write_matrix_set(g.out, sample_matrix_set(params, n, mix64(g.seed + 1), g.exec()));
    truth = {params.u, params.v};
  } else {
    const TensorModelParams params = random_tensor_params(dims, ranks, g.seed, sd, ns);
    write_tensor_set(g.out, sample_tensor_set(params, n, mix64(g.seed + 1), g.exec()));
    truth = params.loadings;
  }
  if (!truth_prefix.empty()) {
    for (std::size_t k = 0; k < truth.size(); ++k)
      write_subspace(truth_prefix + ".mode" + std::to_string(k) + ".mst", truth[k]);
  }
  return 0;
}

int cmd_fit(const Globals& g, const std::string& input, const FitFlags& flags, const std::string& save_prefix) {
  const MatrixSampleSet set = read_matrix_set(input);
  const auto [r1, r2] = parse_rank_pair(flags.rank);
  const ApOptions opts = flags.options(g);
  const FitResult fit = ap_fit(set, r1, r2, flags.initial(set, r1, r2, g), opts);
  Output out(g.out);
  write_trace(out.stream(), fit);
  out.close();
  if (!save_prefix.empty()) {
    write_subspace(save_prefix + ".u.mst", fit.u_hat);
    write_subspace(save_prefix + ".v.mst", fit.v_hat);
  }
  std::cerr << "iterations=" << fit.iterations_run << " converged=" << (fit.converged ? "yes" : "no")
            << " objective=" << format_double(objective(set, fit.u_hat, fit.v_hat)) << '\n';
  return 0;
}

int cmd_fit_tensor(const Globals& g, const std::string& input, const std::string& ranks_s, const std::string& init,
                   std::size_t max_iter, double tol, const std::string& save_prefix) {
  const TensorSampleSet set = read_tensor_set(input);
  const auto ranks = parse_index_list(ranks_s, "--ranks");
  if (ranks.size() != set.order()) throw ConfigError("--ranks needs one rank per mode");
  ApOptions opts;
  opts.max_iter = max_iter;
  opts.tol = tol;
  opts.exec = g.exec();
  opts.validate();
  std::vector<Subspace> start;
  if (init == "hosvd") {
    start = hosvd_init(set, ranks, g.exec());
  } else {
    for (std::size_t k = 0; k < ranks.size(); ++k)
      start.push_back(random_subspace(set.dims()[k], ranks[k], mix64(g.seed) ^ (k + 1)));
  }
  const TensorFitResult fit = ap_fit_tensor(set, ranks, start, opts);
  Output out(g.out);
  out.stream() << "iteration,objective,step\n";
  for (std::size_t t = 0; t < fit.objective_trace.size(); ++t) {
    out.stream() << t << ',' << format_double(fit.objective_trace[t]) << ',';
    if (t > 0 && t - 1 < fit.step_trace.size()) out.stream() << format_double(fit.step_trace[t - 1]);
    out.stream() << '\n';
  }
  out.close();
  if (!save_prefix.empty()) {
    for (std::size_t k = 0; k < fit.loadings.size(); ++k)
      write_subspace(save_prefix + ".mode" + std::to_string(k) + ".mst", fit.loadings[k]);
  }
  std::cerr << "iterations=" << fit.iterations_run << " converged=" << (fit.converged ? "yes" : "no") << '\n';
  return 0;
}

int cmd_rank(const Globals& g, const std::string& input, const std::string& grid_s, std::size_t max_iter) {
  const MatrixSampleSet set = read_matrix_set(input);
  const auto lim = parse_index_list(grid_s, "--grid");
  if (lim.size() != 2) throw ConfigError("--grid takes lo,hi");
  ApOptions opts;
  opts.max_iter = max_iter;
  opts.exec = g.exec();
  opts.record_trace = false;
  const RankSelection sel = select_rank(set, rank_grid(lim[0], lim[1], lim[0], lim[1]), opts);
  Output out(g.out);
  out.stream() << "r1,r2,loss,bic,chosen\n";
  for (std::size_t k = 0; k < sel.grid.size(); ++k) {
    out.stream() << sel.grid[k].r1 << ',' << sel.grid[k].r2 << ',' << format_double(sel.losses[k]) << ','
                 << format_double(sel.bic_scores[k]) << ',' << (sel.grid[k] == sel.chosen ? 1 : 0) << '\n';
  }
  out.close();
  std::cerr << "chosen r1=" << sel.chosen.r1 << " r2=" << sel.chosen.r2 << '\n';
  return 0;
}

int cmd_denoise(const Globals& g, const std::string& input, const FitFlags& flags) {
  if (g.out.empty()) throw ConfigError("denoise needs --out");
  const MatrixSampleSet set = read_matrix_set(input);
  const auto [r1, r2] = parse_rank_pair(flags.rank);
  SubspacePair uv;
  if (flags.init == "file") {
    uv = flags.initial(set, r1, r2, g);
  } else {
    const FitResult fit = ap_fit(set, r1, r2, flags.initial(set, r1, r2, g), flags.options(g));
    uv = {fit.u_hat, fit.v_hat};
  }
  write_matrix_set(g.out, MatrixSampleSet::from_samples(denoise(set, uv.u, uv.v)));
  return 0;
}

struct BenchFlags {
  std::string study = "scale_n";
  std::string config;
  std::string summary;
  std::vector<double> sweep;
  std::optional<std::size_t> replicates, n, max_iter;
  std::optional<Index> p1, p2, r1, r2;
  std::optional<double> R;
  std::string noise, scores;
  bool no_wall = false;
};

int cmd_bench(const Globals& g, const BenchFlags& f, bool seed_given) {
  ExperimentConfig cfg =
      f.config.empty() ? ExperimentConfig::defaults(parse_study(f.study)) : load_config(f.config);
  if (!f.sweep.empty()) cfg.sweep = f.sweep;
  if (f.replicates) cfg.replicates = *f.replicates;
  if (f.n) cfg.n = *f.n;
  if (f.max_iter) cfg.solver.max_iter = *f.max_iter;
  if (f.p1) cfg.p1 = *f.p1;
  if (f.p2) cfg.p2 = *f.p2;
  if (f.r1) cfg.r1 = *f.r1;
  if (f.r2) cfg.r2 = *f.r2;
  if (f.R) cfg.noise_scale = *f.R;
  if (!f.noise.empty()) cfg.noise = parse_noise(f.noise);
  if (!f.scores.empty()) cfg.scores = parse_scores(f.scores);
  if (seed_given) cfg.base_seed = g.seed;
  cfg.exec = g.exec();
  cfg.validate();

  // Open the output before the run so an unwritable path fails fast.
  Output out(g.out);
  const auto records = run_study(cfg);
  write_csv(out.stream(), records, CsvOptions{!f.no_wall});
  out.close();
  const StudySummary s = summarize(records);
  if (!f.summary.empty()) {
    Output sum(f.summary);
    write_summary(sum.stream(), s);
    sum.close();
  } else {
    write_summary(std::cerr, s);
  }
  return 0;
}

int cmd_verify(const Globals& g, const std::string& suite, std::size_t count) {
  bool ok = true;
  Output out(g.out);
  out.stream() << "suite,cases,applicable,violations,worst,status\n";
  auto report = [&](const char* name, const SweepSummary& s, bool pass) {
    ok = ok && pass;
    out.stream() << name << ',' << s.cases << ',' << s.applicable << ',' << s.violations << ','
                 << format_double(s.worst) << ',' << (pass ? "pass" : "FAIL") << '\n';
  };
  if (suite == "bounds" || suite == "all") {
    const SweepSummary s = perturbation_sweep(count, g.seed);
    report("bounds", s, s.violations == 0);
  }
  if (suite == "prop1" || suite == "all") {
    const SweepSummary s = prop1_sweep(std::max<std::size_t>(count / 20, 1), 200, g.seed);
    report("prop1", s, s.violations == 0);
  }
  if (suite == "intersection" || suite == "all") {
    SweepSummary s;
    for (std::size_t k = 0; k < std::max<std::size_t>(count / 20, 1); ++k) {
      const Index p = k % 2 ? 20 : 8;
      const auto params = random_matrix_params(p, p, 2, 2, mix64(g.seed + k));
      const MatrixSampleSet set = sample_matrix_set(params, 5, mix64(g.seed + k + 0x51ull), g.exec());
      const SubspacePair asc = asc_init(set, 2, 2, g.exec());
      const Subspace cap = common_column_space(set);
      ++s.cases;
      if (cap.rank() != 2) {
        ++s.violations;
        continue;
      }
      ++s.applicable;
      const double d = std::max(sin_theta(cap, asc.u), sin_theta(params.u, asc.u));
      s.worst = std::max(s.worst, d);
      if (d > 1e-8) ++s.violations;
    }
    report("intersection", s, s.violations == 0);
  }
  out.close();
  return ok ? 0 : kExitVerifyFailed;
}

int cmd_compare(const Globals& g, const std::string& input, const FitFlags& flags, const std::string& truth_u,
                const std::string& truth_v) {
  const MatrixSampleSet set = read_matrix_set(input);
  const auto [r1, r2] = parse_rank_pair(flags.rank);
  const ApOptions opts = flags.options(g);
  std::optional<SubspacePair> truth;
  if (!truth_u.empty() || !truth_v.empty()) {
    if (truth_u.empty() || truth_v.empty()) throw ConfigError("--truth-u and --truth-v go together");
    truth = SubspacePair{read_subspace(truth_u), read_subspace(truth_v)};
  }
  struct Row {
    const char* method;
    Subspace u, v;
    std::size_t iterations;
  };
  const FitResult mop = mopup_fit(set, r1, r2, opts);
  const FitResult mpca = hooi_mpca_fit(set, r1, r2, opts);
  const SubspacePair hosvd = hosvd_matrix_init(set, r1, r2, g.exec());
  const Row rows[] = {{"mopup", mop.u_hat, mop.v_hat, mop.iterations_run},
                      {"mpca", mpca.u_hat, mpca.v_hat, mpca.iterations_run},
                      {"hosvd", hosvd.u, hosvd.v, 0}};
  Output out(g.out);
  out.stream() << "method,iterations,objective,err_u,err_v,err_max\n";
  for (const Row& r : rows) {
    out.stream() << r.method << ',' << r.iterations << ',' << format_double(objective(set, r.u, r.v));
    if (truth) {
      const double eu = sin_theta(truth->u, r.u), ev = sin_theta(truth->v, r.v);
      out.stream() << ',' << format_double(eu) << ',' << format_double(ev) << ',' << format_double(std::max(eu, ev));
    } else {
      out.stream() << ",,,";
    }
    out.stream() << '\n';
  }
  out.close();
  return 0;
}

int fail(int code, const std::string& msg) {
  std::cerr << "mopup: error: " << msg << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mode-wise principal subspace pursuit for matrix and tensor samples"};
  app.require_subcommand(1);
  Globals g;
  auto* seed_opt = app.add_option("--seed", g.seed, "base random seed");
  app.add_option("--threads", g.threads, "OpenMP threads (0 = runtime default, 1 = serial kernels)")
      ->check(CLI::NonNegativeNumber);
  app.add_flag("--deterministic,!--no-deterministic", g.deterministic,
               "thread-count independent reductions (default on)");
  app.add_option("--out", g.out, "output path (stdout when omitted for tables)");
  app.add_option("--format", g.format, "table format")->check(CLI::IsMember({"csv"}));
  app.fallthrough();

  std::function<int()> action;

  auto* gen = app.add_subcommand("generate", "draw a sample set from the spiked model (MST1 or TST1)");
  std::string dims = "40,30", ranks = "5,7", noise = "gaussian", scores = "uniform_pm1", truth_prefix;
  std::size_t n = 256;
  double R = 0.1;
  gen->add_option("--dims", dims, "p1,p2[,p3...]; more than two gives a tensor set");
  gen->add_option("--ranks", ranks, "r1,r2[,r3...]");
  gen->add_option("-n,--n", n, "sample count")->check(CLI::PositiveNumber);
  gen->add_option("--noise", noise, "none, uniform, gaussian, student_t3");
  gen->add_option("--R", R, "noise scale")->check(CLI::NonNegativeNumber);
  gen->add_option("--scores", scores, "uniform_pm1 or gaussian_std");
  gen->add_option("--truth-prefix", truth_prefix, "also write the true loadings to PREFIX.modeK.mst");
  gen->callback([&] { action = [&] { return cmd_generate(g, dims, ranks, n, noise, R, scores, truth_prefix); }; });

  auto* fit = app.add_subcommand("fit", "ASC/HOSVD/random/file init followed by alternating projection");
  std::string input, save_prefix;
  FitFlags fit_flags;
  fit->add_option("input", input, "MST1 sample set")->required();
  fit_flags.add_to(fit);
  fit->add_option("--save", save_prefix, "write PREFIX.u.mst and PREFIX.v.mst");
  fit->callback([&] { action = [&] { return cmd_fit(g, input, fit_flags, save_prefix); }; });

  auto* fitt = app.add_subcommand("fit-tensor", "order-d alternating projection");
  std::string tranks, tinit = "hosvd";
  std::size_t tmax_iter = 100;
  double ttol = 1e-8;
  fitt->add_option("input", input, "TST1 sample set")->required();
  fitt->add_option("--ranks,--rank", tranks, "r1,...,rd")->required();
  fitt->add_option("--init", tinit, "initializer")->check(CLI::IsMember({"hosvd", "random"}));
  fitt->add_option("--max-iter", tmax_iter, "iteration budget")->check(CLI::PositiveNumber);
  fitt->add_option("--tol", ttol, "stopping tolerance");
  fitt->add_option("--save", save_prefix, "write PREFIX.modeK.mst");
  fitt->callback([&] { action = [&] { return cmd_fit_tensor(g, input, tranks, tinit, tmax_iter, ttol, save_prefix); }; });

  auto* rank = app.add_subcommand("rank", "BIC rank selection over a square grid");
  std::string grid = "1,8";
  std::size_t rmax_iter = 10;
  rank->add_option("input", input, "MST1 sample set")->required();
  rank->add_option("--grid", grid, "lo,hi for both modes");
  rank->add_option("--max-iter", rmax_iter, "AP iterations per candidate")->check(CLI::PositiveNumber);
  rank->callback([&] { action = [&] { return cmd_rank(g, input, grid, rmax_iter); }; });

  auto* den = app.add_subcommand("denoise", "replace each sample's complement block by the mean's");
  FitFlags den_flags;
  den->add_option("input", input, "MST1 sample set")->required();
  den_flags.add_to(den);
  den->callback([&] { action = [&] { return cmd_denoise(g, input, den_flags); }; });

  auto* bench = app.add_subcommand(
      "bench",
      "Monte-Carlo study to CSV. Studies: scale_p1, scale_R, scale_n, rank_bic, compare_mpca, verify_bounds.\n"
      "Defaults: p1=40 p2=30 r=(5,7) R=0.1 gaussian noise, n=256 for scale_p1 and scale_R, 10 replicates,\n"
      "10 AP iterations; rank_bic uses p=30, r=(3,4), n=5, grid 2..9, 20 replicates.");
  BenchFlags bf;
  bench->add_option("--study", bf.study, "study name");
  bench->add_option("--config", bf.config, "JSON config; flags below override it");
  bench->add_option("--sweep", bf.sweep, "sweep values")->delimiter(',');
  bench->add_option("--replicates", bf.replicates, "replicates per sweep value");
  bench->add_option("--n", bf.n, "sample count");
  bench->add_option("--p1", bf.p1);
  bench->add_option("--p2", bf.p2);
  bench->add_option("--r1", bf.r1);
  bench->add_option("--r2", bf.r2);
  bench->add_option("--R", bf.R, "noise scale");
  bench->add_option("--noise", bf.noise, "noise family");
  bench->add_option("--scores", bf.scores, "score distribution");
  bench->add_option("--max-iter", bf.max_iter, "AP iterations");
  bench->add_option("--summary", bf.summary, "write the per-sweep summary here (stderr otherwise)");
  bench->add_flag("--no-wall-ms", bf.no_wall, "omit the timing column");
  bench->callback([&] { action = [&] { return cmd_bench(g, bf, seed_opt->count() > 0); }; });

  auto* verify = app.add_subcommand("verify", "run the oracle suites; exit 1 if any check fails");
  std::string suite = "all";
  std::size_t count = 1000;
  verify->add_option("--suite", suite, "bounds, prop1, intersection or all")
      ->check(CLI::IsMember({"bounds", "prop1", "intersection", "all"}));
  verify->add_option("--count", count, "perturbation cases (other suites use count/20)")->check(CLI::PositiveNumber);
  verify->callback([&] { action = [&] { return cmd_verify(g, suite, count); }; });

  auto* cmp = app.add_subcommand("compare", "MOP-UP against MPCA and HOSVD on one sample set");
  FitFlags cmp_flags;
  std::string truth_u, truth_v;
  cmp->add_option("input", input, "MST1 sample set")->required();
  cmp_flags.add_to(cmp);
  cmp->add_option("--truth-u", truth_u, "true U basis for error columns");
  cmp->add_option("--truth-v", truth_v, "true V basis");
  cmp->callback([&] { action = [&] { return cmd_compare(g, input, cmp_flags, truth_u, truth_v); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    if (const auto nl = msg.find('\n'); nl != std::string::npos) msg.resize(nl);
    return fail(kExitConfig, msg);
  }

  try {
    return action();
  } catch (const ParseError& e) {
    return fail(kExitParse, e.what());
  } catch (const NumericalError& e) {
    return fail(kExitNumerical, e.what());
  } catch (const IoError& e) {
    return fail(kExitIo, e.what());
  } catch (const std::invalid_argument& e) {  // ArgumentError, ConfigError
    return fail(kExitConfig, e.what());
  } catch (const std::exception& e) {
    return fail(kExitNumerical, e.what());
  }
}
