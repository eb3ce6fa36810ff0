#include "rcm/cli/cli.hpp"

#include <charconv>
#include <cstdlib>
#include <ostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "rcm/errors.hpp"

namespace rcm::cli {

namespace {

int exit_code_for(const Error& e) {
  const std::string_view category = e.category();
  if (category == "IoError") return kUsage;
  if (category == "DomainError") return kDomain;
  if (category == "NotPositiveDefinite") return kNotPositiveDefinite;
  if (category == "DimensionMismatch") return kDimensionMismatch;
  if (category == "ParseError") return kParse;
  if (category == "SchemaError") return kSchema;
  if (category == "MissingValueError") return kMissingValue;
  return kInternal;
}

std::uint64_t parse_seed(const std::string& text, const char* source) {
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw UsageError(std::string(source) + ": invalid seed '" + text + "'");
  }
  return value;
}

struct Options {
  RunConfig cfg;
  std::string seed_text;
  std::string format_text;
  SimulateOptions simulate;
  FitCommandOptions fit;
  IccOptions icc;
  double icc_nu = 0.0;
  HomogeneityOptions homogeneity;
  BenchmarkOptions benchmark;
  int bench_reps = 0;
  ClusterOptions cluster;
  int cluster_modules = 0;
};

void add_common(CLI::App* sub, Options& o, bool with_inputs) {
  auto& c = o.cfg;
  sub->add_option("--seed", o.seed_text,
                  "Random seed (default " + std::to_string(kDefaultSeed) + ", or RCM_SEED)");
  sub->add_option("--eps", c.eps, "Convergence tolerance on the log-likelihood increment")
      ->capture_default_str();
  sub->add_option("--max-iter", c.max_iter, "Outer iteration cap")->capture_default_str();
  sub->add_option("--inner", c.inner, "Psi update: pooled, em or approx-mle")
      ->capture_default_str();
  sub->add_option("--top", c.top, "Keep the TOP features with the largest pooled variance");
  sub->add_option("--threads", c.threads, "Worker threads")->capture_default_str();
  sub->add_option("--out", c.out, "Output path (standard output if omitted)");
  sub->add_option("--format", o.format_text, "Output format: json or csv");
  sub->add_flag("!--no-center", c.center, "Do not center each study before forming S_i");
  if (with_inputs) sub->add_option("inputs", c.inputs, "Study files (CSV or TSV)");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Random covariance model: estimation of a common covariance across studies"};
  app.name("rcm");
  app.require_subcommand(1);

  auto* simulate = app.add_subcommand("simulate", "Draw studies from the model");
  add_common(simulate, o, false);
  simulate->add_option("--p", o.simulate.p, "Dimension (for identity and cs: specs)");
  simulate->add_option("--nu", o.simulate.nu, "Degrees of freedom")->required();
  simulate->add_option("--psi", o.simulate.psi, "identity | cs:VAR,COV | matrix JSON file")
      ->capture_default_str();
  simulate->add_option("--sizes", o.simulate.sizes, "Per-study sample sizes, e.g. 7,7,7")
      ->delimiter(',')
      ->required();

  auto* fit = app.add_subcommand("fit", "Fit (Psi, nu) by coordinate ascent");
  add_common(fit, o, true);
  fit->add_option("--scatter", o.fit.scatter, "Precomputed scatter JSON instead of raw files");
  fit->add_option("--save-scatter", o.fit.save_scatter, "Also write the scatter JSON");

  auto* icc = app.add_subcommand("icc", "Intra-class correlation 1/(nu - p)");
  add_common(icc, o, false);
  auto* icc_nu = icc->add_option("--nu", o.icc_nu, "Degrees of freedom");
  icc->add_option("--p", o.icc.p, "Dimension");
  icc->add_option("--fit", o.icc.fit, "Take nu and p from 'rcm fit' output");
  icc->add_option("--draws", o.icc.draws, "Also estimate the ICC by simulation");
  icc->add_option("--psi", o.icc.psi, "Psi for the simulation")->capture_default_str();

  auto* homog = app.add_subcommand("test-homogeneity", "Permutation test of nu = infinity");
  add_common(homog, o, true);
  homog->add_option("--scatter", o.homogeneity.scatter, "Scatter JSON (rejected: needs raw rows)");
  homog->add_option("--permutations,-N", o.homogeneity.permutations, "Number of permutations")
      ->capture_default_str();
  homog->add_option("--null-max-iter", o.homogeneity.null_max_iter,
                    "Iteration cap for the permutation refits")
      ->capture_default_str();

  auto* bench = app.add_subcommand("benchmark", "Estimator comparison on simulated data");
  add_common(bench, o, false);
  bench->add_option("scenario", o.benchmark.scenario,
                    "scenario1, scenario2, timing or a scenario JSON file")
      ->required();
  auto* reps = bench->add_option("--reps", o.bench_reps, "Replications per n_i (default 200)");
  bench->add_option("--em-mode", o.benchmark.em_mode, "full or fixed-nu")->capture_default_str();
  bench->add_option("--grid", o.benchmark.grid, "Override the n_i grid")->delimiter(',');
  bench->add_option("--p-grid", o.benchmark.p_grid, "Dimensions for the timing scenario")
      ->delimiter(',');
  bench->add_option("--fits", o.benchmark.fits, "Fits per p for the timing scenario")
      ->capture_default_str();
  bench->add_option("--plot", o.benchmark.plot, "Write plot data JSON to this path");

  auto* cluster = app.add_subcommand("cluster", "Ward clustering of a correlation matrix");
  add_common(cluster, o, true);
  auto* modules = cluster->add_option("--modules", o.cluster_modules, "Number of modules (5)");
  cluster->add_flag("--raw", o.cluster.raw, "Inputs are study files; fit them first");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "rcm: UsageError: " << e.what() << "\n";
    return kUsage;
  }

  try {
    auto& cfg = o.cfg;
    if (!o.seed_text.empty()) {
      cfg.seed = parse_seed(o.seed_text, "--seed");
    } else if (const char* env = std::getenv("RCM_SEED"); env && *env) {
      cfg.seed = parse_seed(env, "RCM_SEED");
    } else {
      cfg.seed = kDefaultSeed;
    }
    if (cfg.threads < 1) throw UsageError("--threads must be >= 1");
    const bool csv_default = bench->parsed() || cluster->parsed();
    cfg.format = o.format_text.empty() ? (csv_default ? "csv" : "json") : o.format_text;
    if (*icc_nu) o.icc.nu = o.icc_nu;
    if (*reps) o.benchmark.reps = o.bench_reps;
    if (*modules) o.cluster.modules = o.cluster_modules;

    if (simulate->parsed()) {
      cmd_simulate(cfg, o.simulate, err);
    } else if (fit->parsed()) {
      cmd_fit(cfg, o.fit, out, err);
    } else if (icc->parsed()) {
      cmd_icc(cfg, o.icc, out);
    } else if (homog->parsed()) {
      cmd_test_homogeneity(cfg, o.homogeneity, out, err);
    } else if (bench->parsed()) {
      cmd_benchmark(cfg, o.benchmark, out, err);
    } else if (cluster->parsed()) {
      cmd_cluster(cfg, o.cluster, out, err);
    }
  } catch (const UsageError& e) {
    err << "rcm: UsageError: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "rcm: " << e.category() << ": " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "rcm: InternalError: " << e.what() << "\n";
    return kInternal;
  }
  return kOk;
}

}  // namespace rcm::cli
