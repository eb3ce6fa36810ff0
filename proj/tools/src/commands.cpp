#include "commands.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "json_io.hpp"
#include "rcm/cli/cli.hpp"
#include "rcm/errors.hpp"
#include "rcm/inference.hpp"
#include "rcm/ingest.hpp"
#include "rcm/sampling.hpp"
#include "rcm/simstudy.hpp"

namespace rcm::cli {

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw IoError("failed writing '" + path.string() + "'");
}

void emit(const RunConfig& cfg, std::ostream& out, const std::string& text) {
  if (cfg.out.empty()) {
    out << text;
  } else {
    write_file(cfg.out, text);
  }
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void require_format(const RunConfig& cfg) {
  if (cfg.format != "json" && cfg.format != "csv") {
    throw UsageError("--format must be json or csv");
  }
}

Json null_or(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json config_echo(const RunConfig& cfg) {
  return Json{{"inputs", cfg.inputs}, {"eps", cfg.eps},         {"max_iter", cfg.max_iter},
              {"inner", cfg.inner},   {"top", cfg.top},         {"center", cfg.center},
              {"threads", cfg.threads}};
}

Json document(std::string_view command, const RunConfig& cfg, Json result) {
  return Json{{"format_version", kFormatVersion},
              {"command", command},
              {"seed", cfg.seed},
              {"config", config_echo(cfg)},
              {"result", std::move(result)}};
}

StudySet load_inputs(const RunConfig& cfg) {
  if (cfg.inputs.empty()) throw UsageError("no input files given");
  std::vector<fs::path> paths(cfg.inputs.begin(), cfg.inputs.end());
  StudySet set = load_studies(paths);
  if (cfg.top > 0) set = select_top_variance(set, cfg.top);
  return set;
}

std::vector<std::string> study_names(const StudySet& s) {
  std::vector<std::string> out;
  for (const auto& st : s.studies) out.push_back(st.name);
  return out;
}

struct FitRun {
  std::vector<std::string> features;
  FitResult fit;
};

FitRun run_fit(const RunConfig& cfg, const FitCommandOptions& opt, std::ostream& err) {
  std::vector<std::string> features;
  std::vector<StudyData> data;
  if (!opt.scatter.empty()) {
    if (!cfg.inputs.empty()) throw UsageError("give either raw input files or --scatter, not both");
    if (cfg.top > 0) throw UsageError("--top needs raw observations");
    auto input = scatter_from_json(read_json_file(opt.scatter));
    features = std::move(input.features);
    data = std::move(input.studies);
  } else {
    const StudySet set = load_inputs(cfg);
    features = set.features;
    data = to_study_data(set, cfg.center);
    if (!opt.save_scatter.empty()) {
      write_file(opt.save_scatter, dump(scatter_to_json(set.features, study_names(set), data)));
    }
  }
  std::vector<std::string> warnings;
  const RcmParams init = default_init(data, &warnings);
  FitResult fit = fit_rcm(data, init, fit_options(cfg));
  warnings.insert(warnings.end(), fit.warnings.begin(), fit.warnings.end());
  fit.warnings = warnings;
  for (const auto& w : warnings) err << "rcm: warning: " << w << "\n";
  if (!fit.converged) {
    err << "rcm: warning: no convergence within " << cfg.max_iter << " iterations\n";
  }
  return {std::move(features), std::move(fit)};
}

std::string matrix_csv(const std::vector<std::string>& features, const Matrix& m) {
  std::ostringstream os;
  write_table(os, features, m);
  return os.str();
}

// Reads a correlation matrix from fit JSON output or from a square CSV
// table whose header names the features.
std::pair<std::vector<std::string>, Matrix> read_correlation(const std::string& path) {
  if (fs::path(path).extension() == ".json") {
    const Json j = read_json_file(path);
    if (!j.contains("result") || !j.at("result").contains("correlation")) {
      throw SchemaError(path + ": not the output of 'rcm fit'");
    }
    const auto& res = j.at("result");
    Matrix r = matrix_from_json(res.at("correlation"), "correlation");
    auto features = res.at("features").get<std::vector<std::string>>();
    if (static_cast<Eigen::Index>(features.size()) != r.rows()) {
      throw SchemaError(path + ": feature count differs from the matrix dimension");
    }
    return {std::move(features), std::move(r)};
  }
  Table t = read_table(path);
  if (t.values.rows() != t.values.cols()) {
    throw DimensionMismatch(path + ": correlation matrix is not square");
  }
  return {std::move(t.columns), std::move(t.values)};
}

}  // namespace

FitOptions fit_options(const RunConfig& cfg) {
  FitOptions o;
  o.eps = cfg.eps;
  o.max_iter = cfg.max_iter;
  o.inner = parse_estimator(cfg.inner);
  return o;
}

void cmd_simulate(const RunConfig& cfg, const SimulateOptions& opt, std::ostream& err) {
  if (cfg.out.empty()) throw UsageError("simulate needs --out DIRECTORY");
  if (opt.sizes.empty()) throw UsageError("simulate needs --sizes");
  const SpdMatrix psi = parse_psi_spec(opt.psi, opt.p);
  const RcmParams params{psi, opt.nu};
  params.validate();
  const auto dataset = generate_rcm_dataset(Rng(cfg.seed), params, opt.sizes);

  const fs::path dir(cfg.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());

  std::vector<std::string> features;
  for (Eigen::Index i = 0; i < psi.dim(); ++i) features.push_back("x" + std::to_string(i + 1));
  Json files = Json::array();
  for (std::size_t i = 0; i < dataset.studies.size(); ++i) {
    const std::string name = "study_" + std::to_string(i + 1) + ".csv";
    std::ostringstream os;
    write_table(os, features, dataset.studies[i]);
    write_file(dir / name, os.str());
    files.push_back(name);
  }
  const Json manifest{{"format_version", kFormatVersion},
                      {"command", "simulate"},
                      {"seed", cfg.seed},
                      {"rng", {{"engine", "mt19937_64"}, {"version", Rng::kAlgorithmVersion}}},
                      {"p", psi.dim()},
                      {"nu", opt.nu},
                      {"psi_spec", opt.psi},
                      {"psi", matrix_to_json(psi.matrix())},
                      {"sizes", opt.sizes},
                      {"files", std::move(files)}};
  write_file(dir / "manifest.json", dump(manifest));
  err << "rcm: wrote " << dataset.studies.size() << " studies to " << dir.string() << "\n";
}

void cmd_fit(const RunConfig& cfg, const FitCommandOptions& opt, std::ostream& out,
             std::ostream& err) {
  require_format(cfg);
  const FitRun run = run_fit(cfg, opt, err);
  const auto& fit = run.fit;
  const auto p = fit.psi_hat.dim();
  const Matrix correlation = to_correlation(fit.psi_hat.matrix());
  if (cfg.format == "csv") {
    emit(cfg, out, matrix_csv(run.features, correlation));
    return;
  }
  std::optional<double> icc_value;
  if (fit.nu_hat > static_cast<double>(p)) icc_value = icc(fit.nu_hat, static_cast<int>(p));
  Json result{{"features", run.features},
              {"psi_hat", matrix_to_json(fit.psi_hat.matrix())},
              {"sigma_hat", fit.sigma_hat ? matrix_to_json(fit.sigma_hat->matrix()) : Json(nullptr)},
              {"correlation", matrix_to_json(correlation)},
              {"nu_hat", fit.nu_hat},
              {"nu_saturated", fit.nu_saturated},
              {"icc", null_or(icc_value)},
              {"loglik_trace", fit.loglik_trace},
              {"iterations", fit.iterations},
              {"converged", fit.converged},
              {"estimator", to_string(fit.estimator)},
              {"warnings", fit.warnings}};
  Json doc = document("fit", cfg, std::move(result));
  doc["config"]["scatter"] = opt.scatter;
  doc["metadata"] = {{"wall_time", fit.wall_time}};
  emit(cfg, out, dump(doc));
}

void cmd_icc(const RunConfig& cfg, const IccOptions& opt, std::ostream& out) {
  require_format(cfg);
  double nu = 0.0;
  int p = opt.p;
  if (!opt.fit.empty()) {
    const Json j = read_json_file(opt.fit);
    if (!j.contains("result") || !j.at("result").contains("nu_hat")) {
      throw SchemaError(opt.fit + ": not the output of 'rcm fit'");
    }
    nu = j.at("result").at("nu_hat").get<double>();
    p = static_cast<int>(matrix_from_json(j.at("result").at("psi_hat"), "psi_hat").rows());
  } else {
    if (!opt.nu) throw UsageError("icc needs --nu and --p, or --fit");
    nu = *opt.nu;
  }
  if (p < 1) throw UsageError("icc needs --p");
  const double value = icc(nu, p);

  std::optional<double> mc;
  if (opt.draws > 0) {
    Rng rng(cfg.seed);
    mc = icc_montecarlo(parse_psi_spec(opt.psi, p), nu, opt.draws, rng);
  }
  if (cfg.format == "csv") {
    std::ostringstream os;
    os << "nu,p,icc" << (mc ? ",icc_montecarlo" : "") << "\n";
    os << Json(nu).dump() << ',' << p << ',' << Json(value).dump();
    if (mc) os << ',' << Json(*mc).dump();
    os << "\n";
    emit(cfg, out, os.str());
    return;
  }
  Json result{{"nu", nu}, {"p", p}, {"icc", value}};
  if (mc) {
    result["icc_montecarlo"] = *mc;
    result["draws"] = opt.draws;
    result["psi_spec"] = opt.psi;
  }
  emit(cfg, out, dump(document("icc", cfg, std::move(result))));
}

void cmd_test_homogeneity(const RunConfig& cfg, const HomogeneityOptions& opt, std::ostream& out,
                          std::ostream& err) {
  require_format(cfg);
  if (!opt.scatter.empty()) {
    throw DomainError(
        "the permutation test reassigns observation rows between studies; scatter matrices "
        "alone do not allow this, so raw study files are required");
  }
  const StudySet set = load_inputs(cfg);
  std::vector<Matrix> raw;
  for (const auto& s : set.studies) raw.push_back(s.x);

  PermutationConfig pc;
  pc.fit = fit_options(cfg);
  pc.null_max_iter = opt.null_max_iter;
  pc.center = cfg.center;
  pc.threads = cfg.threads;
  const auto test = permutation_test(raw, opt.permutations, pc, Rng(cfg.seed));
  err << "rcm: permutation p-value " << test.p_value << " from " << test.n_permutations
      << " permutations\n";

  if (cfg.format == "csv") {
    std::ostringstream os;
    os << "replicate,nu\n";
    for (std::size_t r = 0; r < test.null_nus.size(); ++r) {
      os << r + 1 << ',' << Json(test.null_nus[r]).dump() << "\n";
    }
    emit(cfg, out, os.str());
    return;
  }
  Json result{{"features", set.features},
              {"nu_obs", test.nu_obs},
              {"null_nus", test.null_nus},
              {"p_value", test.p_value},
              {"n_permutations", test.n_permutations},
              {"seed", test.seed}};
  Json doc = document("test-homogeneity", cfg, std::move(result));
  doc["config"]["null_max_iter"] = opt.null_max_iter;
  emit(cfg, out, dump(doc));
}

namespace {

Scenario scenario_from_file(const std::string& path, const RunConfig& cfg) {
  const Json j = read_json_file(path);
  if (!j.is_object()) throw SchemaError(path + ": scenario must be a JSON object");
  Scenario sc;
  try {
    sc.name = j.value("name", fs::path(path).stem().string());
    sc.p = j.at("p").get<int>();
    sc.k = j.value("k", 3);
    sc.n_grid = j.at("n_grid").get<std::vector<int>>();
    sc.nu_true = j.at("nu").get<double>();
    const Json& psi = j.at("psi");
    sc.psi_true = psi.is_string() ? parse_psi_spec(psi.get<std::string>(), sc.p)
                                  : SpdMatrix(matrix_from_json(psi, path + " psi"));
    sc.replications = j.value("replications", sc.replications);
    if (j.contains("estimators")) {
      sc.estimators.clear();
      for (const auto& e : j.at("estimators")) sc.estimators.push_back(parse_estimator(e.get<std::string>()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
  sc.seed = cfg.seed;
  return sc;
}

void run_timing(const RunConfig& cfg, const BenchmarkOptions& opt, std::ostream& out) {
  TimingOptions to;
  to.seed = cfg.seed;
  to.fit = fit_options(cfg);
  const auto rows = timing_scenario(opt.p_grid, opt.fits, to);
  if (cfg.format == "json") {
    Json table = Json::array();
    for (const auto& r : rows) {
      table.push_back({{"p", r.p}, {"estimator", to_string(r.estimator)}, {"fits", r.fits}});
    }
    Json doc = document("benchmark", cfg, {{"scenario", "timing"}, {"rows", std::move(table)}});
    Json seconds = Json::array();
    for (const auto& r : rows) seconds.push_back(r.mean_seconds);
    doc["metadata"] = {{"mean_seconds", std::move(seconds)}};
    emit(cfg, out, dump(doc));
    return;
  }
  std::ostringstream os;
  os << "p,estimator,mean_seconds,fits\n";
  for (const auto& r : rows) {
    os << r.p << ',' << to_string(r.estimator) << ',' << Json(r.mean_seconds).dump() << ','
       << r.fits << "\n";
  }
  emit(cfg, out, os.str());
}

}  // namespace

void cmd_benchmark(const RunConfig& cfg, const BenchmarkOptions& opt, std::ostream& out,
                   std::ostream& err) {
  require_format(cfg);
  const bool csv = cfg.format == "csv";
  if (opt.scenario == "timing") {
    run_timing(cfg, opt, out);
    return;
  }
  Scenario sc;
  if (opt.scenario == "scenario1") {
    sc = scenario1(cfg.seed);
  } else if (opt.scenario == "scenario2") {
    sc = scenario2(cfg.seed);
  } else if (fs::is_regular_file(opt.scenario)) {
    sc = scenario_from_file(opt.scenario, cfg);
  } else {
    throw UsageError("unknown scenario '" + opt.scenario +
                     "' (expected scenario1, scenario2, timing or a scenario file)");
  }
  if (opt.reps) sc.replications = *opt.reps;
  if (!opt.grid.empty()) sc.n_grid = opt.grid;
  if (opt.em_mode == "full") {
    sc.em_mode = EmMode::full;
  } else if (opt.em_mode == "fixed-nu") {
    sc.em_mode = EmMode::fixed_nu;
  } else {
    throw UsageError("--em-mode must be full or fixed-nu");
  }
  sc.fit = fit_options(cfg);
  sc.threads = cfg.threads;

  const BenchResult res = run_scenario(sc);
  for (const auto& c : res.cells) {
    if (c.failed > 0) {
      err << "rcm: warning: " << c.failed << " failed replication(s) for " << to_string(c.estimator)
          << " at n_i = " << c.n << "\n";
    }
  }

  if (csv) {
    std::ostringstream os;
    os << "estimator,n_i,mean_sse,ci99,mean_seconds\n";
    for (const auto& c : res.cells) {
      os << to_string(c.estimator) << ',' << c.n << ',' << Json(c.mean_sse()).dump() << ','
         << Json(c.ci99()).dump() << ',' << Json(c.mean_seconds()).dump() << "\n";
    }
    emit(cfg, out, os.str());
  } else {
    Json cells = Json::array();
    Json seconds = Json::array();
    for (const auto& c : res.cells) {
      cells.push_back({{"estimator", to_string(c.estimator)},
                       {"n_i", c.n},
                       {"mean_sse", c.mean_sse()},
                       {"ci99", c.ci99()},
                       {"replications", c.sse.size()},
                       {"failed", c.failed}});
      seconds.push_back(c.mean_seconds());
    }
    Json doc = document("benchmark", cfg, {{"scenario", res.scenario}, {"cells", std::move(cells)}});
    doc["metadata"] = {{"mean_seconds", std::move(seconds)}};
    emit(cfg, out, dump(doc));
  }

  if (!opt.plot.empty()) {
    Json series = Json::array();
    for (Estimator e : sc.estimators) {
      Json n = Json::array(), mean = Json::array(), ci = Json::array();
      for (const auto& c : res.cells) {
        if (c.estimator != e) continue;
        n.push_back(c.n);
        mean.push_back(c.mean_sse());
        ci.push_back(c.ci99());
      }
      series.push_back({{"estimator", to_string(e)}, {"n_i", n}, {"mean_sse", mean}, {"ci99", ci}});
    }
    const Json plot{{"format_version", kFormatVersion},
                    {"scenario", res.scenario},
                    {"replications", res.replications},
                    {"x", "n_i"},
                    {"y", "mean_sse"},
                    {"series", std::move(series)}};
    write_file(opt.plot, dump(plot));
  }
}

void cmd_cluster(const RunConfig& cfg, const ClusterOptions& opt, std::ostream& out,
                 std::ostream& err) {
  require_format(cfg);
  std::vector<std::string> features;
  Matrix r;
  if (opt.raw) {
    const FitRun run = run_fit(cfg, {}, err);
    features = run.features;
    r = to_correlation(run.fit.psi_hat.matrix());
  } else {
    if (cfg.inputs.size() != 1) throw UsageError("cluster takes one correlation file (or --raw)");
    std::tie(features, r) = read_correlation(cfg.inputs.front());
  }
  const int p = static_cast<int>(r.rows());
  const int modules = opt.modules.value_or(std::min(5, p));
  const ModuleAssignment assignment = cluster_modules(r, modules);

  if (cfg.format == "csv") {
    std::ostringstream os;
    write_modules_csv(os, features, assignment);
    emit(cfg, out, os.str());
    return;
  }
  Json merges = Json::array();
  for (const auto& m : assignment.merges) {
    merges.push_back({{"left", m.left}, {"right", m.right}, {"height", m.height}, {"size", m.size}});
  }
  Json result{{"features", features},
              {"n_modules", modules},
              {"labels", assignment.labels},
              {"connectivity", assignment.connectivity},
              {"merges", std::move(merges)}};
  emit(cfg, out, dump(document("cluster", cfg, std::move(result))));
}

}  // namespace rcm::cli
