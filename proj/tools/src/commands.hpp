#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rcm/estimators.hpp"

namespace rcm::cli {

// Bad command-line usage (exit code 2).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::vector<std::string> inputs;
  std::uint64_t seed = 0;
  double eps = 1e-6;
  int max_iter = 1000;
  std::string inner = "em";
  int top = 0;  // 0 keeps every feature
  int threads = 1;
  std::string out;  // empty writes to standard output
  std::string format = "json";  // cluster and benchmark default to csv
  bool center = true;
};

struct SimulateOptions {
  int p = 0;
  double nu = 0.0;
  std::string psi = "identity";
  std::vector<int> sizes;
};

struct FitCommandOptions {
  std::string scatter;       // precomputed scatter JSON instead of raw inputs
  std::string save_scatter;  // also write the scatter JSON of the raw inputs
};

struct IccOptions {
  std::optional<double> nu;
  int p = 0;
  std::string fit;  // fit JSON to take nu_hat and p from
  int draws = 0;
  std::string psi = "identity";
};

struct HomogeneityOptions {
  std::string scatter;
  int permutations = 500;
  int null_max_iter = 200;
};

struct BenchmarkOptions {
  std::string scenario;
  std::optional<int> reps;  // scenario default (200) when unset
  std::string em_mode = "full";
  std::vector<int> grid;
  std::vector<int> p_grid{2, 5, 10, 20, 50, 100};
  int fits = 10;
  std::string plot;
};

struct ClusterOptions {
  std::optional<int> modules;
  bool raw = false;  // inputs are study CSVs to fit first
};

FitOptions fit_options(const RunConfig& cfg);

void cmd_simulate(const RunConfig& cfg, const SimulateOptions& opt, std::ostream& err);
void cmd_fit(const RunConfig& cfg, const FitCommandOptions& opt, std::ostream& out,
             std::ostream& err);
void cmd_icc(const RunConfig& cfg, const IccOptions& opt, std::ostream& out);
void cmd_test_homogeneity(const RunConfig& cfg, const HomogeneityOptions& opt, std::ostream& out,
                          std::ostream& err);
void cmd_benchmark(const RunConfig& cfg, const BenchmarkOptions& opt, std::ostream& out,
                   std::ostream& err);
void cmd_cluster(const RunConfig& cfg, const ClusterOptions& opt, std::ostream& out,
                 std::ostream& err);

}  // namespace rcm::cli
