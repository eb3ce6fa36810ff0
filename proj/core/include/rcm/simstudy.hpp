#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rcm/estimators.hpp"
#include "rcm/matrixcore.hpp"

namespace rcm {

// How the EM estimator is run inside a scenario.
enum class EmMode {
  full,      // coordinate ascent over (Psi, nu)
  fixed_nu,  // EM in Psi at the true nu
};

struct Scenario {
  std::string name;
  int p = 20;
  int k = 3;
  std::vector<int> n_grid;  // per-study sample sizes; all k studies share n
  double nu_true = 30.0;
  SpdMatrix psi_true = SpdMatrix::identity(1);
  int replications = 200;
  std::vector<Estimator> estimators{Estimator::pooled, Estimator::em, Estimator::approx_mle};
  std::uint64_t seed = 0;
  EmMode em_mode = EmMode::full;
  FitOptions fit;
  int threads = 1;

  // Throws DomainError for an unusable configuration.
  void validate() const;
};

// `count` evenly spaced integers covering [lo, hi] (rounded to nearest).
std::vector<int> even_grid(int lo, int hi, int count);

// p = 20, k = 3, n in [7, 40], nu = 30, Psi = compound symmetry (1, 0.5).
Scenario scenario1(std::uint64_t seed, int replications = 200);
// p = 100, k = 3, n in [35, 105], Psi = compound symmetry (1, 0.5). nu is 110
// rather than 30: the inverse Wishart needs nu > p - 1, and nu - p = 10 keeps
// the ICC of scenario 1.
Scenario scenario2(std::uint64_t seed, int replications = 200);

// sum_{i<=j} (sigma_hat_ij - sigma_ij)^2 / (n (sigma_ij^2 + sigma_ii sigma_jj))
double sse(const SpdMatrix& sigma_hat, const SpdMatrix& sigma_true, int n);

struct BenchCell {
  Estimator estimator = Estimator::em;
  int n = 0;
  std::vector<double> sse;      // successful replications, in replication order
  std::vector<double> seconds;  // wall time of each successful fit
  int failed = 0;

  double mean_sse() const;
  // 2.576 * sd / sqrt(reps); zero with fewer than two values.
  double ci99() const;
  double mean_seconds() const;
};

struct BenchResult {
  std::string scenario;
  int replications = 0;
  std::vector<BenchCell> cells;  // grid-major, estimator order as in the scenario

  const BenchCell& cell(Estimator e, int n) const;
};

// For every grid size and replication: draw a dataset from the model, fit
// each estimator and score its Sigma estimate against psi / (nu - p - 1).
// pooled and approx_mle are given the true nu.
BenchResult run_scenario(const Scenario& sc);

// Sigma estimate of one estimator as run inside a scenario. Returns false
// when the estimator yields no covariance (nu_hat <= p + 1).
bool scenario_fit(const Scenario& sc, Estimator e, StudySpan data, SpdMatrix& sigma_out);

struct TimingRow {
  int p = 0;
  Estimator estimator = Estimator::em;
  double mean_seconds = 0.0;
  int fits = 0;
};

struct TimingOptions {
  int k = 3;
  int n_per_study = 0;  // 0 means n = p
  double nu_offset = 10.0;  // nu_true = p + nu_offset
  std::vector<Estimator> estimators{Estimator::pooled, Estimator::approx_mle, Estimator::em};
  FitOptions fit;
  std::uint64_t seed = 0;
};

// Mean wall time of full coordinate-ascent fits (Psi-update chosen by the
// estimator) for each p, on data drawn with Psi = compound symmetry (1, 0.5).
std::vector<TimingRow> timing_scenario(const std::vector<int>& p_grid, int fits_per_p,
                                       const TimingOptions& opts = {});

}  // namespace rcm
