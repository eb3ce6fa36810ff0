#include "rcm/simstudy.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "rcm/errors.hpp"
#include "rcm/parallel.hpp"
#include "rcm/sampling.hpp"

namespace rcm {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kZ99 = 2.576;

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

Scenario compound_scenario(std::string name, int p, double nu, std::vector<int> grid,
                           std::uint64_t seed, int replications) {
  Scenario sc;
  sc.name = std::move(name);
  sc.p = p;
  sc.k = 3;
  sc.n_grid = std::move(grid);
  sc.nu_true = nu;
  sc.psi_true = compound_symmetry(p, 1.0, 0.5);
  sc.replications = replications;
  sc.seed = seed;
  return sc;
}

}  // namespace

void Scenario::validate() const {
  if (p < 1 || k < 1) throw DomainError("scenario: p and k must be positive");
  if (n_grid.empty()) throw DomainError("scenario: empty sample-size grid");
  for (int n : n_grid) {
    if (n < 1) throw DomainError("scenario: sample sizes must be >= 1");
  }
  if (replications < 1) throw DomainError("scenario: replications must be >= 1");
  if (estimators.empty()) throw DomainError("scenario: no estimators selected");
  if (psi_true.dim() != p) throw DimensionMismatch("scenario: psi_true has wrong dimension");
  if (!(nu_true > p + 1.0)) {
    throw DomainError("scenario: nu_true must exceed p + 1 for the expected covariance to exist");
  }
}

std::vector<int> even_grid(int lo, int hi, int count) {
  if (count < 1 || hi < lo) throw DomainError("even_grid: invalid range");
  if (count == 1) return {lo};
  std::vector<int> out;
  for (int i = 0; i < count; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / (count - 1);
    out.push_back(static_cast<int>(std::lround(x)));
  }
  return out;
}

Scenario scenario1(std::uint64_t seed, int replications) {
  return compound_scenario("scenario1", 20, 30.0, even_grid(7, 40, 8), seed, replications);
}

Scenario scenario2(std::uint64_t seed, int replications) {
  return compound_scenario("scenario2", 100, 110.0, even_grid(35, 105, 8), seed, replications);
}

double sse(const SpdMatrix& sigma_hat, const SpdMatrix& sigma_true, int n) {
  if (sigma_hat.dim() != sigma_true.dim()) throw DimensionMismatch("sse: dimensions differ");
  if (n < 1) throw DomainError("sse: n must be >= 1");
  const auto p = sigma_true.dim();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = i; j < p; ++j) {
      const double err = sigma_hat(i, j) - sigma_true(i, j);
      const double w = n * (sigma_true(i, j) * sigma_true(i, j) + sigma_true(i, i) * sigma_true(j, j));
      acc += err * err / w;
    }
  }
  return acc;
}

double BenchCell::mean_sse() const { return mean_of(sse); }

double BenchCell::ci99() const {
  if (sse.size() < 2) return 0.0;
  const double m = mean_sse();
  double ss = 0.0;
  for (double v : sse) ss += (v - m) * (v - m);
  const double sd = std::sqrt(ss / static_cast<double>(sse.size() - 1));
  return kZ99 * sd / std::sqrt(static_cast<double>(sse.size()));
}

double BenchCell::mean_seconds() const { return mean_of(seconds); }

const BenchCell& BenchResult::cell(Estimator e, int n) const {
  for (const auto& c : cells) {
    if (c.estimator == e && c.n == n) return c;
  }
  throw DomainError("BenchResult: no cell for estimator " + std::string(to_string(e)) +
                    " at n = " + std::to_string(n));
}

bool scenario_fit(const Scenario& sc, Estimator e, StudySpan data, SpdMatrix& sigma_out) {
  std::optional<SpdMatrix> sigma;
  switch (e) {
    case Estimator::pooled:
      sigma = estimate_pooled(data, sc.nu_true).sigma;
      break;
    case Estimator::approx_mle:
      sigma = estimate_approx_mle(data, sc.nu_true).sigma;
      break;
    case Estimator::em:
      if (sc.em_mode == EmMode::full) {
        FitOptions opts = sc.fit;
        opts.inner = Estimator::em;
        sigma = fit_rcm(data, default_init(data), opts).sigma_hat;
      } else {
        const SpdMatrix theta0 = spd_inverse(estimate_pooled(data, sc.nu_true).psi);
        sigma = estimate_em(data, sc.nu_true, theta0, sc.fit.inner_eps, sc.fit.inner_max_iter)
                    .sigma_hat;
      }
      break;
  }
  if (!sigma) return false;
  sigma_out = *sigma;
  return true;
}

BenchResult run_scenario(const Scenario& sc) {
  sc.validate();
  const SpdMatrix sigma_true = RcmParams{sc.psi_true, sc.nu_true}.expected_covariance();
  const RcmParams truth{sc.psi_true, sc.nu_true};
  const Rng root(sc.seed);

  const std::size_t n_est = sc.estimators.size();
  const auto reps = static_cast<std::size_t>(sc.replications);
  const std::size_t tasks = sc.n_grid.size() * reps;

  // Per task and estimator: sse (NaN on failure) and seconds.
  std::vector<double> sse_slot(tasks * n_est, std::nan(""));
  std::vector<double> time_slot(tasks * n_est, 0.0);

  parallel_for(tasks, sc.threads, [&](std::size_t task) {
    const std::size_t g = task / reps;
    const int n = sc.n_grid[g];
    const std::vector<int> sizes(static_cast<std::size_t>(sc.k), n);
    const auto dataset = generate_rcm_dataset(root.substream(task), truth, sizes);
    const auto data = studies_from_observations(dataset.studies);
    for (std::size_t e = 0; e < n_est; ++e) {
      const auto start = Clock::now();
      try {
        SpdMatrix sigma_hat = sigma_true;
        if (scenario_fit(sc, sc.estimators[e], data, sigma_hat)) {
          time_slot[task * n_est + e] = std::chrono::duration<double>(Clock::now() - start).count();
          sse_slot[task * n_est + e] = sse(sigma_hat, sigma_true, n);
        }
      } catch (const Error&) {
        // counted as a failed replication below
      }
    }
  });

  BenchResult out;
  out.scenario = sc.name;
  out.replications = sc.replications;
  for (std::size_t g = 0; g < sc.n_grid.size(); ++g) {
    for (std::size_t e = 0; e < n_est; ++e) {
      BenchCell cell;
      cell.estimator = sc.estimators[e];
      cell.n = sc.n_grid[g];
      for (std::size_t r = 0; r < reps; ++r) {
        const std::size_t slot = (g * reps + r) * n_est + e;
        if (std::isnan(sse_slot[slot])) {
          ++cell.failed;
        } else {
          cell.sse.push_back(sse_slot[slot]);
          cell.seconds.push_back(time_slot[slot]);
        }
      }
      out.cells.push_back(std::move(cell));
    }
  }
  return out;
}

std::vector<TimingRow> timing_scenario(const std::vector<int>& p_grid, int fits_per_p,
                                       const TimingOptions& opts) {
  if (fits_per_p < 1) throw DomainError("timing_scenario: fits_per_p must be >= 1");
  std::vector<TimingRow> rows;
  const Rng root(opts.seed);
  std::uint64_t stream = 0;
  for (int p : p_grid) {
    if (p < 2) throw DomainError("timing_scenario: p must be >= 2");
    const RcmParams truth{compound_symmetry(p, 1.0, 0.5), p + opts.nu_offset};
    const int n = opts.n_per_study > 0 ? opts.n_per_study : p;
    const std::vector<int> sizes(static_cast<std::size_t>(opts.k), n);

    std::vector<std::vector<StudyData>> datasets;
    for (int f = 0; f < fits_per_p; ++f) {
      const auto ds = generate_rcm_dataset(root.substream(stream++), truth, sizes);
      datasets.push_back(studies_from_observations(ds.studies));
    }
    for (Estimator e : opts.estimators) {
      FitOptions fit = opts.fit;
      fit.inner = e;
      double total = 0.0;
      for (const auto& data : datasets) {
        const auto start = Clock::now();
        RcmParams init = default_init(data);
        fit_rcm(data, init, fit);
        total += std::chrono::duration<double>(Clock::now() - start).count();
      }
      rows.push_back({p, e, total / fits_per_p, fits_per_p});
    }
  }
  return rows;
}

}  // namespace rcm
