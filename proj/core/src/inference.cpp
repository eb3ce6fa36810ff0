#include "rcm/inference.hpp"

#include <numeric>
#include <string>

#include "rcm/errors.hpp"
#include "rcm/parallel.hpp"

namespace rcm {

namespace {

void require_fourth_moments(double nu, Eigen::Index p, const char* what) {
  if (!(nu > static_cast<double>(p) + 3.0)) {
    throw DomainError(std::string(what) + ": nu = " + std::to_string(nu) +
                      " must exceed p + 3 = " + std::to_string(p + 3));
  }
}

// Running mean and variance (Welford).
struct Moments {
  long count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void push(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }
  double variance() const { return m2 / static_cast<double>(count - 1); }
};

std::vector<StudyData> to_studies(std::span<const Matrix> xs, bool center) {
  std::vector<StudyData> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(study_from_observations(center ? center_columns(x) : x));
  return out;
}

double fit_nu(std::span<const Matrix> xs, const PermutationConfig& config, int max_iter) {
  const auto data = to_studies(xs, config.center);
  FitOptions opts = config.fit;
  opts.max_iter = max_iter;
  return fit_rcm(data, default_init(data), opts).nu_hat;
}

}  // namespace

double icc(double nu, int p) {
  if (!(nu > p)) {
    throw DomainError("icc: nu = " + std::to_string(nu) + " must exceed p = " + std::to_string(p));
  }
  return 1.0 / (nu - p);
}

double invwishart_cov(const SpdMatrix& psi, double nu, Eigen::Index i, Eigen::Index j,
                      Eigen::Index k, Eigen::Index l) {
  const auto p = psi.dim();
  require_fourth_moments(nu, p, "invwishart_cov");
  for (auto idx : {i, j, k, l}) {
    if (idx < 0 || idx >= p) throw DomainError("invwishart_cov: index out of range");
  }
  const double a = nu - static_cast<double>(p);
  const double num = 2.0 * psi(i, j) * psi(k, l) + (a - 1.0) * (psi(i, k) * psi(j, l) +
                                                                psi(i, l) * psi(k, j));
  return num / (a * (a - 1.0) * (a - 1.0) * (a - 3.0));
}

double icc_montecarlo(const SpdMatrix& psi, double nu, int draws, Rng& rng) {
  const auto p = psi.dim();
  require_fourth_moments(nu, p, "icc_montecarlo");
  if (draws < 2) throw DomainError("icc_montecarlo: need at least two draws");

  const auto pairs = static_cast<std::size_t>(p * (p + 1) / 2);
  std::vector<Moments> between(pairs);
  std::vector<Moments> total(pairs);
  const SpdMatrix theta = spd_inverse(psi);
  for (int d = 0; d < draws; ++d) {
    const SpdMatrix sigma = spd_inverse(sample_wishart(rng, theta, nu));
    const Vector x = sample_mvn(rng, 1, sigma).row(0).transpose();
    std::size_t idx = 0;
    for (Eigen::Index i = 0; i < p; ++i) {
      for (Eigen::Index j = i; j < p; ++j, ++idx) {
        between[idx].push(sigma(i, j));
        total[idx].push(x(i) * x(j));
      }
    }
  }
  double acc = 0.0;
  for (std::size_t idx = 0; idx < pairs; ++idx) {
    acc += between[idx].variance() / total[idx].variance();
  }
  return acc / static_cast<double>(pairs);
}

double permutation_p_value(double nu_obs, std::span<const double> null_nus) {
  std::size_t below = 0;
  for (double v : null_nus) {
    if (v < nu_obs) ++below;
  }
  return static_cast<double>(1 + below) / static_cast<double>(null_nus.size() + 1);
}

HomogeneityTest permutation_test(std::span<const Matrix> raw_studies, int n_permutations,
                                 const PermutationConfig& config, const Rng& rng) {
  if (raw_studies.size() < 2) {
    throw DomainError("permutation_test: at least two studies are required");
  }
  if (n_permutations < 1) throw DomainError("permutation_test: need at least one permutation");
  const auto p = raw_studies.front().cols();
  std::vector<int> sizes;
  for (const auto& x : raw_studies) {
    if (x.cols() != p) throw DimensionMismatch("permutation_test: studies differ in dimension");
    if (x.rows() < 1) throw DomainError("permutation_test: empty study");
    sizes.push_back(static_cast<int>(x.rows()));
  }
  const int total = std::accumulate(sizes.begin(), sizes.end(), 0);
  Matrix pooled(total, p);
  {
    Eigen::Index row = 0;
    for (const auto& x : raw_studies) {
      pooled.middleRows(row, x.rows()) = x;
      row += x.rows();
    }
  }

  HomogeneityTest out;
  out.n_permutations = n_permutations;
  out.seed = rng.seed();
  out.nu_obs = fit_nu(raw_studies, config, config.fit.max_iter);
  out.null_nus.assign(static_cast<std::size_t>(n_permutations), 0.0);

  parallel_for(out.null_nus.size(), config.threads, [&](std::size_t r) {
    Rng stream = rng.substream(r);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(total));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    // Fisher-Yates
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      std::swap(order[i], order[stream.below(i + 1)]);
    }
    std::vector<Matrix> pseudo;
    pseudo.reserve(sizes.size());
    std::size_t cursor = 0;
    for (int n : sizes) {
      Matrix x(n, p);
      for (int row = 0; row < n; ++row) x.row(row) = pooled.row(order[cursor++]);
      pseudo.push_back(std::move(x));
    }
    out.null_nus[r] = fit_nu(pseudo, config, config.null_max_iter);
  });

  out.p_value = permutation_p_value(out.nu_obs, out.null_nus);
  return out;
}

}  // namespace rcm
