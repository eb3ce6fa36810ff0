#include "rcm/sampling.hpp"

#include <string>

#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include "rcm/errors.hpp"

namespace rcm {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return seed ^ (0x9E3779B97F4A7C15ULL * (index + 1));
}

Rng Rng::substream(std::uint64_t index) const { return Rng(derive_seed(seed_, index)); }

double Rng::normal() { return boost::random::normal_distribution<double>(0.0, 1.0)(engine_); }

double Rng::uniform() { return boost::random::uniform_01<double>()(engine_); }

double Rng::chi_squared(double dof) {
  if (!(dof > 0.0)) throw DomainError("chi_squared: degrees of freedom must be positive");
  return boost::random::gamma_distribution<double>(0.5 * dof, 2.0)(engine_);
}

std::uint64_t Rng::below(std::uint64_t n) {
  return boost::random::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
}

Matrix sample_mvn(Rng& rng, int n, const SpdMatrix& sigma) {
  if (n < 0) throw DomainError("sample_mvn: negative sample count");
  const auto p = sigma.dim();
  Matrix z(n, p);
  // Fill row by row so that the draw order is the natural observation order.
  for (int r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < p; ++c) z(r, c) = rng.normal();
  }
  return z * sigma.chol().transpose();
}

SpdMatrix sample_wishart(Rng& rng, const SpdMatrix& theta, double nu) {
  const auto p = theta.dim();
  if (!(nu > static_cast<double>(p) - 1.0)) {
    throw DomainError("sample_wishart: nu = " + std::to_string(nu) + " must exceed p - 1");
  }
  Matrix a = Matrix::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    a(j, j) = std::sqrt(rng.chi_squared(nu - static_cast<double>(j)));
    for (Eigen::Index i = j + 1; i < p; ++i) a(i, j) = rng.normal();
  }
  const Matrix la = theta.chol() * a.triangularView<Eigen::Lower>();
  return SpdMatrix(la * la.transpose());
}

SpdMatrix sample_inv_wishart(Rng& rng, const SpdMatrix& psi, double nu) {
  return spd_inverse(sample_wishart(rng, spd_inverse(psi), nu));
}

SyntheticDataset generate_rcm_dataset(const Rng& rng, const RcmParams& params,
                                      std::span<const int> sizes) {
  params.validate();
  if (sizes.empty()) throw DomainError("generate_rcm_dataset: no study sizes given");
  for (int n : sizes) {
    if (n < 1) throw DomainError("generate_rcm_dataset: study sizes must be >= 1");
  }

  SyntheticDataset out;
  out.seed = rng.seed();
  out.studies.reserve(sizes.size());
  out.realized_sigmas.reserve(sizes.size());
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    Rng stream = rng.substream(i);
    SpdMatrix sigma = sample_inv_wishart(stream, params.psi, params.nu);
    out.studies.push_back(sample_mvn(stream, sizes[i], sigma));
    out.realized_sigmas.push_back(std::move(sigma));
  }
  return out;
}

SpdMatrix compound_symmetry(Eigen::Index p, double variance, double covariance) {
  if (p < 1) throw DomainError("compound_symmetry: p must be positive");
  // Eigenvalues are var - cov (multiplicity p-1) and var + (p-1) cov.
  const bool pd = variance + static_cast<double>(p - 1) * covariance > 0.0 &&
                  (p == 1 || variance > covariance);
  if (!pd) {
    throw DomainError("compound_symmetry(" + std::to_string(variance) + ", " +
                      std::to_string(covariance) + ") is not positive definite for p = " +
                      std::to_string(p));
  }
  Matrix m = Matrix::Constant(p, p, covariance);
  m.diagonal().setConstant(variance);
  return SpdMatrix(m);
}

}  // namespace rcm
