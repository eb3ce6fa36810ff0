#include "rcm/likelihood.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>

#include <boost/math/tools/roots.hpp>
#include <Eigen/Eigenvalues>

#include "rcm/errors.hpp"

namespace rcm {

namespace {

const double kLogPi = std::log(std::numbers::pi);

// log Gamma_p((nu+n)/2) - log Gamma_p(nu/2) - n p/2 log(pi)
double gamma_terms(Eigen::Index p, double nu, int n) {
  return log_multigamma_increment(static_cast<int>(p), 0.5 * nu, 0.5 * n) -
         0.5 * n * static_cast<double>(p) * kLogPi;
}

void check_dims(const RcmParams& params, Eigen::Index p) {
  if (params.dim() != p) {
    throw DimensionMismatch("psi is " + std::to_string(params.dim()) + "-dimensional, data " +
                            std::to_string(p) + "-dimensional");
  }
}

Matrix whiten(const SpdMatrix& psi, const Matrix& scatter) {
  const auto L = psi.chol().triangularView<Eigen::Lower>();
  Matrix w = scatter;
  L.solveInPlace(w);
  Matrix whitened = w.transpose();
  L.solveInPlace(whitened);
  return symmetrize(whitened);
}

// log|Psi + S| - log|Psi| = log|I + L^{-1} S L^{-T}|
double log_det_ratio(const SpdMatrix& psi, const Matrix& scatter) {
  return log_det_identity_plus(whiten(psi, scatter));
}

// One study's contribution, written as
//   -(nu+n)/2 log|I + Psi^{-1} S| - n/2 log|Psi| + gamma terms,
// which equals nu/2 log|Psi| - (nu+n)/2 log|Psi+S| + gamma terms without
// cancelling two large log-determinants when nu is large.
double study_term(Eigen::Index p, double nu, int n, double log_det_psi, double ratio) {
  return -0.5 * (nu + n) * ratio - 0.5 * n * log_det_psi + gamma_terms(p, nu, n);
}

// (2 M - M o I)
Matrix symmetric_derivative(const Matrix& m) {
  Matrix out = 2.0 * m;
  out.diagonal() = m.diagonal();
  return out;
}

}  // namespace

double log_likelihood(const RcmParams& params, StudySpan data) {
  const auto p = common_dim(data);
  check_dims(params, p);
  return NuProfile(params.psi, data)(params.nu);
}

double log_likelihood_fast(const RcmParams& params, std::span<const Matrix> raw) {
  params.validate();
  if (raw.empty()) throw DomainError("no studies supplied");
  const auto p = params.dim();
  const double nu = params.nu;
  const double ld_psi = log_det(params.psi);
  const auto L = params.psi.chol().triangularView<Eigen::Lower>();

  double total = 0.0;
  for (const auto& x : raw) {
    if (x.cols() != p) throw DimensionMismatch("observation matrix has wrong column count");
    const auto n = static_cast<int>(x.rows());
    if (n < 1) throw DomainError("study has no observations");
    // W = L^{-1} X^T, so X Psi^{-1} X^T = W^T W (n x n).
    Matrix w = x.transpose();
    L.solveInPlace(w);
    const double ratio = log_det_identity_plus(w.transpose() * w);
    total += study_term(p, nu, n, ld_psi, ratio);
  }
  return total;
}

Matrix grad_psi(const RcmParams& params, StudySpan data) {
  params.validate();
  const auto p = common_dim(data);
  check_dims(params, p);
  const double nu = params.nu;
  const auto k = static_cast<double>(data.size());

  Matrix g = k * nu * spd_inverse(params.psi).matrix();
  for (const auto& s : data) {
    g -= (nu + s.n) * spd_inverse(SpdMatrix(params.psi.matrix() + s.scatter)).matrix();
  }
  return symmetric_derivative(g);
}

NuProfile::NuProfile(const SpdMatrix& psi, StudySpan data)
    : p_(common_dim(data)), log_det_psi_(log_det(psi)) {
  if (psi.dim() != p_) throw DimensionMismatch("psi and data dimensions differ");
  log_det_ratio_.reserve(data.size());
  n_.reserve(data.size());
  for (const auto& s : data) {
    log_det_ratio_.push_back(log_det_ratio(psi, s.scatter));
    n_.push_back(s.n);
  }
}

double NuProfile::lower_bound() const { return static_cast<double>(p_) - 1.0 + kNuDomainOffset; }

double NuProfile::operator()(double nu) const {
  if (!(nu > static_cast<double>(p_) - 1.0)) {
    throw DomainError("nu = " + std::to_string(nu) + " must exceed p - 1 = " +
                      std::to_string(p_ - 1));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n_.size(); ++i) {
    total += study_term(p_, nu, n_[i], log_det_psi_, log_det_ratio_[i]);
  }
  return total;
}

ScaledNuProfile::ScaledNuProfile(const SpdMatrix& psi, StudySpan data)
    : p_(common_dim(data)), log_det_psi_(log_det(psi)) {
  if (psi.dim() != p_) throw DimensionMismatch("psi and data dimensions differ");
  eigenvalues_.reserve(data.size());
  n_.reserve(data.size());
  for (const auto& s : data) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(whiten(psi, s.scatter), Eigen::EigenvaluesOnly);
    eigenvalues_.push_back(eig.eigenvalues().cwiseMax(0.0));
    n_.push_back(s.n);
  }
}

double ScaledNuProfile::lower_bound() const {
  return static_cast<double>(p_) - 1.0 + kNuDomainOffset;
}

double ScaledNuProfile::operator()(double nu, double log_scale) const {
  if (!(nu > static_cast<double>(p_) - 1.0)) {
    throw DomainError("nu = " + std::to_string(nu) + " must exceed p - 1 = " +
                      std::to_string(p_ - 1));
  }
  const double inv_c = std::exp(-log_scale);
  const double ld_psi = log_det_psi_ + static_cast<double>(p_) * log_scale;
  double total = 0.0;
  for (std::size_t i = 0; i < n_.size(); ++i) {
    const double ratio = (eigenvalues_[i].array() * inv_c).log1p().sum();
    total += study_term(p_, nu, n_[i], ld_psi, ratio);
  }
  return total;
}

double ScaledNuProfile::best_log_scale(double nu) const {
  // d/d(log c) = [sum_i (nu + n_i) sum_j lambda_ij / (c + lambda_ij) - n p] / 2,
  // decreasing in c.
  double np = 0.0;
  for (int n : n_) np += static_cast<double>(n) * static_cast<double>(p_);
  auto slope = [&](double s) {
    const double c = std::exp(s);
    double acc = 0.0;
    for (std::size_t i = 0; i < n_.size(); ++i) {
      acc += (nu + n_[i]) * (eigenvalues_[i].array() / (c + eigenvalues_[i].array())).sum();
    }
    return acc - np;
  };
  if (slope(-kMaxLogScale) <= 0.0) return -kMaxLogScale;
  if (slope(kMaxLogScale) >= 0.0) return kMaxLogScale;
  std::uintmax_t max_iter = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(
      slope, -kMaxLogScale, kMaxLogScale, boost::math::tools::eps_tolerance<double>(50), max_iter);
  return 0.5 * (a + b);
}

double profile_nu(const SpdMatrix& psi, StudySpan data, double nu) {
  const NuProfile profile(psi, data);
  if (!(nu >= profile.lower_bound())) {
    throw DomainError("profile_nu: nu = " + std::to_string(nu) + " must be at least p - 1 + " +
                      std::to_string(kNuDomainOffset));
  }
  return profile(nu);
}

}  // namespace rcm
