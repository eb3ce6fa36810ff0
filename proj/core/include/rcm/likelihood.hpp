#pragma once

#include <span>
#include <vector>

#include "rcm/matrixcore.hpp"
#include "rcm/model.hpp"

namespace rcm {

// Lower offset on the nu domain used by the profile and the nu search.
inline constexpr double kNuDomainOffset = 1e-6;

// Exact log marginal density of the studies, Sigma_i integrated out:
//   sum_i  nu/2 log|Psi| - (nu+n_i)/2 log|Psi+S_i|
//          + log Gamma_p((nu+n_i)/2) - log Gamma_p(nu/2) - n_i p/2 log(pi)
double log_likelihood(const RcmParams& params, StudySpan data);

// Same value computed from raw observations through the determinant lemma,
// |Psi + X^T X| = |Psi| |I + X Psi^{-1} X^T|, which only factors n_i x n_i
// matrices. Pays off when n_i < p.
double log_likelihood_fast(const RcmParams& params, std::span<const Matrix> raw);

// Gradient of 2*loglik with respect to a symmetric Psi, in the convention
// d/dPsi_ij log|Psi| = tr(E^ij Psi^{-1}) = (2 Psi^{-1} - Psi^{-1} o I)_ij.
Matrix grad_psi(const RcmParams& params, StudySpan data);

// log_likelihood as a function of nu alone. Concave in nu for fixed psi.
double profile_nu(const SpdMatrix& psi, StudySpan data, double nu);

// Caches the nu-independent log-determinants so that repeated evaluations
// along a 1-D search only cost O(k p) log-gamma calls.
class NuProfile {
 public:
  NuProfile(const SpdMatrix& psi, StudySpan data);

  // Throws DomainError unless nu > p - 1.
  double operator()(double nu) const;
  // Smallest admissible nu: p - 1 + kNuDomainOffset.
  double lower_bound() const;
  Eigen::Index dim() const { return p_; }

 private:
  Eigen::Index p_;
  double log_det_psi_;
  std::vector<double> log_det_ratio_;  // log|Psi + S_i| - log|Psi|
  std::vector<int> n_;
};

// log_likelihood at (c * psi, nu) as a function of (nu, log c). Caches the
// eigenvalues of every whitened scatter L^{-1} S_i L^{-T}, so one evaluation
// costs O(k p). Concave in log c for fixed nu.
class ScaledNuProfile {
 public:
  ScaledNuProfile(const SpdMatrix& psi, StudySpan data);

  double operator()(double nu, double log_scale) const;
  // Maximizer over log c in [-kMaxLogScale, kMaxLogScale] for fixed nu.
  double best_log_scale(double nu) const;
  // max over c of (*this)(nu, log c).
  double profile(double nu) const { return (*this)(nu, best_log_scale(nu)); }
  double lower_bound() const;
  Eigen::Index dim() const { return p_; }

  static constexpr double kMaxLogScale = 50.0;

 private:
  Eigen::Index p_;
  double log_det_psi_;
  std::vector<Vector> eigenvalues_;
  std::vector<int> n_;
};

}  // namespace rcm
