#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rcm/matrixcore.hpp"
#include "rcm/model.hpp"

namespace rcm {

// Psi-update used inside the coordinate ascent.
enum class Estimator { pooled, em, approx_mle };

std::string_view to_string(Estimator e);
// Accepts "pooled", "em", "approx_mle" and "approx-mle".
Estimator parse_estimator(std::string_view name);

// Convergence criterion on successive log-likelihood values l(t-1), l(t).
enum class Convergence {
  absolute,  // l(t) - l(t-1) < eps
  relative,  // (l(t) - l(t-1)) / |l(t-1)| < eps
  parameter  // ||Psi(t) - Psi(t-1)||_F / ||Psi(t-1)||_F + |nu(t)-nu(t-1)|/nu(t-1) < eps
};

struct PsiEstimate {
  SpdMatrix psi;
  std::optional<SpdMatrix> sigma;  // psi / (nu - p - 1) when nu > p + 1
};

struct FitResult {
  SpdMatrix psi_hat;
  double nu_hat = 0.0;
  std::optional<SpdMatrix> sigma_hat = {};
  std::vector<double> loglik_trace = {};
  int iterations = 0;
  double wall_time = 0.0;  // seconds
  bool converged = false;
  bool nu_saturated = false;  // nu search stopped at its cap
  Estimator estimator = Estimator::em;
  std::vector<std::string> warnings = {};
};

// Sigma_pool = sum S_i / sum n_i, Psi_pool = (nu - p - 1) Sigma_pool.
// Throws DomainError unless nu > p + 1.
PsiEstimate estimate_pooled(StudySpan data, double nu);

// One EM update of Theta = Psi^{-1}:
//   Theta' = 1/(k nu) sum_i (n_i + nu) (Theta^{-1} + S_i)^{-1}
SpdMatrix em_step(const SpdMatrix& theta, StudySpan data, double nu);

// Iterates em_step from theta0 until the log-likelihood increment drops below
// eps or max_iter steps have been taken (converged = false in that case, with
// the last valid iterate returned). nu is held fixed. With accelerate, each
// step is extended by a doubling line search along the EM direction, kept
// only while the likelihood increases.
FitResult estimate_em(StudySpan data, double nu, const SpdMatrix& theta0, double eps,
                      int max_iter, bool accelerate = true);

// First-order Neumann approximation of the score equation:
//   Psi = sum_i (nu + n_i) S_i / n_total.
// Only an approximation: the eigenvalues of Psi^{-1} S_i are not checked.
PsiEstimate estimate_approx_mle(StudySpan data, double nu);

struct NuSearchResult {
  double nu = 0.0;
  bool saturated = false;  // objective still increasing at the cap
  int evaluations = 0;
};

inline constexpr double kNuCap = 1e9;

struct ScaledNuSearchResult {
  double nu = 0.0;
  double log_scale = 0.0;  // Psi is multiplied by exp(log_scale)
  double loglik = 0.0;
  bool saturated = false;
  int evaluations = 0;
};

// Maximizes the nu-profile for fixed psi by golden-section search on log(nu)
// inside [lo, hi]. hi is doubled (up to kNuCap) while the maximum sits at the
// upper edge. Requires lo > p - 1 + kNuDomainOffset and hi > lo.
NuSearchResult maximize_nu(const SpdMatrix& psi, StudySpan data, double lo, double hi);

// Joint search over (c * psi, nu): for each nu the optimal scale c is found
// by root finding (the likelihood is concave in log c), and the resulting
// profile is searched like maximize_nu.
ScaledNuSearchResult maximize_nu_scaled(const SpdMatrix& psi, StudySpan data, double lo,
                                        double hi);

struct FitOptions {
  double eps = 1e-6;
  int max_iter = 1000;
  Estimator inner = Estimator::em;
  Convergence convergence = Convergence::absolute;
  // Inner EM runs to its own tolerance each outer step; with false a single
  // em_step is taken instead.
  bool iterate_inner = true;
  double inner_eps = 1e-8;
  int inner_max_iter = 10000;
  // EM steps are extended by a doubling line search along the EM direction.
  bool accelerate = true;
  // Each outer step also searches nu jointly with a rescaling of Psi.
  bool scaled_nu_step = true;
};

// Default starting point: nu0 = 2p + 2, Psi0 = (nu0 - p - 1) * pooled
// covariance, with a 1e-8 * mean-diagonal ridge if the pooled scatter is
// singular.
RcmParams default_init(StudySpan data, std::vector<std::string>* warnings = nullptr);

// Coordinate ascent: alternate the Psi-update chosen by opts.inner with
// maximize_nu until the convergence criterion is met.
FitResult fit_rcm(StudySpan data, const RcmParams& init, const FitOptions& opts = {});

}  // namespace rcm
