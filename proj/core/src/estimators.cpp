#include "rcm/estimators.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>

#include "rcm/errors.hpp"
#include "rcm/likelihood.hpp"

namespace rcm {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void require_nu_above(double nu, double bound, const char* what) {
  if (!(nu > bound)) {
    throw DomainError(std::string(what) + ": nu = " + std::to_string(nu) + " must exceed " +
                      std::to_string(bound));
  }
}

std::optional<SpdMatrix> sigma_from_psi(const SpdMatrix& psi, double nu) {
  const auto p = static_cast<double>(psi.dim());
  if (!(nu > p + 1.0)) return std::nullopt;
  return SpdMatrix(psi.matrix() / (nu - p - 1.0));
}

// sum_i (n_i + nu) (Psi + S_i)^{-1} / (k nu)
Matrix em_precision_update(const SpdMatrix& psi, StudySpan data, double nu) {
  const auto p = psi.dim();
  Matrix acc = Matrix::Zero(p, p);
  for (const auto& s : data) {
    acc += (s.n + nu) * spd_inverse(SpdMatrix(psi.matrix() + s.scatter)).matrix();
  }
  return acc / (static_cast<double>(data.size()) * nu);
}

template <class F>
double golden_section_log(const F& f, double lo, double hi, int& evals) {
  constexpr double kInvPhi = 0.6180339887498949;
  const double tol = std::log1p(1e-7);
  double a = std::log(lo);
  double b = std::log(hi);
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(std::exp(c));
  double fd = f(std::exp(d));
  evals += 2;
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(std::exp(c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(std::exp(d));
    }
    ++evals;
  }
  return std::exp(0.5 * (a + b));
}

// Maximizes a unimodal f over [lo, kNuCap]: hi is doubled while f still
// increases there, then golden-section search on log(nu).
template <class F>
NuSearchResult search_log_scale(const F& f, double lo, double hi) {
  NuSearchResult out;
  hi = std::min(hi, kNuCap);
  double f_hi = f(hi);
  ++out.evaluations;
  bool increasing_at_cap = false;
  while (true) {
    if (hi >= kNuCap) {
      const double below = f(hi * (1.0 - 1e-6));
      ++out.evaluations;
      increasing_at_cap = f_hi > below;
      break;
    }
    const double next = std::min(2.0 * hi, kNuCap);
    const double f_next = f(next);
    ++out.evaluations;
    if (!(f_next > f_hi)) {
      hi = next;
      break;
    }
    lo = hi;
    hi = next;
    f_hi = f_next;
  }
  if (increasing_at_cap) {
    out.nu = kNuCap;
    out.saturated = true;
    return out;
  }
  out.nu = golden_section_log(f, lo, hi, out.evaluations);
  // Near the cap the profile is flat to rounding; treat the last doubling
  // interval as saturated.
  if (out.nu >= 0.5 * kNuCap) {
    out.nu = kNuCap;
    out.saturated = true;
  }
  return out;
}

void check_bracket(double lo, double hi, double lower_bound, const char* what) {
  if (!(lo >= lower_bound)) {
    throw DomainError(std::string(what) + ": lower bracket " + std::to_string(lo) +
                      " must be at least p - 1 + " + std::to_string(kNuDomainOffset));
  }
  if (!(hi > lo)) throw DomainError(std::string(what) + ": bracket must satisfy hi > lo");
}

struct EmMove {
  SpdMatrix psi;
  double loglik;
};

// One EM update of theta, extended by a doubling line search along the EM
// direction; only steps that raise the likelihood are taken.
EmMove em_move(const SpdMatrix& psi, StudySpan data, double nu, bool accelerate) {
  const Matrix theta = spd_inverse(psi).matrix();
  const Matrix direction = em_precision_update(psi, data, nu) - theta;
  SpdMatrix best_psi = spd_inverse(SpdMatrix(theta + direction));
  double best = log_likelihood({best_psi, nu}, data);
  if (!accelerate || !std::isfinite(best)) return {std::move(best_psi), best};
  for (double step = 2.0; step <= 1e12; step *= 2.0) {
    try {
      SpdMatrix candidate = spd_inverse(SpdMatrix(theta + step * direction));
      const double ll = log_likelihood({candidate, nu}, data);
      if (!(ll > best)) break;
      best = ll;
      best_psi = std::move(candidate);
    } catch (const NotPositiveDefinite&) {
      break;
    }
  }
  return {std::move(best_psi), best};
}

std::string format_number(double x) {
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

double relative_change(const SpdMatrix& before, const SpdMatrix& after) {
  return (after.matrix() - before.matrix()).norm() / before.matrix().norm();
}

}  // namespace

std::string_view to_string(Estimator e) {
  switch (e) {
    case Estimator::pooled:
      return "pooled";
    case Estimator::em:
      return "em";
    case Estimator::approx_mle:
      return "approx_mle";
  }
  return "unknown";
}

Estimator parse_estimator(std::string_view name) {
  if (name == "pooled") return Estimator::pooled;
  if (name == "em") return Estimator::em;
  if (name == "approx_mle" || name == "approx-mle") return Estimator::approx_mle;
  throw DomainError("unknown estimator '" + std::string(name) + "'");
}

PsiEstimate estimate_pooled(StudySpan data, double nu) {
  const auto p = common_dim(data);
  require_nu_above(nu, static_cast<double>(p) + 1.0, "estimate_pooled");
  const Matrix sigma = total_scatter(data) / static_cast<double>(total_samples(data));
  SpdMatrix sigma_hat(sigma);
  SpdMatrix psi_hat(sigma * (nu - static_cast<double>(p) - 1.0));
  return {std::move(psi_hat), std::move(sigma_hat)};
}

SpdMatrix em_step(const SpdMatrix& theta, StudySpan data, double nu) {
  const auto p = common_dim(data);
  if (theta.dim() != p) throw DimensionMismatch("em_step: theta and data dimensions differ");
  require_nu_above(nu, static_cast<double>(p) - 1.0, "em_step");
  return SpdMatrix(em_precision_update(spd_inverse(theta), data, nu));
}

FitResult estimate_em(StudySpan data, double nu, const SpdMatrix& theta0, double eps,
                      int max_iter, bool accelerate) {
  const auto start = Clock::now();
  const auto p = common_dim(data);
  if (theta0.dim() != p) throw DimensionMismatch("estimate_em: theta0 and data dimensions differ");
  require_nu_above(nu, static_cast<double>(p) - 1.0, "estimate_em");
  if (!(eps > 0.0)) throw DomainError("estimate_em: eps must be positive");

  SpdMatrix psi = spd_inverse(theta0);
  FitResult out{.psi_hat = psi, .nu_hat = nu};
  out.estimator = Estimator::em;
  out.loglik_trace.push_back(log_likelihood({psi, nu}, data));

  for (int it = 0; it < max_iter; ++it) {
    double ll = 0.0;
    try {
      auto move = em_move(psi, data, nu, accelerate);
      ll = move.loglik;
      if (!std::isfinite(ll)) break;
      psi = std::move(move.psi);
    } catch (const NotPositiveDefinite&) {
      // Iterates degenerated (e.g. all-zero scatter drives Psi to 0).
      out.warnings.emplace_back("EM iterate lost positive definiteness; stopping");
      break;
    }
    const double increment = ll - out.loglik_trace.back();
    out.loglik_trace.push_back(ll);
    out.iterations = it + 1;
    if (increment < eps) {
      out.converged = true;
      break;
    }
  }
  out.psi_hat = psi;
  out.sigma_hat = sigma_from_psi(psi, nu);
  out.wall_time = seconds_since(start);
  return out;
}

PsiEstimate estimate_approx_mle(StudySpan data, double nu) {
  const auto p = common_dim(data);
  require_nu_above(nu, static_cast<double>(p) - 1.0, "estimate_approx_mle");
  Matrix acc = Matrix::Zero(p, p);
  for (const auto& s : data) acc += (nu + s.n) * s.scatter;
  SpdMatrix psi(acc / static_cast<double>(total_samples(data)));
  auto sigma = sigma_from_psi(psi, nu);
  return {std::move(psi), std::move(sigma)};
}

NuSearchResult maximize_nu(const SpdMatrix& psi, StudySpan data, double lo, double hi) {
  const NuProfile f(psi, data);
  check_bracket(lo, hi, f.lower_bound(), "maximize_nu");
  return search_log_scale(f, lo, hi);
}

ScaledNuSearchResult maximize_nu_scaled(const SpdMatrix& psi, StudySpan data, double lo,
                                        double hi) {
  const ScaledNuProfile f(psi, data);
  check_bracket(lo, hi, f.lower_bound(), "maximize_nu_scaled");
  const auto search = search_log_scale([&](double nu) { return f.profile(nu); }, lo, hi);
  ScaledNuSearchResult out;
  out.nu = search.nu;
  out.saturated = search.saturated;
  out.evaluations = search.evaluations;
  out.log_scale = f.best_log_scale(out.nu);
  out.loglik = f(out.nu, out.log_scale);
  return out;
}

RcmParams default_init(StudySpan data, std::vector<std::string>* warnings) {
  const auto p = common_dim(data);
  const double nu0 = 2.0 * static_cast<double>(p) + 2.0;
  Matrix pooled = total_scatter(data) / static_cast<double>(total_samples(data));
  Matrix psi0 = (nu0 - static_cast<double>(p) - 1.0) * pooled;
  try {
    return {SpdMatrix(psi0), nu0};
  } catch (const NotPositiveDefinite&) {
    double jitter = 1e-8 * psi0.diagonal().mean();
    if (!(jitter > 0.0)) jitter = 1e-8;
    if (warnings) {
      warnings->push_back("pooled scatter is singular; adding " + format_number(jitter) +
                          " to the diagonal of the initial Psi");
    }
    psi0.diagonal().array() += jitter;
    return {SpdMatrix(psi0), nu0};
  }
}

FitResult fit_rcm(StudySpan data, const RcmParams& init, const FitOptions& opts) {
  const auto start = Clock::now();
  const auto p = common_dim(data);
  if (init.dim() != p) throw DimensionMismatch("fit_rcm: init and data dimensions differ");
  init.validate();
  if (!(opts.eps > 0.0)) throw DomainError("fit_rcm: eps must be positive");
  if (opts.max_iter < 1) throw DomainError("fit_rcm: max_iter must be >= 1");

  const auto pd = static_cast<double>(p);
  FitResult out{.psi_hat = init.psi, .nu_hat = init.nu};
  out.estimator = opts.inner;
  if (total_samples(data) < p) {
    out.warnings.push_back("total sample size " + std::to_string(total_samples(data)) +
                           " is below p = " + std::to_string(p) +
                           "; the maximum in Psi need not be unique");
  }

  // The pooled update needs nu > p + 1 at every step.
  const double nu_floor = (opts.inner == Estimator::pooled ? pd + 1.0 : pd - 1.0) +
                          2.0 * kNuDomainOffset;
  if (opts.inner == Estimator::pooled) require_nu_above(init.nu, pd + 1.0, "fit_rcm(pooled)");

  SpdMatrix psi = init.psi;
  double nu = init.nu;
  out.loglik_trace.push_back(log_likelihood({psi, nu}, data));

  for (int t = 1; t <= opts.max_iter; ++t) {
    const SpdMatrix psi_prev = psi;
    const double nu_prev = nu;
    const bool saturated_prev = out.nu_saturated;

    double ll = 0.0;
    try {
      switch (opts.inner) {
        case Estimator::pooled:
          psi = estimate_pooled(data, nu).psi;
          break;
        case Estimator::approx_mle:
          psi = estimate_approx_mle(data, nu).psi;
          break;
        case Estimator::em:
          if (opts.iterate_inner) {
            auto em = estimate_em(data, nu, spd_inverse(psi), opts.inner_eps, opts.inner_max_iter,
                                  opts.accelerate);
            psi = std::move(em.psi_hat);
          } else {
            psi = em_move(psi, data, nu, opts.accelerate).psi;
          }
          break;
      }
      ll = log_likelihood({psi, nu}, data);

      if (opts.inner == Estimator::em && opts.scaled_nu_step) {
        // With Psi held fixed nu can only creep along the ridge Psi / nu = const.
        const auto ridge =
            maximize_nu_scaled(psi, data, nu_floor, std::max(2.0 * nu, nu_floor + pd + 10.0));
        if (ridge.loglik > ll) {
          psi = SpdMatrix(psi.matrix() * std::exp(ridge.log_scale));
          nu = ridge.nu;
          ll = log_likelihood({psi, nu}, data);
          out.nu_saturated = ridge.saturated;
        }
      }

      const auto search =
          maximize_nu(psi, data, nu_floor, std::max(2.0 * nu, nu_floor + pd + 10.0));
      if (const double ll_nu = log_likelihood({psi, search.nu}, data);
          ll_nu >= ll || opts.inner != Estimator::em) {
        nu = search.nu;
        ll = ll_nu;
        out.nu_saturated = search.saturated;
      }
    } catch (const NotPositiveDefinite&) {
      psi = psi_prev;
      nu = nu_prev;
      out.nu_saturated = saturated_prev;
      out.warnings.push_back("iterate " + std::to_string(t) +
                             " lost positive definiteness; returning the previous iterate");
      break;
    }

    const double prev = out.loglik_trace.back();
    out.loglik_trace.push_back(ll);
    out.iterations = t;

    double criterion = 0.0;
    switch (opts.convergence) {
      case Convergence::absolute:
        criterion = ll - prev;
        break;
      case Convergence::relative:
        criterion = (ll - prev) / std::abs(prev);
        break;
      case Convergence::parameter:
        criterion = relative_change(psi_prev, psi) + std::abs(nu - nu_prev) / nu_prev;
        break;
    }
    if (criterion < opts.eps) {
      out.converged = true;
      break;
    }
  }

  out.psi_hat = psi;
  out.nu_hat = nu;
  out.sigma_hat = sigma_from_psi(psi, nu);
  out.wall_time = seconds_since(start);
  return out;
}

}  // namespace rcm
