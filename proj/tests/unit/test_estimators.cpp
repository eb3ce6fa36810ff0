#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "rcm/errors.hpp"
#include "rcm/estimators.hpp"
#include "rcm/likelihood.hpp"
#include "test_support.hpp"

namespace rcm {
namespace {

std::vector<StudyData> two_by_two_studies() {
  Matrix s1(2, 2);
  s1 << 4, 1, 1, 2;
  Matrix s2(2, 2);
  s2 << 2, 0, 0, 6;
  return {{s1, 4}, {s2, 4}};
}

TEST(Estimator, NamesRoundTrip) {
  for (Estimator e : {Estimator::pooled, Estimator::em, Estimator::approx_mle}) {
    EXPECT_EQ(parse_estimator(to_string(e)), e);
  }
  EXPECT_EQ(parse_estimator("approx-mle"), Estimator::approx_mle);
  EXPECT_THROW(parse_estimator("newton"), DomainError);
}

TEST(Pooled, Example) {
  const auto data = two_by_two_studies();
  const auto est = estimate_pooled(data, 5.0);
  Matrix sigma(2, 2);
  sigma << 0.75, 0.125, 0.125, 1.0;
  ASSERT_TRUE(est.sigma);
  EXPECT_LT((est.sigma->matrix() - sigma).norm(), 1e-15);
  EXPECT_LT((est.psi.matrix() - 2.0 * sigma).norm(), 1e-15);
  EXPECT_THROW(estimate_pooled(data, 3.0), DomainError);
}

TEST(ApproxMle, Example) {
  const auto data = two_by_two_studies();
  const auto est = estimate_approx_mle(data, 6.0);
  // (10 S1 + 10 S2) / 8
  Matrix psi(2, 2);
  psi << 7.5, 1.25, 1.25, 10.0;
  EXPECT_LT((est.psi.matrix() - psi).norm(), 1e-14);
  ASSERT_TRUE(est.sigma);
  EXPECT_LT((est.sigma->matrix() - psi / 3.0).norm(), 1e-14);
  EXPECT_FALSE(estimate_approx_mle(data, 2.5).sigma.has_value());
  EXPECT_THROW(estimate_approx_mle(data, 1.0), DomainError);
}

TEST(ApproxMle, SingleStudyClosedForm) {
  Rng rng(41);
  const Matrix x = test::random_matrix(rng, 9, 4);
  const std::vector<StudyData> data{{x.transpose() * x, 9}};
  const double nu = 7.0;
  const auto est = estimate_approx_mle(data, nu);
  EXPECT_EQ(est.psi.matrix(), SpdMatrix(data[0].scatter * (nu + 9) / 9.0).matrix());
}

TEST(EmStep, FixedPointOfSingleStudy) {
  Rng rng(42);
  const Matrix x = test::random_matrix(rng, 10, 3);
  const std::vector<StudyData> data{{x.transpose() * x, 10}};
  const double nu = 5.0;
  const SpdMatrix psi(nu / 10.0 * data[0].scatter);
  const SpdMatrix theta = spd_inverse(psi);
  EXPECT_LT(test::rel_frobenius(em_step(theta, data, nu).matrix(), theta.matrix()), 1e-12);
}

TEST(EmStep, ZeroScatter) {
  // Theta' = (n + nu) / nu * Theta
  const std::vector<StudyData> data{{Matrix::Zero(2, 2), 3}};
  const SpdMatrix theta(Matrix::Identity(2, 2) * 2.0);
  EXPECT_LT((em_step(theta, data, 6.0).matrix() - 3.0 * Matrix::Identity(2, 2)).norm(), 1e-14);
}

TEST(EmStep, Errors) {
  const auto data = two_by_two_studies();
  EXPECT_THROW(em_step(SpdMatrix::identity(3), data, 5.0), DimensionMismatch);
  EXPECT_THROW(em_step(SpdMatrix::identity(2), data, 1.0), DomainError);
}

TEST(EstimateEm, SingleStudyConvergesToClosedForm) {
  Rng rng(43);
  for (bool accelerate : {false, true}) {
    const Matrix x = test::random_matrix(rng, 12, 4);
    const std::vector<StudyData> data{{x.transpose() * x, 12}};
    const double nu = 8.0;
    const auto fit =
        estimate_em(data, nu, SpdMatrix::identity(4), 1e-13, 100000, accelerate);
    EXPECT_TRUE(fit.converged);
    EXPECT_LT(test::rel_frobenius(fit.psi_hat.matrix(), nu / 12.0 * data[0].scatter), 1e-6);
  }
}

TEST(EstimateEm, TraceIsMonotone) {
  Rng rng(44);
  for (int rep = 0; rep < 10; ++rep) {
    const Eigen::Index p = 2 + rep % 4;
    const RcmParams truth{test::random_spd(rng, p), p + 3.0};
    const auto data = test::random_studies(rng, truth, {6, 8, 5});
    const auto fit = estimate_em(data, truth.nu, SpdMatrix::identity(p), 1e-10, 500, rep % 2 == 0);
    ASSERT_GE(fit.loglik_trace.size(), 2u);
    for (std::size_t t = 1; t < fit.loglik_trace.size(); ++t) {
      EXPECT_GE(fit.loglik_trace[t] - fit.loglik_trace[t - 1], -1e-8);
    }
    EXPECT_EQ(fit.loglik_trace.size(), static_cast<std::size_t>(fit.iterations) + 1);
  }
}

TEST(EstimateEm, MaxIterationsReportsNotConverged) {
  const auto data = two_by_two_studies();
  const auto fit = estimate_em(data, 5.0, SpdMatrix::identity(2), 1e-300, 2, false);
  EXPECT_FALSE(fit.converged);
  EXPECT_EQ(fit.iterations, 2);
}

TEST(MaximizeNu, RecoversTrueNuAtTruePsi) {
  Rng rng(45);
  const RcmParams truth{test::random_spd(rng, 5), 30.0};
  const auto data = test::random_studies(rng, truth, std::vector<int>(10, 50));
  const auto res = maximize_nu(truth.psi, data, 4.0 + 1e-3, 40.0);
  EXPECT_FALSE(res.saturated);
  EXPECT_NEAR(res.nu, 30.0, 0.25 * 30.0);
  // Grid check of optimality.
  const NuProfile prof(truth.psi, data);
  for (double nu : {res.nu * 0.99, res.nu * 1.01}) EXPECT_GE(prof(res.nu), prof(nu));
}

TEST(MaximizeNu, SaturatesForHugePsi) {
  Rng rng(46);
  const RcmParams truth{SpdMatrix::identity(3), 6.0};
  const auto data = test::random_studies(rng, truth, {5, 5});
  // Psi far larger than any scatter: the likelihood keeps rising with nu.
  const auto res = maximize_nu(SpdMatrix(1e12 * Matrix::Identity(3, 3)), data, 2.5, 10.0);
  EXPECT_TRUE(res.saturated);
  EXPECT_EQ(res.nu, kNuCap);
}

TEST(MaximizeNu, BracketErrors) {
  const auto data = two_by_two_studies();
  const auto psi = SpdMatrix::identity(2);
  EXPECT_THROW(maximize_nu(psi, data, 1.0, 10.0), DomainError);
  EXPECT_THROW(maximize_nu(psi, data, 5.0, 5.0), DomainError);
  EXPECT_THROW(maximize_nu_scaled(psi, data, 0.5, 10.0), DomainError);
}

TEST(MaximizeNuScaled, MatchesScaledProfile) {
  Rng rng(47);
  const RcmParams truth{test::random_spd(rng, 3), 12.0};
  const auto data = test::random_studies(rng, truth, {20, 20, 20, 20});
  const auto res = maximize_nu_scaled(SpdMatrix::identity(3), data, 2.5, 20.0);
  const RcmParams at{SpdMatrix(std::exp(res.log_scale) * Matrix::Identity(3, 3)), res.nu};
  EXPECT_NEAR(res.loglik, log_likelihood(at, data), 1e-8);
  const ScaledNuProfile prof(SpdMatrix::identity(3), data);
  EXPECT_GE(res.loglik, prof.profile(res.nu * 1.01));
  EXPECT_GE(res.loglik, prof.profile(res.nu * 0.99));
}

TEST(FitRcm, IdenticalStudiesSaturate) {
  Rng rng(48);
  const Matrix x = test::random_matrix(rng, 10, 3);
  const StudyData s{x.transpose() * x, 10};
  const std::vector<StudyData> data{s, s, s};
  const auto fit = fit_rcm(data, default_init(data));
  EXPECT_TRUE(fit.nu_saturated);
  EXPECT_EQ(fit.nu_hat, kNuCap);
  ASSERT_TRUE(fit.sigma_hat);
  EXPECT_LT(test::rel_frobenius(fit.sigma_hat->matrix(), s.scatter / 10.0), 1e-4);
}

TEST(FitRcm, TraceMonotoneForEveryInnerEstimatorStartingAtInit) {
  Rng rng(49);
  const RcmParams truth{test::random_spd(rng, 4), 9.0};
  const auto data = test::random_studies(rng, truth, {15, 15, 15});
  const auto init = default_init(data);
  const double ll0 = log_likelihood(init, data);
  const auto fit = fit_rcm(data, init);
  EXPECT_DOUBLE_EQ(fit.loglik_trace.front(), ll0);
  for (std::size_t t = 1; t < fit.loglik_trace.size(); ++t) {
    EXPECT_GE(fit.loglik_trace[t] - fit.loglik_trace[t - 1], -1e-8);
  }
  EXPECT_TRUE(fit.converged);
  EXPECT_NEAR(fit.loglik_trace.back(), log_likelihood({fit.psi_hat, fit.nu_hat}, data), 1e-9);
}

TEST(FitRcm, RandomInitialisationsAgree) {
  Rng rng(50);
  const RcmParams truth{test::random_spd(rng, 4), 10.0};
  const auto data = test::random_studies(rng, truth, {30, 30, 30, 30, 30});
  FitOptions opts;
  opts.eps = 1e-10;
  std::vector<FitResult> fits;
  for (int r = 0; r < 3; ++r) {
    const RcmParams init{test::random_spd(rng, 4, 0.2 + r), 5.0 + 10.0 * r};
    fits.push_back(fit_rcm(data, init, opts));
    EXPECT_FALSE(fits.back().nu_saturated);
  }
  for (int r = 1; r < 3; ++r) {
    EXPECT_LT(test::rel_frobenius(fits[r].psi_hat.matrix(), fits[0].psi_hat.matrix()), 1e-4);
    EXPECT_NEAR(fits[r].nu_hat, fits[0].nu_hat, 1e-3 * fits[0].nu_hat);
  }
}

TEST(FitRcm, GradientVanishesAtOptimum) {
  Rng rng(51);
  const RcmParams truth{test::random_spd(rng, 3), 5.0};
  const auto data = test::random_studies(rng, truth, {40, 40, 40, 40, 40, 40});
  FitOptions opts;
  opts.eps = 1e-12;
  const auto fit = fit_rcm(data, default_init(data), opts);
  ASSERT_FALSE(fit.nu_saturated);
  const Matrix g = grad_psi({fit.psi_hat, fit.nu_hat}, data);
  const double scale = fit.nu_hat * spd_inverse(fit.psi_hat).matrix().norm() * data.size();
  EXPECT_LT(g.norm() / scale, 1e-4);
}

TEST(FitRcm, InfiniteToleranceStopsAfterOneIteration) {
  const auto data = two_by_two_studies();
  FitOptions opts;
  opts.eps = std::numeric_limits<double>::infinity();
  const auto fit = fit_rcm(data, default_init(data), opts);
  EXPECT_EQ(fit.iterations, 1);
  EXPECT_TRUE(fit.converged);
  EXPECT_EQ(fit.loglik_trace.size(), 2u);
}

TEST(FitRcm, ScaleEquivariance) {
  Rng rng(52);
  const RcmParams truth{test::random_spd(rng, 3), 9.0};
  auto data = test::random_studies(rng, truth, {20, 20, 20});
  FitOptions opts;
  opts.eps = 1e-10;
  const auto a = fit_rcm(data, default_init(data), opts);
  for (auto& s : data) s.scatter *= 4.0;
  const auto b = fit_rcm(data, default_init(data), opts);
  EXPECT_LT(test::rel_frobenius(b.psi_hat.matrix(), 4.0 * a.psi_hat.matrix()), 1e-4);
  EXPECT_NEAR(b.nu_hat, a.nu_hat, 1e-3 * a.nu_hat);
}

TEST(FitRcm, WarnsWhenTotalSampleBelowDimension) {
  Rng rng(53);
  const RcmParams truth{SpdMatrix::identity(6), 9.0};
  const auto data = test::random_studies(rng, truth, {2, 2});
  std::vector<std::string> init_warnings;
  const auto init = default_init(data, &init_warnings);
  EXPECT_EQ(init_warnings.size(), 1u);
  const auto fit = fit_rcm(data, init);
  ASSERT_FALSE(fit.warnings.empty());
  EXPECT_NE(fit.warnings.front().find("below p"), std::string::npos);
}

TEST(FitRcm, PooledAndApproxInnerUpdates) {
  Rng rng(54);
  const RcmParams truth{test::random_spd(rng, 3), 10.0};
  const auto data = test::random_studies(rng, truth, {20, 20, 20});
  for (Estimator e : {Estimator::pooled, Estimator::approx_mle}) {
    FitOptions opts;
    opts.inner = e;
    const auto fit = fit_rcm(data, default_init(data), opts);
    EXPECT_EQ(fit.estimator, e);
    EXPECT_GE(fit.iterations, 1);
    EXPECT_TRUE(std::isfinite(fit.loglik_trace.back()));
  }
}

TEST(FitRcm, Errors) {
  const auto data = two_by_two_studies();
  const auto init = default_init(data);
  FitOptions opts;
  opts.eps = 0.0;
  EXPECT_THROW(fit_rcm(data, init, opts), DomainError);
  opts = {};
  opts.max_iter = 0;
  EXPECT_THROW(fit_rcm(data, init, opts), DomainError);
  EXPECT_THROW(fit_rcm(data, {SpdMatrix::identity(3), 9.0}), DimensionMismatch);
  opts = {};
  opts.inner = Estimator::pooled;
  EXPECT_THROW(fit_rcm(data, {SpdMatrix::identity(2), 2.5}, opts), DomainError);
}

TEST(DefaultInit, PooledStart) {
  const auto data = two_by_two_studies();
  const auto init = default_init(data);
  EXPECT_EQ(init.nu, 6.0);
  Matrix sigma(2, 2);
  sigma << 0.75, 0.125, 0.125, 1.0;
  EXPECT_LT((init.psi.matrix() - 3.0 * sigma).norm(), 1e-14);
}

}  // namespace
}  // namespace rcm
