#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "rcm/errors.hpp"
#include "rcm/likelihood.hpp"
#include "test_support.hpp"

namespace rcm {
namespace {

// 2 * central difference of log_likelihood along the symmetric direction
// E^ij + E^ji (E^ii on the diagonal).
double fd_entry(const RcmParams& params, StudySpan data, Eigen::Index i, Eigen::Index j, double h) {
  Matrix e = Matrix::Zero(params.dim(), params.dim());
  e(i, j) = 1.0;
  e(j, i) = 1.0;
  const RcmParams plus{SpdMatrix(params.psi.matrix() + h * e), params.nu};
  const RcmParams minus{SpdMatrix(params.psi.matrix() - h * e), params.nu};
  return (log_likelihood(plus, data) - log_likelihood(minus, data)) / h;
}

TEST(LogLikelihood, ScalarExample) {
  // p = 1, psi = 1, nu = 2, x = 0: 1/2 log 1 - 3/2 log 1 + lgamma(1.5) - lgamma(1) - log(pi)/2
  const std::vector<StudyData> data{{Matrix::Zero(1, 1), 1}};
  const RcmParams params{SpdMatrix::identity(1), 2.0};
  const double expected = std::lgamma(1.5) - 0.5 * std::log(std::numbers::pi);
  EXPECT_NEAR(log_likelihood(params, data), expected, 1e-14);
  EXPECT_NEAR(expected, -std::log(2.0), 1e-14);
}

TEST(LogLikelihood, MatchesScalarQuadrature) {
  Rng rng(21);
  for (int rep = 0; rep < 20; ++rep) {
    const double psi = 0.2 + 3.0 * rng.uniform();
    const double nu = 0.3 + 20.0 * rng.uniform();
    const int n = 1 + static_cast<int>(rng.below(6));
    Vector x(n);
    for (int j = 0; j < n; ++j) x(j) = 2.0 * rng.normal();
    const std::vector<StudyData> raw{{Matrix::Constant(1, 1, x.squaredNorm()), n}};
    const RcmParams params{SpdMatrix(Matrix::Constant(1, 1, psi)), nu};
    EXPECT_NEAR(log_likelihood(params, raw), test::scalar_marginal_quadrature(psi, nu, x), 1e-6)
        << "psi=" << psi << " nu=" << nu << " n=" << n;
  }
}

TEST(LogLikelihood, FastPathAgrees) {
  Rng rng(22);
  for (int rep = 0; rep < 10; ++rep) {
    const Eigen::Index p = 2 + rep % 5;
    const RcmParams params{test::random_spd(rng, p), p + 2.0 + rep};
    std::vector<Matrix> raw;
    std::vector<StudyData> data;
    for (int i = 0; i < 3; ++i) {
      raw.push_back(test::random_matrix(rng, 1 + (rep + i) % 8, p));
      data.push_back({raw.back().transpose() * raw.back(), static_cast<int>(raw.back().rows())});
    }
    EXPECT_NEAR(log_likelihood_fast(params, raw), log_likelihood(params, data), 1e-8);
  }
}

TEST(LogLikelihood, DependsOnDataOnlyThroughScatter) {
  Rng rng(23);
  const Eigen::Index p = 3;
  const RcmParams params{test::random_spd(rng, p), 6.0};
  const Matrix x = test::random_matrix(rng, 5, p);
  const Eigen::HouseholderQR<Matrix> qr(test::random_matrix(rng, 5, 5));
  const Matrix q = qr.householderQ();
  const std::vector<Matrix> a{x};
  const std::vector<Matrix> b{q * x};
  EXPECT_NEAR(log_likelihood_fast(params, a), log_likelihood_fast(params, b), 1e-10);
}

TEST(LogLikelihood, ZeroDataCollapse) {
  Rng rng(24);
  const auto psi = test::random_spd(rng, 3);
  const double nu = 7.0;
  const int n = 4;
  const std::vector<StudyData> data{{Matrix::Zero(3, 3), n}, {Matrix::Zero(3, 3), n}};
  const double one = -0.5 * n * log_det(psi) + log_multigamma(3, 0.5 * (nu + n)) -
                     log_multigamma(3, 0.5 * nu) - 0.5 * n * 3 * std::log(std::numbers::pi);
  EXPECT_NEAR(log_likelihood({psi, nu}, data), 2.0 * one, 1e-10);
}

TEST(LogLikelihood, DirectFormula) {
  Rng rng(25);
  const auto psi = test::random_spd(rng, 4);
  const double nu = 9.5;
  const auto data = test::random_studies(rng, {psi, nu}, {6, 3, 10});
  double expected = 0.0;
  for (const auto& s : data) {
    expected += 0.5 * nu * log_det(psi) - 0.5 * (nu + s.n) * log_det(psi.matrix() + s.scatter) +
                log_multigamma(4, 0.5 * (nu + s.n)) - log_multigamma(4, 0.5 * nu) -
                0.5 * s.n * 4 * std::log(std::numbers::pi);
  }
  EXPECT_NEAR(log_likelihood({psi, nu}, data), expected, 1e-9);
}

TEST(LogLikelihood, Errors) {
  const std::vector<StudyData> data{{Matrix::Identity(3, 3), 2}};
  EXPECT_THROW(log_likelihood({SpdMatrix::identity(2), 5.0}, data), DimensionMismatch);
  EXPECT_THROW(log_likelihood({SpdMatrix::identity(3), 2.0}, data), DomainError);
  EXPECT_THROW(log_likelihood({SpdMatrix::identity(3), 5.0}, std::vector<StudyData>{}),
               DomainError);
}

TEST(GradPsi, VanishesAtSingleStudyClosedForm) {
  Rng rng(26);
  const Matrix x = test::random_matrix(rng, 8, 3);
  const std::vector<StudyData> data{{x.transpose() * x, 8}};
  const double nu = 6.0;
  const RcmParams at{SpdMatrix(nu / 8.0 * data[0].scatter), nu};
  const Matrix g = grad_psi(at, data);
  EXPECT_LT(g.cwiseAbs().maxCoeff(), 1e-10 * nu);
}

TEST(GradPsi, MatchesFiniteDifferences) {
  Rng rng(27);
  for (int rep = 0; rep < 10; ++rep) {
    const Eigen::Index p = 1 + rep % 6;
    const RcmParams params{test::random_spd(rng, p), p + 1.5 + rep};
    const auto data = test::random_studies(rng, params, {4, 7});
    const RcmParams at{test::random_spd(rng, p), params.nu};
    const Matrix g = grad_psi(at, data);
    for (Eigen::Index i = 0; i < p; ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) {
        const double fd = fd_entry(at, data, i, j, 1e-5);
        EXPECT_LT(std::abs(fd - g(i, j)), 1e-5 * std::abs(g(i, j))) << i << "," << j;
      }
    }
  }
}

TEST(GradPsi, ScalarCase) {
  const std::vector<StudyData> data{{Matrix::Constant(1, 1, 3.0), 2}};
  const RcmParams at{SpdMatrix(Matrix::Constant(1, 1, 2.0)), 4.0};
  // d/dpsi 2 l = nu / psi - (nu + n) / (psi + s)
  EXPECT_NEAR(grad_psi(at, data)(0, 0), 4.0 / 2.0 - 6.0 / 5.0, 1e-14);
}

TEST(NuProfile, ConcaveInNu) {
  Rng rng(28);
  for (int rep = 0; rep < 5; ++rep) {
    const Eigen::Index p = 2 + rep;
    const auto psi = test::random_spd(rng, p);
    const auto data = test::random_studies(rng, {psi, p + 5.0}, {5, 9, 6});
    const auto fixed = test::random_spd(rng, p);
    const NuProfile prof(fixed, data);
    std::vector<double> nu;
    for (int i = 0; i < 50; ++i) nu.push_back((p - 0.5) * std::pow(1e4, i / 49.0));
    for (int i = 1; i + 1 < 50; ++i) {
      const double left = (prof(nu[i]) - prof(nu[i - 1])) / (nu[i] - nu[i - 1]);
      const double right = (prof(nu[i + 1]) - prof(nu[i])) / (nu[i + 1] - nu[i]);
      EXPECT_LE(right - left, 1e-8);
    }
  }
}

TEST(NuProfile, AgreesWithLogLikelihood) {
  Rng rng(29);
  const auto psi = test::random_spd(rng, 3);
  const auto data = test::random_studies(rng, {psi, 8.0}, {4, 4});
  const NuProfile prof(psi, data);
  for (double nu : {2.5, 8.0, 1e3, 1e8}) {
    EXPECT_NEAR(prof(nu), log_likelihood({psi, nu}, data), 1e-8 * std::abs(prof(nu)));
    EXPECT_DOUBLE_EQ(profile_nu(psi, data, nu), prof(nu));
  }
  EXPECT_THROW(prof(2.0), DomainError);
  EXPECT_THROW(profile_nu(psi, data, 2.0 + 1e-9), DomainError);
  EXPECT_DOUBLE_EQ(prof.lower_bound(), 2.0 + kNuDomainOffset);
}

TEST(ScaledNuProfile, AgreesWithRescaledPsi) {
  Rng rng(30);
  const auto psi = test::random_spd(rng, 4);
  const auto data = test::random_studies(rng, {psi, 9.0}, {6, 2, 11});
  const ScaledNuProfile prof(psi, data);
  for (double nu : {3.5, 9.0, 250.0}) {
    for (double s : {-2.0, 0.0, 1.3}) {
      const RcmParams scaled{SpdMatrix(std::exp(s) * psi.matrix()), nu};
      EXPECT_NEAR(prof(nu, s), log_likelihood(scaled, data), 1e-8);
    }
  }
}

TEST(ScaledNuProfile, BestScaleIsStationary) {
  Rng rng(31);
  const auto psi = test::random_spd(rng, 3);
  const auto data = test::random_studies(rng, {psi, 7.0}, {5, 5, 5});
  const ScaledNuProfile prof(psi, data);
  for (double nu : {2.5, 7.0, 1e5}) {
    const double s = prof.best_log_scale(nu);
    EXPECT_GE(prof(nu, s), prof(nu, s + 1e-3));
    EXPECT_GE(prof(nu, s), prof(nu, s - 1e-3));
    EXPECT_DOUBLE_EQ(prof.profile(nu), prof(nu, s));
  }
}

}  // namespace
}  // namespace rcm
