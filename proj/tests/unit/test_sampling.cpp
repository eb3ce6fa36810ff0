#include <cmath>
#include <functional>

#include <gtest/gtest.h>

#include "rcm/errors.hpp"
#include "rcm/sampling.hpp"
#include "test_support.hpp"

namespace rcm {
namespace {

Matrix mean_of_draws(int draws, const std::function<Matrix()>& draw, Matrix* second = nullptr) {
  Matrix sum = draw();
  Matrix sq = sum.cwiseProduct(sum);
  for (int d = 1; d < draws; ++d) {
    const Matrix m = draw();
    sum += m;
    sq += m.cwiseProduct(m);
  }
  if (second) *second = sq / draws;
  return sum / draws;
}

void expect_within_se(const Matrix& mean, const Matrix& second, const Matrix& target, int draws,
                      double z) {
  for (Eigen::Index i = 0; i < mean.rows(); ++i) {
    for (Eigen::Index j = 0; j < mean.cols(); ++j) {
      const double var = second(i, j) - mean(i, j) * mean(i, j);
      const double se = std::sqrt(var / draws);
      EXPECT_LE(std::abs(mean(i, j) - target(i, j)), z * se) << "entry " << i << "," << j;
    }
  }
}

TEST(Rng, SameSeedSameStream) {
  Rng a(42);
  Rng b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.normal(), b.normal());
}

TEST(Rng, SubstreamsAreDistinctAndStable) {
  const Rng root(7);
  Rng s0 = root.substream(0);
  Rng s1 = root.substream(1);
  EXPECT_NE(s0.seed(), s1.seed());
  EXPECT_NE(s0.normal(), s1.normal());
  EXPECT_EQ(root.substream(3).seed(), derive_seed(7, 3));
  EXPECT_EQ(root.substream(3).seed(), Rng(7).substream(3).seed());
}

TEST(Rng, BelowStaysInRange) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) EXPECT_LT(rng.below(7), 7u);
}

TEST(Rng, ChiSquaredMean) {
  Rng rng(4);
  double sum = 0.0;
  const int draws = 50000;
  for (int i = 0; i < draws; ++i) sum += rng.chi_squared(3.5);
  // sd of the mean = sqrt(2 * 3.5 / draws)
  EXPECT_NEAR(sum / draws, 3.5, 4.0 * std::sqrt(7.0 / draws));
  EXPECT_THROW(rng.chi_squared(0.0), DomainError);
}

TEST(Sampling, MvnCovariance) {
  Rng rng(5);
  const SpdMatrix sigma(compound_symmetry(3, 2.0, 0.8));
  const Matrix x = sample_mvn(rng, 40000, sigma);
  const Matrix cov = x.transpose() * x / static_cast<double>(x.rows());
  EXPECT_LT((cov - sigma.matrix()).cwiseAbs().maxCoeff(), 0.08);
  EXPECT_EQ(sample_mvn(rng, 0, sigma).rows(), 0);
  EXPECT_THROW(sample_mvn(rng, -1, sigma), DomainError);
}

TEST(Sampling, WishartMean) {
  Rng rng(6);
  const auto theta = test::random_spd(rng, 3);
  const double nu = 6.5;
  const int draws = 20000;
  Matrix second;
  const Matrix mean =
      mean_of_draws(draws, [&] { return sample_wishart(rng, theta, nu).matrix(); }, &second);
  expect_within_se(mean, second, nu * theta.matrix(), draws, 4.0);
}

TEST(Sampling, InverseWishartMean) {
  Rng rng(8);
  const auto psi = test::random_spd(rng, 2);
  const double nu = 9.0;
  const int draws = 20000;
  Matrix second;
  const Matrix mean =
      mean_of_draws(draws, [&] { return sample_inv_wishart(rng, psi, nu).matrix(); }, &second);
  expect_within_se(mean, second, psi.matrix() / (nu - 3.0), draws, 4.0);
}

TEST(Sampling, WishartDomain) {
  Rng rng(9);
  EXPECT_THROW(sample_wishart(rng, SpdMatrix::identity(3), 2.0), DomainError);
  EXPECT_THROW(sample_inv_wishart(rng, SpdMatrix::identity(3), 1.5), DomainError);
  EXPECT_NO_THROW(sample_wishart(rng, SpdMatrix::identity(3), 3.0));
}

TEST(Sampling, HugeNuConcentratesOnMean) {
  Rng rng(10);
  const auto psi = compound_symmetry(4, 1.0, 0.5);
  const double nu = 1e9;
  const Matrix target = psi.matrix() / (nu - 5.0);
  const auto draw = sample_inv_wishart(rng, psi, nu);
  EXPECT_LT(test::rel_frobenius(draw.matrix(), target), 1e-3);
}

TEST(Sampling, DatasetIsDeterministicAndSubstreamed) {
  const RcmParams params{compound_symmetry(3, 1.0, 0.3), 8.0};
  const std::vector<int> sizes{5, 7};
  const auto a = generate_rcm_dataset(Rng(11), params, sizes);
  const auto b = generate_rcm_dataset(Rng(11), params, sizes);
  ASSERT_EQ(a.studies.size(), 2u);
  EXPECT_EQ(a.studies[0].rows(), 5);
  EXPECT_EQ(a.studies[1].rows(), 7);
  EXPECT_EQ(a.seed, 11u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(a.studies[i], b.studies[i]);
    EXPECT_EQ(a.realized_sigmas[i].matrix(), b.realized_sigmas[i].matrix());
  }
  // Study 1 does not depend on study 0's size.
  const std::vector<int> other{2, 7};
  const auto c = generate_rcm_dataset(Rng(11), params, other);
  EXPECT_EQ(c.studies[1], a.studies[1]);
}

TEST(Sampling, DatasetErrors) {
  const RcmParams params{SpdMatrix::identity(3), 8.0};
  EXPECT_THROW(generate_rcm_dataset(Rng(1), params, std::vector<int>{}), DomainError);
  EXPECT_THROW(generate_rcm_dataset(Rng(1), params, std::vector<int>{3, 0}), DomainError);
  const RcmParams bad{SpdMatrix::identity(3), 1.0};
  EXPECT_THROW(generate_rcm_dataset(Rng(1), bad, std::vector<int>{3}), DomainError);
}

TEST(CompoundSymmetry, EntriesAndDomain) {
  const auto cs = compound_symmetry(3, 1.0, 0.5);
  EXPECT_EQ(cs(0, 0), 1.0);
  EXPECT_EQ(cs(1, 2), 0.5);
  EXPECT_THROW(compound_symmetry(3, 1.0, 1.0), DomainError);
  EXPECT_THROW(compound_symmetry(3, 1.0, -0.6), DomainError);
  EXPECT_THROW(compound_symmetry(0, 1.0, 0.0), DomainError);
}

}  // namespace
}  // namespace rcm
