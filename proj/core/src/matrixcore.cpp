#include "rcm/matrixcore.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/special_functions/gamma.hpp>
#include <Eigen/Eigenvalues>

#include "rcm/errors.hpp"

namespace rcm {

namespace {

constexpr double kPivotTolerance = 1e-12;

// Above this argument the Stirling series with the five terms below is
// accurate to ~1e-15 relative.
constexpr double kStirlingThreshold = 10.0;
constexpr double kStirlingCoefficients[] = {1.0 / 12.0, -1.0 / 360.0, 1.0 / 1260.0,
                                            -1.0 / 1680.0, 1.0 / 1188.0};

}  // namespace

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

Matrix cholesky(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw DimensionMismatch("cholesky: matrix is " + std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()));
  }
  const Eigen::Index p = m.rows();
  if (p == 0) throw DomainError("cholesky: empty matrix");

  const double max_diag = m.diagonal().maxCoeff();
  if (!(max_diag > 0.0) || !std::isfinite(max_diag)) {
    throw NotPositiveDefinite("cholesky: nonpositive or non-finite diagonal");
  }
  const double floor = kPivotTolerance * max_diag;

  Matrix L = Matrix::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    double pivot = m(j, j) - L.row(j).head(j).squaredNorm();
    if (!(pivot > floor)) {
      throw NotPositiveDefinite("cholesky: pivot " + std::to_string(j) + " is " +
                                std::to_string(pivot));
    }
    const double ljj = std::sqrt(pivot);
    L(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < p; ++i) {
      L(i, j) = (m(i, j) - L.row(i).head(j).dot(L.row(j).head(j))) / ljj;
    }
  }
  return L;
}

SpdMatrix::SpdMatrix(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw DimensionMismatch("SpdMatrix: matrix is " + std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()));
  }
  entries_ = symmetrize(m);
  chol_ = cholesky(entries_);
}

SpdMatrix SpdMatrix::identity(Eigen::Index p) { return SpdMatrix(Matrix::Identity(p, p)); }

double log_det(const SpdMatrix& m) { return 2.0 * m.chol().diagonal().array().log().sum(); }

double log_det(const Matrix& m) { return 2.0 * cholesky(m).diagonal().array().log().sum(); }

SpdMatrix spd_inverse(const SpdMatrix& m) {
  const auto L = m.chol().triangularView<Eigen::Lower>();
  Matrix inv = Matrix::Identity(m.dim(), m.dim());
  L.solveInPlace(inv);
  L.transpose().solveInPlace(inv);
  return SpdMatrix(inv);
}

double log_multigamma(int p, double t) {
  if (p < 1) throw DomainError("log_multigamma: p must be positive");
  if (!(t > 0.5 * (p - 1))) {
    throw DomainError("log_multigamma: t = " + std::to_string(t) + " must exceed (p-1)/2 = " +
                      std::to_string(0.5 * (p - 1)));
  }
  double acc = 0.25 * p * (p - 1) * std::log(std::numbers::pi);
  for (int j = 1; j <= p; ++j) acc += boost::math::lgamma(t + 0.5 * (1 - j));
  return acc;
}

double log_gamma_increment(double a, double d) {
  if (!(a > 0.0) || !(d >= 0.0)) {
    throw DomainError("log_gamma_increment: requires a > 0 and d >= 0");
  }
  if (d == 0.0) return 0.0;
  if (a < kStirlingThreshold) {
    return boost::math::lgamma(a + d) - boost::math::lgamma(a);
  }
  // lgamma(x) = (x - 1/2) log x - x + log(2 pi)/2 + sum_k B_2k / (2k (2k-1) x^(2k-1))
  const double b = a + d;
  double diff = (a - 0.5) * std::log1p(d / a) + d * std::log(b) - d;
  const double inv_a = 1.0 / a;
  const double inv_b = 1.0 / b;
  const double inv_a2 = inv_a * inv_a;
  const double inv_b2 = inv_b * inv_b;
  double pa = inv_a;
  double pb = inv_b;
  for (double c : kStirlingCoefficients) {
    diff += c * (pb - pa);
    pa *= inv_a2;
    pb *= inv_b2;
  }
  return diff;
}

double log_multigamma_increment(int p, double a, double d) {
  if (!(a > 0.5 * (p - 1))) {
    throw DomainError("log_multigamma_increment: a = " + std::to_string(a) +
                      " must exceed (p-1)/2");
  }
  double acc = 0.0;
  for (int j = 1; j <= p; ++j) acc += log_gamma_increment(a + 0.5 * (1 - j), d);
  return acc;
}

namespace {

// Fallback for a with huge entries, where the pivots of I + a lose the unit
// part to cancellation.
double log_det_identity_plus_eigen(const Matrix& a) {
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(a), Eigen::EigenvaluesOnly);
  const Vector& values = eig.eigenvalues();
  if (!(values.array() > -1.0).all()) {
    throw NotPositiveDefinite("log_det_identity_plus: I + a is not positive definite");
  }
  return values.array().log1p().sum();
}

}  // namespace

double log_det_identity_plus(const Matrix& a) {
  if (a.rows() != a.cols()) throw DimensionMismatch("log_det_identity_plus: not square");
  const Eigen::Index n = a.rows();
  Matrix L = Matrix::Zero(n, n);
  double acc = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    // pivot = 1 + excess
    const double excess = a(j, j) - L.row(j).head(j).squaredNorm();
    if (!(excess > -1.0 + kPivotTolerance)) return log_det_identity_plus_eigen(a);
    acc += std::log1p(excess);
    const double ljj = std::sqrt(1.0 + excess);
    L(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      L(i, j) = (a(i, j) - L.row(i).head(j).dot(L.row(j).head(j))) / ljj;
    }
  }
  return acc;
}

}  // namespace rcm
