#pragma once

#include <Eigen/Dense>

namespace rcm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Symmetric positive-definite matrix with its lower Cholesky factor computed
// once at construction. Instances are immutable and safe to share across
// threads.
class SpdMatrix {
 public:
  // Symmetrizes `m` as (m + m^T)/2 and factors it. Throws NotPositiveDefinite
  // if any pivot is <= 1e-12 * max diagonal, DimensionMismatch if not square.
  explicit SpdMatrix(const Matrix& m);

  static SpdMatrix identity(Eigen::Index p);

  Eigen::Index dim() const { return entries_.rows(); }
  const Matrix& matrix() const { return entries_; }
  const Matrix& chol() const { return chol_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }

 private:
  Matrix entries_;
  Matrix chol_;
};

// (m + m^T) / 2
Matrix symmetrize(const Matrix& m);

// Lower-triangular L with L L^T = m. Only the lower triangle of m is read.
Matrix cholesky(const Matrix& m);

double log_det(const SpdMatrix& m);
// Convenience overload; factors m first.
double log_det(const Matrix& m);

SpdMatrix spd_inverse(const SpdMatrix& m);

// log of the multivariate gamma function Gamma_p(t); requires t > (p-1)/2.
double log_multigamma(int p, double t);

// log Gamma(a + d) - log Gamma(a) for a > 0, d >= 0. For large a the
// difference is formed from Stirling's series with log1p so that it keeps
// full relative precision when both log-gammas are huge (a ~ 1e9).
double log_gamma_increment(double a, double d);

// log Gamma_p(a + d) - log Gamma_p(a) as a sum of scalar increments.
// Requires a > (p-1)/2 and d >= 0.
double log_multigamma_increment(int p, double a, double d);

// log|I + a| for symmetric positive semidefinite a. Pivots are tracked as
// offsets from one and logged with log1p, so tiny a keep relative precision.
double log_det_identity_plus(const Matrix& a);

}  // namespace rcm
