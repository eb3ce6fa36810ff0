#pragma once

#include <span>
#include <vector>

#include "rcm/matrixcore.hpp"

namespace rcm {

// Parameters of the random covariance model: Sigma_i ~ InvWishart(psi, nu).
struct RcmParams {
  SpdMatrix psi;
  double nu;

  Eigen::Index dim() const { return psi.dim(); }
  // Throws DomainError unless nu > p - 1.
  void validate() const;
  // E[Sigma_i] = psi / (nu - p - 1); throws DomainError unless nu > p + 1.
  SpdMatrix expected_covariance() const;
};

// Sufficient statistics of one study: scatter S = X^T X and row count n.
struct StudyData {
  Matrix scatter;
  int n = 0;
};

using StudySpan = std::span<const StudyData>;

// Subtracts each column's mean.
Matrix center_columns(const Matrix& x);

StudyData study_from_observations(const Matrix& x);
std::vector<StudyData> studies_from_observations(std::span<const Matrix> xs);

// Common dimension of a study list; throws DomainError when empty and
// DimensionMismatch when dimensions disagree.
Eigen::Index common_dim(StudySpan data);

// n_1 + ... + n_k
long total_samples(StudySpan data);

// sum_i S_i
Matrix total_scatter(StudySpan data);

}  // namespace rcm
