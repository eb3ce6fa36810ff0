#include "rcm/model.hpp"

#include <string>

#include "rcm/errors.hpp"

namespace rcm {

void RcmParams::validate() const {
  const auto p = static_cast<double>(dim());
  if (!(nu > p - 1.0)) {
    throw DomainError("nu = " + std::to_string(nu) + " must exceed p - 1 = " +
                      std::to_string(p - 1.0));
  }
}

SpdMatrix RcmParams::expected_covariance() const {
  const auto p = static_cast<double>(dim());
  if (!(nu > p + 1.0)) {
    throw DomainError("expected covariance requires nu > p + 1 (nu = " + std::to_string(nu) +
                      ")");
  }
  return SpdMatrix(psi.matrix() / (nu - p - 1.0));
}

Matrix center_columns(const Matrix& x) {
  if (x.rows() == 0) return x;
  return x.rowwise() - x.colwise().mean();
}

StudyData study_from_observations(const Matrix& x) {
  if (x.rows() < 1) throw DomainError("study has no observations");
  Matrix s = Matrix::Zero(x.cols(), x.cols());
  s.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
  s.triangularView<Eigen::StrictlyUpper>() = s.transpose();
  return {std::move(s), static_cast<int>(x.rows())};
}

std::vector<StudyData> studies_from_observations(std::span<const Matrix> xs) {
  std::vector<StudyData> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(study_from_observations(x));
  return out;
}

Eigen::Index common_dim(StudySpan data) {
  if (data.empty()) throw DomainError("no studies supplied");
  const Eigen::Index p = data.front().scatter.rows();
  for (const auto& s : data) {
    if (s.scatter.rows() != p || s.scatter.cols() != p) {
      throw DimensionMismatch("studies disagree on dimension");
    }
    if (s.n < 1) throw DomainError("study sample count must be >= 1");
  }
  return p;
}

long total_samples(StudySpan data) {
  long n = 0;
  for (const auto& s : data) n += s.n;
  return n;
}

Matrix total_scatter(StudySpan data) {
  const auto p = common_dim(data);
  Matrix acc = Matrix::Zero(p, p);
  for (const auto& s : data) acc += s.scatter;
  return acc;
}

}  // namespace rcm
