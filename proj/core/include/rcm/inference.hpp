#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rcm/estimators.hpp"
#include "rcm/matrixcore.hpp"
#include "rcm/sampling.hpp"

namespace rcm {

// Intra-class correlation 1/(nu - p): the share of the variance of a
// covariance entry that lies between studies. Requires nu > p (the moments
// behind it exist only for nu > p + 3).
double icc(double nu, int p);

// Cov(Sigma_ij, Sigma_kl) for Sigma ~ InvWishart(psi, nu):
//   [2 psi_ij psi_kl + (nu-p-1)(psi_ik psi_jl + psi_il psi_kj)]
//   / [(nu-p)(nu-p-1)^2(nu-p-3)]
// Requires nu > p + 3.
double invwishart_cov(const SpdMatrix& psi, double nu, Eigen::Index i, Eigen::Index j,
                      Eigen::Index k, Eigen::Index l);

// Simulates Sigma ~ InvWishart(psi, nu) and a single observation
// x | Sigma ~ N(0, Sigma), S = x x^T, and returns the empirical
// Var(Sigma_ij) / Var(S_ij) averaged over all pairs i <= j.
double icc_montecarlo(const SpdMatrix& psi, double nu, int draws, Rng& rng);

struct HomogeneityTest {
  double nu_obs = 0.0;
  std::vector<double> null_nus;  // ordered by replicate index
  double p_value = 1.0;
  int n_permutations = 0;
  std::uint64_t seed = 0;
};

// (1 + #{null < observed}) / (N + 1). Small nu is the critical direction.
double permutation_p_value(double nu_obs, std::span<const double> null_nus);

struct PermutationConfig {
  FitOptions fit;
  // Iteration cap for the null refits; the observed fit uses fit.max_iter.
  int null_max_iter = 200;
  // Re-center every (pseudo-)study before forming its scatter matrix.
  bool center = true;
  int threads = 1;
};

// Fits the observed studies, then N times pools all rows, reassigns them to
// pseudo-studies of the original sizes and refits. Replicate r draws from
// rng.substream(r). Throws DomainError for fewer than two studies or N < 1.
HomogeneityTest permutation_test(std::span<const Matrix> raw_studies, int n_permutations,
                                 const PermutationConfig& config, const Rng& rng);

}  // namespace rcm
