#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <boost/random/mersenne_twister.hpp>

#include "rcm/matrixcore.hpp"
#include "rcm/model.hpp"

namespace rcm {

// Seeded random stream. The engine is the 64-bit Mersenne Twister
// (mt19937_64) and the variate generators are Boost.Random's, whose output is
// specified by their implementation rather than by the platform's standard
// library, so draws are reproducible across toolchains.
class Rng {
 public:
  using Engine = boost::random::mt19937_64;
  static constexpr int kAlgorithmVersion = 1;

  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  // Independent stream for the index-th study/replicate: seeded with
  // seed XOR (golden-ratio constant * (index + 1)).
  Rng substream(std::uint64_t index) const;

  double normal();
  double uniform();
  // Chi-squared with real-valued degrees of freedom (Gamma(dof/2, 2)).
  double chi_squared(double dof);
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  Engine& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  Engine engine_;
};

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// n x p matrix whose rows are i.i.d. N(0, sigma).
Matrix sample_mvn(Rng& rng, int n, const SpdMatrix& sigma);

// Bartlett decomposition; nu may be non-integer. Throws DomainError unless
// nu > p - 1.
SpdMatrix sample_wishart(Rng& rng, const SpdMatrix& theta, double nu);

SpdMatrix sample_inv_wishart(Rng& rng, const SpdMatrix& psi, double nu);

struct SyntheticDataset {
  std::vector<Matrix> studies;           // n_i x p observation matrices
  std::vector<SpdMatrix> realized_sigmas;  // the Sigma_i that generated each study
  std::uint64_t seed = 0;
};

// Sigma_i ~ InvWishart(psi, nu), then rows of X_i ~ N(0, Sigma_i). Study i
// draws from rng.substream(i), so studies can be generated independently.
SyntheticDataset generate_rcm_dataset(const Rng& rng, const RcmParams& params,
                                      std::span<const int> sizes);

// Diagonal `variance`, off-diagonal `covariance`. Throws DomainError when the
// result is not positive definite.
SpdMatrix compound_symmetry(Eigen::Index p, double variance, double covariance);

}  // namespace rcm
