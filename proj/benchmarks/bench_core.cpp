#include <vector>

#include <benchmark/benchmark.h>

#include "rcm/estimators.hpp"
#include "rcm/likelihood.hpp"
#include "rcm/sampling.hpp"

namespace {

using namespace rcm;

std::vector<StudyData> dataset(int p, int n, int k = 3) {
  const RcmParams truth{compound_symmetry(p, 1.0, 0.5), p + 10.0};
  const auto ds = generate_rcm_dataset(Rng(1), truth, std::vector<int>(k, n));
  return studies_from_observations(ds.studies);
}

void BM_LogLikelihood(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  const auto data = dataset(p, p);
  const RcmParams at{compound_symmetry(p, 1.0, 0.5), p + 10.0};
  for (auto _ : state) benchmark::DoNotOptimize(log_likelihood(at, data));
}
BENCHMARK(BM_LogLikelihood)->Arg(5)->Arg(20)->Arg(100);

void BM_LogLikelihoodFast(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  const RcmParams truth{compound_symmetry(p, 1.0, 0.5), p + 10.0};
  const auto ds = generate_rcm_dataset(Rng(1), truth, std::vector<int>(3, 10));
  for (auto _ : state) benchmark::DoNotOptimize(log_likelihood_fast(truth, ds.studies));
}
BENCHMARK(BM_LogLikelihoodFast)->Arg(20)->Arg(100);

void BM_EmStep(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  const auto data = dataset(p, p);
  const SpdMatrix theta = SpdMatrix::identity(p);
  for (auto _ : state) benchmark::DoNotOptimize(em_step(theta, data, p + 10.0));
}
BENCHMARK(BM_EmStep)->Arg(5)->Arg(20)->Arg(100);

void BM_FitRcm(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  const auto data = dataset(p, 2 * p);
  const auto init = default_init(data);
  for (auto _ : state) benchmark::DoNotOptimize(fit_rcm(data, init).nu_hat);
}
BENCHMARK(BM_FitRcm)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
