#include "bvmlab/estimation.hpp"
#include "bvmlab/gauss_compare.hpp"
#include "bvmlab/models.hpp"
#include "bvmlab/numerics.hpp"
#include "bvmlab/posterior.hpp"
#include "bvmlab/priors.hpp"
#include "bvmlab/random.hpp"
#include "bvmlab/tail_bounds.hpp"

#include <benchmark/benchmark.h>

using namespace bvmlab;

namespace {

Matrix random_spd(Index d, std::uint64_t seed) {
  RandomSource rs(seed, 0);
  Matrix b(d, d);
  rs.fill_normal(b);
  return b * b.transpose() + Matrix::Identity(d, d);
}

void BM_SpdFactor(benchmark::State& state) {
  const Matrix m = random_spd(state.range(0), 1);
  for (auto _ : state) benchmark::DoNotOptimize(spd_factor(m));
}
BENCHMARK(BM_SpdFactor)->Arg(8)->Arg(32)->Arg(128);

void BM_TraceSolve(benchmark::State& state) {
  const Matrix a = random_spd(state.range(0), 2);
  const Matrix b = random_spd(state.range(0), 3);
  for (auto _ : state) benchmark::DoNotOptimize(trace_solve(a, b));
}
BENCHMARK(BM_TraceSolve)->Arg(8)->Arg(32)->Arg(128);

void BM_FillNormal(benchmark::State& state) {
  RandomSource rs(4, 0);
  Matrix out(16, state.range(0));
  for (auto _ : state) {
    rs.fill_normal(out);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * out.size());
}
BENCHMARK(BM_FillNormal)->Arg(1024)->Arg(65536);

void BM_LogDensityFisher(benchmark::State& state) {
  const LogDensityModel m(1000, state.range(0));
  const Vector theta = sobolev_truth(state.range(0), 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(m.fisher(theta));
}
BENCHMARK(BM_LogDensityFisher)->Arg(8)->Arg(32);

void BM_LogisticFisher(benchmark::State& state) {
  const GlmModel m(GlmLink::logistic, static_cast<std::size_t>(state.range(0)), 16);
  const Vector theta = sobolev_truth(16, 1.5);
  for (auto _ : state) benchmark::DoNotOptimize(m.fisher(theta));
}
BENCHMARK(BM_LogisticFisher)->Arg(1000)->Arg(100000);

void BM_FitPmle(benchmark::State& state) {
  const Index p = state.range(0);
  const LogDensityModel m(5000, p);
  RandomSource rs(5, 0);
  const Vector t = m.statistic(m.sample(sobolev_truth(p, 2.0), rs));
  const Vector g2 = PriorSpec::smooth(1.0, 1.0).precision_diagonal(p);
  for (auto _ : state) benchmark::DoNotOptimize(fit_pmle(m, t, g2, Vector::Zero(p)));
}
BENCHMARK(BM_FitPmle)->Arg(8)->Arg(32);

void BM_ImportanceSample(benchmark::State& state) {
  const Index p = 8;
  const LogDensityModel m(5000, p);
  RandomSource rs(6, 0);
  const Vector t = m.statistic(m.sample(sobolev_truth(p, 2.0), rs));
  const FitResult fit = fit_pmle(m, t, Vector::Zero(p), Vector::Zero(p));
  const GaussianBlock block = GaussianBlock::generate(state.range(0), p, RandomSource(6, 1));
  for (auto _ : state) benchmark::DoNotOptimize(importance_sample(m, t, fit, block));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ImportanceSample)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_BvmErrors(benchmark::State& state) {
  const Index p = 8;
  const LogDensityModel m(5000, p);
  RandomSource rs(7, 0);
  const Vector t = m.statistic(m.sample(sobolev_truth(p, 2.0), rs));
  const FitResult fit = fit_pmle(m, t, Vector::Zero(p), Vector::Zero(p));
  const GaussianBlock block = GaussianBlock::generate(state.range(0), p, RandomSource(7, 1));
  const PosteriorSample is = importance_sample(m, t, fit, block);
  const LaplaceApprox la = laplace(fit);
  const Matrix q = Matrix::Identity(p, p);
  for (auto _ : state) {
    benchmark::DoNotOptimize(bvm_errors(is, la, q, BvmMode::symmetric, block));
  }
}
BENCHMARK(BM_BvmErrors)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_ZQuantile(benchmark::State& state) {
  const TailSpec ts{12.0, 20.0, 2.5};
  double x = 0.5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(z_quantile(ts, x));
    x = x < 10.0 ? x + 0.01 : 0.5;
  }
}
BENCHMARK(BM_ZQuantile);

void BM_SolveExpTail(benchmark::State& state) {
  const TailSpec ts = TailSpec::identity(16);
  for (auto _ : state) benchmark::DoNotOptimize(solve_exp_tail(ts, 50.0));
}
BENCHMARK(BM_SolveExpTail);

void BM_ComparisonBound(benchmark::State& state) {
  const Index d = state.range(0);
  const GaussComparisonCase c{random_spd(d, 8), random_spd(d, 9), Vector::Constant(d, 0.1)};
  for (auto _ : state) benchmark::DoNotOptimize(comparison_bound(c));
}
BENCHMARK(BM_ComparisonBound)->Arg(8)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
