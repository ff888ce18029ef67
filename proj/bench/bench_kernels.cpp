// Parallel kernels against their serial references.

#include <benchmark/benchmark.h>

#include <random>

#include "spkg/kg.hpp"
#include "spkg/linalg.hpp"

namespace {

using namespace spkg;

struct Problem {
  Vector mean;
  Matrix cov;
  Vector noise;
};

Problem make_problem(int M) {
  Rng rng(42);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix a(M, M);
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j) a(i, j) = n(rng);
  Problem p;
  p.mean = Vector::NullaryExpr(M, [&](Index) { return n(rng); });
  p.cov = symmetrized(a * a.transpose() / M + 0.1 * Matrix::Identity(M, M));
  p.noise = Vector::Constant(M, 0.5);
  return p;
}

std::vector<McContext> make_contexts(const Problem& p, int fixed, int count) {
  std::vector<McContext> out;
  for (int c = 0; c < count; ++c) {
    McContext ctx{p.mean, p.cov, {}, 1.0 / count};
    for (int b = 0; b < fixed; ++b) ctx.directions.push_back(sigma_tilde(p.cov, (b * 7 + c) % p.mean.size(), 0.5));
    out.push_back(std::move(ctx));
  }
  return out;
}

void BM_kg_lookup(benchmark::State& state) {
  const auto p = make_problem(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kg_lookup(p.mean, p.cov, p.noise));
}

void BM_kg_lookup_reference(benchmark::State& state) {
  const auto p = make_problem(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(reference::kg_lookup(p.mean, p.cov, p.noise));
}

void BM_mc_sweep(benchmark::State& state) {
  const auto p = make_problem(static_cast<int>(state.range(0)));
  const auto contexts = make_contexts(p, 2, 4);
  Rng rng(7);
  const Matrix normals = draw_normals(200, 3, rng);
  for (auto _ : state) benchmark::DoNotOptimize(mc_sweep(contexts, p.noise, normals));
}

void BM_mc_sweep_reference(benchmark::State& state) {
  const auto p = make_problem(static_cast<int>(state.range(0)));
  const auto contexts = make_contexts(p, 2, 4);
  Rng rng(7);
  const Matrix normals = draw_normals(200, 3, rng);
  for (auto _ : state) benchmark::DoNotOptimize(reference::mc_sweep(contexts, p.noise, normals));
}

}  // namespace

BENCHMARK(BM_kg_lookup)->Arg(50)->Arg(200);
BENCHMARK(BM_kg_lookup_reference)->Arg(50)->Arg(200);
BENCHMARK(BM_mc_sweep)->Arg(50)->Arg(100);
BENCHMARK(BM_mc_sweep_reference)->Arg(50)->Arg(100);

BENCHMARK_MAIN();
