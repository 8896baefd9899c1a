#include <hetsync/decoupling.hpp>
#include <hetsync/graph.hpp>
#include <hetsync/protocol.hpp>
#include <hetsync/random.hpp>
#include <hetsync/riccati.hpp>
#include <hetsync/simulator.hpp>
#include <hetsync/spectral.hpp>

#include <benchmark/benchmark.h>

#include <vector>

namespace {

using namespace hetsync;

Matrix example_adjacency() {
  Matrix a(4, 4);
  a << 0, 1, 2, 4,
       1, 0, 2, 0,
       2, 2, 0, 3,
       4, 0, 3, 0;
  return a;
}

std::vector<Matrix> example_dynamics() {
  std::vector<Matrix> s(4, Matrix::Zero(3, 3));
  s[1] << 0, 2, 0, 0, 0, 2, 0, 0, 3;
  s[2] << 0, 1, 0, 0, 0, 1, 0, 0, 2;
  s[3] << 0, 1, 0, 0, 0, 1, 0, 0, 1;
  return s;
}

Matrix ring_adjacency(Eigen::Index n) {
  Matrix a = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, (i + 1) % n) = 1.0;
    a((i + 1) % n, i) = 1.0;
  }
  return a;
}

void BM_LaplacianSpectrum(benchmark::State& state) {
  const Matrix lap = build_laplacian(WeightedGraph::from_adjacency(ring_adjacency(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(spectrum(lap));
}
BENCHMARK(BM_LaplacianSpectrum)->RangeMultiplier(4)->Range(4, 256);

void BM_SpectralRadius(benchmark::State& state) {
  Rng rng(7);
  const Matrix a = rng.matrix(state.range(0), state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(spectral_radius(a));
}
BENCHMARK(BM_SpectralRadius)->RangeMultiplier(2)->Range(2, 64);

void BM_ShrinkSimilarity(benchmark::State& state) {
  Rng rng(11);
  const Matrix a = rng.matrix(state.range(0), state.range(0), -2.0, 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(shrink_similarity(a, 0.01));
}
BENCHMARK(BM_ShrinkSimilarity)->DenseRange(2, 8, 2);

void BM_RiccatiSolve(benchmark::State& state) {
  const std::vector<Matrix> s = example_dynamics();
  const RiccatiProblem problem{average_dynamics(s), Vector::Unit(3, 2), 0.6};
  for (auto _ : state) benchmark::DoNotOptimize(solve_modified_riccati(problem));
}
BENCHMARK(BM_RiccatiSolve);

void BM_DesignProtocol(benchmark::State& state) {
  const std::vector<Matrix> s = example_dynamics();
  const LaplacianSpectrum spec = spectrum(build_laplacian(WeightedGraph::from_adjacency(example_adjacency())));
  DesignOptions o;
  o.eta = 0.6;
  for (auto _ : state) benchmark::DoNotOptimize(design_protocol(s, Vector::Unit(3, 2), spec, o));
}
BENCHMARK(BM_DesignProtocol);

void BM_SimulationStep(benchmark::State& state) {
  const std::vector<Matrix> s = example_dynamics();
  const Vector b = Vector::Unit(3, 2);
  const LaplacianSpectrum spec = spectrum(build_laplacian(WeightedGraph::from_adjacency(example_adjacency())));
  DesignOptions o;
  o.eta = 0.6;
  const ProtocolDesign design = design_protocol(s, b, spec, o);
  Rng rng(2024);
  std::vector<Vector> xs;
  for (int i = 0; i < 4; ++i) xs.push_back(rng.vector(3));
  const AgentEnsemble start(s, xs, b);
  AgentEnsemble ens = start;
  for (auto _ : state) {
    // Restart before the states leave double range.
    if (ens.time() == 200) {
      state.PauseTiming();
      ens = start;
      state.ResumeTiming();
    }
    ens.advance(spec.laplacian, design);
  }
}
BENCHMARK(BM_SimulationStep);

void BM_Simulate(benchmark::State& state) {
  const std::vector<Matrix> s = example_dynamics();
  const Vector b = Vector::Unit(3, 2);
  const WeightedGraph g = WeightedGraph::from_adjacency(example_adjacency());
  const LaplacianSpectrum spec = spectrum(build_laplacian(g));
  DesignOptions o;
  o.eta = 0.6;
  const ProtocolDesign design = design_protocol(s, b, spec, o);
  Rng rng(2024);
  std::vector<Vector> xs;
  for (int i = 0; i < 4; ++i) xs.push_back(rng.vector(3));
  SimulationOptions opts;
  opts.horizon = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(simulate(g, s, xs, b, design, opts));
}
BENCHMARK(BM_Simulate)->Arg(60)->Arg(110);

void BM_DecouplingTrial(benchmark::State& state) {
  std::uint64_t seed = 0;
  for (auto _ : state) {
    const DecouplingTrial trial = make_decoupling_trial(seed++);
    benchmark::DoNotOptimize(run_trial(trial, 300));
  }
}
BENCHMARK(BM_DecouplingTrial);

}  // namespace
BENCHMARK_MAIN();
