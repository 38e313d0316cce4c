// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <random>

#include <latentlstm/backprop.hpp>
#include <latentlstm/latent.hpp>
#include <latentlstm/trainer.hpp>

using namespace latentlstm;

namespace {

ModelParams params_for(std::size_t hidden, std::size_t n) {
  ModelParams p = init_params(ModelConfig{1, hidden, 1, n}, 1);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (double& x : p.h0_table.span()) x = u(rng);
  return p;
}

void BM_LstmStep(benchmark::State& state) {
  const auto h = static_cast<std::size_t>(state.range(0));
  const ModelParams p = params_for(h, 1);
  CellState s{p.h0_table.row_vector(0), Vector(h)};
  const Vector x{0.1};
  for (auto _ : state) {
    auto r = lstm_step(p, x, s);
    benchmark::DoNotOptimize(r.state.h.data());
  }
}
BENCHMARK(BM_LstmStep)->Arg(32)->Arg(128);

void BM_RolloutBackward(benchmark::State& state) {
  const auto h = static_cast<std::size_t>(state.range(0));
  const std::size_t steps = 120;
  const ModelParams p = params_for(h, 1);
  std::vector<Vector> target(steps, Vector{0.3});
  for (auto _ : state) {
    const Rollout r = rollout_closed_loop(p, 0, steps);
    auto g = backward_sequence(p, r, target, 0);
    benchmark::DoNotOptimize(g.loss);
  }
}
BENCHMARK(BM_RolloutBackward)->Arg(32)->Arg(128)->Unit(benchmark::kMicrosecond);

// One full-batch epoch of the reconstruction acceptance setup.
void BM_Epoch(benchmark::State& state) {
  const Dataset ds = make_synthetic(SyntheticSpec{4, 5, 60}, 1);
  TrainingConfig cfg;
  cfg.epochs = 1000000;
  cfg.threads = static_cast<std::size_t>(state.range(0));
  Trainer t(ds, cfg, ModelConfig{1, 32, 1, 20});
  for (auto _ : state) benchmark::DoNotOptimize(t.run_epoch());
}
BENCHMARK(BM_Epoch)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_JacobiPca(benchmark::State& state) {
  const auto h = static_cast<std::size_t>(state.range(0));
  Matrix x(200, h);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (double& v : x.span()) v = n(rng);
  for (auto _ : state) {
    auto p = pca(x, 2);
    benchmark::DoNotOptimize(p.explained_variance.data());
  }
}
BENCHMARK(BM_JacobiPca)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
