#include <benchmark/benchmark.h>

#include "lanerl/net.hpp"
#include "lanerl/rng.hpp"
#include "lanerl/tape.hpp"

using namespace lanerl;
using namespace lanerl::nn;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-1.0, 1.0);
  return t;
}

void BM_conv_forward(benchmark::State& state) {
  int n = static_cast<int>(state.range(0));
  int c = static_cast<int>(state.range(1));
  int side = static_cast<int>(state.range(2));
  Rng rng(1);
  Tensor x = random_tensor({n, c, side, side}, rng);
  Tensor w = random_tensor({c, c, 3, 3}, rng);
  Tensor b = random_tensor({c}, rng);
  for (auto _ : state) {
    Tape t;
    Var out = conv2d(t, t.input(x, false), t.input(w, false), t.input(b, false), 1, 1);
    benchmark::DoNotOptimize(t.value(out).data());
  }
  double flops = 2.0 * n * c * c * side * side * 9;
  state.counters["gflops"] =
      benchmark::Counter(flops * 1e-9, benchmark::Counter::kIsIterationInvariantRate);
}

void BM_conv_train(benchmark::State& state) {
  int n = static_cast<int>(state.range(0));
  int c = static_cast<int>(state.range(1));
  int side = static_cast<int>(state.range(2));
  Rng rng(1);
  Tensor x = random_tensor({n, c, side, side}, rng);
  Tensor w = random_tensor({c, c, 3, 3}, rng);
  Tensor b = random_tensor({c}, rng);
  for (auto _ : state) {
    Tape t;
    Var wx = t.input(w, true);
    Var out = conv2d(t, t.input(x, true), wx, t.input(b, true), 1, 1);
    t.backward(sum_all(t, out));
    benchmark::DoNotOptimize(t.grad(wx).data());
  }
  double flops = 3.0 * 2.0 * n * c * c * side * side * 9;
  state.counters["gflops"] =
      benchmark::Counter(flops * 1e-9, benchmark::Counter::kIsIterationInvariantRate);
}

void BM_actor_forward(benchmark::State& state) {
  NetSpec spec;
  spec.grid_h = 16;
  spec.grid_w = 16;
  spec.channels = {8, 16};
  spec.blocks_per_stage = 1;
  spec.head_hidden = {24};
  Rng rng(2);
  ParamVector params = actor_layout(spec);
  init_params(params, rng);
  int n = static_cast<int>(state.range(0));
  std::vector<Observation> obs(n);
  for (Observation& o : obs) {
    o.grid = SemGrid::filled(16, 16, kDrivable);
    o.speed = 0.3;
  }
  ObsBatch batch = make_obs_batch(spec, obs);
  for (auto _ : state) {
    Tape t;
    BoundParams bound = bind_params(t, params, false);
    ActorVars v = actor_forward(t, spec, bound, batch);
    benchmark::DoNotOptimize(t.value(v.mean).data());
  }
}

}  // namespace

BENCHMARK(BM_conv_forward)->Args({256, 8, 8})->Args({256, 16, 4})->Args({32, 8, 32});
BENCHMARK(BM_conv_train)->Args({256, 8, 8})->Args({256, 16, 4});
BENCHMARK(BM_actor_forward)->Arg(1)->Arg(256);

BENCHMARK_MAIN();
