// Serial reference kernels against the OpenMP ones.
#include <benchmark/benchmark.h>

#include "mergesim/mappo.hpp"
#include "mergesim/mlp.hpp"

using namespace mergesim;

namespace {

nn::Matrix random_inputs(Eigen::Index rows, Eigen::Index cols) {
  return nn::Matrix::Random(rows, cols);
}

nn::Mlp critic_net() { return nn::Mlp({150, 128, 128, 1}, 7); }

void BM_ForwardReference(benchmark::State& st) {
  const auto net = critic_net();
  const auto x = random_inputs(st.range(0), 150);
  for (auto _ : st) benchmark::DoNotOptimize(nn::forward_reference(net, x));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_ForwardParallel(benchmark::State& st) {
  const auto net = critic_net();
  const auto x = random_inputs(st.range(0), 150);
  for (auto _ : st) benchmark::DoNotOptimize(nn::forward(net, x));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_BackwardReference(benchmark::State& st) {
  const auto net = critic_net();
  const auto x = random_inputs(st.range(0), 150);
  const auto g = random_inputs(st.range(0), 1);
  for (auto _ : st) benchmark::DoNotOptimize(nn::backward_reference(net, x, g));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_BackwardParallel(benchmark::State& st) {
  const auto net = critic_net();
  const auto x = random_inputs(st.range(0), 150);
  const auto g = random_inputs(st.range(0), 1);
  for (auto _ : st) benchmark::DoNotOptimize(nn::backward(net, x, g));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <bool Parallel>
void BM_Rollout(benchmark::State& st) {
  EnvConfig env;
  PpoHyper h;
  const Policy policy = Policy::create(25, 150, h, 3);
  std::vector<RolloutWorker> workers;
  for (int w = 0; w < 4; ++w) workers.emplace_back(env, 11, w);
  for (auto _ : st) {
    auto buf = Parallel ? collect_rollout(workers, policy, 32, {}) : collect_rollout_serial(workers, policy, 32, {});
    benchmark::DoNotOptimize(buf.segments.size());
  }
  st.SetItemsProcessed(st.iterations() * 4 * 32);
}

}  // namespace

BENCHMARK(BM_ForwardReference)->Arg(64)->Arg(1024);
BENCHMARK(BM_ForwardParallel)->Arg(64)->Arg(1024);
BENCHMARK(BM_BackwardReference)->Arg(64)->Arg(1024);
BENCHMARK(BM_BackwardParallel)->Arg(64)->Arg(1024);
BENCHMARK_TEMPLATE(BM_Rollout, false)->Name("BM_RolloutSerial")->Unit(benchmark::kMillisecond);
BENCHMARK_TEMPLATE(BM_Rollout, true)->Name("BM_RolloutParallel")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
