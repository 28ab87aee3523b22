#include <benchmark/benchmark.h>

#include "fcaide/denoiser.hpp"
#include "fcaide/losses.hpp"
#include "fcaide/pixelwise.hpp"
#include "fcaide/training.hpp"
#include "fcaide/verification.hpp"

using namespace fcaide;

namespace {

Tensor noise_tensor(const Shape& s, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t(s);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-1.0, 1.0);
  return t;
}

void BM_MaskedConvForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor in = noise_tensor({16, n, n}, 1), k = noise_tensor({16, 16, 3, 3}, 2), b = noise_tensor({16}, 3);
  const Tensor mask = canonical_masks()[0].stream_mask();
  for (auto _ : state) {
    Tape tape;
    Var out = tape.conv2d_masked(tape.constant(in), tape.constant(k), mask, 2, tape.constant(b));
    benchmark::DoNotOptimize(out.value().data().data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n));
}
BENCHMARK(BM_MaskedConvForward)->Arg(40)->Arg(64);

void BM_MaskedConvForwardBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor in = noise_tensor({16, n, n}, 1), k = noise_tensor({16, 16, 3, 3}, 2), b = noise_tensor({16}, 3);
  const Tensor mask = canonical_masks()[0].stream_mask();
  for (auto _ : state) {
    Tape tape;
    Var vi = tape.variable(in), vk = tape.variable(k), vb = tape.variable(b);
    Var loss = tape.reduce_sum(tape.conv2d_masked(vi, vk, mask, 2, vb));
    benchmark::DoNotOptimize(tape.backward(loss).of(vk).data().data());
  }
}
BENCHMARK(BM_MaskedConvForwardBackward)->Arg(40)->Arg(64);

void BM_NetworkForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const NetworkParams p = build_network({4, 16, 2, 16}, 1);
  const Tensor z = noise_tensor({n, n}, 4);
  for (auto _ : state) benchmark::DoNotOptimize(forward(p, z).a[0].data().data());
}
BENCHMARK(BM_NetworkForward)->Arg(40)->Arg(64);

void BM_SupervisedPatchStep(benchmark::State& state) {
  const NetworkParams p = build_network({4, 16, 2, 16}, 1);
  const Tensor z = noise_tensor({40, 40}, 5), x = noise_tensor({40, 40}, 6);
  for (auto _ : state) {
    Tape tape;
    const BoundParams bound = bind_parameters(tape, p, true);
    Var vz = tape.constant(z);
    Var loss = mse(tape, tape.constant(x), apply_polynomial_map(tape, vz, forward(tape, bound, p.config, vz)));
    benchmark::DoNotOptimize(tape.backward(loss).at("block3.head0.bias").data().data());
  }
}
BENCHMARK(BM_SupervisedPatchStep)->Unit(benchmark::kMillisecond);

void BM_FineTuneEpoch(benchmark::State& state) {
  const NetworkParams p = build_network({4, 16, 2, 16}, 1);
  const GrayImage noisy = probe_image(64, 64);
  FineTuneConfig cfg = fine_tune_schedule(25.0);
  cfg.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(fine_tune(p, noisy, cfg).history.back().est_loss);
}
BENCHMARK(BM_FineTuneEpoch)->Unit(benchmark::kMillisecond);

void BM_FlipAveragedDenoise(benchmark::State& state) {
  const NetworkParams p = build_network({4, 16, 2, 16}, 1);
  const GrayImage noisy = probe_image(64, 64);
  for (auto _ : state) benchmark::DoNotOptimize(denoise(p, noisy, DenoiseMode::FlipAveraged).pixels().data());
}
BENCHMARK(BM_FlipAveragedDenoise)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
