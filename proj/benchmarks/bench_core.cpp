#include <benchmark/benchmark.h>

#include "stdic/engine.hpp"
#include "stdic/solver.hpp"
#include "stdic/synth.hpp"

namespace {

using namespace stdic;

const GrayImage& base() {
  static const GrayImage img = make_speckle(151, 151, 3);
  return img;
}

void BM_SampleWithGradient(benchmark::State& state) {
  const GrayImage& img = base();
  double x = 20.25, acc = 0.0;
  for (auto _ : state) {
    acc += img.sample_with_gradient(x, 60.75).value;
    x = x > 120.0 ? 20.25 : x + 0.37;
  }
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_SampleWithGradient);

void BM_PrecomputeIC(benchmark::State& state) {
  const ShapeFunctionSpec spec = state.range(0) == 1 ? ShapeFunctionSpec(1, 0, {}, 1)
                                                     : ShapeFunctionSpec(1, 1, {true, true}, 5);
  const SubsetRegion region{75, 75, 15};
  for (auto _ : state) benchmark::DoNotOptimize(precompute_ic(base(), region, spec, CriterionKind::ZNSSD));
}
BENCHMARK(BM_PrecomputeIC)->Arg(1)->Arg(5);

void BM_SolveIC(benchmark::State& state) {
  const bool temporal = state.range(0) == 5;
  const ShapeFunctionSpec spec = temporal ? ShapeFunctionSpec(1, 1, {true, true}, 5) : ShapeFunctionSpec(1, 0, {}, 1);
  std::vector<GrayImage> frames;
  for (int t = 0; t < 5; ++t) frames.push_back(fourier_shift(base(), 0.3 + 0.05 * t, -0.2));
  std::vector<const GrayImage*> ptrs;
  for (int t = 0; t < spec.window(); ++t) ptrs.push_back(&frames[static_cast<std::size_t>(t)]);
  const FrameWindow window(ptrs);
  const SubsetRegion region{75, 75, 15};
  const PrecomputedIC pre = precompute_ic(base(), region, spec, CriterionKind::ZNSSD);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        solve_ic(pre, window, region, spec, CriterionKind::ZNSSD, ParamSet::zero(spec), SolveSettings{}));
  }
}
BENCHMARK(BM_SolveIC)->Arg(1)->Arg(5);

void BM_InitialGuess(benchmark::State& state) {
  const GrayImage moved = fourier_shift(base(), 3.4, -2.6);
  const SubsetRegion region{75, 75, 15};
  const auto radius = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(initial_guess(base(), moved, region, radius));
}
BENCHMARK(BM_InitialGuess)->Arg(5)->Arg(10);

void BM_FourierShift(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(fourier_shift(base(), 0.35, -0.15));
}
BENCHMARK(BM_FourierShift);

}  // namespace

BENCHMARK_MAIN();
