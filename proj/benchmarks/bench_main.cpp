// Microbenchmarks for the hot paths of the preprocessing and scoring
// pipeline. Fixture sizes are scaled-down but structurally realistic slides
// (white background, one dense content block).

#include <benchmark/benchmark.h>

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "clotkit/augment.hpp"
#include "clotkit/metrics.hpp"
#include "clotkit/preprocess.hpp"
#include "clotkit/rng.hpp"
#include "clotkit/trainer.hpp"

namespace {

using namespace clotkit;

RasterImage synthetic_slide(int w, int h, unsigned seed) {
  RasterImage img = RasterImage::filled(w, h, 255, 255, 255);
  std::mt19937 gen(seed);
  const int bw = w / 2, bh = h / 2;
  const int x0 = w / 8, y0 = h / 8;
  for (int y = y0; y < y0 + bh; ++y) {
    for (int x = x0; x < x0 + bw; ++x) {
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = static_cast<std::uint8_t>(gen() % 201);
    }
  }
  return img;
}

void bm_content_bounds(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const RasterImage img = synthetic_slide(side, side, 1);
  const BackgroundPolicy policy;
  for (auto _ : state) {
    benchmark::DoNotOptimize(content_bounds(img, policy));
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * side * side * 3);
}
BENCHMARK(bm_content_bounds)->Arg(512)->Arg(2048);

void bm_prune(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const RasterImage img = synthetic_slide(side, side, 2);
  for (auto _ : state) {
    RasterImage copy = img;
    benchmark::DoNotOptimize(prune(std::move(copy), BackgroundPolicy{}));
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * side * side * 3);
}
BENCHMARK(bm_prune)->Arg(512)->Arg(2048);

void bm_resize_to_1024(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const RasterImage img = synthetic_slide(side, side, 3);
  for (auto _ : state) {
    RasterImage copy = img;
    benchmark::DoNotOptimize(resize(std::move(copy), 1024));
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * side * side * 3);
}
BENCHMARK(bm_resize_to_1024)->Arg(512)->Arg(2048);

void bm_clahe(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const RasterImage img = synthetic_slide(side, side, 4);
  TransformSpec spec;
  spec.kind = TransformKind::Clahe;
  spec.probability = 1.0;
  for (auto _ : state) {
    CounterRng rng(7);
    benchmark::DoNotOptimize(apply_transform(spec, img, rng));
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * side * side * 3);
}
BENCHMARK(bm_clahe)->Arg(256)->Arg(1024);

void bm_default_pipeline(benchmark::State& state) {
  const RasterImage img = synthetic_slide(256, 256, 5);
  const AugPipeline pipeline = default_pipeline();
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(compose_pipeline(pipeline, img, seed++));
  }
}
BENCHMARK(bm_default_pipeline);

void bm_wmcll(benchmark::State& state) {
  const int rows = static_cast<int>(state.range(0));
  std::mt19937 gen(6);
  std::uniform_real_distribution<double> prob(0.001, 0.999);
  WmcllInput input;
  input.class_weights = {1.0, 1.0};
  for (int i = 0; i < rows; ++i) {
    const double p = prob(gen);
    input.rows.push_back({i % 2, {p, 1.0 - p}});
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(wmcll(input));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * rows);
}
BENCHMARK(bm_wmcll)->Arg(1000)->Arg(100000);

void bm_head_train_epoch(benchmark::State& state) {
  const int n = 256, dim = 64;
  std::mt19937 gen(8);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<std::vector<double>> xs(n, std::vector<double>(dim));
  for (auto& x : xs)
    for (double& v : x) v = noise(gen);

  HeadConfig cfg;
  cfg.in_dim = dim;
  HeadParams params = HeadParams::init(cfg, 9);
  AdamState adam = AdamState::zeros(cfg);
  CounterRng dropout_rng(10);

  for (auto _ : state) {
    HeadGrads grads = HeadGrads::zeros(cfg);
    for (int i = 0; i < n; ++i) {
      ForwardCache cache;
      head_forward(params, xs[static_cast<std::size_t>(i)], &cache, &dropout_rng);
      head_backward(params, cache, smooth_labels(i % 2, 0.01, 2), grads);
    }
    adam_step(params, grads, adam, 1e-4);
    benchmark::DoNotOptimize(params.w1.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * n);
}
BENCHMARK(bm_head_train_epoch);

}  // namespace

BENCHMARK_MAIN();
