// Reference (serial) kernels against the OpenMP ones. Run with
// OMP_NUM_THREADS set to compare thread counts; both variants share inputs.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "mam/kernels/attention.hpp"
#include "mam/kernels/conv2d.hpp"
#include "mam/kernels/separable.hpp"

using namespace mam::kernels;

namespace {

std::vector<float> random_vec(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Args: channels, side.
Conv2dGeometry conv_geometry(const benchmark::State& st) {
  const int c = int(st.range(0)), side = int(st.range(1));
  return make_conv2d_geometry(4, c, side, side, c, 3, 1, 1);
}

template <bool Parallel>
void BM_conv2d_forward(benchmark::State& st) {
  const auto g = conv_geometry(st);
  const auto x = random_vec(std::size_t(g.input_size()), 1);
  const auto w = random_vec(std::size_t(g.weight_size()), 2);
  const auto b = random_vec(std::size_t(g.out_channels), 3);
  std::vector<float> y(std::size_t(g.output_size()));
  for (auto _ : st) {
    if constexpr (Parallel) conv2d_forward<float>(g, x, w, b, y);
    else reference::conv2d_forward<float>(g, x, w, b, y);
    benchmark::DoNotOptimize(y.data());
  }
  st.SetItemsProcessed(st.iterations() * g.output_size() * g.in_channels * 9);
}

template <bool Parallel>
void BM_conv2d_backward(benchmark::State& st) {
  const auto g = conv_geometry(st);
  const auto x = random_vec(std::size_t(g.input_size()), 1);
  const auto w = random_vec(std::size_t(g.weight_size()), 2);
  const auto dy = random_vec(std::size_t(g.output_size()), 4);
  std::vector<float> dx(std::size_t(g.input_size())), dw(std::size_t(g.weight_size())), db(std::size_t(g.out_channels));
  for (auto _ : st) {
    if constexpr (Parallel) {
      conv2d_backward_input<float>(g, w, dy, dx);
      conv2d_backward_params<float>(g, x, dy, dw, db);
    } else {
      reference::conv2d_backward_input<float>(g, w, dy, dx);
      reference::conv2d_backward_params<float>(g, x, dy, dw, db);
    }
    benchmark::DoNotOptimize(dx.data());
    benchmark::DoNotOptimize(dw.data());
  }
  st.SetItemsProcessed(st.iterations() * g.output_size() * g.in_channels * 9 * 2);
}

// Args: planes, side (2× bilinear upsample).
template <bool Parallel>
void BM_separable_upsample(benchmark::State& st) {
  const int planes = int(st.range(0)), side = int(st.range(1));
  const auto m = bilinear_map(side, 2 * side);
  const auto x = random_vec(std::size_t(planes) * side * side, 5);
  std::vector<float> y(std::size_t(planes) * 4 * side * side);
  for (auto _ : st) {
    if constexpr (Parallel) separable_apply<float>(m, m, planes, x, y);
    else reference::separable_apply<float>(m, m, planes, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  st.SetItemsProcessed(st.iterations() * std::int64_t(y.size()));
}

// Args: channels, side (positions = side²).
template <bool Parallel>
void BM_attention(benchmark::State& st) {
  AttentionGeometry g;
  g.batch = 4;
  g.key_channels = int(st.range(0)) / 8;
  g.value_channels = int(st.range(0));
  g.positions = int(st.range(1) * st.range(1));
  const auto P = std::size_t(g.positions);
  const auto q = random_vec(std::size_t(g.batch) * g.key_channels * P, 6);
  const auto k = random_vec(q.size(), 7);
  const auto v = random_vec(std::size_t(g.batch) * g.value_channels * P, 8);
  const auto dout = random_vec(v.size(), 9);
  std::vector<float> attn(std::size_t(g.batch) * P * P), out(v.size());
  std::vector<float> dq(q.size()), dk(k.size()), dv(v.size());
  for (auto _ : st) {
    if constexpr (Parallel) {
      attention_forward<float>(g, 0.5f, q, k, v, attn, out);
      attention_backward<float>(g, 0.5f, q, k, v, attn, dout, dq, dk, dv);
    } else {
      reference::attention_forward<float>(g, 0.5f, q, k, v, attn, out);
      reference::attention_backward<float>(g, 0.5f, q, k, v, attn, dout, dq, dk, dv);
    }
    benchmark::DoNotOptimize(out.data());
    benchmark::DoNotOptimize(dq.data());
  }
}

}  // namespace

BENCHMARK(BM_conv2d_forward<false>)->Name("conv2d_forward/reference")->Args({16, 32})->Args({32, 64})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv2d_forward<true>)->Name("conv2d_forward/parallel")->Args({16, 32})->Args({32, 64})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv2d_backward<false>)->Name("conv2d_backward/reference")->Args({16, 32})->Args({32, 64})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv2d_backward<true>)->Name("conv2d_backward/parallel")->Args({16, 32})->Args({32, 64})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_separable_upsample<false>)->Name("bilinear_x2/reference")->Args({16, 64})->Args({4, 256})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_separable_upsample<true>)->Name("bilinear_x2/parallel")->Args({16, 64})->Args({4, 256})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_attention<false>)->Name("attention/reference")->Args({32, 8})->Args({64, 16})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_attention<true>)->Name("attention/parallel")->Args({32, 8})->Args({64, 16})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
