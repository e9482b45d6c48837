#include <benchmark/benchmark.h>

#include <random>

#include "advdn/kernels.hpp"

namespace k = advdn::kernels;

namespace {

struct Layer {
  k::Tensor<float> in, out, grad_in;
  std::vector<float> w, b, gw, gb;

  Layer(int channels, int batch, int size)
      : in(channels, batch, size, size), out(channels, batch, size, size), grad_in(channels, batch, size, size),
        w(k::conv3x3_weight_count(channels, channels)), b(channels),
        gw(w.size()), gb(channels) {
    std::mt19937 gen(1);
    std::normal_distribution<float> dist(0.0f, 0.1f);
    for (auto& v : in.data) v = dist(gen);
    for (auto& v : out.data) v = dist(gen);
    for (auto& v : w) v = dist(gen);
  }
  int channels() const { return in.channels; }
};

template <bool Parallel>
void forward(benchmark::State& st) {
  Layer l(static_cast<int>(st.range(0)), static_cast<int>(st.range(1)), 40);
  for (auto _ : st) {
    if constexpr (Parallel)
      k::conv3x3_forward<float>(l.in, l.w, l.b, l.channels(), l.out);
    else
      k::reference::conv3x3_forward<float>(l.in, l.w, l.b, l.channels(), l.out);
    benchmark::DoNotOptimize(l.out.data.data());
  }
  st.counters["MAC/s"] = benchmark::Counter(9.0 * l.channels() * l.channels() * l.in.plane() * st.iterations(),
                                            benchmark::Counter::kIsRate);
}

template <bool Parallel>
void backward(benchmark::State& st) {
  Layer l(static_cast<int>(st.range(0)), static_cast<int>(st.range(1)), 40);
  for (auto _ : st) {
    if constexpr (Parallel) {
      k::conv3x3_backward_input<float>(l.out, l.w, l.channels(), l.grad_in);
      k::conv3x3_backward_params<float>(l.in, l.out, l.gw, l.gb);
    } else {
      k::reference::conv3x3_backward_input<float>(l.out, l.w, l.channels(), l.grad_in);
      k::reference::conv3x3_backward_params<float>(l.in, l.out, l.gw, l.gb);
    }
    benchmark::DoNotOptimize(l.gw.data());
  }
  st.counters["MAC/s"] = benchmark::Counter(18.0 * l.channels() * l.channels() * l.in.plane() * st.iterations(),
                                            benchmark::Counter::kIsRate);
}

}  // namespace

BENCHMARK(forward<false>)->Name("conv_forward/reference")->Args({16, 4})->Args({32, 8})->Unit(benchmark::kMillisecond);
BENCHMARK(forward<true>)->Name("conv_forward/parallel")->Args({16, 4})->Args({32, 8})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(backward<false>)->Name("conv_backward/reference")->Args({16, 4})->Args({32, 8})->Unit(benchmark::kMillisecond);
BENCHMARK(backward<true>)->Name("conv_backward/parallel")->Args({16, 4})->Args({32, 8})->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
