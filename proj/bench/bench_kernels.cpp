// Serial reference kernels against their OpenMP versions. Set
// OMP_NUM_THREADS to compare thread counts.
#include <benchmark/benchmark.h>

#include <random>

#include "terraseg/lbp.hpp"
#include "terraseg/metrics.hpp"
#include "terraseg/nn/kernels.hpp"

using namespace terraseg;

namespace {

Tensor<float> random_tensor(int c, int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  Tensor<float> t(c, h, w);
  for (auto& v : t.data) v = u(rng);
  return t;
}

ImageTensor random_gray(int size) {
  std::mt19937_64 rng(size);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  ImageTensor img(size, size, 1);
  for (auto& v : img.data()) v = u(rng);
  return img;
}

// encoder layer 2 of the default network: 8 -> 16 channels, stride 2, 32x32 input
struct ConvCase {
  nn::ConvShape shape{8, 16, 3, 2, 1};
  Tensor<float> in = random_tensor(8, 32, 32, 1);
  std::vector<float> weight = random_tensor(1, 1, int(shape.weight_count()), 2).data;
  std::vector<float> bias = std::vector<float>(16, 0.0f);
  Tensor<float> out;
  Tensor<float> dout = random_tensor(16, 16, 16, 3);
};

template <bool Parallel>
void BM_ConvForward(benchmark::State& state) {
  ConvCase c;
  for (auto _ : state) {
    if constexpr (Parallel) nn::conv2d_forward<float>(c.in, c.weight, c.bias, c.shape, c.out);
    else nn::conv2d_forward_serial<float>(c.in, c.weight, c.bias, c.shape, c.out);
    benchmark::DoNotOptimize(c.out.data.data());
  }
}

template <bool Parallel>
void BM_ConvBackward(benchmark::State& state) {
  ConvCase c;
  std::vector<double> dw(c.weight.size()), db(c.bias.size());
  Tensor<float> din;
  for (auto _ : state) {
    if constexpr (Parallel) nn::conv2d_backward<float>(c.in, c.weight, c.shape, c.dout, &din, dw, db);
    else nn::conv2d_backward_serial<float>(c.in, c.weight, c.shape, c.dout, &din, dw, db);
    benchmark::DoNotOptimize(din.data.data());
  }
}

template <bool Parallel>
void BM_LbpMap(benchmark::State& state) {
  const auto gray = random_gray(int(state.range(0)));
  const LbpConfig cfg{24, 3.0};
  for (auto _ : state) {
    auto codes = Parallel ? lbp_map(gray, cfg) : lbp_map_serial(gray, cfg);
    benchmark::DoNotOptimize(codes.codes.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

template <bool Parallel>
void BM_LbpHistograms(benchmark::State& state) {
  const auto codes = lbp_map(random_gray(int(state.range(0))), LbpConfig{24, 3.0});
  for (auto _ : state) {
    auto h = Parallel ? lbp_histograms(codes, 32) : lbp_histograms_serial(codes, 32);
    benchmark::DoNotOptimize(h.values.data());
  }
}

template <bool Parallel>
void BM_Confusion(benchmark::State& state) {
  std::mt19937_64 rng(7);
  std::vector<SparseLabelMap> truth, pred;
  for (int i = 0; i < 64; ++i) {
    SparseLabelMap t(64, 64, 4), p(64, 64, 4);
    for (std::size_t k = 0; k < t.size(); ++k) {
      t[k] = int(rng() % 5) - 1;
      p[k] = int(rng() % 4);
    }
    truth.push_back(std::move(t));
    pred.push_back(std::move(p));
  }
  std::vector<LabelPair> pairs;
  for (int i = 0; i < 64; ++i) pairs.push_back({&pred[i], &truth[i]});
  for (auto _ : state) {
    auto cm = Parallel ? confusion_batch(pairs, 4) : confusion_batch_serial(pairs, 4);
    benchmark::DoNotOptimize(cm.total());
  }
}

}  // namespace

BENCHMARK(BM_ConvForward<false>)->Name("conv_forward/serial");
BENCHMARK(BM_ConvForward<true>)->Name("conv_forward/omp");
BENCHMARK(BM_ConvBackward<false>)->Name("conv_backward/serial");
BENCHMARK(BM_ConvBackward<true>)->Name("conv_backward/omp");
BENCHMARK(BM_LbpMap<false>)->Name("lbp_map/serial")->Arg(64)->Arg(256);
BENCHMARK(BM_LbpMap<true>)->Name("lbp_map/omp")->Arg(64)->Arg(256);
BENCHMARK(BM_LbpHistograms<false>)->Name("lbp_histograms/serial")->Arg(256);
BENCHMARK(BM_LbpHistograms<true>)->Name("lbp_histograms/omp")->Arg(256);
BENCHMARK(BM_Confusion<false>)->Name("confusion_batch/serial");
BENCHMARK(BM_Confusion<true>)->Name("confusion_batch/omp");

BENCHMARK_MAIN();
