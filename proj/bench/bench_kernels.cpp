// Serial reference vs OpenMP kernels, plus spatial vs FFT circular convolution.
#include <phasessl/fft.hpp>
#include <phasessl/kernels.hpp>

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

namespace k = phasessl::kernels;

namespace {

std::vector<double> random_values(std::size_t n, unsigned seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v)
        x = u(rng);
    return v;
}

template <auto Fn>
void conv_forward(benchmark::State& state)
{
    const int side = static_cast<int>(state.range(0));
    const k::ConvShape s{8, 16, side, side, 3};
    const auto in = random_values(static_cast<std::size_t>(s.in_channels) * side * side, 1);
    const auto w = random_values(static_cast<std::size_t>(s.out_channels) * s.in_channels * 9, 2);
    const auto b = random_values(static_cast<std::size_t>(s.out_channels), 3);
    std::vector<double> out(static_cast<std::size_t>(s.out_channels) * side * side);
    for (auto _ : state) {
        Fn(s, in, w, b, out);
        benchmark::DoNotOptimize(out.data());
    }
}

template <auto Fn>
void conv_backward_params(benchmark::State& state)
{
    const int side = static_cast<int>(state.range(0));
    const k::ConvShape s{8, 16, side, side, 3};
    const auto in = random_values(static_cast<std::size_t>(s.in_channels) * side * side, 1);
    const auto go = random_values(static_cast<std::size_t>(s.out_channels) * side * side, 2);
    std::vector<double> gw(static_cast<std::size_t>(s.out_channels) * s.in_channels * 9);
    std::vector<double> gb(static_cast<std::size_t>(s.out_channels));
    for (auto _ : state) {
        Fn(s, in, go, gw, gb);
        benchmark::DoNotOptimize(gw.data());
    }
}

template <auto Fn>
void min_filter(benchmark::State& state)
{
    const int side = static_cast<int>(state.range(0));
    const auto in = random_values(static_cast<std::size_t>(side) * side, 4);
    std::vector<double> out(in.size());
    for (auto _ : state) {
        Fn(side, side, 3, in, out);
        benchmark::DoNotOptimize(out.data());
    }
}

template <auto Fn>
void circular(benchmark::State& state)
{
    const int side = static_cast<int>(state.range(0));
    const auto in = random_values(static_cast<std::size_t>(side) * side, 5);
    const auto kern = random_values(in.size(), 6);
    std::vector<double> out(in.size());
    for (auto _ : state) {
        Fn(side, side, in, kern, out);
        benchmark::DoNotOptimize(out.data());
    }
}

void circular_fft(benchmark::State& state)
{
    const int side = static_cast<int>(state.range(0));
    const auto in = random_values(static_cast<std::size_t>(side) * side, 5);
    const auto kern = random_values(in.size(), 6);
    phasessl::Fft2D fft(side, side);
    for (auto _ : state) {
        auto a = fft.forward(in);
        const auto b = fft.forward(kern);
        for (std::size_t i = 0; i < a.size(); ++i)
            a[i] *= b[i];
        auto out = fft.inverse_real(a);
        benchmark::DoNotOptimize(out.data());
    }
}

}  // namespace

BENCHMARK(conv_forward<k::serial::conv2d_forward>)->Name("conv_forward/serial")->Arg(32)->Arg(64);
BENCHMARK(conv_forward<k::omp::conv2d_forward>)->Name("conv_forward/omp")->Arg(32)->Arg(64);
BENCHMARK(conv_backward_params<k::serial::conv2d_backward_params>)->Name("conv_backward_params/serial")->Arg(64);
BENCHMARK(conv_backward_params<k::omp::conv2d_backward_params>)->Name("conv_backward_params/omp")->Arg(64);
BENCHMARK(min_filter<k::serial::min_filter>)->Name("min_filter/serial")->Arg(64)->Arg(256);
BENCHMARK(min_filter<k::omp::min_filter>)->Name("min_filter/omp")->Arg(64)->Arg(256);
BENCHMARK(circular<k::serial::circular_convolve>)->Name("circular_convolve/serial")->Arg(16)->Arg(32);
BENCHMARK(circular<k::omp::circular_convolve>)->Name("circular_convolve/omp")->Arg(16)->Arg(32);
BENCHMARK(circular_fft)->Name("circular_convolve/fft")->Arg(16)->Arg(32)->Arg(256);

BENCHMARK_MAIN();
