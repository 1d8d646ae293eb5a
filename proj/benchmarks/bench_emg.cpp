#include <benchmark/benchmark.h>

#include <vector>

#include "emgc/emg.hpp"
#include "emgc/losses.hpp"
#include "emgc/special.hpp"

namespace {

void BM_Erfc(benchmark::State& state) {
    double x = -3.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(emgc::erfc(x));
        x = x > 20.0 ? -3.0 : x + 0.37;
    }
}
BENCHMARK(BM_Erfc);

void BM_Erfcx(benchmark::State& state) {
    double x = 0.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(emgc::erfcx(x));
        x = x > 40.0 ? 0.0 : x + 0.37;
    }
}
BENCHMARK(BM_Erfcx);

void BM_EmgEval(benchmark::State& state) {
    const emgc::EmgParams p{1.0, 0.3, 0.03, 0.1};
    std::size_t b = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(emgc::emg_eval((b + 0.5) / 128.0, p));
        b = (b + 1) % 128;
    }
}
BENCHMARK(BM_EmgEval);

void BM_EmgValueAndGrad(benchmark::State& state) {
    const emgc::EmgParams p{1.0, 0.3, 0.03, 0.1};
    emgc::EmgGradient g{};
    std::size_t b = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(emgc::emg_value_and_grad((b + 0.5) / 128.0, p, g));
        benchmark::DoNotOptimize(g);
        b = (b + 1) % 128;
    }
}
BENCHMARK(BM_EmgValueAndGrad);

void BM_PixelLoss(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::vector<double> p(n), q(n);
    for (std::size_t t = 0; t < n; ++t) {
        p[t] = 1.0 + static_cast<double>(t % 7);
        q[t] = 1.5 + static_cast<double>(t % 5);
    }
    for (auto _ : state) benchmark::DoNotOptimize(emgc::pixel_loss(p, q));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_PixelLoss)->Arg(128)->Arg(1024);

}  // namespace
