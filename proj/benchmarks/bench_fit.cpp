#include <benchmark/benchmark.h>

#include <vector>

#include "emgc/fit.hpp"
#include "emgc/preprocess.hpp"
#include "emgc/synth.hpp"

namespace {

emgc::Scene scene(std::uint32_t side, std::uint32_t bins) {
    emgc::SceneSpec spec;
    spec.width = side;
    spec.height = side;
    spec.bins = bins;
    spec.seed = 1;
    return emgc::generate_scene(spec);
}

// Objective value plus gradient for one N x N window, K = 4, T = 128.
void BM_WindowObjective(benchmark::State& state) {
    const auto n = static_cast<std::uint32_t>(state.range(0));
    const emgc::Scene s = scene(n, 128);
    const emgc::WindowSignal window = emgc::window_remap(s.volume, emgc::PixelRect{0, 0, n, n});
    emgc::FitConfig cfg;
    cfg.window = n;
    std::vector<emgc::PixelModel> models(window.pixel_count());
    for (std::size_t p = 0; p < models.size(); ++p) {
        models[p].remap = emgc::clip_normalize(s.volume.pixel(p)).remap;
        emgc::Rng rng(p);
        models[p].mixture_raw = emgc::init_params(cfg, rng);
    }
    emgc::WindowObjective objective(window, models, cfg);
    const std::vector<double> x = objective.pack(models);
    std::vector<double> grad(x.size());
    for (auto _ : state) benchmark::DoNotOptimize(objective.evaluate(x, grad));
}
BENCHMARK(BM_WindowObjective)->Arg(1)->Arg(3)->Arg(5);

// A full K = 4 single-pixel fit, the unit the per-pixel timing refers to.
void BM_FitPixel(benchmark::State& state) {
    const emgc::Scene s = scene(1, 128);
    const emgc::ClippedPixel pixel = emgc::clip_normalize(s.volume.pixel(0));
    emgc::FitConfig cfg;
    for (auto _ : state) {
        emgc::Rng rng(0);
        benchmark::DoNotOptimize(emgc::fit_pixel(pixel, cfg, rng));
    }
}
BENCHMARK(BM_FitPixel)->Unit(benchmark::kMillisecond);

void BM_FitImage(benchmark::State& state) {
    const emgc::Scene s = scene(8, 64);
    emgc::FitConfig cfg;
    cfg.scheduler = static_cast<emgc::Scheduler>(state.range(0));
    cfg.window = 3;
    cfg.max_epochs = 500;
    for (auto _ : state) benchmark::DoNotOptimize(emgc::fit_image(s.volume, cfg));
}
BENCHMARK(BM_FitImage)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

}  // namespace
