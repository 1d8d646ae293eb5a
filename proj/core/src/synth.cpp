#include "emgc/synth.hpp"

#include <algorithm>
#include <cmath>

#include "emgc/error.hpp"

namespace emgc {
namespace {

struct SmoothField {
    std::vector<double> values;  // i-major, in [-1, 1]
    double step_bound = 0.0;     // max |difference| between 4-neighbours
};

std::vector<double> gaussian_kernel(double sigma, int& radius) {
    radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(2 * static_cast<std::size_t>(radius) + 1);
    double sum = 0.0;
    for (int x = -radius; x <= radius; ++x) {
        const double v = std::exp(-0.5 * x * x / (sigma * sigma));
        k[static_cast<std::size_t>(x + radius)] = v;
        sum += v;
    }
    for (double& v : k) v /= sum;
    return k;
}

// White noise on a padded grid, separably low-pass filtered, scaled to max |f| = 1.
// A unimodal normalized kernel g changes by at most 2 g(0) between adjacent outputs.
SmoothField smooth_field(std::uint32_t width, std::uint32_t height, double sigma, Rng& rng) {
    int r = 0;
    const auto kernel = gaussian_kernel(std::max(sigma, 0.5), r);
    const std::size_t pw = width + 2 * static_cast<std::size_t>(r);
    const std::size_t ph = height + 2 * static_cast<std::size_t>(r);
    std::uniform_real_distribution<double> white(-1.0, 1.0);
    std::vector<double> noise(pw * ph);
    for (auto& v : noise) v = white(rng);

    std::vector<double> rows(width * ph, 0.0);  // filtered along i
    for (std::size_t i = 0; i < width; ++i)
        for (std::size_t j = 0; j < ph; ++j) {
            double s = 0.0;
            for (int k = -r; k <= r; ++k)
                s += kernel[static_cast<std::size_t>(k + r)] * noise[(i + r + k) * ph + j];
            rows[i * ph + j] = s;
        }
    SmoothField f;
    f.values.assign(std::size_t{width} * height, 0.0);
    double peak = 0.0;
    for (std::size_t i = 0; i < width; ++i)
        for (std::size_t j = 0; j < height; ++j) {
            double s = 0.0;
            for (int k = -r; k <= r; ++k)
                s += kernel[static_cast<std::size_t>(k + r)] * rows[i * ph + j + r + k];
            f.values[i * height + j] = s;
            peak = std::max(peak, std::abs(s));
        }
    if (peak <= 0.0) peak = 1.0;
    for (double& v : f.values) v /= peak;
    f.step_bound = 2.0 * kernel[static_cast<std::size_t>(r)] / peak;
    return f;
}

double to_float(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace

void SceneSpec::validate() const {
    if (width == 0 || height == 0 || bins < 2) throw DomainError("SceneSpec: empty dimensions");
    if (components == 0) throw DomainError("SceneSpec: K_true must be >= 1");
    if (!(smoothness > 0.0) || !(intensity_scale > 0.0))
        throw DomainError("SceneSpec: smoothness and intensity scale must be positive");
    if (max_onset >= bins) throw DomainError("SceneSpec: onset must leave at least one bin");
}

Scene generate_scene(const SceneSpec& spec) {
    spec.validate();
    Scene scene;
    scene.spec = spec;
    scene.volume = TransientVolume(spec.width, spec.height, spec.bins);
    const std::size_t pixels = scene.volume.pixel_count();
    const std::uint32_t max_onset = spec.max_onset > 0 ? spec.max_onset : spec.bins / 8;
    const std::size_t k_true = spec.components;

    Rng rng(mix_seed(spec.seed, 0));
    const auto field = [&] { return smooth_field(spec.width, spec.height, spec.smoothness, rng); };
    const SmoothField onset = field();

    // Early components are narrow and strong, later ones broader, later and weaker.
    constexpr double kMuSpread = 0.03;
    std::vector<SmoothField> mu(k_true), sigma(k_true), tau(k_true), h(k_true);
    for (std::size_t c = 0; c < k_true; ++c) {
        mu[c] = field();
        sigma[c] = field();
        tau[c] = field();
        h[c] = field();
        scene.mu_step_bound = std::max(scene.mu_step_bound, kMuSpread * mu[c].step_bound);
    }
    // Float rounding of mu adds at most one ulp per pixel.
    scene.mu_step_bound += 2.0 * std::numeric_limits<float>::epsilon();

    scene.truth.resize(pixels);
    for (std::size_t p = 0; p < pixels; ++p) {
        auto& truth = scene.truth[p];
        truth.onset = static_cast<std::uint32_t>(
            std::lround(0.5 * max_onset * (1.0 + onset.values[p])));
        truth.mixture.resize(k_true);
        for (std::size_t c = 0; c < k_true; ++c) {
            const double frac = k_true > 1 ? static_cast<double>(c) / static_cast<double>(k_true - 1) : 0.0;
            EmgParams e;
            e.mu = to_float(0.06 + 0.45 * frac + kMuSpread * mu[c].values[p]);
            e.sigma = to_float(0.025 * (1.0 + 1.5 * frac) * std::exp(0.2 * sigma[c].values[p]));
            e.tau = to_float(0.04 * (1.0 + 3.0 * frac) * std::exp(0.3 * tau[c].values[p]));
            e.h = to_float((1.0 - 0.6 * frac) * (1.0 + 0.3 * h[c].values[p]));
            truth.mixture[c] = e;
        }
        const TimeRemap remap{truth.onset, spec.bins - truth.onset};
        auto out = scene.volume.pixel(p);
        for (std::uint32_t b = 0; b < remap.t_len; ++b)
            out[truth.onset + b] = static_cast<float>(mixture_eval(remap.bin_center(b), truth.mixture));
    }
    return scene;
}

TransientVolume add_exposure_noise(const TransientVolume& v, double exposure_divisor,
                                   double intensity_scale, Rng& rng) {
    if (!(exposure_divisor >= 1.0)) throw DomainError("add_exposure_noise: divisor must be >= 1");
    if (!(intensity_scale > 0.0)) throw DomainError("add_exposure_noise: scale must be positive");
    TransientVolume out = v;
    const double to_counts = intensity_scale / exposure_divisor;
    for (auto& x : out.data) {
        if (x <= 0.0f) continue;
        std::poisson_distribution<long long> photons(static_cast<double>(x) * to_counts);
        x = static_cast<float>(static_cast<double>(photons(rng)) / to_counts);
    }
    return out;
}

CompressedImage truth_to_compressed(const Scene& scene) {
    CompressedImage image;
    image.header = {scene.spec.width, scene.spec.height, scene.spec.bins, scene.spec.components,
                    1, LossKind::kld, kFlagGroundTruth};
    image.pixels.reserve(scene.truth.size());
    for (const auto& t : scene.truth) {
        PixelRecord rec;
        rec.remap = {t.onset, scene.spec.bins - t.onset};
        rec.params = pack_params(t.mixture);
        rec.status = kPixelConverged;
        image.pixels.push_back(std::move(rec));
    }
    return image;
}

}  // namespace emgc
