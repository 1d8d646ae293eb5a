#pragma once

#include <cstdint>
#include <vector>

#include "emgc/codec.hpp"
#include "emgc/emg.hpp"
#include "emgc/rng.hpp"
#include "emgc/volume.hpp"

namespace emgc {

struct SceneSpec {
    std::uint32_t width = 8;
    std::uint32_t height = 8;
    std::uint32_t bins = 64;
    std::uint32_t components = 4;     // K_true
    double smoothness = 3.0;          // correlation length of the parameter fields, pixels
    double intensity_scale = 1e4;     // photons per unit intensity at full exposure
    std::uint32_t max_onset = 0;      // largest leading-zero prefix; 0 picks bins / 8
    std::uint64_t seed = 0;

    void validate() const;
};

/// Ground truth of one pixel: its onset bin and the mixture on [onset, T).
struct PixelTruth {
    std::uint32_t onset = 0;
    Mixture mixture;
};

struct Scene {
    SceneSpec spec;
    TransientVolume volume;
    std::vector<PixelTruth> truth;  // i-major, like the volume
    /// Upper bound on |mu_k(p) - mu_k(q)| over 4-neighbours p, q, from the field construction.
    double mu_step_bound = 0.0;
};

/// Clean scene whose pixel (i, j) equals mixture_eval of truth[p] on the bin centers of
/// [onset, T) and zero before. Truth parameters are float32-representable, so the
/// ground-truth sidecar reproduces the volume exactly.
Scene generate_scene(const SceneSpec& spec);

/// Photon-count noise for an exposure `exposure_divisor` times shorter: each sample becomes
/// Poisson(v * scale / divisor) * divisor / scale. Zeros stay zero.
TransientVolume add_exposure_noise(const TransientVolume& v, double exposure_divisor,
                                   double intensity_scale, Rng& rng);

/// Ground-truth sidecar in the compressed format, flagged with kFlagGroundTruth.
CompressedImage truth_to_compressed(const Scene& scene);

}  // namespace emgc
