#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "emgc/signal.hpp"
#include "emgc/volume.hpp"

namespace emgc {

/// A pixel clipped at its first strictly positive sample.
struct ClippedPixel {
    TimeRemap remap;
    PixelSignal signal;
    /// All-zero input. Such pixels get t_start = T - 1, t_len = 1 and are never optimized.
    bool degenerate = false;
};

ClippedPixel clip_normalize(std::span<const double> raw);
ClippedPixel clip_normalize(std::span<const float> raw);

/// Index of the first sample > 0, or raw.size() when there is none.
std::size_t first_nonzero(std::span<const float> raw) noexcept;
std::size_t first_nonzero(std::span<const double> raw) noexcept;

/// Axis-aligned block of pixels [i0, i0 + width) x [j0, j0 + height).
struct PixelRect {
    std::uint32_t i0 = 0;
    std::uint32_t j0 = 0;
    std::uint32_t width = 1;
    std::uint32_t height = 1;
};

/// The N x N window centred on (ci, cj), cut to the image bounds.
PixelRect centered_window(const TransientVolume& v, std::uint32_t ci, std::uint32_t cj,
                          std::uint32_t n);

/// Clips every member of `rect` at the minimum of their first-nonzero indices.
/// Throws DegenerateError when the whole block is zero.
WindowSignal window_remap(const TransientVolume& v, const PixelRect& rect);

/// Same rule for raw member histograms laid out as width x height (i-major).
WindowSignal window_remap(std::span<const std::vector<double>> raws, std::uint32_t width,
                          std::uint32_t height);

/// Places `values` (length t_len) back into a zero-filled length-T histogram.
std::vector<double> denormalize(const TimeRemap& remap, std::span<const double> values);

/// Normalized bin centers (b + 0.5) / t_len for b in [0, t_len).
std::vector<double> bin_centers(const TimeRemap& remap);

}  // namespace emgc
