#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace emgc {

/// Clipping of a length-T histogram to [t_start, T) and its mapping onto [0, 1].
/// Bin b of the clipped signal sits at normalized time (b + 0.5) / t_len.
struct TimeRemap {
    std::uint32_t t_start = 0;
    std::uint32_t t_len = 1;

    std::uint32_t total_bins() const noexcept { return t_start + t_len; }
    double bin_center(std::size_t b) const noexcept {
        return (static_cast<double>(b) + 0.5) / static_cast<double>(t_len);
    }

    friend bool operator==(const TimeRemap&, const TimeRemap&) = default;
};

/// Intensities of one clipped pixel on the normalized grid.
using PixelSignal = std::vector<double>;

/// A width x height block of clipped pixels sharing one TimeRemap.
/// Pixel (i, j) occupies data[(i * height + j) * length() ...]. Windows cut at image
/// borders are rectangular rather than N x N.
struct WindowSignal {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    TimeRemap remap;
    std::vector<double> data;

    std::size_t length() const noexcept { return remap.t_len; }
    std::size_t pixel_count() const noexcept { return std::size_t{width} * height; }

    double at(std::uint32_t i, std::uint32_t j, std::size_t t) const noexcept {
        return data[(std::size_t{i} * height + j) * length() + t];
    }
    std::span<const double> pixel(std::size_t p) const noexcept {
        return {data.data() + p * length(), length()};
    }
};

}  // namespace emgc
