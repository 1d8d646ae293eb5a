#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace emgc {

/// Dense W x H x T histogram volume I[i, j, t], stored row-major with t fastest:
/// element (i, j, t) lives at (i * height + j) * bins + t.
struct TransientVolume {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::uint32_t bins = 0;
    std::vector<float> data;

    TransientVolume() = default;
    TransientVolume(std::uint32_t w, std::uint32_t h, std::uint32_t t)
        : width(w), height(h), bins(t), data(std::size_t{w} * h * t, 0.0f) {}

    std::size_t pixel_count() const noexcept { return std::size_t{width} * height; }
    std::size_t pixel_index(std::uint32_t i, std::uint32_t j) const noexcept {
        return std::size_t{i} * height + j;
    }

    std::span<const float> pixel(std::size_t p) const noexcept {
        return {data.data() + p * bins, bins};
    }
    std::span<float> pixel(std::size_t p) noexcept { return {data.data() + p * bins, bins}; }

    float& at(std::uint32_t i, std::uint32_t j, std::uint32_t t) noexcept {
        return data[pixel_index(i, j) * bins + t];
    }
    float at(std::uint32_t i, std::uint32_t j, std::uint32_t t) const noexcept {
        return data[pixel_index(i, j) * bins + t];
    }

    /// Throws LengthError on a size mismatch or empty volume, DataError on NaN/inf/negative samples.
    void validate() const;

    friend bool operator==(const TransientVolume&, const TransientVolume&) = default;
};

}  // namespace emgc
