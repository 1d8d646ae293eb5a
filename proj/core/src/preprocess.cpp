#include "emgc/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "emgc/error.hpp"

namespace emgc {
namespace {

template <typename T>
std::size_t first_nonzero_impl(std::span<const T> raw) noexcept {
    for (std::size_t t = 0; t < raw.size(); ++t)
        if (raw[t] > T{0}) return t;
    return raw.size();
}

template <typename T>
ClippedPixel clip_impl(std::span<const T> raw) {
    if (raw.empty()) throw LengthError("clip_normalize: empty histogram");
    const auto total = static_cast<std::uint32_t>(raw.size());
    ClippedPixel out;
    const std::size_t start = first_nonzero_impl(raw);
    if (start == raw.size()) {
        out.degenerate = true;
        out.remap = {total - 1, 1};
        out.signal.assign(1, 0.0);
        return out;
    }
    out.remap = {static_cast<std::uint32_t>(start), static_cast<std::uint32_t>(total - start)};
    out.signal.assign(raw.begin() + static_cast<std::ptrdiff_t>(start), raw.end());
    return out;
}

}  // namespace

std::size_t first_nonzero(std::span<const float> raw) noexcept { return first_nonzero_impl(raw); }
std::size_t first_nonzero(std::span<const double> raw) noexcept { return first_nonzero_impl(raw); }

ClippedPixel clip_normalize(std::span<const double> raw) { return clip_impl(raw); }
ClippedPixel clip_normalize(std::span<const float> raw) { return clip_impl(raw); }

PixelRect centered_window(const TransientVolume& v, std::uint32_t ci, std::uint32_t cj,
                          std::uint32_t n) {
    if (ci >= v.width || cj >= v.height) throw IndexError("centered_window: center outside image");
    const std::uint32_t half = n / 2;
    const std::uint32_t i0 = ci >= half ? ci - half : 0;
    const std::uint32_t j0 = cj >= half ? cj - half : 0;
    const std::uint32_t i1 = std::min(v.width, ci + half + 1);
    const std::uint32_t j1 = std::min(v.height, cj + half + 1);
    return {i0, j0, i1 - i0, j1 - j0};
}

WindowSignal window_remap(const TransientVolume& v, const PixelRect& rect) {
    if (rect.width == 0 || rect.height == 0 || rect.i0 + rect.width > v.width ||
        rect.j0 + rect.height > v.height)
        throw IndexError("window_remap: rectangle outside image");
    std::size_t start = v.bins;
    for (std::uint32_t di = 0; di < rect.width; ++di)
        for (std::uint32_t dj = 0; dj < rect.height; ++dj)
            start = std::min(start,
                             first_nonzero(v.pixel(v.pixel_index(rect.i0 + di, rect.j0 + dj))));
    if (start == v.bins) throw DegenerateError("window_remap: all-zero window");

    WindowSignal w;
    w.width = rect.width;
    w.height = rect.height;
    w.remap = {static_cast<std::uint32_t>(start), static_cast<std::uint32_t>(v.bins - start)};
    w.data.reserve(w.pixel_count() * w.length());
    for (std::uint32_t di = 0; di < rect.width; ++di)
        for (std::uint32_t dj = 0; dj < rect.height; ++dj) {
            const auto px = v.pixel(v.pixel_index(rect.i0 + di, rect.j0 + dj));
            w.data.insert(w.data.end(), px.begin() + static_cast<std::ptrdiff_t>(start), px.end());
        }
    return w;
}

WindowSignal window_remap(std::span<const std::vector<double>> raws, std::uint32_t width,
                          std::uint32_t height) {
    if (raws.size() != std::size_t{width} * height || raws.empty())
        throw ShapeError("window_remap: expected width*height member histograms");
    const std::size_t total = raws.front().size();
    std::size_t start = total;
    for (const auto& r : raws) {
        if (r.size() != total) throw ShapeError("window_remap: member lengths differ");
        start = std::min(start, first_nonzero(std::span<const double>(r)));
    }
    if (total == 0 || start == total) throw DegenerateError("window_remap: all-zero window");

    WindowSignal w;
    w.width = width;
    w.height = height;
    w.remap = {static_cast<std::uint32_t>(start), static_cast<std::uint32_t>(total - start)};
    for (const auto& r : raws)
        w.data.insert(w.data.end(), r.begin() + static_cast<std::ptrdiff_t>(start), r.end());
    return w;
}

std::vector<double> denormalize(const TimeRemap& remap, std::span<const double> values) {
    if (values.size() != remap.t_len)
        throw ShapeError("denormalize: expected " + std::to_string(remap.t_len) + " values, got " +
                         std::to_string(values.size()));
    std::vector<double> out(remap.total_bins(), 0.0);
    std::copy(values.begin(), values.end(), out.begin() + remap.t_start);
    return out;
}

std::vector<double> bin_centers(const TimeRemap& remap) {
    std::vector<double> t(remap.t_len);
    for (std::size_t b = 0; b < t.size(); ++b) t[b] = remap.bin_center(b);
    return t;
}

}  // namespace emgc
