#include <algorithm>

#include <doctest.h>

#include "emgc/error.hpp"
#include "emgc/preprocess.hpp"
#include "generators.hpp"

using namespace emgc;

TEST_CASE("clipping keeps every nonzero sample and the total") {
    gen::Engine e(301);
    for (int n = 0; n < gen::kCases; ++n) {
        const auto raw = gen::histogram(e, gen::integer(e, 1, 128));
        const ClippedPixel c = clip_normalize(std::span<const double>(raw));
        CHECK(c.remap.total_bins() == raw.size());
        if (c.degenerate) {
            CHECK(std::all_of(raw.begin(), raw.end(), [](double v) { return v == 0.0; }));
            continue;
        }
        for (std::size_t t = 0; t < c.remap.t_start; ++t) CHECK(raw[t] == 0.0);
        double raw_sum = 0.0, clipped_sum = 0.0;
        for (double v : raw) raw_sum += v;
        for (double v : c.signal) clipped_sum += v;
        CHECK(clipped_sum == raw_sum);
    }
}

TEST_CASE("window start never exceeds any member's start") {
    gen::Engine e(302);
    int checked = 0;
    while (checked < gen::kCases) {
        const std::uint32_t w = gen::integer(e, 1, 4), h = gen::integer(e, 1, 4);
        const std::size_t len = gen::integer(e, 1, 48);
        std::vector<std::vector<double>> raws;
        for (std::uint32_t k = 0; k < w * h; ++k) raws.push_back(gen::histogram(e, len));
        WindowSignal win;
        try {
            win = window_remap(raws, w, h);
        } catch (const DegenerateError&) {
            continue;
        }
        ++checked;
        for (const auto& r : raws) {
            const auto own = clip_normalize(std::span<const double>(r));
            if (!own.degenerate) CHECK(win.remap.t_start <= own.remap.t_start);
        }
    }
}

TEST_CASE("denormalize undoes clipping") {
    gen::Engine e(303);
    for (int n = 0; n < gen::kCases; ++n) {
        const auto raw = gen::histogram(e, gen::integer(e, 1, 128));
        const ClippedPixel c = clip_normalize(std::span<const double>(raw));
        if (c.degenerate) continue;
        CHECK(denormalize(c.remap, c.signal) == raw);
    }
}
