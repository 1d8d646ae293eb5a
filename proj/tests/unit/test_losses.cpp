#include <cmath>
#include <numeric>
#include <random>

#include <doctest.h>

#include "emgc/error.hpp"
#include "emgc/losses.hpp"
#include "oracles.hpp"

using namespace emgc;

namespace {

WindowSignal make_window(std::uint32_t w, std::uint32_t h, std::size_t len, std::vector<double> data) {
    WindowSignal s;
    s.width = w;
    s.height = h;
    s.remap = {0, static_cast<std::uint32_t>(len)};
    s.data = std::move(data);
    return s;
}

}  // namespace

TEST_CASE("directed divergence on two bins") {
    const std::vector<double> p{0.5, 0.5}, q{0.25, 0.75};
    CHECK(kld_directed(p, p) == 0.0);
    CHECK(kld_directed(p, q) == doctest::Approx(0.5 * std::log(4.0 / 3.0)).epsilon(1e-14));
    // The swapped direction is .25 ln(.5) + .75 ln(1.5), about 0.130812.
    const double swapped = 0.25 * std::log(0.5) + 0.75 * std::log(1.5);
    CHECK(kld_directed(q, p) == doctest::Approx(swapped).epsilon(1e-14));
    CHECK(kld_directed(q, p) == doctest::Approx(0.130812).epsilon(1e-5));
    CHECK(kld_directed(p, q) != doctest::Approx(kld_directed(q, p)));
}

TEST_CASE("pixel loss basics") {
    const std::vector<double> p{0.1, 0.0, 2.0, 0.7};
    CHECK(pixel_loss(p, p) == 0.0);
    const std::vector<double> q{0.3, 0.2, 1.0, 0.1};
    CHECK(pixel_loss(p, q) > 0.0);
    CHECK(pixel_loss(p, q) == doctest::Approx(static_cast<double>(oracle::symmetric_kld(p, q))).epsilon(1e-13));
}

TEST_CASE("pixel loss equals both directed divergences on strictly positive pairs") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    std::vector<double> p(8), q(8);
    for (auto& v : p) v = u(rng);
    for (auto& v : q) v = u(rng);
    CHECK(pixel_loss(p, q) == doctest::Approx(kld_directed(p, q) + kld_directed(q, p)).epsilon(1e-12));
}

TEST_CASE("length mismatches are shape errors") {
    const std::vector<double> a(3, 1.0), b(4, 1.0);
    CHECK_THROWS_AS(pixel_loss(a, b), ShapeError);
    CHECK_THROWS_AS(kld_directed(a, b), ShapeError);
    CHECK_THROWS_AS(mse_loss(a, b), ShapeError);
}

TEST_CASE("mean squared error") {
    const std::vector<double> a{1.0, 0.0}, b{0.0, 1.0};
    CHECK(mse_loss(a, a) == 0.0);
    CHECK(mse_loss(a, b) == 1.0);
    const std::vector<double> c{1.0, 2.0, 3.0}, d{1.5, 2.0, 2.0};
    double naive = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) naive += (c[i] - d[i]) * (c[i] - d[i]);
    CHECK(mse_loss(c, d) == doctest::Approx(naive / 3.0).epsilon(1e-15));
}

TEST_CASE("normalized comparison ignores scale") {
    const std::vector<double> p{1.0, 3.0, 0.5}, q{2.0, 6.0, 1.0};
    CHECK(reconstruction_loss(LossKind::kld, p, q, true) == doctest::Approx(0.0));
    CHECK(reconstruction_loss(LossKind::kld, p, q, false) > 0.0);
}

TEST_CASE("loss gradients match finite differences") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.05, 2.0);
    for (LossKind kind : {LossKind::kld, LossKind::mse})
        for (bool normalize : {false, true}) {
            std::vector<double> p(6), q(6), g(6);
            for (auto& v : p) v = u(rng);
            for (auto& v : q) v = u(rng);
            reconstruction_loss_grad(kind, p, q, normalize, g);
            for (std::size_t t = 0; t < q.size(); ++t) {
                const double h = 1e-6;
                auto up = q, down = q;
                up[t] += h;
                down[t] -= h;
                const double fd = (reconstruction_loss(kind, p, up, normalize) -
                                   reconstruction_loss(kind, p, down, normalize)) / (2 * h);
                CHECK(g[t] == doctest::Approx(fd).epsilon(1e-6).scale(1e-9));
            }
        }
}

TEST_CASE("floor dependence shows up in the gradient") {
    // q holds the overall maximum and has a bin below the floor, so moving max(q)
    // moves the floor.
    const std::vector<double> p{1.0, 0.5, 0.2};
    const std::vector<double> q{1e-14, 1.5, 0.3};
    std::vector<double> g(3);
    reconstruction_loss_grad(LossKind::kld, p, q, false, g);
    const double h = 1e-7;
    auto up = q, down = q;
    up[1] += h;
    down[1] -= h;
    const double fd = (pixel_loss(p, up) - pixel_loss(p, down)) / (2 * h);
    CHECK(g[1] == doctest::Approx(fd).epsilon(1e-6));
    // Below the floor the log is frozen but the (p - q) factor still moves.
    CHECK(g[0] == doctest::Approx(-(std::log(1.0) - std::log(1.5e-10))).epsilon(1e-12));
}

TEST_CASE("spatial gradients of a constant window") {
    const double c = 2.5;
    const auto w = make_window(3, 3, 1, std::vector<double>(9, c));
    const auto g = spatial_gradients(w, 0);
    // Interior differences vanish; entries whose neighbour is padding read 0 - c.
    for (std::uint32_t i = 0; i < 3; ++i)
        for (std::uint32_t j = 0; j < 3; ++j) {
            const std::size_t k = i * 3 + j;
            CHECK(g.up[k] == (j == 0 ? -c : 0.0));
            CHECK(g.down[k] == (j == 2 ? -c : 0.0));
            CHECK(g.left[k] == (i == 0 ? -c : 0.0));
            CHECK(g.right[k] == (i == 2 ? -c : 0.0));
        }
}

TEST_CASE("single pixel gradients are all padding") {
    const auto w = make_window(1, 1, 2, {3.0, 4.0});
    const auto g = spatial_gradients(w, 1);
    CHECK(g.up[0] == -4.0);
    CHECK(g.down[0] == -4.0);
    CHECK(g.left[0] == -4.0);
    CHECK(g.right[0] == -4.0);
}

TEST_CASE("ramp along i") {
    std::vector<double> data(9);
    for (std::uint32_t i = 0; i < 3; ++i)
        for (std::uint32_t j = 0; j < 3; ++j) data[i * 3 + j] = i;
    const auto g = spatial_gradients(make_window(3, 3, 1, data), 0);
    // left = I[i-1] - I[i] = -1 wherever the neighbour exists
    for (std::uint32_t i = 1; i < 3; ++i)
        for (std::uint32_t j = 0; j < 3; ++j) CHECK(g.left[i * 3 + j] == -1.0);
}

TEST_CASE("bin index is checked") {
    const auto w = make_window(2, 2, 3, std::vector<double>(12, 1.0));
    CHECK_THROWS_AS(spatial_gradients(w, 3), IndexError);
}

TEST_CASE("gradient loss identities") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> a(3 * 3 * 4);
    for (auto& v : a) v = u(rng);
    const auto w = make_window(3, 3, 4, a);
    CHECK(gradient_loss(w, w) == 0.0);

    auto shifted = a;
    for (auto& v : shifted) v += 0.75;
    const auto ws = make_window(3, 3, 4, shifted);
    CHECK(gradient_loss(w, ws, GradientPadding::interior) <= 1e-12);
    CHECK(gradient_loss(w, ws, GradientPadding::zero) > 0.0);

    const auto bad = make_window(3, 2, 4, std::vector<double>(24, 0.0));
    CHECK_THROWS_AS(gradient_loss(w, bad), ShapeError);
}

TEST_CASE("two by two, one bin, by hand") {
    // a = [[1, 2], [3, 4]] (i rows), b = 0. Zero padding.
    const auto a = make_window(2, 2, 1, {1.0, 2.0, 3.0, 4.0});
    const auto b = make_window(2, 2, 1, {0.0, 0.0, 0.0, 0.0});
    // up:    (i,j) <- (i,j-1): (0,0): 0-1, (0,1): 1-2, (1,0): 0-3, (1,1): 3-4  -> 1,1,9,1
    // down:  (i,j) <- (i,j+1): (0,0): 2-1, (0,1): 0-2, (1,0): 4-3, (1,1): 0-4  -> 1,4,1,16
    // left:  (i,j) <- (i-1,j): (0,0): 0-1, (0,1): 0-2, (1,0): 1-3, (1,1): 2-4  -> 1,4,4,4
    // right: (i,j) <- (i+1,j): (0,0): 3-1, (0,1): 4-2, (1,0): 0-3, (1,1): 0-4  -> 4,4,9,16
    const double expected = std::sqrt(12.0) + std::sqrt(22.0) + std::sqrt(13.0) + std::sqrt(33.0);
    CHECK(gradient_loss(a, b) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("image loss sums pixel losses") {
    TransientVolume a(2, 2, 3), b(2, 2, 3);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<float> u(0.01f, 1.0f);
    for (auto& v : a.data) v = u(rng);
    for (auto& v : b.data) v = u(rng);
    long double expected = 0;
    for (std::size_t p = 0; p < 4; ++p) {
        std::vector<double> pa(a.pixel(p).begin(), a.pixel(p).end());
        std::vector<double> pb(b.pixel(p).begin(), b.pixel(p).end());
        expected += oracle::symmetric_kld(pa, pb);
    }
    CHECK(image_loss(a, b) == doctest::Approx(static_cast<double>(expected)).epsilon(1e-12));
    CHECK(image_loss(a, a) == 0.0);

    TransientVolume one(1, 1, 3);
    one.data = {0.5f, 0.25f, 1.0f};
    TransientVolume other(1, 1, 3);
    other.data = {0.25f, 0.25f, 0.75f};
    const std::vector<double> p1{0.5, 0.25, 1.0}, p2{0.25, 0.25, 0.75};
    CHECK(image_loss(one, other) == pixel_loss(p1, p2));

    TransientVolume wrong(2, 1, 3);
    CHECK_THROWS_AS(image_loss(a, wrong), ShapeError);
}
