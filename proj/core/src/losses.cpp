#include "emgc/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "emgc/error.hpp"

namespace emgc {
namespace {

constexpr double kRelativeFloor = 1e-10;

void check_lengths(std::span<const double> p, std::span<const double> q, const char* who) {
    if (p.size() != q.size())
        throw ShapeError(std::string(who) + ": length mismatch (" + std::to_string(p.size()) +
                         " vs " + std::to_string(q.size()) + ")");
}

double floored_log(double v, double eps) noexcept { return std::log(std::max(v, eps)); }

double max_of(std::span<const double> s) noexcept {
    double m = 0.0;
    for (double v : s) m = std::max(m, v);
    return m;
}

// d pixel_loss / d q. When max(q) sets the shared floor, the floor moves with it and
// every bin sitting on the floor pulls on q's argmax.
double pixel_loss_grad(std::span<const double> p, std::span<const double> q,
                       std::span<double> grad) {
    const double eps = log_floor(p, q);
    const double p_max = max_of(p);
    const double q_max = max_of(q);
    const auto argmax =
        static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin());
    double loss = 0.0;
    double floor_pull = 0.0;
    for (std::size_t t = 0; t < p.size(); ++t) {
        const double diff = p[t] - q[t];
        const double log_ratio = floored_log(p[t], eps) - floored_log(q[t], eps);
        loss += diff * log_ratio;
        grad[t] = -log_ratio;
        if (q[t] >= eps) grad[t] -= diff / q[t];
        floor_pull += diff * ((p[t] < eps ? 1.0 : 0.0) - (q[t] < eps ? 1.0 : 0.0));
    }
    if (floor_pull != 0.0 && q_max > p_max) grad[argmax] += floor_pull / q_max;
    return loss;
}

double mse_grad(std::span<const double> p, std::span<const double> q, std::span<double> grad) {
    const double n = static_cast<double>(p.size());
    double sum = 0.0;
    for (std::size_t t = 0; t < p.size(); ++t) {
        const double diff = q[t] - p[t];
        sum += diff * diff;
        grad[t] = 2.0 * diff / n;
    }
    return sum / n;
}

std::vector<double> scaled(std::span<const double> s, double& total) {
    total = std::accumulate(s.begin(), s.end(), 0.0);
    std::vector<double> out(s.begin(), s.end());
    if (total > 0.0)
        for (double& v : out) v /= total;
    return out;
}

struct Direction {
    int di;
    int dj;
};
constexpr std::array<Direction, 4> kDirections{{{0, -1}, {0, 1}, {-1, 0}, {1, 0}}};

}  // namespace

double log_floor(std::span<const double> p, std::span<const double> q) noexcept {
    const double m = std::max(max_of(p), max_of(q));
    return m > 0.0 ? kRelativeFloor * m : std::numeric_limits<double>::min();
}

double kld_directed(std::span<const double> p, std::span<const double> q) {
    check_lengths(p, q, "kld_directed");
    const double eps = log_floor(p, q);
    double sum = 0.0;
    for (std::size_t t = 0; t < p.size(); ++t)
        sum += p[t] * (floored_log(p[t], eps) - floored_log(q[t], eps));
    return sum;
}

double pixel_loss(std::span<const double> p, std::span<const double> q) {
    check_lengths(p, q, "pixel_loss");
    const double eps = log_floor(p, q);
    double sum = 0.0;
    for (std::size_t t = 0; t < p.size(); ++t)
        sum += (p[t] - q[t]) * (floored_log(p[t], eps) - floored_log(q[t], eps));
    return sum;
}

double mse_loss(std::span<const double> p, std::span<const double> q) {
    check_lengths(p, q, "mse_loss");
    if (p.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t t = 0; t < p.size(); ++t) sum += (p[t] - q[t]) * (p[t] - q[t]);
    return sum / static_cast<double>(p.size());
}

double reconstruction_loss(LossKind kind, std::span<const double> p, std::span<const double> q,
                           bool normalize_pmf) {
    if (!normalize_pmf) return kind == LossKind::kld ? pixel_loss(p, q) : mse_loss(p, q);
    double sp = 0.0;
    double sq = 0.0;
    const auto pn = scaled(p, sp);
    const auto qn = scaled(q, sq);
    return kind == LossKind::kld ? pixel_loss(pn, qn) : mse_loss(pn, qn);
}

double reconstruction_loss_grad(LossKind kind, std::span<const double> p,
                                std::span<const double> q, bool normalize_pmf,
                                std::span<double> grad_q) {
    check_lengths(p, q, "reconstruction_loss_grad");
    if (grad_q.size() != q.size()) throw ShapeError("reconstruction_loss_grad: gradient length");
    if (p.empty()) return 0.0;
    if (!normalize_pmf)
        return kind == LossKind::kld ? pixel_loss_grad(p, q, grad_q) : mse_grad(p, q, grad_q);

    double sp = 0.0;
    double sq = 0.0;
    const auto pn = scaled(p, sp);
    const auto qn = scaled(q, sq);
    const double loss =
        kind == LossKind::kld ? pixel_loss_grad(pn, qn, grad_q) : mse_grad(pn, qn, grad_q);
    if (sq > 0.0) {
        // q_n = q / S  =>  dL/dq_t = (g_t - sum_s g_s q_n[s]) / S
        double dot = 0.0;
        for (std::size_t t = 0; t < q.size(); ++t) dot += grad_q[t] * qn[t];
        for (double& g : grad_q) g = (g - dot) / sq;
    }
    return loss;
}

DirectionalGradients spatial_gradients(const WindowSignal& w, std::size_t t) {
    if (t >= w.length())
        throw IndexError("spatial_gradients: bin " + std::to_string(t) + " outside [0, " +
                         std::to_string(w.length()) + ")");
    DirectionalGradients g;
    g.width = w.width;
    g.height = w.height;
    std::array<std::vector<double>*, 4> grids{&g.up, &g.down, &g.left, &g.right};
    for (std::size_t d = 0; d < 4; ++d) {
        auto& grid = *grids[d];
        grid.resize(w.pixel_count());
        for (std::uint32_t i = 0; i < w.width; ++i)
            for (std::uint32_t j = 0; j < w.height; ++j) {
                const long ni = static_cast<long>(i) + kDirections[d].di;
                const long nj = static_cast<long>(j) + kDirections[d].dj;
                const bool inside = ni >= 0 && nj >= 0 && ni < static_cast<long>(w.width) &&
                                    nj < static_cast<long>(w.height);
                const double neighbour =
                    inside ? w.at(static_cast<std::uint32_t>(ni), static_cast<std::uint32_t>(nj), t)
                           : 0.0;
                grid[std::size_t{i} * w.height + j] = neighbour - w.at(i, j, t);
            }
    }
    return g;
}

double gradient_loss_grid(std::uint32_t width, std::uint32_t height, std::size_t len,
                          std::span<const double> a, std::span<const double> b,
                          GradientPadding padding, std::span<double> grad_b) {
    const std::size_t n = std::size_t{width} * height * len;
    if (a.size() != n || b.size() != n) throw ShapeError("gradient_loss: grid size mismatch");
    if (!grad_b.empty() && grad_b.size() != n)
        throw ShapeError("gradient_loss: gradient buffer size mismatch");

    const auto idx = [&](std::size_t i, std::size_t j, std::size_t t) {
        return (i * height + j) * len + t;
    };
    // G(a) - G(b) == G(a - b); differences are taken on the residual directly.
    const auto residual = [&](long i, long j, std::size_t t) -> double {
        if (i < 0 || j < 0 || i >= static_cast<long>(width) || j >= static_cast<long>(height))
            return 0.0;
        const std::size_t k = idx(static_cast<std::size_t>(i), static_cast<std::size_t>(j), t);
        return a[k] - b[k];
    };
    const auto inside = [&](long i, long j) {
        return i >= 0 && j >= 0 && i < static_cast<long>(width) && j < static_cast<long>(height);
    };

    double total = 0.0;
    for (std::size_t t = 0; t < len; ++t) {
        for (const auto& dir : kDirections) {
            double sumsq = 0.0;
            for (long i = 0; i < static_cast<long>(width); ++i)
                for (long j = 0; j < static_cast<long>(height); ++j) {
                    const long ni = i + dir.di;
                    const long nj = j + dir.dj;
                    if (padding == GradientPadding::interior && !inside(ni, nj)) continue;
                    const double g = residual(ni, nj, t) - residual(i, j, t);
                    sumsq += g * g;
                }
            if (sumsq <= 0.0) continue;
            const double norm = std::sqrt(sumsq);
            total += norm;
            if (grad_b.empty()) continue;
            // d norm / d r = G / norm scattered to (neighbour: +1, self: -1); d r / d b = -1.
            for (long i = 0; i < static_cast<long>(width); ++i)
                for (long j = 0; j < static_cast<long>(height); ++j) {
                    const long ni = i + dir.di;
                    const long nj = j + dir.dj;
                    const bool nb_inside = inside(ni, nj);
                    if (padding == GradientPadding::interior && !nb_inside) continue;
                    const double g = (residual(ni, nj, t) - residual(i, j, t)) / norm;
                    grad_b[idx(static_cast<std::size_t>(i), static_cast<std::size_t>(j), t)] += g;
                    if (nb_inside)
                        grad_b[idx(static_cast<std::size_t>(ni), static_cast<std::size_t>(nj), t)] -=
                            g;
                }
        }
    }
    return total;
}

double gradient_loss(const WindowSignal& w, const WindowSignal& w_prime, GradientPadding padding) {
    if (w.width != w_prime.width || w.height != w_prime.height || w.length() != w_prime.length())
        throw ShapeError("gradient_loss: window shapes differ");
    return gradient_loss_grid(w.width, w.height, w.length(), w.data, w_prime.data, padding);
}

namespace {

void check_volumes(const TransientVolume& a, const TransientVolume& b, const char* who) {
    if (a.width != b.width || a.height != b.height || a.bins != b.bins)
        throw ShapeError(std::string(who) + ": volume shapes differ");
}

}  // namespace

std::vector<double> pixel_losses(const TransientVolume& a, const TransientVolume& b) {
    check_volumes(a, b, "pixel_losses");
    std::vector<double> out(a.pixel_count());
    std::vector<double> pa(a.bins), pb(a.bins);
    for (std::size_t p = 0; p < out.size(); ++p) {
        std::copy_n(a.pixel(p).begin(), a.bins, pa.begin());
        std::copy_n(b.pixel(p).begin(), b.bins, pb.begin());
        out[p] = pixel_loss(pa, pb);
    }
    return out;
}

double image_loss(const TransientVolume& a, const TransientVolume& b) {
    const auto per_pixel = pixel_losses(a, b);
    return std::accumulate(per_pixel.begin(), per_pixel.end(), 0.0);
}

double image_mse(const TransientVolume& a, const TransientVolume& b) {
    check_volumes(a, b, "image_mse");
    if (a.data.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t k = 0; k < a.data.size(); ++k) {
        const double d = static_cast<double>(a.data[k]) - b.data[k];
        sum += d * d;
    }
    return sum / static_cast<double>(a.data.size());
}

}  // namespace emgc
