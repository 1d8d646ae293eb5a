#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "emgc/signal.hpp"
#include "emgc/volume.hpp"

namespace emgc {

enum class LossKind : std::uint8_t { kld = 0, mse = 1 };

/// How the spatial gradient treats neighbours outside the window.
/// `zero` reads them as 0; `interior` drops every difference that would need one.
enum class GradientPadding : std::uint8_t { zero = 0, interior = 1 };

/// Floor applied to both arguments before logarithms: 1e-10 times the larger of the two
/// maxima, or the smallest normal double when both are all zero. Sharing one floor keeps
/// every term of pixel_loss non-negative.
double log_floor(std::span<const double> p, std::span<const double> q) noexcept;

/// sum_t p[t] * (ln p[t] - ln q[t]) with both arguments floored.
double kld_directed(std::span<const double> p, std::span<const double> q);

/// Symmetric KLD sum_t (p[t] - q[t]) * (ln p[t] - ln q[t]).
double pixel_loss(std::span<const double> p, std::span<const double> q);

/// Mean squared error over bins.
double mse_loss(std::span<const double> p, std::span<const double> q);

/// Loss of `kind` between reference `p` and reconstruction `q`. When `normalize_pmf`
/// is set both signals are divided by their sums first.
double reconstruction_loss(LossKind kind, std::span<const double> p, std::span<const double> q,
                           bool normalize_pmf = false);

/// Same value as reconstruction_loss; writes d loss / d q into `grad_q`.
double reconstruction_loss_grad(LossKind kind, std::span<const double> p,
                                std::span<const double> q, bool normalize_pmf,
                                std::span<double> grad_q);

/// The four finite-difference grids at one time bin, each width x height, i-major.
/// up: I[i, j-1] - I[i, j], down: I[i, j+1] - I[i, j],
/// left: I[i-1, j] - I[i, j], right: I[i+1, j] - I[i, j]; missing neighbours read as 0.
struct DirectionalGradients {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<double> up, down, left, right;
};

DirectionalGradients spatial_gradients(const WindowSignal& w, std::size_t t);

/// sum_t of the Frobenius norms of G_dir(w) - G_dir(w') over the four directions.
double gradient_loss(const WindowSignal& w, const WindowSignal& w_prime,
                     GradientPadding padding = GradientPadding::zero);

/// gradient_loss on raw i-major grids of shape width x height x len. When `grad_b` is
/// non-empty it receives d loss / d b (accumulated, not overwritten).
double gradient_loss_grid(std::uint32_t width, std::uint32_t height, std::size_t len,
                          std::span<const double> a, std::span<const double> b,
                          GradientPadding padding, std::span<double> grad_b = {});

/// Per-pixel pixel_loss over full-length histograms.
std::vector<double> pixel_losses(const TransientVolume& a, const TransientVolume& b);

/// L_I = sum over pixels of pixel_loss.
double image_loss(const TransientVolume& a, const TransientVolume& b);

/// Mean over every sample of the squared difference.
double image_mse(const TransientVolume& a, const TransientVolume& b);

}  // namespace emgc
