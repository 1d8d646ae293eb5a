#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "emgc/codec.hpp"
#include "emgc/emg.hpp"
#include "emgc/losses.hpp"
#include "emgc/preprocess.hpp"
#include "emgc/rng.hpp"
#include "emgc/signal.hpp"
#include "emgc/volume.hpp"

namespace emgc {

enum class Scheduler : std::uint8_t { independent, sliding, random };

struct Range {
    double lo;
    double hi;
};

struct FitConfig {
    std::uint32_t components = 4;
    std::uint32_t window = 5;
    LossKind loss = LossKind::kld;
    Scheduler scheduler = Scheduler::random;

    // Adam step size and moment decays.
    double learning_rate = 5e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    std::uint32_t max_epochs = 2000;
    // Cosine decay of the step size from learning_rate down to
    // learning_rate * final_lr_fraction at max_epochs. 1 keeps it constant.
    double final_lr_fraction = 1.0;
    // A fit stops early once its loss has not improved by stall_rel_tol (relative)
    // for stall_epochs consecutive epochs. stall_epochs = 0 disables early stopping.
    std::uint32_t stall_epochs = 200;
    double stall_rel_tol = 1e-6;

    // Random scheduler: a pixel converges after `patience` consecutive visits each
    // improving its loss by less than convergence_rel_tol.
    double convergence_rel_tol = 1e-4;
    std::uint32_t patience = 3;
    // Window fits allowed before giving up; 0 picks a budget from the image size.
    std::uint32_t max_visits = 0;

    Range mu_range{0.05, 0.99};
    Range sigma_range{0.005, 0.2};
    Range tau_range{0.01, 0.5};
    bool log_space_init = true;

    std::uint64_t seed = 0;
    bool normalize_pmf = false;
    GradientPadding padding = GradientPadding::zero;
    std::uint32_t workers = 1;

    /// Throws DomainError when an invariant (K >= 1, odd N, ranges, rates) is violated.
    void validate() const;
};

/// Raw amplitude used for all-zero pixels.
inline constexpr double kDegenerateAmplitudeRaw = -80.0;

struct PixelModel {
    TimeRemap remap;
    std::vector<RawEmgParams> mixture_raw;
    bool converged = false;
    bool degenerate = false;
    bool numeric_warning = false;
    /// Pixel loss of the stored parameters against the pixel's clipped signal.
    double loss = std::numeric_limits<double>::infinity();
    /// Consecutive scheduler visits without meaningful improvement.
    std::uint32_t stale_visits = 0;

    Mixture mixture() const;
    std::vector<double> evaluate() const;  // values on the remap's bin centers
};

/// Placeholder model for an all-zero pixel of length `bins`.
PixelModel degenerate_model(std::uint32_t bins, std::uint32_t components);

/// Initial raw parameters: h = 1, mu sampled K times and (sigma, tau) sampled ceil(sqrt K)
/// times per axis, in log space, with the earliest mu receiving the narrowest pair.
std::vector<RawEmgParams> init_params(const FitConfig& cfg, Rng& rng);

/// Diagnostics of one optimizer run.
struct FitTrace {
    std::vector<double> best_loss;  // best objective seen after each epoch
    double initial_objective = 0.0;
    double final_objective = 0.0;
    std::size_t epochs = 0;
    int nonfinite_events = 0;
    bool stalled = false;          // stopped by the relative-improvement rule
    bool numeric_warning = false;  // gave up after repeated non-finite evaluations
};

/// Joint objective sum_p L_p + L_g over one window, differentiable in the raw
/// parameters of every active member. Members keep their own remaps; each one's
/// reconstruction is zero before its own t_start.
class WindowObjective {
public:
    WindowObjective(const WindowSignal& window, std::span<const PixelModel> models,
                    const FitConfig& cfg);

    std::size_t dimension() const noexcept { return active_.size() * 4 * components_; }

    /// Flattened raw parameters of the active members, component-major per member.
    std::vector<double> pack(std::span<const PixelModel> models) const;
    void unpack(std::span<const double> x, std::span<PixelModel> models) const;

    /// Objective value; fills `grad` (size dimension()) when non-empty.
    double evaluate(std::span<const double> x, std::span<double> grad);

    /// Pixel-loss term of each member at the last evaluated point (0 for inactive ones).
    const std::vector<double>& member_losses() const noexcept { return member_losses_; }
    double last_gradient_term() const noexcept { return gradient_term_; }

private:
    const WindowSignal& window_;
    std::uint32_t components_;
    LossKind loss_;
    bool normalize_pmf_;
    GradientPadding padding_;
    std::vector<std::size_t> active_;   // member indices with parameters
    std::vector<std::size_t> offsets_;  // own t_start - window t_start, per member
    std::vector<double> recon_;         // window-shaped reconstruction
    std::vector<double> grad_recon_;
    std::vector<double> jacobian_;      // per active member, per own bin, 4K entries
    std::vector<std::size_t> jacobian_base_;
    std::vector<double> member_losses_;
    std::vector<EmgParams> constrained_;
    double gradient_term_ = 0.0;
};

/// Fits one clipped pixel from init_params(cfg, rng). Deterministic given the rng state.
PixelModel fit_pixel(const ClippedPixel& pixel, const FitConfig& cfg, Rng& rng,
                     FitTrace* trace = nullptr);

/// Jointly refines all members of `window` starting from `models` (window order,
/// i-major). Each model keeps its own remap, which must start at or after the window's.
/// The best parameters seen replace the models' parameters.
FitTrace fit_window(const WindowSignal& window, const FitConfig& cfg, std::span<PixelModel> models);

struct FitResult {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::uint32_t bins = 0;
    FitConfig config;
    std::vector<PixelModel> pixels;
    double total_loss = 0.0;
    std::size_t window_fits = 0;
    bool budget_exhausted = false;

    double converged_fraction() const;
};

/// Fits a whole volume with the configured scheduler.
FitResult fit_image(const TransientVolume& volume, const FitConfig& cfg);

CompressedImage to_compressed(const FitResult& result);

}  // namespace emgc
