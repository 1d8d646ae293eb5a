#include "emgc/fit.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <thread>
#include <utility>

#include "adam.hpp"
#include "emgc/error.hpp"

namespace emgc {
namespace {

constexpr int kMaxNonfiniteEvents = 5;

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void check_range(const Range& r, const char* name) {
    if (!(r.lo > 0.0) || !(r.hi > r.lo))
        throw DomainError(std::string("FitConfig: ") + name + " needs 0 < lo < hi");
}

// One uniform draw per equal-width stratum of [lo, hi] (in log space when
// requested). Each draw is still uniform over the whole range, but the K values
// cannot all pile up at one end, which was the dominant failure mode of plain
// i.i.d. sampling on synthetic mixtures.
std::vector<double> sample_axis(const Range& r, std::size_t count, bool log_space, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double a = log_space ? std::log(r.lo) : r.lo;
    const double b = log_space ? std::log(r.hi) : r.hi;
    std::vector<double> v(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double xi = a + (b - a) * (static_cast<double>(i) + unit(rng)) / static_cast<double>(count);
        v[i] = std::clamp(log_space ? std::exp(xi) : xi, r.lo, r.hi);
    }
    return v;
}

// Runs Adam on `objective` from `x`; on return `x` holds the best point seen.
FitTrace minimize(WindowObjective& objective, std::vector<double>& x, const FitConfig& cfg) {
    FitTrace trace;
    const std::size_t n = x.size();
    std::vector<double> grad(n, 0.0);
    std::vector<double> best_x = x;
    std::vector<double> last_finite = x;
    detail::AdamState adam(n, cfg.beta1, cfg.beta2);

    double lr = cfg.learning_rate;
    double best = std::numeric_limits<double>::infinity();
    double reference = best;
    std::size_t reference_epoch = 0;
    bool first = true;

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        trace.epochs = epoch + 1;
        double f = 0.0;
        bool ok = all_finite(x);
        if (ok) {
            try {
                f = objective.evaluate(x, grad);
                ok = std::isfinite(f) && all_finite(grad);
            } catch (const DomainError&) {
                ok = false;
            }
        }
        if (!ok) {
            if (++trace.nonfinite_events >= kMaxNonfiniteEvents) {
                trace.numeric_warning = true;
                break;
            }
            lr *= 0.5;
            x = last_finite;
            adam.reset();
            continue;
        }
        if (first) {
            trace.initial_objective = f;
            first = false;
        }
        last_finite = x;
        if (f < best) {
            best = f;
            best_x = x;
        }
        trace.best_loss.push_back(best);

        if (cfg.stall_epochs > 0) {
            if (best < reference * (1.0 - cfg.stall_rel_tol) || !std::isfinite(reference)) {
                reference = best;
                reference_epoch = epoch;
            } else if (epoch - reference_epoch >= cfg.stall_epochs) {
                trace.stalled = true;
                break;
            }
        }
        const double progress = static_cast<double>(epoch) / static_cast<double>(cfg.max_epochs);
        const double schedule =
            cfg.final_lr_fraction +
            (1.0 - cfg.final_lr_fraction) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
        adam.update(x, grad, lr * schedule);
    }
    if (std::isfinite(best)) x = std::move(best_x);
    trace.final_objective = best;
    return trace;
}

template <typename Fn>
void parallel_for(std::size_t count, std::uint32_t workers, Fn&& fn) {
    if (workers <= 1 || count <= 1) {
        for (std::size_t k = 0; k < count; ++k) fn(k);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const std::size_t threads = std::min<std::size_t>(workers, count);
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (std::size_t k = next++; k < count; k = next++) fn(k);
        });
    for (auto& t : pool) t.join();
}

}  // namespace

void FitConfig::validate() const {
    if (components == 0) throw DomainError("FitConfig: K must be >= 1");
    if (window == 0 || window % 2 == 0) throw DomainError("FitConfig: window side must be odd");
    if (!(learning_rate > 0.0)) throw DomainError("FitConfig: learning rate must be positive");
    if (!(final_lr_fraction > 0.0 && final_lr_fraction <= 1.0))
        throw DomainError("FitConfig: final_lr_fraction must lie in (0, 1]");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
        throw DomainError("FitConfig: Adam decays must lie in [0, 1)");
    if (!(convergence_rel_tol > 0.0) || !(stall_rel_tol >= 0.0))
        throw DomainError("FitConfig: tolerances must be positive");
    check_range(mu_range, "mu_range");
    if (mu_range.hi > 1.0) throw DomainError("FitConfig: mu_range must lie inside (0, 1]");
    check_range(sigma_range, "sigma_range");
    check_range(tau_range, "tau_range");
}

Mixture PixelModel::mixture() const {
    Mixture m;
    m.reserve(mixture_raw.size());
    for (const auto& r : mixture_raw) m.push_back(constrain(r));
    return m;
}

std::vector<double> PixelModel::evaluate() const {
    const Mixture m = mixture();
    std::vector<double> out(remap.t_len);
    for (std::size_t b = 0; b < out.size(); ++b) out[b] = mixture_eval(remap.bin_center(b), m);
    return out;
}

PixelModel degenerate_model(std::uint32_t bins, std::uint32_t components) {
    PixelModel m;
    m.remap = {bins - 1, 1};
    m.mixture_raw.assign(components,
                         RawEmgParams{kDegenerateAmplitudeRaw, 0.0, std::log(0.1), std::log(0.1)});
    m.degenerate = true;
    m.converged = true;
    m.loss = 0.0;
    return m;
}

std::vector<RawEmgParams> init_params(const FitConfig& cfg, Rng& rng) {
    cfg.validate();
    const std::size_t k = cfg.components;
    std::size_t per_axis = 1;
    while (per_axis * per_axis < k) ++per_axis;

    const auto mus = sample_axis(cfg.mu_range, k, cfg.log_space_init, rng);
    const auto sigmas = sample_axis(cfg.sigma_range, per_axis, cfg.log_space_init, rng);
    const auto taus = sample_axis(cfg.tau_range, per_axis, cfg.log_space_init, rng);

    // All (sigma, tau) rank pairs ordered by combined rank, so a later mu never
    // receives a pair that is narrower on both axes than an earlier one.
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(per_axis * per_axis);
    for (std::size_t a = 0; a < per_axis; ++a)
        for (std::size_t b = 0; b < per_axis; ++b) pairs.emplace_back(a, b);
    std::stable_sort(pairs.begin(), pairs.end(), [](const auto& l, const auto& r) {
        return l.first + l.second < r.first + r.second;
    });

    std::vector<RawEmgParams> out(k);
    for (std::size_t c = 0; c < k; ++c)
        out[c] = unconstrain({1.0, mus[c], sigmas[pairs[c].first], taus[pairs[c].second]});
    return out;
}

WindowObjective::WindowObjective(const WindowSignal& window, std::span<const PixelModel> models,
                                 const FitConfig& cfg)
    : window_(window),
      components_(cfg.components),
      loss_(cfg.loss),
      normalize_pmf_(cfg.normalize_pmf),
      padding_(cfg.padding) {
    const std::size_t members = window.pixel_count();
    const std::size_t len = window.length();
    if (models.size() != members)
        throw ShapeError("WindowObjective: expected one model per window member");
    if (window.data.size() != members * len)
        throw ShapeError("WindowObjective: window data size mismatch");
    offsets_.assign(members, 0);
    std::size_t jac_size = 0;
    for (std::size_t m = 0; m < members; ++m) {
        const auto& model = models[m];
        if (model.degenerate) continue;
        if (model.mixture_raw.size() != components_)
            throw ShapeError("WindowObjective: model has the wrong component count");
        if (model.remap.total_bins() != window.remap.total_bins() ||
            model.remap.t_start < window.remap.t_start)
            throw ShapeError("WindowObjective: model remap is not aligned with the window");
        offsets_[m] = model.remap.t_start - window.remap.t_start;
        active_.push_back(m);
        jacobian_base_.push_back(jac_size);
        jac_size += (len - offsets_[m]) * 4 * components_;
    }
    recon_.assign(members * len, 0.0);
    grad_recon_.assign(members * len, 0.0);
    jacobian_.assign(jac_size, 0.0);
    member_losses_.assign(members, 0.0);
    constrained_.resize(components_);
}

std::vector<double> WindowObjective::pack(std::span<const PixelModel> models) const {
    std::vector<double> x;
    x.reserve(dimension());
    for (std::size_t m : active_)
        for (const auto& r : models[m].mixture_raw) {
            x.push_back(r.h_raw);
            x.push_back(r.mu_raw);
            x.push_back(r.sigma_raw);
            x.push_back(r.tau_raw);
        }
    return x;
}

void WindowObjective::unpack(std::span<const double> x, std::span<PixelModel> models) const {
    std::size_t k = 0;
    for (std::size_t m : active_)
        for (auto& r : models[m].mixture_raw) {
            r = {x[k], x[k + 1], x[k + 2], x[k + 3]};
            k += 4;
        }
}

double WindowObjective::evaluate(std::span<const double> x, std::span<double> grad) {
    if (x.size() != dimension()) throw ShapeError("WindowObjective: parameter size mismatch");
    const bool want_grad = !grad.empty();
    const std::size_t len = window_.length();
    const std::size_t stride = 4 * std::size_t{components_};

    std::fill(recon_.begin(), recon_.end(), 0.0);
    EmgGradient g{};
    for (std::size_t a = 0; a < active_.size(); ++a) {
        const std::size_t m = active_[a];
        const double* raw = x.data() + a * stride;
        for (std::size_t c = 0; c < components_; ++c)
            constrained_[c] = constrain({raw[4 * c], raw[4 * c + 1], raw[4 * c + 2], raw[4 * c + 3]});
        const std::size_t own_len = len - offsets_[m];
        const double inv_len = 1.0 / static_cast<double>(own_len);
        double* out = recon_.data() + m * len + offsets_[m];
        double* jac = jacobian_.data() + jacobian_base_[a];
        for (std::size_t b = 0; b < own_len; ++b) {
            const double t = (static_cast<double>(b) + 0.5) * inv_len;
            double v = 0.0;
            if (want_grad) {
                for (std::size_t c = 0; c < components_; ++c) {
                    v += emg_value_and_grad(t, constrained_[c], g);
                    std::copy(g.begin(), g.end(), jac + b * stride + 4 * c);
                }
            } else {
                for (std::size_t c = 0; c < components_; ++c) v += emg_eval(t, constrained_[c]);
            }
            out[b] = v;
        }
    }

    double total = 0.0;
    if (want_grad) std::fill(grad_recon_.begin(), grad_recon_.end(), 0.0);
    for (std::size_t m : active_) {
        const std::size_t off = m * len + offsets_[m];
        const std::size_t own_len = len - offsets_[m];
        const auto data = window_.pixel(m).subspan(offsets_[m]);
        const std::span<const double> q(recon_.data() + off, own_len);
        const double l = want_grad
                             ? reconstruction_loss_grad(loss_, data, q, normalize_pmf_,
                                                        std::span<double>(grad_recon_.data() + off, own_len))
                             : reconstruction_loss(loss_, data, q, normalize_pmf_);
        member_losses_[m] = l;
        total += l;
    }

    // A lone pixel has no neighbours, so its objective is the plain pixel loss even
    // under zero padding. This keeps fit_pixel and 1x1 windows identical.
    gradient_term_ = 0.0;
    if (window_.pixel_count() > 1) {
        gradient_term_ = gradient_loss_grid(window_.width, window_.height, len, window_.data, recon_,
                                            padding_,
                                            want_grad ? std::span<double>(grad_recon_) : std::span<double>{});
        total += gradient_term_;
    }

    if (want_grad) {
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t a = 0; a < active_.size(); ++a) {
            const std::size_t m = active_[a];
            const std::size_t own_len = len - offsets_[m];
            const double* gr = grad_recon_.data() + m * len + offsets_[m];
            const double* jac = jacobian_.data() + jacobian_base_[a];
            double* gx = grad.data() + a * stride;
            for (std::size_t b = 0; b < own_len; ++b) {
                const double w = gr[b];
                if (w == 0.0) continue;
                const double* row = jac + b * stride;
                for (std::size_t k = 0; k < stride; ++k) gx[k] += w * row[k];
            }
        }
    }
    return total;
}

FitTrace fit_window(const WindowSignal& window, const FitConfig& cfg, std::span<PixelModel> models) {
    cfg.validate();
    WindowObjective objective(window, models, cfg);
    std::vector<double> x = objective.pack(models);
    FitTrace trace = minimize(objective, x, cfg);
    if (!std::isfinite(trace.final_objective)) {
        for (auto& m : models)
            if (!m.degenerate) m.numeric_warning = true;
        return trace;
    }
    objective.unpack(x, models);
    objective.evaluate(x, {});
    for (std::size_t m = 0; m < models.size(); ++m) {
        if (models[m].degenerate) continue;
        models[m].loss = objective.member_losses()[m];
        models[m].numeric_warning = trace.numeric_warning;
    }
    return trace;
}

PixelModel fit_pixel(const ClippedPixel& pixel, const FitConfig& cfg, Rng& rng, FitTrace* trace) {
    cfg.validate();
    if (pixel.degenerate) return degenerate_model(pixel.remap.total_bins(), cfg.components);
    if (pixel.signal.size() != pixel.remap.t_len)
        throw ShapeError("fit_pixel: signal length does not match its remap");

    std::array<PixelModel, 1> models{};
    models[0].remap = pixel.remap;
    models[0].mixture_raw = init_params(cfg, rng);
    const WindowSignal window{1, 1, pixel.remap, pixel.signal};
    FitTrace t = fit_window(window, cfg, models);
    models[0].converged = t.stalled;
    if (trace) *trace = std::move(t);
    return std::move(models[0]);
}

double FitResult::converged_fraction() const {
    if (pixels.empty()) return 1.0;
    const auto n = std::count_if(pixels.begin(), pixels.end(),
                                 [](const PixelModel& m) { return m.converged; });
    return static_cast<double>(n) / static_cast<double>(pixels.size());
}

namespace {

class ImageFitter {
public:
    ImageFitter(const TransientVolume& volume, const FitConfig& cfg)
        : volume_(volume), cfg_(cfg), models_(volume.pixel_count()) {
        for (std::size_t p = 0; p < models_.size(); ++p) {
            clipped_.push_back(clip_normalize(volume.pixel(p)));
            const auto& c = clipped_.back();
            if (c.degenerate) {
                models_[p] = degenerate_model(volume.bins, cfg.components);
            } else {
                models_[p].remap = c.remap;
            }
        }
    }

    FitResult run() {
        const bool spatial = cfg_.window > 1 && volume_.pixel_count() > 1;
        if (!spatial || cfg_.scheduler == Scheduler::independent)
            run_independent();
        else if (cfg_.scheduler == Scheduler::sliding)
            run_sliding();
        else
            run_random();

        FitResult r;
        r.width = volume_.width;
        r.height = volume_.height;
        r.bins = volume_.bins;
        r.config = cfg_;
        r.total_loss = 0.0;
        for (const auto& m : models_) r.total_loss += m.loss;
        r.pixels = std::move(models_);
        r.window_fits = window_fits_;
        r.budget_exhausted = budget_exhausted_;
        return r;
    }

private:
    Rng pixel_rng(std::size_t p) const { return Rng(mix_seed(cfg_.seed, p)); }

    void initialize_all() {
        for (std::size_t p = 0; p < models_.size(); ++p) {
            if (models_[p].degenerate) continue;
            Rng rng = pixel_rng(p);
            models_[p].mixture_raw = init_params(cfg_, rng);
        }
    }

    void run_independent() {
        parallel_for(models_.size(), cfg_.workers, [&](std::size_t p) {
            if (models_[p].degenerate) return;
            Rng rng = pixel_rng(p);
            models_[p] = fit_pixel(clipped_[p], cfg_, rng);
        });
        window_fits_ = models_.size();
    }

    std::vector<PixelModel> gather(const PixelRect& rect) const {
        std::vector<PixelModel> out;
        out.reserve(std::size_t{rect.width} * rect.height);
        for (std::uint32_t di = 0; di < rect.width; ++di)
            for (std::uint32_t dj = 0; dj < rect.height; ++dj)
                out.push_back(models_[volume_.pixel_index(rect.i0 + di, rect.j0 + dj)]);
        return out;
    }

    void scatter(const PixelRect& rect, std::vector<PixelModel>& members) {
        std::size_t k = 0;
        for (std::uint32_t di = 0; di < rect.width; ++di)
            for (std::uint32_t dj = 0; dj < rect.height; ++dj)
                models_[volume_.pixel_index(rect.i0 + di, rect.j0 + dj)] = std::move(members[k++]);
    }

    bool all_degenerate(const PixelRect& rect) const {
        for (std::uint32_t di = 0; di < rect.width; ++di)
            for (std::uint32_t dj = 0; dj < rect.height; ++dj)
                if (!models_[volume_.pixel_index(rect.i0 + di, rect.j0 + dj)].degenerate) return false;
        return true;
    }

    // Non-overlapping N x N tiles in raster order (rows of tiles top to bottom).
    void run_sliding() {
        initialize_all();
        const std::uint32_t n = cfg_.window;
        std::vector<PixelRect> tiles;
        for (std::uint32_t j0 = 0; j0 < volume_.height; j0 += n)
            for (std::uint32_t i0 = 0; i0 < volume_.width; i0 += n) {
                const PixelRect rect{i0, j0, std::min(n, volume_.width - i0),
                                     std::min(n, volume_.height - j0)};
                if (!all_degenerate(rect)) tiles.push_back(rect);
            }
        parallel_for(tiles.size(), cfg_.workers, [&](std::size_t k) {
            const auto& rect = tiles[k];
            const WindowSignal window = window_remap(volume_, rect);
            auto members = gather(rect);
            const FitTrace trace = fit_window(window, cfg_, members);
            for (auto& m : members)
                if (!m.degenerate) m.converged = trace.stalled;
            scatter(rect, members);
        });
        window_fits_ = tiles.size();
    }

    std::size_t visit_budget() const {
        if (cfg_.max_visits > 0) return cfg_.max_visits;
        const std::size_t area = std::size_t{cfg_.window} * cfg_.window;
        const std::size_t windows = (models_.size() + area - 1) / area;
        return 4 * (cfg_.patience + 2) * windows;
    }

    void run_random() {
        initialize_all();
        std::vector<std::size_t> pending;
        for (std::size_t p = 0; p < models_.size(); ++p)
            if (!models_[p].degenerate) pending.push_back(p);

        Rng visit_rng(mix_seed(cfg_.seed, models_.size()));
        const std::size_t budget = visit_budget();
        while (!pending.empty()) {
            if (window_fits_ >= budget) {
                budget_exhausted_ = true;
                break;
            }
            std::uniform_int_distribution<std::size_t> pick(0, pending.size() - 1);
            const std::size_t center = pending[pick(visit_rng)];
            const auto ci = static_cast<std::uint32_t>(center / volume_.height);
            const auto cj = static_cast<std::uint32_t>(center % volume_.height);
            const PixelRect rect = centered_window(volume_, ci, cj, cfg_.window);

            const WindowSignal window = window_remap(volume_, rect);
            auto members = gather(rect);
            std::vector<double> previous(members.size());
            for (std::size_t k = 0; k < members.size(); ++k) previous[k] = members[k].loss;
            fit_window(window, cfg_, members);
            ++window_fits_;

            for (std::size_t k = 0; k < members.size(); ++k) {
                auto& m = members[k];
                if (m.degenerate) continue;
                const double prev = previous[k];
                const bool improved =
                    !std::isfinite(prev) || (prev - m.loss) > cfg_.convergence_rel_tol * std::abs(prev);
                m.stale_visits = improved ? 0 : m.stale_visits + 1;
                m.converged = m.stale_visits >= cfg_.patience;
            }
            scatter(rect, members);
            std::erase_if(pending, [&](std::size_t p) { return models_[p].converged; });
        }
    }

    const TransientVolume& volume_;
    FitConfig cfg_;
    std::vector<ClippedPixel> clipped_;
    std::vector<PixelModel> models_;
    std::size_t window_fits_ = 0;
    bool budget_exhausted_ = false;
};

}  // namespace

FitResult fit_image(const TransientVolume& volume, const FitConfig& cfg) {
    volume.validate();
    cfg.validate();
    return ImageFitter(volume, cfg).run();
}

CompressedImage to_compressed(const FitResult& result) {
    CompressedImage image;
    image.header = {result.width,
                    result.height,
                    result.bins,
                    result.config.components,
                    result.config.window,
                    result.config.loss,
                    0};
    image.pixels.reserve(result.pixels.size());
    for (const auto& m : result.pixels) {
        PixelRecord rec;
        rec.remap = m.remap;
        rec.params = pack_params(m.mixture());
        rec.status = static_cast<std::uint8_t>((m.converged ? kPixelConverged : 0) |
                                               (m.degenerate ? kPixelDegenerate : 0) |
                                               (m.numeric_warning ? kPixelNumericWarning : 0));
        image.pixels.push_back(std::move(rec));
    }
    return image;
}

}  // namespace emgc
