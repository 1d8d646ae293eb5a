#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "emgc/codec.hpp"
#include "emgc/error.hpp"
#include "emgc/fit.hpp"
#include "emgc/losses.hpp"
#include "emgc/preprocess.hpp"
#include "emgc/synth.hpp"

namespace emgc::cli {
namespace {

constexpr double kGradcheckTolerance = 1e-4;

enum class ReportFormat { text, kv };

// Ordered key/value pairs; text mode aligns them, kv mode prints key=value.
class Report {
public:
    void add(std::string key, double value) {
        std::ostringstream s;
        s.precision(10);
        s << value;
        entries_.emplace_back(std::move(key), s.str());
    }
    void add(std::string key, std::size_t value) { entries_.emplace_back(std::move(key), std::to_string(value)); }
    void add(std::string key, std::string value) { entries_.emplace_back(std::move(key), std::move(value)); }

    void print(std::ostream& out, ReportFormat format) const {
        std::size_t width = 0;
        for (const auto& [k, v] : entries_) width = std::max(width, k.size());
        for (const auto& [k, v] : entries_) {
            if (format == ReportFormat::kv)
                out << k << '=' << v << '\n';
            else
                out << k << std::string(width + 2 - k.size(), ' ') << v << '\n';
        }
    }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

// Writes next to the target and renames, so a failure never leaves a partial file.
void write_atomically(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    auto tmp = path;
    tmp += ".partial";
    try {
        write_file(tmp, bytes);
        std::filesystem::rename(tmp, path);
    } catch (...) {
        std::error_code ignored;
        std::filesystem::remove(tmp, ignored);
        throw;
    }
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

struct FitFlags {
    std::uint32_t k = FitConfig{}.components;
    std::uint32_t window = FitConfig{}.window;
    Scheduler scheduler = FitConfig{}.scheduler;
    LossKind loss = FitConfig{}.loss;
    double lr = FitConfig{}.learning_rate;
    std::uint32_t epochs = FitConfig{}.max_epochs;
    std::uint64_t seed = FitConfig{}.seed;
    double tol = FitConfig{}.convergence_rel_tol;
    std::uint32_t patience = FitConfig{}.patience;
    std::uint32_t workers = FitConfig{}.workers;

    FitConfig config() const {
        FitConfig cfg;
        cfg.components = k;
        cfg.window = window;
        cfg.scheduler = scheduler;
        cfg.loss = loss;
        cfg.learning_rate = lr;
        cfg.max_epochs = epochs;
        cfg.seed = seed;
        cfg.convergence_rel_tol = tol;
        cfg.patience = patience;
        cfg.workers = workers;
        return cfg;
    }
};

struct SynthFlags {
    SceneSpec spec;
    double noise_divisor = 0.0;
    std::string truth_path;
};

int compress(const std::string& in, const std::string& out_path, const FitConfig& cfg,
             ReportFormat format, std::ostream& out, std::ostream& err) {
    const auto start = std::chrono::steady_clock::now();
    const TransientVolume volume = read_volume(read_file(in));
    const FitResult result = fit_image(volume, cfg);
    const CompressedImage image = to_compressed(result);
    const Bytes bytes = encode(image);
    const double l_i = image_loss(volume, reconstruct(image));
    write_atomically(out_path, bytes);

    std::size_t unconverged = 0, warnings = 0;
    for (const auto& m : result.pixels) {
        if (!m.degenerate && !m.converged) ++unconverged;
        if (m.numeric_warning) ++warnings;
    }
    Report r;
    r.add("l_i", l_i);
    r.add("ratio", compression_ratio(volume.bins, cfg.components));
    r.add("ratio_window", compression_ratio_window(volume.bins, cfg.components, cfg.window));
    r.add("converged_pct", 100.0 * result.converged_fraction());
    r.add("wall_ms", elapsed_ms(start));
    r.add("unconverged", unconverged);
    r.add("window_fits", result.window_fits);
    r.add("bytes_in", volume_size(volume.width, volume.height, volume.bins));
    r.add("bytes_out", bytes.size());
    r.print(out, format);
    if (unconverged > 0) err << "warning: " << unconverged << " pixel(s) did not converge\n";
    if (result.budget_exhausted) err << "warning: visit budget exhausted\n";
    if (warnings > 0) err << "warning: " << warnings << " pixel(s) hit repeated non-finite losses\n";
    return kExitOk;
}

int decompress(const std::string& in, const std::string& out_path, ReportFormat format,
               std::ostream& out) {
    const auto start = std::chrono::steady_clock::now();
    const CompressedImage image = decode(read_file(in));
    const Bytes bytes = write_volume(reconstruct(image));
    write_atomically(out_path, bytes);
    Report r;
    r.add("width", std::size_t{image.header.width});
    r.add("height", std::size_t{image.header.height});
    r.add("bins", std::size_t{image.header.bins});
    r.add("wall_ms", elapsed_ms(start));
    r.print(out, format);
    return kExitOk;
}

int evaluate(const std::string& a_path, const std::string& b_path, ReportFormat format,
             std::ostream& out) {
    const TransientVolume a = read_volume(read_file(a_path));
    const TransientVolume b = read_volume(read_file(b_path));
    std::vector<double> losses = pixel_losses(a, b);
    double l_i = 0.0;
    for (double l : losses) l_i += l;
    std::sort(losses.begin(), losses.end());
    const std::size_t n = losses.size();
    const double median = n % 2 ? losses[n / 2] : 0.5 * (losses[n / 2 - 1] + losses[n / 2]);

    Report r;
    r.add("l_i", l_i);
    r.add("pixel_min", losses.front());
    r.add("pixel_median", median);
    r.add("pixel_max", losses.back());
    r.add("mse", image_mse(a, b));
    r.print(out, format);
    return kExitOk;
}

int synth(const SynthFlags& flags, const std::string& out_path, ReportFormat format,
          std::ostream& out) {
    const Scene scene = generate_scene(flags.spec);
    TransientVolume volume = scene.volume;
    if (flags.noise_divisor > 0.0) {
        Rng rng(mix_seed(flags.spec.seed, 0x6e6f697365ULL));
        volume = add_exposure_noise(volume, flags.noise_divisor, flags.spec.intensity_scale, rng);
    }
    const Bytes bytes = write_volume(volume);
    Bytes truth;
    if (!flags.truth_path.empty()) truth = encode(truth_to_compressed(scene));
    write_atomically(out_path, bytes);
    if (!flags.truth_path.empty()) write_atomically(flags.truth_path, truth);

    Report r;
    r.add("bytes", bytes.size());
    if (!truth.empty()) r.add("truth_bytes", truth.size());
    r.add("mu_step_bound", scene.mu_step_bound);
    r.print(out, format);
    return kExitOk;
}

int run_gradcheck(std::uint64_t seed, std::size_t count, ReportFormat format, std::ostream& out,
                  std::ostream& err) {
    const auto start = std::chrono::steady_clock::now();
    const GradcheckReport g = gradcheck(seed, count);
    Report r;
    r.add("count", g.count);
    r.add("max_rel_error", g.max_rel_error);
    r.add("worst_instance", g.worst_instance);
    r.add("tolerance", kGradcheckTolerance);
    r.add("wall_ms", elapsed_ms(start));
    r.print(out, format);
    if (count == 0) {
        err << "warning: no instances checked\n";
        return kExitOk;
    }
    if (!(g.max_rel_error <= kGradcheckTolerance)) {
        err << "gradient check failed: max relative error " << g.max_rel_error << '\n';
        return kExitNumeric;
    }
    return kExitOk;
}

std::uint32_t parse_threads(const std::string& value) {
    std::size_t used = 0;
    unsigned long n = 0;
    try {
        n = std::stoul(value, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != value.size() || n == 0 || n > 4096)
        throw CLI::ValidationError("EMGC_THREADS", "expected a positive integer, got '" + value + "'");
    return static_cast<std::uint32_t>(n);
}

}  // namespace

GradcheckReport gradcheck(std::uint64_t seed, std::size_t count) {
    constexpr std::uint32_t kSide = 3;
    constexpr std::uint32_t kBins = 16;
    GradcheckReport report;
    report.count = count;

    for (std::size_t n = 0; n < count; ++n) {
        Rng rng(mix_seed(seed, n));
        std::uniform_int_distribution<std::uint32_t> pick_k(1, 3);
        std::uniform_int_distribution<std::uint32_t> pick_onset(0, 3);
        std::exponential_distribution<double> intensity(1.0);
        std::uniform_real_distribution<double> unit(0.0, 1.0);

        FitConfig cfg;
        cfg.components = pick_k(rng);
        cfg.loss = n % 4 == 3 ? LossKind::mse : LossKind::kld;

        std::vector<std::vector<double>> raws(kSide * kSide, std::vector<double>(kBins, 0.0));
        std::vector<PixelModel> models(raws.size());
        for (std::size_t p = 0; p < raws.size(); ++p) {
            const std::uint32_t onset = pick_onset(rng);
            for (std::uint32_t t = onset; t < kBins; ++t) raws[p][t] = 0.05 + intensity(rng);
            models[p].remap = {onset, kBins - onset};
            for (std::uint32_t c = 0; c < cfg.components; ++c) {
                const EmgParams e{0.3 + 2.0 * unit(rng), 0.1 + 0.8 * unit(rng),
                                  0.03 + 0.17 * unit(rng), 0.03 + 0.4 * unit(rng)};
                models[p].mixture_raw.push_back(unconstrain(e));
            }
        }
        const WindowSignal window = window_remap(raws, kSide, kSide);
        WindowObjective objective(window, models, cfg);
        std::vector<double> x = objective.pack(models);
        std::vector<double> analytic(x.size());
        objective.evaluate(x, analytic);

        double diff2 = 0.0, norm2 = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
            const double saved = x[i];
            x[i] = saved + h;
            const double up = objective.evaluate(x, {});
            x[i] = saved - h;
            const double down = objective.evaluate(x, {});
            x[i] = saved;
            const double fd = (up - down) / (2.0 * h);
            diff2 += (analytic[i] - fd) * (analytic[i] - fd);
            norm2 += fd * fd;
        }
        const double rel = std::sqrt(diff2) / std::max(std::sqrt(norm2), 1e-300);
        if (rel > report.max_rel_error || std::isnan(rel)) {
            report.max_rel_error = rel;
            report.worst_instance = n;
        }
    }
    return report;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        std::optional<std::string> threads_env) {
    CLI::App app{"Compress transient images with exponentially modified Gaussian mixtures", "emgc"};
    app.require_subcommand(1);

    std::string report_name = "text";
    const std::map<std::string, ReportFormat> report_names{{"text", ReportFormat::text},
                                                           {"kv", ReportFormat::kv}};
    auto add_report = [&](CLI::App* sub) {
        sub->add_option("--report", report_name, "Report format")->check(CLI::IsMember({"text", "kv"}));
    };

    std::string in, in2, out_path;
    FitFlags fit;
    auto* compress_cmd = app.add_subcommand("compress", "Fit a TRIV volume and write an EMGC file");
    compress_cmd->add_option("input", in, "Input TRIV volume")->required();
    compress_cmd->add_option("output", out_path, "Output EMGC file")->required();
    compress_cmd->add_option("--k", fit.k, "Components per pixel")->check(CLI::Range(1u, 1024u));
    compress_cmd->add_option("--window", fit.window, "Window side N (odd)");
    compress_cmd->add_option("--scheduler", fit.scheduler, "Pixel scheduling")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, Scheduler>{{"independent", Scheduler::independent},
                                             {"sliding", Scheduler::sliding},
                                             {"random", Scheduler::random}}));
    compress_cmd->add_option("--loss", fit.loss, "Pixel loss")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, LossKind>{{"kld", LossKind::kld}, {"mse", LossKind::mse}}));
    compress_cmd->add_option("--lr", fit.lr, "Adam learning rate");
    compress_cmd->add_option("--epochs", fit.epochs, "Maximum epochs per fit");
    compress_cmd->add_option("--seed", fit.seed, "Random seed");
    compress_cmd->add_option("--tol", fit.tol, "Relative improvement below which a visit counts as stale");
    compress_cmd->add_option("--patience", fit.patience, "Stale visits before a pixel converges");
    compress_cmd->add_option("--workers", fit.workers, "Worker threads (EMGC_THREADS overrides)")
        ->check(CLI::Range(1u, 4096u));
    add_report(compress_cmd);

    auto* decompress_cmd = app.add_subcommand("decompress", "Reconstruct a TRIV volume from an EMGC file");
    decompress_cmd->add_option("input", in, "Input EMGC file")->required();
    decompress_cmd->add_option("output", out_path, "Output TRIV volume")->required();
    add_report(decompress_cmd);

    auto* eval_cmd = app.add_subcommand("eval", "Compare two TRIV volumes");
    eval_cmd->add_option("a", in, "First volume")->required();
    eval_cmd->add_option("b", in2, "Second volume")->required();
    add_report(eval_cmd);

    SynthFlags sf;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic scene");
    synth_cmd->add_option("output", out_path, "Output TRIV volume")->required();
    synth_cmd->add_option("--width", sf.spec.width);
    synth_cmd->add_option("--height", sf.spec.height);
    synth_cmd->add_option("--bins", sf.spec.bins);
    synth_cmd->add_option("--k-true", sf.spec.components, "Components per ground-truth pixel");
    synth_cmd->add_option("--smoothness", sf.spec.smoothness, "Correlation length of the parameter fields");
    synth_cmd->add_option("--scale", sf.spec.intensity_scale, "Photons per unit intensity");
    synth_cmd->add_option("--max-onset", sf.spec.max_onset, "Largest leading-zero prefix (0: bins/8)");
    synth_cmd->add_option("--seed", sf.spec.seed);
    synth_cmd->add_option("--noise-divisor", sf.noise_divisor, "Exposure divisor for Poisson noise (0: clean)");
    synth_cmd->add_option("--truth", sf.truth_path, "Also write the ground-truth parameters as EMGC");
    add_report(synth_cmd);

    std::uint64_t gc_seed = 0;
    std::size_t gc_count = 500;
    auto* gradcheck_cmd = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
    gradcheck_cmd->add_option("--seed", gc_seed);
    gradcheck_cmd->add_option("--count", gc_count, "Random windows to check");
    add_report(gradcheck_cmd);

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
        if (threads_env) fit.workers = parse_threads(*threads_env);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    const ReportFormat format = report_names.at(report_name);
    try {
        if (compress_cmd->parsed()) {
            const FitConfig cfg = fit.config();
            try {
                cfg.validate();
            } catch (const DomainError& e) {
                err << "error: " << e.what() << '\n';
                return kExitUsage;
            }
            return compress(in, out_path, cfg, format, out, err);
        }
        if (decompress_cmd->parsed()) return decompress(in, out_path, format, out);
        if (eval_cmd->parsed()) return evaluate(in, in2, format, out);
        if (synth_cmd->parsed()) {
            try {
                sf.spec.validate();
                if (sf.noise_divisor != 0.0 && !(sf.noise_divisor >= 1.0 && std::isfinite(sf.noise_divisor)))
                    throw DomainError("--noise-divisor must be 0 (off) or at least 1");
            } catch (const DomainError& e) {
                err << "error: " << e.what() << '\n';
                return kExitUsage;
            }
            return synth(sf, out_path, format, out);
        }
        return run_gradcheck(gc_seed, gc_count, format, out, err);
    } catch (const DomainError& e) {
        err << "numerical error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
}

}  // namespace emgc::cli
