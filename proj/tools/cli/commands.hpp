#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace emgc::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitData = 2,
    kExitNumeric = 3,
};

struct GradcheckReport {
    std::size_t count = 0;
    double max_rel_error = 0.0;
    std::size_t worst_instance = 0;
};

/// Largest relative error between the analytic window-objective gradient and central
/// finite differences over `count` random 3x3x16 windows. Deterministic in `seed`.
GradcheckReport gradcheck(std::uint64_t seed, std::size_t count);

/// Runs the command line `args` (args[0] is the program name). `threads_env` is the
/// value of EMGC_THREADS, if set; it overrides --workers.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        std::optional<std::string> threads_env = std::nullopt);

}  // namespace emgc::cli
