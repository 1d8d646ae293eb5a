#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cli/commands.hpp"

int main(int argc, char** argv) {
    std::optional<std::string> threads;
    if (const char* env = std::getenv("EMGC_THREADS")) threads = env;
    return emgc::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr, threads);
}
