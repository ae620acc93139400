// Runs the two-class drifting-Gaussian experiment in all three learning modes
// and prints per-trial accuracy side by side.

#include <cstdio>
#include <cstdlib>
#include <string>

#include "ssbsl/ssbsl.hpp"

int main(int argc, char** argv) {
    const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : ssbsl::kDefaultSeed;
    const auto cfg = ssbsl::default_experiment(ssbsl::crossing_drift_scenario(seed), seed);
    const auto report = ssbsl::run_experiment(cfg);

    std::printf("trial");
    for (const auto& run : report.runs) std::printf("  %8s", run.mode.c_str());
    std::printf("\n");
    for (std::size_t i = 0; i < cfg.test_trials.size(); ++i) {
        std::printf("%5d", cfg.test_trials[i]);
        for (const auto& run : report.runs) std::printf("  %8.4f", run.trials[i].accuracy.value_or(0.0));
        std::printf("\n");
    }
    std::printf(" mean");
    for (const auto& run : report.runs) std::printf("  %8.4f", run.mean_accuracy().value_or(0.0));
    std::printf("\n");
}
