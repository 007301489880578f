#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ddsat/synth.hpp"
#include "ddsat/system.hpp"

namespace ddsat {

// Fully-resolved experiment plan parsed from a sectioned key-value file.
struct ExperimentConfig {
    LinearSaturatedSystem system;

    // excitation: closed-loop set-point tracking (gain below, uniform reference)
    // or open-loop uniform input when no gain is given.
    std::optional<Mat> excitation_gain;
    double excitation_low = -1.0;
    double excitation_high = 1.0;

    int T = 6000;
    double noise_std = 0.1;
    std::vector<std::uint64_t> seeds;

    SynthProblem problem = SynthProblem::Boa;
    SynthesisOptions synth;

    // compare sweeps (outer product of the two grids; empty = use the base value)
    std::vector<double> noise_grid;
    std::vector<int> horizon_grid;

    std::string out_dir = "out";
    int jobs = 1;
};

// Parses the config text; unknown sections or keys are rejected with their
// names in the error message. `[system] preset = benchmark` loads the built-in
// third-order plant; explicit A/B/ubar (and C/D_u/D_w) matrices override it.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// The built-in experiment: benchmark plant, closed-loop excitation with unit
// gain tracking a uniform set point in [-1, 1], T=6000, noise 0.1, seeds 1..20.
ExperimentConfig benchmark_config();

// "a b; c d" -> 2x2 row-major matrix.
Mat parse_inline_matrix(const std::string& text);
// "1 2 5..8" -> {1, 2, 5, 6, 7, 8}.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

} // namespace ddsat
