#pragma once

#include <optional>
#include <string>

#include "ddsat/config.hpp"
#include "ddsat/ident.hpp"

namespace ddsat {

// Command entry points used by the driver binary and by tests. Each returns a
// process exit code: 0 only when every requested unit of work completed.
int cmd_generate(const ExperimentConfig& cfg);
int cmd_synth(const ExperimentConfig& cfg);
int cmd_compare(const ExperimentConfig& cfg);
int cmd_simulate(const ExperimentConfig& cfg, const std::string& result_file);
int cmd_verify(const ExperimentConfig& cfg, const std::string& result_file,
               std::optional<std::uint64_t> seed = std::nullopt);

int run_cli(int argc, const char* const* argv);

// Shared plumbing.
std::string dataset_path(const ExperimentConfig& cfg, std::uint64_t seed);
std::string result_path(const ExperimentConfig& cfg, std::uint64_t seed);

// The experiment protocol: seeded uniform reference, closed-loop tracking when
// an excitation gain is configured, disturbance-free collection.
Dataset generate_protocol_dataset(const ExperimentConfig& cfg, std::uint64_t seed,
                                  double noise_std, int T);

// Normalized instrument + products in one step.
DataProducts products_for(const Dataset& ds);

// Dispatches to the configured design problem; fills in the oracle model from
// the configured system when needed.
SynthesisResult run_design(const ExperimentConfig& cfg, const DataProducts& products);

} // namespace ddsat
