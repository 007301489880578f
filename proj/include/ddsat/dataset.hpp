#pragma once

#include <limits>
#include <optional>
#include <string>

#include "ddsat/rng.hpp"
#include "ddsat/system.hpp"

namespace ddsat {

// One experiment: disturbance w, saturated input v, and two independently
// noised output records y, y_tilde of the same state trajectory.
struct Dataset {
    SignalRecord w;       // n_x
    SignalRecord v;       // n_u (already saturated)
    SignalRecord y;       // n_x
    SignalRecord y_tilde; // n_x
    int n_x = 0;
    int n_u = 0;
    bool length_warning = false; // T below the informativity bound (validated at synthesis)
    // 10 log10(signal power / noise power) of the y record; +inf when noise-free,
    // NaN when unknown (e.g. loaded from file).
    double snr_db = std::numeric_limits<double>::quiet_NaN();

    int horizon() const { return w.horizon; }
    void validate() const;

    // Minimum admissible horizon for identification: (n_u + 1) n_x + n_u.
    static int min_horizon(int n_x, int n_u);

    // Fraction of samples with at least one saturated input channel (diagnostic only).
    double saturation_hit_ratio(const SaturationBounds& bounds) const;
};

// Simulates x+ = A x + B sat(u) + w from x(0)=0 and records two output records
// with independent Gaussian noise streams of std noise_std. Excitation:
// u(k) = K (r(k) - x(k)) when a feedback gain is given (tracking loop), or
// u(k) = r(k) when it is absent (open-loop excitation). The optional
// disturbance record defaults to zero.
Dataset generate_dataset(const LinearSaturatedSystem& system,
                         const std::optional<Mat>& feedback_gain,
                         const SignalRecord& reference,
                         double noise_std,
                         std::uint64_t seed,
                         int T,
                         const std::optional<SignalRecord>& disturbance = std::nullopt);

// Per-sample uniform set point in [lo, hi]^{n} (the benchmark excitation).
SignalRecord uniform_reference(int n, int T, double lo, double hi, std::uint64_t seed);

Dataset read_dataset(const std::string& path);
void write_dataset(const Dataset& ds, const std::string& path);

} // namespace ddsat
