#pragma once

#include <optional>

#include "ddsat/signals.hpp"
#include "ddsat/types.hpp"

namespace ddsat {

// Performance output z = C x + D_w w + D_u v.
struct PerformanceChannel {
    Mat C;   // n_z x n_x
    Mat D_u; // n_z x n_u
    Mat D_w; // n_z x n_x

    int nz() const { return static_cast<int>(C.rows()); }
    void validate(int nx, int nu) const;
};

// Discrete-time plant x+ = A x + B sat(u) + w with symmetric input bounds.
struct LinearSaturatedSystem {
    Mat A;
    Mat B;
    SaturationBounds bounds;
    std::optional<PerformanceChannel> channel;

    int nx() const { return static_cast<int>(A.rows()); }
    int nu() const { return static_cast<int>(B.cols()); }
    void validate() const;
};

// Three-state open-loop unstable test system used throughout the test suite,
// with unit input bounds and the z = x2 - u1 + u3 + [0 0.3 -0.8] w channel.
LinearSaturatedSystem benchmark_system();
PerformanceChannel benchmark_channel();

// Benchmark disturbance: w(t) = 0.1 [sin(t pi/10 + 0), sin(. + 2pi/3), sin(. + 4pi/3)].
Vec benchmark_disturbance(int t);
SignalRecord benchmark_disturbance_record(int T);

} // namespace ddsat
