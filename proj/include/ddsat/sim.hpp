#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ddsat/signals.hpp"
#include "ddsat/system.hpp"

namespace ddsat {

// Closed-loop record under u(k) = K x(k), v = sat(u). The recursion
// x(k+1) = A x(k) + B v(k) + w(k) holds exactly by construction.
struct Trajectory {
    std::vector<Vec> x; // 0..T
    std::vector<Vec> u; // 0..T-1
    std::vector<Vec> v; // 0..T-1
    std::vector<Vec> w; // 0..T-1
    std::vector<Vec> z; // 0..T-1, empty when the system has no performance channel

    int horizon() const { return static_cast<int>(u.size()); }
};

struct Ellipsoid {
    Mat Q;        // symmetric positive definite
    double s = 1.0;
};

// x^T Q^{-1} x via a Cholesky solve (no explicit inverse). Throws if Q is not PD.
double ellipsoid_level(const Ellipsoid& e, const Vec& x);
bool ellipsoid_contains(const Ellipsoid& e, const Vec& x);
// Points with x^T Q^{-1} x = s^2: unit sphere directions mapped through chol(Q).
std::vector<Vec> ellipsoid_boundary_samples(const Ellipsoid& e, int count = 1000,
                                            std::uint64_t seed = 0);

// lambda_max(Q) / lambda_min(Q); throws if Q is not PD.
double condition_number(const Mat& Q);

// Forward simulation for T steps from x0; missing w means no disturbance.
// Throws on state overflow (norm beyond 1e12).
Trajectory simulate(const LinearSaturatedSystem& system, const Mat& K, const Vec& x0,
                    const std::optional<SignalRecord>& w, int T);

struct ConvergenceReport {
    bool holds = false;
    // Worst over t of |x(t)| / (eta^t sqrt(c(Q)) |x(0)|) minus one; -1 when every
    // comparison is vacuous (both sides zero).
    double worst_margin = -1.0;
    int worst_step = -1;
};

// Decay certificate |x(t)| <= eta^t sqrt(c(Q)) |x(0)|, all t, with relative
// slack 1e-9 to absorb ties at t=0.
ConvergenceReport verify_convergence_bound(const Trajectory& traj, const Mat& Q, double eta);

struct ReachableReport {
    double worst_level = 0.0;  // max over runs and steps of x^T Q^{-1} x
    double worst_margin = 0.0; // s^2 - worst_level
    bool inside = false;       // worst_margin >= 0
    int runs = 0;
};

// Simulates each disturbance from x(0)=0 over its own horizon and checks every
// visited state against E(Q,s). Throws if a signal violates ||w||_2 <= s.
ReachableReport verify_reachable(const LinearSaturatedSystem& system, const Mat& K,
                                 const Ellipsoid& e, const std::vector<SignalRecord>& w_suite);

struct GainReport {
    bool holds = false;
    double max_ratio = 0.0; // empirical max of ||z||_2 / ||w||_2
    int evaluated = 0;
    int skipped = 0;        // zero-energy signals (ratio undefined)
};

// Per-run energy gain check ||z||_2 <= gamma ||w||_2 + tolerance from x(0)=0.
GainReport verify_l2_gain(const LinearSaturatedSystem& system, const Mat& K, double gamma,
                          const std::vector<SignalRecord>& w_suite, double tolerance = 1e-6);

// sqrt(sum_k |w(k)|^2) over the record's samples.
double signal_energy(const SignalRecord& w);

// Scales the record so its energy equals `energy` (no-op on the zero signal).
SignalRecord scale_to_energy(const SignalRecord& w, double energy);

// Energy-bounded test suite: one impulse s*e_i per basis direction, the
// benchmark sinusoid truncated and rescaled to energy s when dimensions match,
// and seeded Gaussian signals with energies in (0, s].
std::vector<SignalRecord> make_disturbance_suite(int n_x, int T, double s, int count,
                                                 std::uint64_t seed);

// Dataset-style CSV rows: w, v, x per step, plus z columns when present.
void write_trajectory(const Trajectory& traj, const std::string& path);

} // namespace ddsat
