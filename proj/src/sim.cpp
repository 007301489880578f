#include "ddsat/sim.hpp"
#include "ddsat/rng.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace ddsat {

namespace {

Eigen::LLT<Mat> pd_factor(const Mat& Q, const char* who) {
    if (Q.rows() != Q.cols()) throw std::invalid_argument(std::string(who) + ": Q must be square");
    if ((Q - Q.transpose()).lpNorm<Eigen::Infinity>() > 1e-8 * std::max(1.0, Q.norm()))
        throw std::invalid_argument(std::string(who) + ": Q must be symmetric");
    Eigen::LLT<Mat> llt(Q);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument(std::string(who) + ": Q is not positive definite");
    return llt;
}

} // namespace

double ellipsoid_level(const Ellipsoid& e, const Vec& x) {
    auto llt = pd_factor(e.Q, "ellipsoid_level");
    if (x.size() != e.Q.rows())
        throw std::invalid_argument("ellipsoid_level: dimension mismatch");
    return x.dot(llt.solve(x));
}

bool ellipsoid_contains(const Ellipsoid& e, const Vec& x) {
    return ellipsoid_level(e, x) <= e.s * e.s;
}

std::vector<Vec> ellipsoid_boundary_samples(const Ellipsoid& e, int count, std::uint64_t seed) {
    auto llt = pd_factor(e.Q, "ellipsoid_boundary_samples");
    if (count < 1) throw std::invalid_argument("ellipsoid_boundary_samples: count must be >= 1");
    const Mat L = llt.matrixL();
    const int n = static_cast<int>(e.Q.rows());
    Rng rng(seed);
    std::vector<Vec> out;
    out.reserve(static_cast<std::size_t>(count));
    while (static_cast<int>(out.size()) < count) {
        Vec d = rng.gaussian_vec(n, 1.0);
        const double nd = d.norm();
        if (nd < 1e-12) continue;
        out.push_back(Vec(e.s / nd * (L * d)));
    }
    return out;
}

double condition_number(const Mat& Q) {
    pd_factor(Q, "condition_number");
    Eigen::SelfAdjointEigenSolver<Mat> es(Q, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (lo <= 0.0) throw std::invalid_argument("condition_number: Q is not positive definite");
    return hi / lo;
}

Trajectory simulate(const LinearSaturatedSystem& system, const Mat& K, const Vec& x0,
                    const std::optional<SignalRecord>& w, int T) {
    system.validate();
    const int nx = system.nx();
    const int nu = system.nu();
    if (T < 1) throw std::invalid_argument("simulate: T must be >= 1");
    if (x0.size() != nx) throw std::invalid_argument("simulate: x0 dimension mismatch");
    if (K.rows() != nu || K.cols() != nx)
        throw std::invalid_argument("simulate: K must be n_u x n_x");
    if (w) {
        if (w->dim != nx) throw std::invalid_argument("simulate: disturbance dimension mismatch");
        if (w->horizon < T - 1)
            throw std::invalid_argument("simulate: disturbance record shorter than horizon");
    }

    Trajectory traj;
    traj.x.reserve(static_cast<std::size_t>(T) + 1);
    traj.u.reserve(static_cast<std::size_t>(T));
    traj.v.reserve(static_cast<std::size_t>(T));
    traj.w.reserve(static_cast<std::size_t>(T));
    const bool has_channel = system.channel.has_value();
    if (has_channel) traj.z.reserve(static_cast<std::size_t>(T));

    Vec x = x0;
    for (int k = 0; k < T; ++k) {
        traj.x.push_back(x);
        Vec uk = K * x;
        Vec vk = saturate(uk, system.bounds);
        Vec wk = w ? (*w)[k] : Vec(Vec::Zero(nx));
        traj.u.push_back(uk);
        traj.v.push_back(vk);
        traj.w.push_back(wk);
        if (has_channel)
            traj.z.push_back(Vec(system.channel->C * x + system.channel->D_u * vk +
                                 system.channel->D_w * wk));
        x = system.A * x + system.B * vk + wk;
        if (!x.allFinite() || x.norm() > 1e12)
            throw std::runtime_error("simulate: state overflow, the closed loop is diverging");
    }
    traj.x.push_back(x);
    return traj;
}

ConvergenceReport verify_convergence_bound(const Trajectory& traj, const Mat& Q, double eta) {
    if (traj.x.empty()) throw std::invalid_argument("verify_convergence_bound: empty trajectory");
    if (!(eta > 0.0)) throw std::invalid_argument("verify_convergence_bound: eta must be positive");
    const double root_c = std::sqrt(condition_number(Q));
    const double x0n = traj.x.front().norm();

    ConvergenceReport rep;
    rep.holds = true;
    double scale = root_c * x0n; // eta^0 term
    for (std::size_t t = 0; t < traj.x.size(); ++t) {
        const double bound = scale;
        const double xn = traj.x[t].norm();
        if (bound == 0.0) {
            if (xn > 0.0) {
                rep.holds = false;
                rep.worst_margin = std::numeric_limits<double>::infinity();
                rep.worst_step = static_cast<int>(t);
                return rep;
            }
        } else {
            const double margin = xn / bound - 1.0;
            if (margin > rep.worst_margin) {
                rep.worst_margin = margin;
                rep.worst_step = static_cast<int>(t);
            }
        }
        scale *= eta;
    }
    rep.holds = rep.worst_margin <= 1e-9;
    return rep;
}

double signal_energy(const SignalRecord& w) {
    double acc = 0.0;
    for (const Vec& s : w.samples) acc += s.squaredNorm();
    return std::sqrt(acc);
}

SignalRecord scale_to_energy(const SignalRecord& w, double energy) {
    if (!(energy >= 0.0)) throw std::invalid_argument("scale_to_energy: energy must be >= 0");
    const double cur = signal_energy(w);
    if (cur == 0.0) return w;
    SignalRecord out = w;
    const double c = energy / cur;
    for (Vec& s : out.samples) s *= c;
    return out;
}

ReachableReport verify_reachable(const LinearSaturatedSystem& system, const Mat& K,
                                 const Ellipsoid& e, const std::vector<SignalRecord>& w_suite) {
    auto llt = pd_factor(e.Q, "verify_reachable");
    const int nx = system.nx();
    ReachableReport rep;
    rep.worst_level = 0.0;
    for (const SignalRecord& w : w_suite) {
        if (w.dim != nx)
            throw std::invalid_argument("verify_reachable: disturbance dimension mismatch");
        const double energy = signal_energy(w);
        if (energy > e.s * (1.0 + 1e-12))
            throw std::invalid_argument("verify_reachable: a signal exceeds the energy bound");
        const int T = w.horizon + 1;
        Trajectory traj = simulate(system, K, Vec::Zero(nx), w, T);
        for (const Vec& x : traj.x) {
            const double level = x.dot(llt.solve(x));
            if (level > rep.worst_level) rep.worst_level = level;
        }
        ++rep.runs;
    }
    rep.worst_margin = e.s * e.s - rep.worst_level;
    rep.inside = rep.worst_margin >= 0.0;
    return rep;
}

GainReport verify_l2_gain(const LinearSaturatedSystem& system, const Mat& K, double gamma,
                          const std::vector<SignalRecord>& w_suite, double tolerance) {
    if (!system.channel)
        throw std::invalid_argument("verify_l2_gain: system has no performance channel");
    if (!(gamma >= 0.0)) throw std::invalid_argument("verify_l2_gain: gamma must be >= 0");
    const int nx = system.nx();
    GainReport rep;
    rep.holds = true;
    for (const SignalRecord& w : w_suite) {
        if (w.dim != nx)
            throw std::invalid_argument("verify_l2_gain: disturbance dimension mismatch");
        const double wn = signal_energy(w);
        if (wn == 0.0) {
            ++rep.skipped;
            continue;
        }
        const int T = w.horizon + 1;
        Trajectory traj = simulate(system, K, Vec::Zero(nx), w, T);
        double zacc = 0.0;
        for (const Vec& zk : traj.z) zacc += zk.squaredNorm();
        const double zn = std::sqrt(zacc);
        const double ratio = zn / wn;
        if (ratio > rep.max_ratio) rep.max_ratio = ratio;
        if (zn > gamma * wn + tolerance) rep.holds = false;
        ++rep.evaluated;
    }
    return rep;
}

std::vector<SignalRecord> make_disturbance_suite(int n_x, int T, double s, int count,
                                                 std::uint64_t seed) {
    if (n_x < 1 || T < 1) throw std::invalid_argument("make_disturbance_suite: bad dimensions");
    if (!(s > 0.0)) throw std::invalid_argument("make_disturbance_suite: s must be positive");
    if (count < 1) throw std::invalid_argument("make_disturbance_suite: count must be >= 1");
    std::vector<SignalRecord> suite;
    suite.reserve(static_cast<std::size_t>(count));

    for (int i = 0; i < n_x && static_cast<int>(suite.size()) < count; ++i) {
        std::vector<Vec> samples(static_cast<std::size_t>(T), Vec::Zero(n_x));
        samples[0] = Vec::Zero(n_x);
        samples[0](i) = s;
        suite.emplace_back(std::move(samples));
    }

    if (n_x == 3 && static_cast<int>(suite.size()) < count) {
        SignalRecord sine = benchmark_disturbance_record(T - 1); // samples 0..T-1
        if (signal_energy(sine) > s) sine = scale_to_energy(sine, s);
        suite.push_back(std::move(sine));
    }

    Rng rng(Rng::derive_seed(seed, 0x5d));
    while (static_cast<int>(suite.size()) < count) {
        std::vector<Vec> samples;
        samples.reserve(static_cast<std::size_t>(T));
        for (int k = 0; k < T; ++k) samples.push_back(rng.gaussian_vec(n_x, 1.0));
        SignalRecord rec{std::move(samples)};
        const double frac = 0.1 + 0.9 * rng.uniform01();
        suite.push_back(scale_to_energy(rec, s * frac));
    }
    return suite;
}

void write_trajectory(const Trajectory& traj, const std::string& path) {
    const int T = traj.horizon();
    if (T < 1) throw std::invalid_argument("write_trajectory: empty trajectory");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_trajectory: cannot open " + path);
    const int nx = static_cast<int>(traj.x.front().size());
    const int nu = static_cast<int>(traj.u.front().size());
    const int nz = traj.z.empty() ? 0 : static_cast<int>(traj.z.front().size());
    out << "# nx=" << nx << " nu=" << nu << " T=" << T;
    if (nz > 0) out << " nz=" << nz;
    out << "\n";
    char buf[40];
    auto emit = [&](const Vec& x, bool& first) {
        for (int i = 0; i < x.size(); ++i) {
            if (!first) out << ',';
            std::snprintf(buf, sizeof buf, "%.17g", x(i));
            out << buf;
            first = false;
        }
    };
    for (int k = 0; k <= T; ++k) {
        bool first = true;
        // Inputs stop at T-1; the final row pads them with zeros so the file
        // stays rectangular like the dataset schema.
        emit(k < T ? traj.w[static_cast<std::size_t>(k)] : Vec(Vec::Zero(nx)), first);
        emit(k < T ? traj.v[static_cast<std::size_t>(k)] : Vec(Vec::Zero(nu)), first);
        emit(traj.x[static_cast<std::size_t>(k)], first);
        if (nz > 0)
            emit(k < T ? traj.z[static_cast<std::size_t>(k)] : Vec(Vec::Zero(nz)), first);
        out << "\n";
    }
    if (!out) throw std::runtime_error("write_trajectory: write failed for " + path);
}

} // namespace ddsat
