#include "ddsat/dataset.hpp"
#include "ddsat/system.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ddsat {

void PerformanceChannel::validate(int nx, int nu) const {
    const auto rows = C.rows();
    if (D_u.rows() != rows || D_w.rows() != rows)
        throw std::invalid_argument("PerformanceChannel: C, D_u, D_w row counts differ");
    if (C.cols() != nx || D_w.cols() != nx || D_u.cols() != nu)
        throw std::invalid_argument("PerformanceChannel: column counts inconsistent with plant");
}

void LinearSaturatedSystem::validate() const {
    if (A.rows() != A.cols())
        throw std::invalid_argument("LinearSaturatedSystem: A must be square");
    if (B.rows() != A.rows())
        throw std::invalid_argument("LinearSaturatedSystem: B row count must match A");
    if (bounds.size() != nu())
        throw std::invalid_argument("LinearSaturatedSystem: bounds length must equal input count");
    if (channel) channel->validate(nx(), nu());
}

LinearSaturatedSystem benchmark_system() {
    Mat A(3, 3);
    A << 1.01, 0.01, 0.00,
         0.01, 1.01, 0.01,
         0.00, 0.01, 1.01;
    Mat B = Mat::Identity(3, 3);
    LinearSaturatedSystem sys{A, B, SaturationBounds(Vec::Ones(3)), benchmark_channel()};
    return sys;
}

PerformanceChannel benchmark_channel() {
    Mat C(1, 3), Du(1, 3), Dw(1, 3);
    C << 0.0, 1.0, 0.0;
    Du << -1.0, 0.0, 1.0;
    Dw << 0.0, 0.3, -0.8;
    return PerformanceChannel{C, Du, Dw};
}

Vec benchmark_disturbance(int t) {
    Vec w(3);
    const double base = t * M_PI / 10.0;
    w << 0.1 * std::sin(base),
         0.1 * std::sin(base + 2.0 * M_PI / 3.0),
         0.1 * std::sin(base + 4.0 * M_PI / 3.0);
    return w;
}

SignalRecord benchmark_disturbance_record(int T) {
    std::vector<Vec> s;
    s.reserve(static_cast<std::size_t>(T) + 1);
    for (int t = 0; t <= T; ++t) s.push_back(benchmark_disturbance(t));
    return SignalRecord(std::move(s));
}

int Dataset::min_horizon(int n_x, int n_u) {
    return (n_u + 1) * n_x + n_u;
}

void Dataset::validate() const {
    const int T = w.horizon;
    if (v.horizon != T || y.horizon != T || y_tilde.horizon != T)
        throw std::invalid_argument("Dataset: all records must share one horizon");
    if (w.dim != n_x || y.dim != n_x || y_tilde.dim != n_x || v.dim != n_u)
        throw std::invalid_argument("Dataset: record dimensions inconsistent");
}

double Dataset::saturation_hit_ratio(const SaturationBounds& bounds) const {
    if (bounds.size() != n_u)
        throw std::invalid_argument("saturation_hit_ratio: bounds dimension mismatch");
    int hits = 0;
    const int count = v.horizon + 1;
    for (int k = 0; k < count; ++k) {
        for (int j = 0; j < n_u; ++j) {
            if (std::abs(v[k](j)) >= bounds.ubar(j) * (1.0 - 1e-12)) {
                ++hits;
                break;
            }
        }
    }
    return static_cast<double>(hits) / static_cast<double>(count);
}

SignalRecord uniform_reference(int n, int T, double lo, double hi, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Vec> s;
    s.reserve(static_cast<std::size_t>(T) + 1);
    for (int k = 0; k <= T; ++k) s.push_back(rng.uniform_vec(n, lo, hi));
    return SignalRecord(std::move(s));
}

Dataset generate_dataset(const LinearSaturatedSystem& system,
                         const std::optional<Mat>& feedback_gain,
                         const SignalRecord& reference,
                         double noise_std,
                         std::uint64_t seed,
                         int T,
                         const std::optional<SignalRecord>& disturbance) {
    system.validate();
    const int nx = system.nx();
    const int nu = system.nu();
    if (T < 1) throw std::invalid_argument("generate_dataset: T must be >= 1");
    if (reference.horizon < T - 1)
        throw std::invalid_argument("generate_dataset: reference record shorter than T");
    if (feedback_gain) {
        if (feedback_gain->rows() != nu || feedback_gain->cols() != nx)
            throw std::invalid_argument("generate_dataset: feedback gain must be n_u x n_x");
        if (reference.dim != nx)
            throw std::invalid_argument("generate_dataset: tracking reference must have state dimension");
    } else if (reference.dim != nu) {
        throw std::invalid_argument("generate_dataset: open-loop reference must have input dimension");
    }
    if (disturbance) {
        if (disturbance->dim != nx)
            throw std::invalid_argument("generate_dataset: disturbance must have state dimension");
        if (disturbance->horizon < T - 1)
            throw std::invalid_argument("generate_dataset: disturbance record shorter than T");
    }

    Rng noise_a(Rng::derive_seed(seed, 0));
    Rng noise_b(Rng::derive_seed(seed, 1));

    std::vector<Vec> xs(static_cast<std::size_t>(T) + 1);
    std::vector<Vec> vs(static_cast<std::size_t>(T) + 1);
    std::vector<Vec> ws(static_cast<std::size_t>(T) + 1);

    Vec x = Vec::Zero(nx);
    const double overflow = 1e9;
    for (int k = 0; k <= T; ++k) {
        xs[static_cast<std::size_t>(k)] = x;
        Vec u = feedback_gain ? Vec((*feedback_gain) * (reference[std::min(k, T - 1)] - x))
                              : Vec(reference[std::min(k, T - 1)]);
        Vec v = saturate(u, system.bounds);
        Vec w = disturbance && k <= T - 1 ? (*disturbance)[k] : Vec(Vec::Zero(nx));
        vs[static_cast<std::size_t>(k)] = v;
        ws[static_cast<std::size_t>(k)] = w;
        if (k < T) {
            x = system.A * x + system.B * v + w;
            if (!x.allFinite() || x.lpNorm<Eigen::Infinity>() > overflow)
                throw std::runtime_error(
                    "generate_dataset: state overflow, excitation loop is unstable");
        }
    }

    double signal_power = 0.0;
    double noise_power = 0.0;
    std::vector<Vec> ys(static_cast<std::size_t>(T) + 1);
    std::vector<Vec> yts(static_cast<std::size_t>(T) + 1);
    for (int k = 0; k <= T; ++k) {
        Vec e = noise_a.gaussian_vec(nx, noise_std);
        Vec et = noise_b.gaussian_vec(nx, noise_std);
        ys[static_cast<std::size_t>(k)] = xs[static_cast<std::size_t>(k)] + e;
        yts[static_cast<std::size_t>(k)] = xs[static_cast<std::size_t>(k)] + et;
        signal_power += xs[static_cast<std::size_t>(k)].squaredNorm();
        noise_power += e.squaredNorm();
    }

    Dataset ds;
    ds.w = SignalRecord(std::move(ws));
    ds.v = SignalRecord(std::move(vs));
    ds.y = SignalRecord(std::move(ys));
    ds.y_tilde = SignalRecord(std::move(yts));
    ds.n_x = nx;
    ds.n_u = nu;
    ds.length_warning = T < Dataset::min_horizon(nx, nu);
    ds.snr_db = noise_power > 0.0 ? 10.0 * std::log10(signal_power / noise_power)
                                  : std::numeric_limits<double>::infinity();
    return ds;
}

namespace {

std::string format_full(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

} // namespace

void write_dataset(const Dataset& ds, const std::string& path) {
    ds.validate();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_dataset: cannot open " + path);
    out << "# nx=" << ds.n_x << " nu=" << ds.n_u << " T=" << ds.horizon() << "\n";
    const int T = ds.horizon();
    for (int k = 0; k <= T; ++k) {
        bool first = true;
        auto emit = [&](const Vec& x) {
            for (int i = 0; i < x.size(); ++i) {
                if (!first) out << ',';
                out << format_full(x(i));
                first = false;
            }
        };
        emit(ds.w[k]);
        emit(ds.v[k]);
        emit(ds.y[k]);
        emit(ds.y_tilde[k]);
        out << "\n";
    }
    if (!out) throw std::runtime_error("write_dataset: write failed for " + path);
}

Dataset read_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_dataset: cannot open " + path);
    std::string header;
    std::getline(in, header);
    int nx = -1, nu = -1, T = -1;
    if (std::sscanf(header.c_str(), "# nx=%d nu=%d T=%d", &nx, &nu, &T) != 3 ||
        nx <= 0 || nu <= 0 || T < 1)
        throw std::runtime_error("read_dataset: malformed header in " + path);

    const int per_row = 3 * nx + nu;
    std::vector<Vec> ws, vs, ys, yts;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::vector<double> vals;
        std::string cell;
        while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
        if (static_cast<int>(vals.size()) != per_row)
            throw std::runtime_error("read_dataset: row width inconsistent with header in " + path);
        int at = 0;
        auto take = [&](int n) {
            Vec x(n);
            for (int i = 0; i < n; ++i) x(i) = vals[static_cast<std::size_t>(at++)];
            return x;
        };
        ws.push_back(take(nx));
        vs.push_back(take(nu));
        ys.push_back(take(nx));
        yts.push_back(take(nx));
    }
    if (static_cast<int>(ws.size()) != T + 1)
        throw std::runtime_error("read_dataset: row count does not match header horizon in " + path);

    Dataset ds;
    ds.w = SignalRecord(std::move(ws));
    ds.v = SignalRecord(std::move(vs));
    ds.y = SignalRecord(std::move(ys));
    ds.y_tilde = SignalRecord(std::move(yts));
    ds.n_x = nx;
    ds.n_u = nu;
    ds.length_warning = T < Dataset::min_horizon(nx, nu);
    ds.validate();
    return ds;
}

} // namespace ddsat
