#include "ddsat/signals.hpp"

#include <Eigen/SVD>

namespace ddsat {

SignalRecord::SignalRecord(std::vector<Vec> s) : samples(std::move(s)) {
    if (samples.size() < 2)
        throw std::invalid_argument("SignalRecord: need at least two samples (T >= 1)");
    dim = static_cast<int>(samples.front().size());
    for (const Vec& x : samples)
        if (x.size() != dim)
            throw std::invalid_argument("SignalRecord: all samples must share one dimension");
    horizon = static_cast<int>(samples.size()) - 1;
}

SignalRecord SignalRecord::zero(int n, int T) {
    return SignalRecord(std::vector<Vec>(static_cast<std::size_t>(T) + 1, Vec::Zero(n)));
}

Vec saturate(const Vec& u, const SaturationBounds& bounds) {
    if (u.size() != bounds.ubar.size())
        throw std::invalid_argument("saturate: dimension mismatch");
    Vec out(u.size());
    for (int j = 0; j < u.size(); ++j)
        out(j) = std::max(-bounds.ubar(j), std::min(bounds.ubar(j), u(j)));
    return out;
}

Vec deadzone(const Vec& u, const SaturationBounds& bounds) {
    return u - saturate(u, bounds);
}

HankelMatrix hankel(const SignalRecord& v, int k0, int L, int k1) {
    if (!(0 <= k0 && k0 < k1 && k1 <= v.horizon))
        throw std::out_of_range("hankel: need 0 <= k0 < k1 <= horizon");
    if (!(L >= 1 && L <= k1 - k0 + 1))
        throw std::out_of_range("hankel: need 1 <= L <= k1 - k0 + 1");
    const int n = v.dim;
    const int cols = k1 - k0 - L + 2;
    HankelMatrix h;
    h.block_rows = L;
    h.signal_dim = n;
    h.entries.resize(n * L, cols);
    for (int r = 0; r < L; ++r)
        for (int c = 0; c < cols; ++c)
            h.entries.block(r * n, c, n, 1) = v[k0 + r + c];
    return h;
}

int numerical_rank(const Mat& m) {
    if (m.size() == 0) return 0;
    Eigen::JacobiSVD<Mat> svd(m);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0.0) return 0;
    const double tol = static_cast<double>(std::max(m.rows(), m.cols())) * sv(0) * 1e-10;
    int r = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > tol) ++r;
    return r;
}

bool is_persistently_exciting(const SignalRecord& v, int L) {
    // Samples 0..T-1 feed the order-L Hankel; hankel() enforces the index ranges.
    HankelMatrix h = hankel(v, 0, L, v.horizon - 1);
    return numerical_rank(h.entries) == v.dim * L;
}

} // namespace ddsat
