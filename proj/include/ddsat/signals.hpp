#pragma once

#include <stdexcept>
#include <vector>

#include "ddsat/types.hpp"

namespace ddsat {

// Per-channel symmetric input bounds: channel j saturates at +/- ubar(j).
struct SaturationBounds {
    Vec ubar;

    SaturationBounds() = default; // empty; filled in by aggregate construction
    explicit SaturationBounds(Vec u) : ubar(std::move(u)) {
        for (int j = 0; j < ubar.size(); ++j)
            if (!(ubar(j) > 0.0))
                throw std::invalid_argument("SaturationBounds: every bound must be strictly positive");
    }

    int size() const { return static_cast<int>(ubar.size()); }
};

// A length-(T+1) sequence of n-vectors: samples(k), k = 0..T.
struct SignalRecord {
    std::vector<Vec> samples;
    int dim = 0;
    int horizon = 0; // T

    SignalRecord() = default;
    explicit SignalRecord(std::vector<Vec> s);

    const Vec& operator[](int k) const { return samples.at(static_cast<std::size_t>(k)); }

    static SignalRecord zero(int n, int T);
};

Vec saturate(const Vec& u, const SaturationBounds& bounds);
Vec deadzone(const Vec& u, const SaturationBounds& bounds);

// Block Hankel matrix of a signal: L block rows, columns c = 0..k1-k0-L+1,
// entry at block row r, column c is the sample at time k0+r+c (the last column
// therefore ends at sample k1).
struct HankelMatrix {
    Mat entries;
    int block_rows = 0;
    int signal_dim = 0;
};

HankelMatrix hankel(const SignalRecord& v, int k0, int L, int k1);

// Numerical rank: singular values above max(m,n) * sigma_max * 1e-10.
int numerical_rank(const Mat& m);

// True iff the order-L Hankel of v over samples 0..T-1 has full row rank n*L.
bool is_persistently_exciting(const SignalRecord& v, int L);

} // namespace ddsat
