#pragma once

#include <Eigen/LU>

#include "ddsat/dataset.hpp"

namespace ddsat {

// Instrument stack Z = [V_{0,T-1}; Ytilde_{0,T-1}], optionally scaled by 1/T.
struct Instrument {
    Mat Z; // (n_u + n_x) x T
    bool normalized = false;
};

// Instrument-compressed matrices defining the data-based closed-loop
// representation x+ = YZ * G * x - B_cl * dz(u) + w.
struct DataProducts {
    Mat YZ;   // n_x x (n_u+n_x): Ybar_{1,T} Z^T with Ybar = Y_{1,T} - W_{0,T-1}
    Mat VZ;   // n_u x (n_u+n_x): V_{0,T-1} Z^T
    Mat XZ;   // (n_u+n_x) x (n_u+n_x): [V_{0,T-1}; Y_{0,T-1}] Z^T
    Mat B_cl; // n_x x n_u: first n_u columns of YZ XZ^{-1}
    int n_x = 0;
    int n_u = 0;
    int T = 0;
    double xz_condition = 0.0;

    // Bottom n_x rows of XZ, i.e. Y_{0,T-1} Z^T (consistency-equality coefficient).
    Mat Y0Z() const { return XZ.bottomRows(n_x); }
    // Solve XZ * out = rhs using the cached factorization.
    Mat solve_xz(const Mat& rhs) const { return xz_lu.solve(rhs); }

    Eigen::PartialPivLU<Mat> xz_lu;
};

struct EstimatedModel {
    Mat A_hat; // n_x x n_x
    Mat B_hat; // n_x x n_u
};

Instrument build_instrument(const Dataset& ds, bool normalize);

// Assembles YZ, VZ, XZ, B_cl; rejects rank-deficient or ill-conditioned data.
DataProducts compute_products(const Dataset& ds, const Instrument& z);

// Instrumental-variable least squares: [B_hat A_hat] = YZ XZ^{-1}.
EstimatedModel estimate_open_loop(const DataProducts& p);

// A_cl = YZ G; B_cl from the products.
std::pair<Mat, Mat> closed_loop_matrices(const DataProducts& p, const Mat& G);

// || [K; I] - XZ G ||_F, zero when G parametrizes gain K consistently.
double consistency_residual(const DataProducts& p, const Mat& G, const Mat& K);

} // namespace ddsat
