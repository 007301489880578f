#include "ddsat/ident.hpp"

#include <Eigen/SVD>

namespace ddsat {

namespace {

// Horizontal stack of record samples k0..k1 as matrix columns.
Mat window(const SignalRecord& r, int k0, int k1) {
    Mat m(r.dim, k1 - k0 + 1);
    for (int k = k0; k <= k1; ++k) m.col(k - k0) = r[k];
    return m;
}

} // namespace

Instrument build_instrument(const Dataset& ds, bool normalize) {
    ds.validate();
    const int T = ds.horizon();
    Mat Z(ds.n_u + ds.n_x, T);
    Z.topRows(ds.n_u) = window(ds.v, 0, T - 1);
    Z.bottomRows(ds.n_x) = window(ds.y_tilde, 0, T - 1);
    if (normalize) Z /= static_cast<double>(T);
    return Instrument{std::move(Z), normalize};
}

DataProducts compute_products(const Dataset& ds, const Instrument& z) {
    ds.validate();
    const int T = ds.horizon();
    const int nx = ds.n_x;
    const int nu = ds.n_u;
    if (T < Dataset::min_horizon(nx, nu))
        throw std::invalid_argument(
            "compute_products: horizon below the informativity bound (n_u+1)*n_x + n_u");
    if (z.Z.rows() != nu + nx || z.Z.cols() != T)
        throw std::invalid_argument("compute_products: instrument shape inconsistent with dataset");

    const Mat V = window(ds.v, 0, T - 1);
    const Mat Y0 = window(ds.y, 0, T - 1);
    const Mat Yt0 = window(ds.y_tilde, 0, T - 1);

    Mat stack_y(nu + nx, T), stack_yt(nu + nx, T);
    stack_y.topRows(nu) = V;
    stack_y.bottomRows(nx) = Y0;
    stack_yt.topRows(nu) = V;
    stack_yt.bottomRows(nx) = Yt0;
    if (numerical_rank(stack_y) != nu + nx || numerical_rank(stack_yt) != nu + nx)
        throw std::runtime_error(
            "compute_products: rank of the [input; output] stack must equal n_u + n_x; "
            "data not sufficiently exciting");

    const Mat Ybar = window(ds.y, 1, T) - window(ds.w, 0, T - 1);

    DataProducts p;
    p.n_x = nx;
    p.n_u = nu;
    p.T = T;
    p.VZ = V * z.Z.transpose();
    p.YZ = Ybar * z.Z.transpose();
    p.XZ.resize(nu + nx, nu + nx);
    p.XZ.topRows(nu) = p.VZ;
    p.XZ.bottomRows(nx) = Y0 * z.Z.transpose();

    Eigen::JacobiSVD<Mat> svd(p.XZ);
    const auto& sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    p.xz_condition = smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
    if (!(p.xz_condition < 1e12))
        throw std::runtime_error(
            "compute_products: instrument product matrix is singular or has condition number "
            "above 1e12; data not sufficiently exciting");

    p.xz_lu = Eigen::PartialPivLU<Mat>(p.XZ);
    // YZ XZ^{-1} via the transposed system XZ^T W^T = YZ^T; XZ is not symmetric
    // once noise enters the instrument, so the solve direction matters.
    Eigen::PartialPivLU<Mat> xzt_lu(Mat(p.XZ.transpose()));
    p.B_cl = xzt_lu.solve(p.YZ.transpose()).transpose().leftCols(nu);
    return p;
}

EstimatedModel estimate_open_loop(const DataProducts& p) {
    Eigen::PartialPivLU<Mat> xzt_lu(Mat(p.XZ.transpose()));
    const Mat BA = xzt_lu.solve(p.YZ.transpose()).transpose(); // [B_hat A_hat]
    return EstimatedModel{BA.rightCols(p.n_x), BA.leftCols(p.n_u)};
}

std::pair<Mat, Mat> closed_loop_matrices(const DataProducts& p, const Mat& G) {
    if (G.rows() != p.n_u + p.n_x || G.cols() != p.n_x)
        throw std::invalid_argument("closed_loop_matrices: G must be (n_u+n_x) x n_x");
    return {Mat(p.YZ * G), p.B_cl};
}

double consistency_residual(const DataProducts& p, const Mat& G, const Mat& K) {
    if (G.rows() != p.n_u + p.n_x || G.cols() != p.n_x)
        throw std::invalid_argument("consistency_residual: G must be (n_u+n_x) x n_x");
    if (K.rows() != p.n_u || K.cols() != p.n_x)
        throw std::invalid_argument("consistency_residual: K must be n_u x n_x");
    Mat target(p.n_u + p.n_x, p.n_x);
    target.topRows(p.n_u) = K;
    target.bottomRows(p.n_x) = Mat::Identity(p.n_x, p.n_x);
    return (target - p.XZ * G).norm();
}

} // namespace ddsat
