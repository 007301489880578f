#include "doctest.h"

#include "ddsat/ident.hpp"

using namespace ddsat;

namespace {

Dataset benchmark_data(double noise, std::uint64_t seed, int T) {
    LinearSaturatedSystem sys = benchmark_system();
    SignalRecord ref = uniform_reference(sys.nx(), T, -1.0, 1.0, Rng::derive_seed(seed, 2));
    return generate_dataset(sys, Mat::Identity(3, 3), ref, noise, seed, T);
}

} // namespace

TEST_CASE("instrument stacks saturated inputs over the second output record") {
    Dataset ds = benchmark_data(0.1, 1, 100);
    Instrument z = build_instrument(ds, false);
    REQUIRE(z.Z.rows() == 6);
    REQUIRE(z.Z.cols() == 100);
    CHECK((z.Z.block(0, 7, 3, 1) - ds.v[7]).norm() == 0.0);
    CHECK((z.Z.block(3, 7, 3, 1) - ds.y_tilde[7]).norm() == 0.0);

    Instrument zn = build_instrument(ds, true);
    CHECK((zn.Z * 100.0 - z.Z).norm() == doctest::Approx(0.0));
    CHECK(zn.normalized);
}

TEST_CASE("noise-free identification recovers the true plant") {
    Dataset ds = benchmark_data(0.0, 3, 1200);
    DataProducts p = compute_products(ds, build_instrument(ds, true));
    EstimatedModel m = estimate_open_loop(p);
    LinearSaturatedSystem sys = benchmark_system();
    CHECK((m.A_hat - sys.A).norm() < 1e-9);
    CHECK((m.B_hat - sys.B).norm() < 1e-9);
    CHECK((p.B_cl - sys.B).norm() < 1e-9);
    CHECK(p.xz_condition < 1e12);
    CHECK(p.n_x == 3);
    CHECK(p.n_u == 3);
    CHECK(p.T == 1200);
}

TEST_CASE("noisy identification error shrinks with horizon") {
    LinearSaturatedSystem sys = benchmark_system();
    double err_short = 0.0, err_long = 0.0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        Dataset a = benchmark_data(0.1, seed, 1500);
        Dataset b = benchmark_data(0.1, seed, 12000);
        EstimatedModel ma = estimate_open_loop(compute_products(a, build_instrument(a, true)));
        EstimatedModel mb = estimate_open_loop(compute_products(b, build_instrument(b, true)));
        err_short += (ma.A_hat - sys.A).norm() + (ma.B_hat - sys.B).norm();
        err_long += (mb.A_hat - sys.A).norm() + (mb.B_hat - sys.B).norm();
    }
    CHECK(err_long < err_short);
}

TEST_CASE("noisy products keep the solve orientation of the instrumented regression") {
    // With measurement noise the cross-product XZ is no longer symmetric, so
    // YZ XZ^{-1} and YZ XZ^{-T} differ; the estimate must use the former.
    Dataset ds = benchmark_data(0.1, 11, 2000);
    DataProducts p = compute_products(ds, build_instrument(ds, true));
    CHECK((p.XZ - p.XZ.transpose()).norm() > 1e-6);

    Mat BA_ref = p.YZ * p.XZ.inverse();
    EstimatedModel m = estimate_open_loop(p);
    Mat BA(3, 6);
    BA << m.B_hat, m.A_hat;
    CHECK((BA - BA_ref).norm() < 1e-10 * BA_ref.norm());
    CHECK((p.B_cl - BA_ref.leftCols(3)).norm() < 1e-10 * BA_ref.norm());

    Mat BA_wrong = p.YZ * p.XZ.transpose().inverse();
    CHECK((BA - BA_wrong).norm() > 1e-4);
}

TEST_CASE("closed-loop matrices and consistency residual agree at the exact G") {
    Dataset ds = benchmark_data(0.0, 5, 800);
    DataProducts p = compute_products(ds, build_instrument(ds, true));
    Mat K = -0.7 * Mat::Identity(3, 3);
    Mat KI(6, 3);
    KI.topRows(3) = K;
    KI.bottomRows(3) = Mat::Identity(3, 3);
    Mat G = p.solve_xz(KI);
    CHECK(consistency_residual(p, G, K) < 1e-9);

    auto [A_cl, B_cl] = closed_loop_matrices(p, G);
    LinearSaturatedSystem sys = benchmark_system();
    CHECK((A_cl - (sys.A + sys.B * K)).norm() < 1e-8);
    CHECK((B_cl - sys.B).norm() < 1e-9);
    CHECK(consistency_residual(p, G, Mat(-0.2 * Mat::Identity(3, 3))) > 1e-2);
}

TEST_CASE("products reject short or unexciting data") {
    Dataset tiny = benchmark_data(0.0, 1, 14);
    CHECK_THROWS_AS(compute_products(tiny, build_instrument(tiny, true)), std::invalid_argument);

    // constant excitation: zero reference tracked perfectly from x0 = 0
    LinearSaturatedSystem sys = benchmark_system();
    SignalRecord zero_ref = SignalRecord::zero(3, 100);
    Dataset flat = generate_dataset(sys, Mat::Identity(3, 3), zero_ref, 0.0, 1, 100);
    CHECK_THROWS_AS(compute_products(flat, build_instrument(flat, true)), std::runtime_error);
}
