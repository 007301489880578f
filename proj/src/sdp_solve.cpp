#include "ddsat/sdp.hpp"
#include "sdp_internal.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace ddsat {

namespace {

using detail::Scalarized;

double inner(const Mat& a, const Mat& b) { return a.cwiseProduct(b).sum(); }

// Largest step alpha in [0, cap] keeping X + alpha * D positive semidefinite,
// shortened by the boundary fraction tau.
double step_to_boundary(const Mat& X, const Mat& D, double tau, double cap) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(D, X, Eigen::EigenvaluesOnly);
    const double lmin = ges.eigenvalues().minCoeff();
    if (lmin >= 0.0) return cap;
    return std::min(cap, -tau / lmin);
}

struct ReducedProblem {
    // minimize cr^T psi  s.t.  G0_i + sum_k psi_k Gk_i[k]  PSD
    Vec cr;
    std::vector<Mat> G0;
    std::vector<std::vector<Mat>> Gk; // [block][coordinate]
    std::vector<std::string> names;
    int q = 0;
};

struct IpmResult {
    SdpStatus status = SdpStatus::NumericalFailure;
    Vec psi;
    int iterations = 0;
    double rel_p = 0.0, rel_d = 0.0, rel_gap = 0.0;
    std::string message;
};

// Slack at y for one block.
Mat slack_at(const ReducedProblem& rp, std::size_t i, const Vec& y) {
    Mat s = rp.G0[i];
    for (int k = 0; k < rp.q; ++k) s += y(k) * rp.Gk[i][static_cast<std::size_t>(k)];
    return s;
}

// Diagonal congruence scalings that balance each block's slack at the incumbent
// point. A congruence D S D with D positive diagonal preserves semidefiniteness
// and the optimal y, but flattens the dynamic range inside a block, which is
// what limits the attainable residual when the solution entries dwarf the data.
std::vector<Vec> jacobi_scalings(const ReducedProblem& rp, const Vec& y) {
    std::vector<Vec> e(rp.G0.size());
    for (std::size_t i = 0; i < rp.G0.size(); ++i) {
        const Vec d = slack_at(rp, i, y).diagonal().cwiseAbs();
        if (!d.allFinite()) {
            e[i] = Vec::Ones(d.size());
            continue;
        }
        // Squash the oversized directions down to unit size but never amplify a
        // small one; the tiny diagonals belong to active constraints and blowing
        // them up would distort the data instead of balancing it.
        e[i] = d.cwiseMax(1.0).cwiseSqrt().cwiseInverse();
    }
    return e;
}

ReducedProblem congruence_scaled(const ReducedProblem& rp, const std::vector<Vec>& e) {
    ReducedProblem out;
    out.cr = rp.cr;
    out.names = rp.names;
    out.q = rp.q;
    out.G0.resize(rp.G0.size());
    out.Gk.resize(rp.G0.size());
    for (std::size_t i = 0; i < rp.G0.size(); ++i) {
        const auto D = e[i].asDiagonal();
        out.G0[i] = D * rp.G0[i] * D;
        out.Gk[i].resize(static_cast<std::size_t>(rp.q));
        for (int k = 0; k < rp.q; ++k)
            out.Gk[i][static_cast<std::size_t>(k)] = D * rp.Gk[i][static_cast<std::size_t>(k)] * D;
        // Bring the block back to unit size, otherwise the squashed data leave
        // the Schur system near singular at the cold start.
        double m = out.G0[i].norm();
        for (const Mat& g : out.Gk[i]) m = std::max(m, g.norm());
        if (m > 0.0) {
            out.G0[i] /= m;
            for (Mat& g : out.Gk[i]) g /= m;
        }
    }
    return out;
}

IpmResult run_ipm(const ReducedProblem& rp, const SolveOptions& opts) {
    const int q = rp.q;
    const int nb = static_cast<int>(rp.G0.size());
    IpmResult res;
    res.psi = Vec::Zero(q);

    // Dual-form mapping: maximize b^T y with slack S = C + sum y_k Fk, so
    // b = -cr, A_k = -Fk, C = G0.
    const Vec b = -rp.cr;

    int n_total = 0;
    for (const Mat& g : rp.G0) n_total += static_cast<int>(g.rows());

    std::vector<Mat> X(nb), S(nb);
    for (int i = 0; i < nb; ++i) {
        const int n = static_cast<int>(rp.G0[static_cast<std::size_t>(i)].rows());
        X[static_cast<std::size_t>(i)] = 10.0 * Mat::Identity(n, n);
        S[static_cast<std::size_t>(i)] = 10.0 * Mat::Identity(n, n);
    }
    Vec y = Vec::Zero(q);

    double maxC = 0.0;
    for (const Mat& g : rp.G0) maxC = std::max(maxC, g.norm());

    auto primal_residual = [&](const std::vector<Mat>& Xc) {
        Vec r = b;
        for (int k = 0; k < q; ++k)
            for (int i = 0; i < nb; ++i)
                r(k) += inner(rp.Gk[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)],
                              Xc[static_cast<std::size_t>(i)]);
        return r;
    };
    auto dual_residual = [&](const Vec& yc, const std::vector<Mat>& Sc, int i) {
        Mat r = rp.G0[static_cast<std::size_t>(i)] - Sc[static_cast<std::size_t>(i)];
        for (int k = 0; k < q; ++k)
            r += yc(k) * rp.Gk[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
        return r;
    };

    double best_phi = std::numeric_limits<double>::infinity();
    Vec best_y = y;
    double best_rp = 0.0, best_rd = 0.0, best_gap = 0.0;
    int stall_count = 0;

    const bool trace = std::getenv("DDSAT_SDP_TRACE") != nullptr;
    double prev_ap = 0.0, prev_ad = 0.0, prev_sigma = 0.0;

    for (int iter = 1; iter <= opts.max_iterations; ++iter) {
        res.iterations = iter;

        const Vec rp_vec = primal_residual(X);
        std::vector<Mat> Rd(static_cast<std::size_t>(nb));
        double rd_norm = 0.0;
        for (int i = 0; i < nb; ++i) {
            Rd[static_cast<std::size_t>(i)] = dual_residual(y, S, i);
            rd_norm = std::max(rd_norm, Rd[static_cast<std::size_t>(i)].norm());
        }
        double gap = 0.0, cx = 0.0, xnorm = 0.0;
        for (int i = 0; i < nb; ++i) {
            gap += inner(X[static_cast<std::size_t>(i)], S[static_cast<std::size_t>(i)]);
            cx += inner(rp.G0[static_cast<std::size_t>(i)], X[static_cast<std::size_t>(i)]);
            xnorm += X[static_cast<std::size_t>(i)].squaredNorm();
        }
        xnorm = std::sqrt(xnorm);

        const double rel_p = rp_vec.norm() / (1.0 + b.norm());
        const double rel_d = rd_norm / (1.0 + maxC);
        const double rel_gap = std::abs(gap) / (1.0 + std::abs(b.dot(y)) + std::abs(cx));
        const double phi = std::max({rel_p, rel_d, rel_gap});

        if (trace)
            std::fprintf(stderr,
                         "  ipm %3d  mu=%9.3e rp=%9.3e rd=%9.3e gap=%9.3e"
                         " ap=%6.4f ad=%6.4f sig=%5.3f |y|=%9.3e\n",
                         iter, gap / n_total, rel_p, rel_d, rel_gap, prev_ap, prev_ad, prev_sigma,
                         y.lpNorm<Eigen::Infinity>());

        if (phi < best_phi * 0.99) {
            stall_count = 0;
        } else {
            ++stall_count;
        }
        if (phi < best_phi) {
            best_phi = phi;
            best_y = y;
            best_rp = rel_p;
            best_rd = rel_d;
            best_gap = rel_gap;
        }

        if (phi <= opts.tolerance) {
            res.status = SdpStatus::Optimal;
            res.psi = y;
            res.rel_p = rel_p;
            res.rel_d = rel_d;
            res.rel_gap = rel_gap;
            return res;
        }

        // Infeasibility certificate: a diverging primal ray X with A(X)/|X| ~ 0
        // and <C, X/|X|> < 0 proves the LMI system has no solution.
        if (cx < 0.0 && xnorm > 1e3 * std::sqrt(static_cast<double>(n_total))) {
            double ray_feas = 0.0;
            for (int k = 0; k < q; ++k) {
                double ak = 0.0;
                for (int i = 0; i < nb; ++i)
                    ak += inner(rp.Gk[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)],
                                X[static_cast<std::size_t>(i)]);
                ray_feas = std::max(ray_feas, std::abs(ak) / xnorm);
            }
            if (ray_feas < 1e-7 && cx / xnorm < -1e-7) {
                res.status = SdpStatus::Infeasible;
                res.psi = best_y;
                res.rel_p = rel_p;
                res.rel_d = rel_d;
                res.rel_gap = rel_gap;
                res.message = "inequality system certified infeasible";
                return res;
            }
        }
        if (std::abs(b.dot(y)) > 1e13) {
            res.status = SdpStatus::NumericalFailure;
            res.psi = best_y;
            res.rel_p = best_rp;
            res.rel_d = best_rd;
            res.rel_gap = best_gap;
            res.message = "objective appears unbounded";
            return res;
        }
        if (stall_count > 15) break;

        const double mu = gap / n_total;

        std::vector<Eigen::LLT<Mat>> Slt(static_cast<std::size_t>(nb));
        bool chol_ok = true;
        for (int i = 0; i < nb; ++i) {
            Slt[static_cast<std::size_t>(i)].compute(S[static_cast<std::size_t>(i)]);
            if (Slt[static_cast<std::size_t>(i)].info() != Eigen::Success) chol_ok = false;
        }
        if (!chol_ok) break;

        // Schur matrix M_kl = sum_i tr(A_ik X_i A_il S_i^{-1}); U_il = X_i (S_i^{-1} A_il)^T.
        Mat M = Mat::Zero(q, q);
        std::vector<std::vector<Mat>> U(static_cast<std::size_t>(nb));
        for (int i = 0; i < nb; ++i) {
            U[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(q));
            for (int l = 0; l < q; ++l) {
                const Mat& Al = rp.Gk[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)];
                Mat Tl = Slt[static_cast<std::size_t>(i)].solve(Al);
                U[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)] =
                    X[static_cast<std::size_t>(i)] * Tl.transpose();
            }
        }
        for (int k = 0; k < q; ++k)
            for (int l = 0; l < q; ++l) {
                double acc = 0.0;
                for (int i = 0; i < nb; ++i)
                    acc += inner(rp.Gk[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)],
                                 U[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)]);
                M(k, l) = acc;
            }
        M = 0.5 * (M + M.transpose());
        // A_k = -Fk on both sides of the product, so the signs cancel.

        Eigen::LDLT<Mat> Mldlt(M);
        if (Mldlt.info() != Eigen::Success || !Mldlt.isPositive()) {
            Mat Mreg = M + 1e-12 * std::max(1.0, M.trace()) * Mat::Identity(q, q);
            Mldlt.compute(Mreg);
            if (Mldlt.info() != Eigen::Success) break;
        }
        // The Schur matrix turns badly conditioned as mu shrinks; a couple of
        // refinement sweeps against the unregularized M recover the digits the
        // factorization drops, which is what lets ill-scaled problems close the
        // last stretch of the gap.
        auto schur_solve = [&](const Vec& rhs) {
            Vec d = Mldlt.solve(rhs);
            for (int sweep = 0; sweep < 2; ++sweep) {
                Vec resid = rhs - M * d;
                if (!resid.allFinite()) break;
                d += Mldlt.solve(resid);
            }
            return d;
        };

        // Common rhs piece: <A_k, X Rd S^{-1}> with A_k = -Fk.
        Vec h_common = Vec::Zero(q);
        std::vector<Mat> XRdS(static_cast<std::size_t>(nb));
        for (int i = 0; i < nb; ++i) {
            Mat t = Slt[static_cast<std::size_t>(i)].solve(Rd[static_cast<std::size_t>(i)]);
            XRdS[static_cast<std::size_t>(i)] = X[static_cast<std::size_t>(i)] * t.transpose();
        }
        for (int k = 0; k < q; ++k) {
            double acc = 0.0;
            for (int i = 0; i < nb; ++i)
                acc += inner(-rp.Gk[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)],
                             XRdS[static_cast<std::size_t>(i)]);
            h_common(k) = acc;
        }

        // Predictor: Rc = -X S, so <A_k, Rc S^{-1}> = -<A_k, X> and the rhs is b + h_common.
        Vec h_aff = b + h_common;
        Vec dy_aff = schur_solve(h_aff);

        std::vector<Mat> dS_aff(static_cast<std::size_t>(nb)), dX_aff(static_cast<std::size_t>(nb));
        for (int i = 0; i < nb; ++i) {
            Mat ds = Rd[static_cast<std::size_t>(i)];
            for (int k = 0; k < q; ++k)
                ds -= dy_aff(k) * (-rp.Gk[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]);
            dS_aff[static_cast<std::size_t>(i)] = ds;
            // X ds S^{-1} = X (S^{-1} ds)^T since ds and S are symmetric.
            Mat t = Slt[static_cast<std::size_t>(i)].solve(ds);
            Mat dx = -X[static_cast<std::size_t>(i)] -
                     X[static_cast<std::size_t>(i)] * t.transpose();
            dX_aff[static_cast<std::size_t>(i)] = 0.5 * (dx + dx.transpose());
        }

        // Hug the boundary more tightly once the residuals are small; early on a
        // conservative fraction keeps the iterates well centered.
        double tau = iter <= 3 ? 0.9 : 0.98;
        if (phi < 1e-3) tau = 0.99;
        if (phi < 1e-5) tau = 0.995;
        double ap = 1.0, ad = 1.0;
        for (int i = 0; i < nb; ++i) {
            ap = std::min(ap, step_to_boundary(X[static_cast<std::size_t>(i)],
                                               dX_aff[static_cast<std::size_t>(i)], tau, 1.0));
            ad = std::min(ad, step_to_boundary(S[static_cast<std::size_t>(i)],
                                               dS_aff[static_cast<std::size_t>(i)], tau, 1.0));
        }
        double mu_aff = 0.0;
        for (int i = 0; i < nb; ++i)
            mu_aff += inner(X[static_cast<std::size_t>(i)] + ap * dX_aff[static_cast<std::size_t>(i)],
                            S[static_cast<std::size_t>(i)] + ad * dS_aff[static_cast<std::size_t>(i)]);
        mu_aff = std::max(0.0, mu_aff / n_total);
        double sigma = mu > 0.0 ? std::pow(mu_aff / mu, 3) : 0.0;
        sigma = std::min(1.0, std::max(0.0, sigma));

        // Corrector: Rc = sigma mu I - X S - dX_aff dS_aff.
        // rhs_k = rp_k - <A_k, Rc S^{-1}> + <A_k, X Rd S^{-1}>, and since
        // rp_k = b_k - <A_k, X>, start from b + h_common and subtract the rest.
        std::vector<Mat> RcS(static_cast<std::size_t>(nb)); // Rc S^{-1}
        for (int i = 0; i < nb; ++i) {
            const int n = static_cast<int>(rp.G0[static_cast<std::size_t>(i)].rows());
            Mat Rc = sigma * mu * Mat::Identity(n, n) -
                     X[static_cast<std::size_t>(i)] * S[static_cast<std::size_t>(i)] -
                     dX_aff[static_cast<std::size_t>(i)] * dS_aff[static_cast<std::size_t>(i)];
            RcS[static_cast<std::size_t>(i)] =
                Slt[static_cast<std::size_t>(i)].solve(Rc.transpose()).transpose();
        }
        Vec h = b + h_common;
        for (int k = 0; k < q; ++k) {
            double adjust = 0.0;
            for (int i = 0; i < nb; ++i) {
                const Mat& Fk = rp.Gk[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
                // A_k = -Fk: subtract <A_k, Rc S^{-1}> and the predictor's <A_k, X>.
                adjust += inner(Fk, RcS[static_cast<std::size_t>(i)]) +
                          inner(Fk, X[static_cast<std::size_t>(i)]);
            }
            h(k) += adjust;
        }
        Vec dy = schur_solve(h);

        std::vector<Mat> dS(static_cast<std::size_t>(nb)), dX(static_cast<std::size_t>(nb));
        for (int i = 0; i < nb; ++i) {
            Mat ds = Rd[static_cast<std::size_t>(i)];
            for (int k = 0; k < q; ++k)
                ds -= dy(k) * (-rp.Gk[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]);
            dS[static_cast<std::size_t>(i)] = ds;
            Mat t2 = Slt[static_cast<std::size_t>(i)].solve(ds);
            Mat dx = RcS[static_cast<std::size_t>(i)] -
                     X[static_cast<std::size_t>(i)] * t2.transpose();
            dX[static_cast<std::size_t>(i)] = 0.5 * (dx + dx.transpose());
        }

        ap = 1.0;
        ad = 1.0;
        for (int i = 0; i < nb; ++i) {
            ap = std::min(ap, step_to_boundary(X[static_cast<std::size_t>(i)],
                                               dX[static_cast<std::size_t>(i)], tau, 1.0));
            ad = std::min(ad, step_to_boundary(S[static_cast<std::size_t>(i)],
                                               dS[static_cast<std::size_t>(i)], tau, 1.0));
        }
        if (ap < 1e-10 && ad < 1e-10) break;

        for (int i = 0; i < nb; ++i) {
            X[static_cast<std::size_t>(i)] += ap * dX[static_cast<std::size_t>(i)];
            S[static_cast<std::size_t>(i)] += ad * dS[static_cast<std::size_t>(i)];
        }
        y += ad * dy;
        prev_ap = ap;
        prev_ad = ad;
        prev_sigma = sigma;
    }

    res.psi = best_y;
    res.rel_p = best_rp;
    res.rel_d = best_rd;
    res.rel_gap = best_gap;
    if (best_phi <= opts.tolerance) {
        res.status = SdpStatus::Optimal;
    } else if (best_phi <= opts.inaccurate_tolerance) {
        res.status = SdpStatus::Inaccurate;
        std::ostringstream os;
        os << "stalled with moderate residuals (accuracy " << best_phi << ")";
        res.message = os.str();
    } else {
        res.status = SdpStatus::NumericalFailure;
        res.message = "did not reach the requested accuracy";
    }
    return res;
}

} // namespace

SdpSolution solve(const SdpProblem& p, const SolveOptions& opts) {
    Scalarized sc = detail::scalarize(p);
    SdpSolution sol;

    const double cnorm = sc.c.norm();
    sol.objective_scale = cnorm > 0.0 ? cnorm : 1.0;
    const Vec cn = cnorm > 0.0 ? Vec(sc.c / cnorm) : Vec(Vec::Zero(sc.p));

    auto finish = [&](const Vec& t, SdpStatus status, const std::string& msg, int iters,
                      double rp_, double rd_, double rg_) {
        sol.assignment = detail::unpack(p, sc.var_offset, t);
        sol.objective_value = sc.c.dot(t);
        sol.status = status;
        sol.message = msg;
        sol.iterations = iters;
        sol.rel_primal = rp_;
        sol.rel_dual = rd_;
        sol.rel_gap = rg_;
        sol.residuals = evaluate_constraints(p, sol.assignment);
        // An optimal claim must survive the independent recheck.
        if (sol.status == SdpStatus::Optimal) {
            for (std::size_t i = 0; i < sol.residuals.inequality_slacks.size(); ++i) {
                const double scale =
                    1.0 + sc.blocks[i].F0.norm() + std::abs(sol.residuals.inequality_slacks[i].margin);
                if (sol.residuals.inequality_slacks[i].slack_with_margin < -100.0 * opts.tolerance * scale) {
                    sol.status = SdpStatus::Inaccurate;
                    sol.message = "optimality downgraded by the certificate recheck";
                }
            }
        }
        return sol;
    };

    // Equality elimination: t = t0 + N theta with N an orthonormal null basis.
    Vec t0 = Vec::Zero(sc.p);
    Mat N;
    if (sc.Aeq.rows() > 0) {
        Eigen::JacobiSVD<Mat> svd(sc.Aeq, Eigen::ComputeThinU | Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        const double smax = sv.size() > 0 ? sv(0) : 0.0;
        const double tol = std::max(sc.Aeq.rows(), sc.Aeq.cols()) * smax * 1e-13;
        int rank = 0;
        for (int i = 0; i < sv.size(); ++i)
            if (sv(i) > tol) ++rank;
        Vec z = svd.matrixU().transpose() * sc.beq;
        Vec w = Vec::Zero(sv.size());
        for (int i = 0; i < rank; ++i) w(i) = z(i) / sv(i);
        t0 = svd.matrixV().leftCols(sv.size()) * w;
        const double eq_res = (sc.Aeq * t0 - sc.beq).lpNorm<Eigen::Infinity>();
        if (eq_res > 1e-9 * (1.0 + sc.beq.lpNorm<Eigen::Infinity>()))
            return finish(t0, SdpStatus::Infeasible, "equality constraints are inconsistent", 0,
                          0.0, 0.0, 0.0);
        N = svd.matrixV().rightCols(sc.p - rank);
    } else {
        N = Mat::Identity(sc.p, sc.p);
    }
    const int q = static_cast<int>(N.cols());
    Vec cN = N.transpose() * cn;

    if (sc.blocks.empty()) {
        // No inequalities: any theta is feasible; a nonzero reduced objective is unbounded.
        if (q > 0 && cN.lpNorm<Eigen::Infinity>() > 1e-12)
            return finish(t0, SdpStatus::NumericalFailure,
                          "objective is unbounded (no inequality constraints)", 0, 0.0, 0.0, 0.0);
        return finish(t0, SdpStatus::Optimal, "", 0, 0.0, 0.0, 0.0);
    }

    // Reduced blocks over theta.
    std::vector<Mat> G0(sc.blocks.size());
    std::vector<std::vector<Mat>> Gk(sc.blocks.size());
    for (std::size_t i = 0; i < sc.blocks.size(); ++i) {
        const auto& blk = sc.blocks[i];
        Mat g0 = blk.F0;
        for (int j = 0; j < sc.p; ++j)
            if (t0(j) != 0.0) g0 += t0(j) * blk.F[static_cast<std::size_t>(j)];
        G0[i] = 0.5 * (g0 + g0.transpose());
        Gk[i].resize(static_cast<std::size_t>(q));
        for (int k = 0; k < q; ++k) {
            Mat gk = Mat::Zero(blk.size, blk.size);
            for (int j = 0; j < sc.p; ++j)
                if (N(j, k) != 0.0) gk += N(j, k) * blk.F[static_cast<std::size_t>(j)];
            Gk[i][static_cast<std::size_t>(k)] = 0.5 * (gk + gk.transpose());
        }
    }

    // Presolve: drop theta directions that touch no inequality; they must not
    // carry objective, otherwise the problem is unbounded.
    Mat keep;
    if (q > 0) {
        int svec_total = 0;
        for (const auto& g : G0) svec_total += static_cast<int>(g.size());
        Mat D(svec_total, q);
        for (int k = 0; k < q; ++k) {
            int at = 0;
            for (std::size_t i = 0; i < G0.size(); ++i) {
                const Mat& gk = Gk[i][static_cast<std::size_t>(k)];
                D.block(at, k, gk.size(), 1) =
                    Eigen::Map<const Vec>(gk.data(), gk.size());
                at += static_cast<int>(gk.size());
            }
        }
        Eigen::JacobiSVD<Mat> svd(D, Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        const double smax = sv.size() > 0 ? sv(0) : 0.0;
        const double tol = std::max<double>(D.rows(), D.cols()) * smax * 1e-13;
        int rank = 0;
        for (int i = 0; i < sv.size(); ++i)
            if (sv(i) > tol) ++rank;
        if (rank < q) {
            Mat nullb = svd.matrixV().rightCols(q - rank);
            if ((nullb.transpose() * cN).lpNorm<Eigen::Infinity>() > 1e-9 * (1.0 + cN.norm()))
                return finish(t0, SdpStatus::NumericalFailure,
                              "objective is unbounded along a direction unconstrained by any inequality",
                              0, 0.0, 0.0, 0.0);
        }
        keep = svd.matrixV().leftCols(rank);
    } else {
        keep = Mat::Identity(0, 0);
    }
    const int q2 = static_cast<int>(keep.cols());

    ReducedProblem red;
    red.q = q2;
    red.cr = keep.transpose() * cN;
    red.G0 = G0;
    red.Gk.resize(G0.size());
    for (std::size_t i = 0; i < G0.size(); ++i) {
        red.Gk[i].resize(static_cast<std::size_t>(q2));
        for (int k2 = 0; k2 < q2; ++k2) {
            Mat g = Mat::Zero(G0[i].rows(), G0[i].cols());
            for (int k = 0; k < q; ++k)
                if (keep(k, k2) != 0.0) g += keep(k, k2) * Gk[i][static_cast<std::size_t>(k)];
            red.Gk[i][static_cast<std::size_t>(k2)] = g;
        }
        red.names.push_back(sc.blocks[i].name);
    }

    // Per-block prescaling (positive scalings preserve the feasible set).
    for (std::size_t i = 0; i < red.G0.size(); ++i) {
        double m = red.G0[i].norm();
        for (const Mat& g : red.Gk[i]) m = std::max(m, g.norm());
        if (m > 1.0) {
            red.G0[i] /= m;
            for (Mat& g : red.Gk[i]) g /= m;
        }
    }

    if (q2 == 0) {
        // Fully determined by the equalities: just check the blocks.
        double worst = 0.0;
        for (const Mat& g : red.G0) {
            Eigen::SelfAdjointEigenSolver<Mat> eig(g, Eigen::EigenvaluesOnly);
            worst = std::min(worst, eig.eigenvalues().minCoeff() / (1.0 + g.norm()));
        }
        if (worst >= -opts.tolerance)
            return finish(t0, SdpStatus::Optimal, "", 0, 0.0, 0.0, 0.0);
        return finish(t0, SdpStatus::Infeasible,
                      "equality-determined point violates the inequalities", 0, 0.0, 0.0, 0.0);
    }

    IpmResult ipm = run_ipm(red, opts);

    // When the solution entries are orders of magnitude above the data, the slack
    // blocks end up so ill conditioned that the primal step drowns in roundoff and
    // the run stalls short of the tolerance. Rescaling each block around the
    // incumbent slack and restarting usually closes the remaining distance.
    for (int attempt = 0; attempt < 2 && ipm.status != SdpStatus::Optimal &&
                          ipm.status != SdpStatus::Infeasible;
         ++attempt) {
        IpmResult retry = run_ipm(congruence_scaled(red, jacobi_scalings(red, ipm.psi)), opts);
        retry.iterations += ipm.iterations;
        if (retry.status == SdpStatus::Infeasible) {
            ipm = std::move(retry);
            break;
        }
        const double phi_old = std::max({ipm.rel_p, ipm.rel_d, ipm.rel_gap});
        const double phi_new = std::max({retry.rel_p, retry.rel_d, retry.rel_gap});
        const bool usable_retry =
            retry.status == SdpStatus::Optimal || retry.status == SdpStatus::Inaccurate;
        if (usable_retry && (retry.status == SdpStatus::Optimal || phi_new < phi_old)) {
            ipm = std::move(retry);
        } else {
            ipm.iterations = retry.iterations;
            break;
        }
    }

    Vec theta = keep * ipm.psi;
    Vec t = t0 + N * theta;
    return finish(t, ipm.status, ipm.message, ipm.iterations, ipm.rel_p, ipm.rel_d, ipm.rel_gap);
}

} // namespace ddsat
