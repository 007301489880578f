#include "ddsat/synth.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace ddsat {

SynthMode synth_mode_from_string(const std::string& s) {
    if (s == "direct") return SynthMode::Direct;
    if (s == "indirect") return SynthMode::Indirect;
    if (s == "oracle") return SynthMode::Oracle;
    throw std::invalid_argument("unknown synthesis mode: " + s);
}

std::string to_string(SynthMode m) {
    switch (m) {
        case SynthMode::Direct: return "direct";
        case SynthMode::Indirect: return "indirect";
        case SynthMode::Oracle: return "oracle";
    }
    return "?";
}

std::string to_string(SynthProblem p) {
    switch (p) {
        case SynthProblem::Boa: return "boa";
        case SynthProblem::Reachable: return "reachable";
        case SynthProblem::L2Gain: return "l2gain";
    }
    return "?";
}

namespace {

// Where the closed-loop grid entries come from: instrument products and the
// decision matrix F (direct), or plant matrices and Y = K Q (model-based).
struct CellSource {
    int nx = 0, nu = 0;
    bool direct = true;
    // direct mode
    const SdpVariable* F = nullptr;
    Mat VZ, YZ;
    // model-based mode
    const SdpVariable* Y = nullptr;
    Mat A, B;
    const SdpVariable* Q = nullptr;
    Mat Beff; // B_cl (direct) or B (model-based)

    // Adds L * (K Q) to e at (row0, col0): L VZ F or L Y.
    void add_KQ(AffineMatrixExpr& e, const Mat& L, int row0 = 0, int col0 = 0) const {
        if (direct) {
            e.add_term(L * VZ, *F, Mat::Identity(nx, nx), false, row0, col0);
        } else {
            e.add_term(L, *Y, Mat::Identity(nx, nx), false, row0, col0);
        }
    }
    // Adds (A + B K) Q to e at (0,0): YZ F or A Q + B Y.
    void add_AclQ(AffineMatrixExpr& e) const {
        if (direct) {
            e.add_term(YZ, *F, Mat::Identity(nx, nx));
        } else {
            e.add_term(A, *Q, Mat::Identity(nx, nx));
            e.add_term(B, *Y, Mat::Identity(nx, nx));
        }
    }
};

// coef * scalar_var * I_n placed at a block offset.
void add_scalar_times_identity(AffineMatrixExpr& e, double coef, const SdpVariable& v, int n,
                               int row0, int col0) {
    for (int i = 0; i < n; ++i) {
        Mat L = Mat::Zero(n, 1);
        L(i, 0) = coef;
        Mat R = Mat::Zero(1, n);
        R(0, i) = 1.0;
        e.add_term(L, v, R, false, row0, col0);
    }
}

using Grid = std::vector<std::vector<std::optional<AffineMatrixExpr>>>;

Grid empty_grid(std::size_t nb) {
    return Grid(nb, std::vector<std::optional<AffineMatrixExpr>>(nb));
}

// 2x2 contraction cap on the unsaturated loop: ||Acl||_P <= t with P = Q^{-1}.
int install_rate_cap(SdpProblem& prob, const CellSource& src, const SdpVariable& Q, double t,
                     std::optional<double> margin) {
    const int nx = src.nx;
    Grid g = empty_grid(2);
    g[0][0] = AffineMatrixExpr::zero(nx, nx);
    g[0][0]->add_scaled_var(-t / 2.0, Q);
    g[1][0] = AffineMatrixExpr::zero(nx, nx);
    src.add_AclQ(*g[1][0]);
    g[1][1] = AffineMatrixExpr::zero(nx, nx);
    g[1][1]->add_scaled_var(-t / 2.0, Q);
    return add_he_block_inequality(prob, g, margin, "linear-rate-cap");
}

int install_boa_grid(SdpProblem& prob, const CellSource& src, const SdpVariable& N,
                     const SdpVariable& M, const SdpVariable& Q, double eta,
                     std::optional<double> margin) {
    if (!(eta > 0.0 && eta <= 1.0))
        throw std::invalid_argument("decay rate must lie in (0, 1]");
    const int nx = src.nx, nu = src.nu;
    Grid g = empty_grid(3);
    g[0][0] = AffineMatrixExpr::zero(nx, nx);
    g[0][0]->add_scaled_var(-eta / 2.0, Q);
    g[1][0] = AffineMatrixExpr::zero(nu, nx);
    src.add_KQ(*g[1][0], Mat::Identity(nu, nu));
    g[1][0]->add_scaled_var(1.0, N);
    g[1][1] = AffineMatrixExpr::zero(nu, nu);
    g[1][1]->add_scaled_var(-1.0, M);
    g[2][0] = AffineMatrixExpr::zero(nx, nx);
    src.add_AclQ(*g[2][0]);
    g[2][1] = AffineMatrixExpr::zero(nx, nu);
    g[2][1]->add_term(-src.Beff, M, Mat::Identity(nu, nu));
    g[2][2] = AffineMatrixExpr::zero(nx, nx);
    g[2][2]->add_scaled_var(-eta / 2.0, Q);
    return add_he_block_inequality(prob, g, margin, "decay-rate-grid");
}

int install_reachable_grid(SdpProblem& prob, const CellSource& src, const SdpVariable& N,
                           const SdpVariable& M, const SdpVariable& Q,
                           std::optional<double> margin) {
    const int nx = src.nx, nu = src.nu;
    Grid g = empty_grid(4);
    g[0][0] = AffineMatrixExpr::zero(nx, nx);
    g[0][0]->add_scaled_var(-0.5, Q);
    g[1][0] = AffineMatrixExpr::zero(nu, nx);
    src.add_KQ(*g[1][0], Mat::Identity(nu, nu));
    g[1][0]->add_scaled_var(1.0, N);
    g[1][1] = AffineMatrixExpr::zero(nu, nu);
    g[1][1]->add_scaled_var(-1.0, M);
    g[2][2] = AffineMatrixExpr::zero(nx, nx);
    g[2][2]->add_constant(-0.5 * Mat::Identity(nx, nx));
    g[3][0] = AffineMatrixExpr::zero(nx, nx);
    src.add_AclQ(*g[3][0]);
    g[3][1] = AffineMatrixExpr::zero(nx, nu);
    g[3][1]->add_term(-src.Beff, M, Mat::Identity(nu, nu));
    g[3][2] = AffineMatrixExpr::zero(nx, nx);
    g[3][2]->add_constant(Mat::Identity(nx, nx));
    g[3][3] = AffineMatrixExpr::zero(nx, nx);
    g[3][3]->add_scaled_var(-0.5, Q);
    return add_he_block_inequality(prob, g, margin, "reachable-grid");
}

int install_l2_grid(SdpProblem& prob, const CellSource& src, const PerformanceChannel& ch,
                    const SdpVariable& N, const SdpVariable& M, const SdpVariable& Q,
                    const SdpVariable& gamma2, std::optional<double> margin) {
    const int nx = src.nx, nu = src.nu;
    const int nz = ch.nz();
    ch.validate(nx, nu);
    Grid g = empty_grid(5);
    g[0][0] = AffineMatrixExpr::zero(nx, nx);
    g[0][0]->add_scaled_var(-0.5, Q);
    g[1][0] = AffineMatrixExpr::zero(nu, nx);
    src.add_KQ(*g[1][0], Mat::Identity(nu, nu));
    g[1][0]->add_scaled_var(1.0, N);
    g[1][1] = AffineMatrixExpr::zero(nu, nu);
    g[1][1]->add_scaled_var(-1.0, M);
    g[2][2] = AffineMatrixExpr::zero(nx, nx);
    g[2][2]->add_constant(-0.5 * Mat::Identity(nx, nx));
    g[3][0] = AffineMatrixExpr::zero(nz, nx);
    g[3][0]->add_term(ch.C, Q, Mat::Identity(nx, nx));
    src.add_KQ(*g[3][0], ch.D_u);
    g[3][1] = AffineMatrixExpr::zero(nz, nu);
    g[3][1]->add_term(-ch.D_u, M, Mat::Identity(nu, nu));
    g[3][2] = AffineMatrixExpr::zero(nz, nx);
    g[3][2]->add_constant(ch.D_w);
    g[3][3] = AffineMatrixExpr::zero(nz, nz);
    add_scalar_times_identity(*g[3][3], -0.5, gamma2, nz, 0, 0);
    g[4][0] = AffineMatrixExpr::zero(nx, nx);
    src.add_AclQ(*g[4][0]);
    g[4][1] = AffineMatrixExpr::zero(nx, nu);
    g[4][1]->add_term(-src.Beff, M, Mat::Identity(nu, nu));
    g[4][2] = AffineMatrixExpr::zero(nx, nx);
    g[4][2]->add_constant(Mat::Identity(nx, nx));
    g[4][4] = AffineMatrixExpr::zero(nx, nx);
    g[4][4]->add_scaled_var(-0.5, Q);
    return add_he_block_inequality(prob, g, margin, "performance-grid");
}

CellSource direct_source(const DataProducts& p, const SdpVariable& F, const SdpVariable& Q) {
    CellSource s;
    s.nx = p.n_x;
    s.nu = p.n_u;
    s.direct = true;
    s.F = &F;
    s.VZ = p.VZ;
    s.YZ = p.YZ;
    s.Q = &Q;
    s.Beff = p.B_cl;
    return s;
}

CellSource model_source(const EstimatedModel& m, const SdpVariable& Y, const SdpVariable& Q) {
    CellSource s;
    s.nx = static_cast<int>(m.A_hat.rows());
    s.nu = static_cast<int>(m.B_hat.cols());
    s.direct = false;
    s.Y = &Y;
    s.A = m.A_hat;
    s.B = m.B_hat;
    s.Q = &Q;
    s.Beff = m.B_hat;
    return s;
}

} // namespace

std::vector<int> build_saturation_lmis(SdpProblem& prob, const SdpVariable& Q,
                                       const SdpVariable& N, const SaturationBounds& bounds,
                                       double s, std::optional<double> margin) {
    if (!(s > 0.0)) throw std::invalid_argument("saturation block: s must be positive");
    const int nx = Q.rows;
    const int nu = bounds.size();
    std::vector<int> ids;
    for (int j = 0; j < nu; ++j) {
        AffineMatrixExpr e = AffineMatrixExpr::zero(nx + 1, nx + 1);
        e.add_scaled_var(1.0, Q, 0, 0);
        Mat ej = Mat::Zero(1, nu);
        ej(0, j) = 1.0;
        e.add_term(ej, N, Mat::Identity(nx, nx), false, nx, 0);        // N_j
        e.add_term(Mat::Identity(nx, nx), N, ej.transpose(), true, 0, nx); // N_j^T
        Mat corner(1, 1);
        corner(0, 0) = bounds.ubar(j) * bounds.ubar(j) / (s * s);
        e.add_constant(corner, nx, nx);
        const double m = margin.has_value() ? *margin : 1e-7 * std::max(1.0, e.constant.norm());
        ids.push_back(prob.add_psd(std::move(e), m,
                                   "saturation-channel-" + std::to_string(j)));
    }
    return ids;
}

int build_boa_lmi(SdpProblem& prob, const DataProducts& products, const SdpVariable& F,
                  const SdpVariable& N, const SdpVariable& M, const SdpVariable& Q,
                  double eta, std::optional<double> margin) {
    return install_boa_grid(prob, direct_source(products, F, Q), N, M, Q, eta, margin);
}

void build_consistency_equalities(SdpProblem& prob, const DataProducts& products,
                                  const SdpVariable& F, const SdpVariable& Q) {
    const int nx = products.n_x;
    AffineMatrixExpr e = AffineMatrixExpr::zero(nx, nx);
    e.add_term(products.Y0Z(), F, Mat::Identity(nx, nx));
    e.add_scaled_var(-1.0, Q);
    prob.add_equality(std::move(e), "consistency");
}

int build_reachable_lmi(SdpProblem& prob, const DataProducts& products, const SdpVariable& F,
                        const SdpVariable& N, const SdpVariable& M, const SdpVariable& Q,
                        std::optional<double> margin) {
    return install_reachable_grid(prob, direct_source(products, F, Q), N, M, Q, margin);
}

int build_l2_lmi(SdpProblem& prob, const DataProducts& products, const PerformanceChannel& channel,
                 const SdpVariable& F, const SdpVariable& N, const SdpVariable& M,
                 const SdpVariable& Q, const SdpVariable& gamma2,
                 std::optional<double> margin) {
    return install_l2_grid(prob, direct_source(products, F, Q), channel, N, M, Q, gamma2, margin);
}

namespace {

// Shared assembly + solve + extraction for all three designs and all modes.
SynthesisResult run_synthesis(const DataProducts* products, const EstimatedModel* model,
                              const SaturationBounds& bounds,
                              const std::optional<PerformanceChannel>& channel,
                              const SynthesisOptions& options, SynthProblem which) {
    const bool direct = products != nullptr;
    const int nx = direct ? products->n_x : static_cast<int>(model->A_hat.rows());
    const int nu = direct ? products->n_u : static_cast<int>(model->B_hat.cols());
    if (bounds.size() != nu)
        throw std::invalid_argument("synthesis: saturation bounds dimension mismatch");
    if (which == SynthProblem::L2Gain && !channel)
        throw std::invalid_argument("synthesis: performance channel required for the gain design");
    if (which != SynthProblem::Boa && !(options.s > 0.0))
        throw std::invalid_argument("synthesis: s must be positive");

    struct Assembled {
        SdpProblem prob;
        SdpVariable Q, N, M;
        std::optional<SdpVariable> F, Y, alpha, gamma2;
    };
    // rate_cap > 0 installs the extra contraction block on the unsaturated loop.
    auto assemble = [&](double rate_cap) {
        Assembled a;
        SdpProblem& prob = a.prob;
        a.Q = prob.add_variable(VarKind::Symmetric, nx, nx, "Q");
        a.N = prob.add_variable(VarKind::Rectangular, nu, nx, "N");
        a.M = prob.add_variable(VarKind::Diagonal, nu, nu, "M");
        CellSource src;
        if (direct) {
            a.F = prob.add_variable(VarKind::Rectangular, nu + nx, nx, "F");
            src = direct_source(*products, *a.F, a.Q);
        } else {
            a.Y = prob.add_variable(VarKind::Rectangular, nu, nx, "Y");
            src = model_source(*model, *a.Y, a.Q);
        }

        const double sat_s = which == SynthProblem::Boa ? 1.0 : options.s;
        build_saturation_lmis(prob, a.Q, a.N, bounds, sat_s, options.epsilon);

        switch (which) {
            case SynthProblem::Boa: {
                install_boa_grid(prob, src, a.N, a.M, a.Q, options.eta, options.epsilon);
                a.alpha = prob.add_variable(VarKind::Scalar, 1, 1, "alpha");
                AffineMatrixExpr e = AffineMatrixExpr::zero(nx, nx);
                e.add_scaled_var(1.0, a.Q);
                add_scalar_times_identity(e, -1.0, *a.alpha, nx, 0, 0);
                prob.add_psd(std::move(e), 0.0, "alpha-floor");
                Mat g(1, 1);
                g(0, 0) = -1.0;
                prob.set_objective_term(*a.alpha, g);
                break;
            }
            case SynthProblem::Reachable: {
                install_reachable_grid(prob, src, a.N, a.M, a.Q, options.epsilon);
                prob.set_objective_term(a.Q, Mat::Identity(nx, nx));
                break;
            }
            case SynthProblem::L2Gain: {
                a.gamma2 = prob.add_variable(VarKind::Scalar, 1, 1, "gamma2");
                install_l2_grid(prob, src, *channel, a.N, a.M, a.Q, *a.gamma2, options.epsilon);
                Mat g(1, 1);
                g(0, 0) = 1.0;
                prob.set_objective_term(*a.gamma2, g);
                break;
            }
        }
        if (direct) build_consistency_equalities(prob, *products, *a.F, a.Q);
        if (options.kappa2) {
            if (!(*options.kappa2 > 0.0))
                throw std::invalid_argument("synthesis: kappa2 must be positive");
            AffineMatrixExpr e = AffineMatrixExpr::zero(nx, nx);
            e.add_constant(*options.kappa2 * Mat::Identity(nx, nx));
            e.add_scaled_var(-1.0, a.Q);
            prob.add_psd(std::move(e), 0.0, "size-cap");
        }
        if (rate_cap > 0.0) install_rate_cap(prob, src, a.Q, rate_cap, options.epsilon);
        return a;
    };

    auto objective_of = [&](const Assembled& a, const SdpSolution& sol) {
        switch (which) {
            case SynthProblem::Boa: return sol.assignment.at(a.alpha->id)(0, 0);
            case SynthProblem::Reachable: return sol.assignment.at(a.Q.id).trace();
            case SynthProblem::L2Gain: return sol.assignment.at(a.gamma2->id)(0, 0);
        }
        return 0.0;
    };

    Assembled plain = assemble(0.0);
    SdpSolution sol = solve(plain.prob, options.solver);
    Assembled* chosen = &plain;
    double refined_rate = 0.0;

    // Basin refinement: the alpha-optimal face leaves the pole placement of the
    // unsaturated loop nearly free, and barrier centers drift to its slow edge.
    // Re-solve with a contraction cap and keep the fastest certificate whose
    // basin stays within refine_slack of the unrefined optimum.
    std::optional<Assembled> refined;
    std::optional<SdpSolution> refined_sol;
    const bool sol_usable =
        sol.status == SdpStatus::Optimal || sol.status == SdpStatus::Inaccurate;
    if (which == SynthProblem::Boa && options.refine_rate && sol_usable) {
        const double alpha_star = objective_of(plain, sol);
        for (double frac : {0.85, 0.90, 0.95}) {
            Assembled capped = assemble(frac * options.eta);
            SdpSolution s2 = solve(capped.prob, options.solver);
            if (s2.status != SdpStatus::Optimal && s2.status != SdpStatus::Inaccurate) continue;
            if (objective_of(capped, s2) < (1.0 - options.refine_slack) * alpha_star) continue;
            refined = std::move(capped);
            refined_sol = std::move(s2);
            refined_rate = frac * options.eta;
            break;
        }
        if (refined) {
            // The unrefined stage fixed the optimum estimate; keep the worse of
            // the two statuses so accuracy problems stay visible.
            if (sol.status == SdpStatus::Inaccurate) refined_sol->status = SdpStatus::Inaccurate;
            refined_sol->iterations += sol.iterations;
            chosen = &*refined;
            sol = std::move(*refined_sol);
        }
    }

    SynthesisResult r;
    r.problem = which;
    r.mode = options.mode;
    r.eta = options.eta;
    r.s = which == SynthProblem::Boa ? 1.0 : options.s;
    r.refined_rate = refined_rate;
    r.status = sol.status;
    r.iterations = sol.iterations;
    r.message = sol.message;
    r.residuals = sol.residuals;
    r.Q = sol.assignment.at(chosen->Q.id);
    r.N = sol.assignment.at(chosen->N.id);
    r.M = sol.assignment.at(chosen->M.id);
    if (direct) r.F = sol.assignment.at(chosen->F->id);
    if (!direct) r.Y = sol.assignment.at(chosen->Y->id);
    r.objective = which == SynthProblem::Reachable ? r.Q.trace() : objective_of(*chosen, sol);

    // K from Q K^T = (K Q)^T, avoiding an explicit inverse of Q.
    Mat KQ = direct ? Mat(products->VZ * *r.F) : *r.Y;
    Eigen::LDLT<Mat> qldlt(r.Q);
    Eigen::SelfAdjointEigenSolver<Mat> qe(r.Q, Eigen::EigenvaluesOnly);
    if (qldlt.info() == Eigen::Success && qe.eigenvalues().minCoeff() > 0.0) {
        r.K = qldlt.solve(KQ.transpose()).transpose();
    } else {
        r.K = Mat::Zero(nu, nx);
        if (r.message.empty()) r.message = "certificate matrix not positive definite";
        if (r.status == SdpStatus::Optimal) r.status = SdpStatus::Inaccurate;
    }

    if (direct && r.F) {
        // Lemma-2 representation residual at G = F Q^{-1}.
        Mat G = qldlt.info() == Eigen::Success
                    ? Mat(qldlt.solve(r.F->transpose()).transpose())
                    : Mat::Zero(nu + nx, nx);
        r.consistency = consistency_residual(*products, G, r.K);
    }
    return r;
}

} // namespace

SynthesisResult synth_boa(const DataProducts& products, const SaturationBounds& bounds,
                          const SynthesisOptions& options) {
    if (options.mode == SynthMode::Direct)
        return run_synthesis(&products, nullptr, bounds, std::nullopt, options, SynthProblem::Boa);
    if (options.mode == SynthMode::Indirect) {
        EstimatedModel m = estimate_open_loop(products);
        return run_synthesis(nullptr, &m, bounds, std::nullopt, options, SynthProblem::Boa);
    }
    if (!options.model)
        throw std::invalid_argument("oracle mode requires the true plant matrices in options.model");
    return run_synthesis(nullptr, &*options.model, bounds, std::nullopt, options, SynthProblem::Boa);
}

SynthesisResult synth_reachable(const DataProducts& products, const SaturationBounds& bounds,
                                const SynthesisOptions& options) {
    if (options.mode == SynthMode::Direct)
        return run_synthesis(&products, nullptr, bounds, std::nullopt, options,
                             SynthProblem::Reachable);
    if (options.mode == SynthMode::Indirect) {
        EstimatedModel m = estimate_open_loop(products);
        return run_synthesis(nullptr, &m, bounds, std::nullopt, options, SynthProblem::Reachable);
    }
    if (!options.model)
        throw std::invalid_argument("oracle mode requires the true plant matrices in options.model");
    return run_synthesis(nullptr, &*options.model, bounds, std::nullopt, options,
                         SynthProblem::Reachable);
}

SynthesisResult synth_l2gain(const DataProducts& products, const SaturationBounds& bounds,
                             const PerformanceChannel& channel, const SynthesisOptions& options) {
    if (options.mode == SynthMode::Direct)
        return run_synthesis(&products, nullptr, bounds, channel, options, SynthProblem::L2Gain);
    if (options.mode == SynthMode::Indirect) {
        EstimatedModel m = estimate_open_loop(products);
        return run_synthesis(nullptr, &m, bounds, channel, options, SynthProblem::L2Gain);
    }
    if (!options.model)
        throw std::invalid_argument("oracle mode requires the true plant matrices in options.model");
    return run_synthesis(nullptr, &*options.model, bounds, channel, options, SynthProblem::L2Gain);
}

SynthesisResult synth_indirect(const EstimatedModel& model, const SaturationBounds& bounds,
                               const std::optional<PerformanceChannel>& channel,
                               const SynthesisOptions& options, SynthProblem which) {
    return run_synthesis(nullptr, &model, bounds, channel, options, which);
}

ResidualReport reevaluate_certificate(const SynthesisResult& r, SynthProblem as, double eta,
                                      double s, const DataProducts* products,
                                      const EstimatedModel* model,
                                      const SaturationBounds& bounds,
                                      const std::optional<PerformanceChannel>& channel,
                                      std::optional<double> gamma2_override) {
    const bool direct = r.F.has_value();
    if (direct && products == nullptr)
        throw std::invalid_argument("reevaluate_certificate: direct certificates need products");
    if (!direct && model == nullptr)
        throw std::invalid_argument("reevaluate_certificate: model-based certificates need a model");
    const int nx = static_cast<int>(r.Q.rows());
    const int nu = static_cast<int>(r.N.rows());

    SdpProblem prob;
    SdpVariable Q = prob.add_variable(VarKind::Symmetric, nx, nx, "Q");
    SdpVariable N = prob.add_variable(VarKind::Rectangular, nu, nx, "N");
    SdpVariable M = prob.add_variable(VarKind::Diagonal, nu, nu, "M");
    std::optional<SdpVariable> F, Y;
    VarAssignment a;
    a[Q.id] = r.Q;
    a[N.id] = r.N;
    a[M.id] = r.M;
    CellSource src;
    if (direct) {
        F = prob.add_variable(VarKind::Rectangular, nu + nx, nx, "F");
        a[F->id] = *r.F;
        src = direct_source(*products, *F, Q);
    } else {
        Y = prob.add_variable(VarKind::Rectangular, nu, nx, "Y");
        a[Y->id] = r.Y ? *r.Y : Mat(r.K * r.Q);
        src = model_source(*model, *Y, Q);
    }

    build_saturation_lmis(prob, Q, N, bounds, s, 0.0);
    switch (as) {
        case SynthProblem::Boa:
            install_boa_grid(prob, src, N, M, Q, eta, 0.0);
            break;
        case SynthProblem::Reachable:
            install_reachable_grid(prob, src, N, M, Q, 0.0);
            break;
        case SynthProblem::L2Gain: {
            if (!channel)
                throw std::invalid_argument("reevaluate_certificate: gain problem needs a channel");
            SdpVariable g2 = prob.add_variable(VarKind::Scalar, 1, 1, "gamma2");
            Mat g(1, 1);
            g(0, 0) = gamma2_override.value_or(r.objective);
            a[g2.id] = g;
            install_l2_grid(prob, src, *channel, N, M, Q, g2, 0.0);
            break;
        }
    }
    if (direct) build_consistency_equalities(prob, *products, *F, Q);
    return evaluate_constraints(prob, a);
}

double performance_index(double alpha, double alpha_star) {
    if (!(alpha_star > 0.0))
        throw std::invalid_argument("performance_index: reference objective must be positive");
    return std::abs(alpha_star - alpha) / alpha_star * 100.0;
}

namespace {

void emit_matrix(std::ostream& out, const char* tag, const Mat& m) {
    out << tag << ' ' << m.rows() << ' ' << m.cols() << '\n';
    char buf[40];
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
            out << buf << (j + 1 == m.cols() ? "" : " ");
        }
        out << '\n';
    }
}

Mat parse_matrix(std::istream& in, int rows, int cols) {
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            if (!(in >> m(i, j))) throw std::runtime_error("result file: truncated matrix");
    return m;
}

} // namespace

void write_result(const SynthesisResult& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_result: cannot open " + path);
    char buf[40];
    out << "result v1\n";
    out << "problem " << to_string(r.problem) << '\n';
    out << "mode " << to_string(r.mode) << '\n';
    out << "status " << to_string(r.status) << '\n';
    std::snprintf(buf, sizeof buf, "%.17g", r.objective);
    out << "objective " << buf << '\n';
    std::snprintf(buf, sizeof buf, "%.17g", r.eta);
    out << "eta " << buf << '\n';
    std::snprintf(buf, sizeof buf, "%.17g", r.s);
    out << "s " << buf << '\n';
    std::snprintf(buf, sizeof buf, "%.17g", r.refined_rate);
    out << "refined " << buf << '\n';
    std::snprintf(buf, sizeof buf, "%.17g", r.consistency);
    out << "consistency " << buf << '\n';
    out << "iterations " << r.iterations << '\n';
    emit_matrix(out, "K", r.K);
    emit_matrix(out, "Q", r.Q);
    emit_matrix(out, "N", r.N);
    emit_matrix(out, "M", r.M);
    if (r.F) emit_matrix(out, "F", *r.F);
    if (r.Y) emit_matrix(out, "Y", *r.Y);
    out << "end\n";
    if (!out) throw std::runtime_error("write_result: write failed for " + path);
}

SynthesisResult read_result(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_result: cannot open " + path);
    std::string word;
    in >> word;
    if (word != "result") throw std::runtime_error("read_result: not a result file: " + path);
    in >> word; // version
    SynthesisResult r;
    while (in >> word) {
        if (word == "end") return r;
        if (word == "problem") {
            in >> word;
            if (word == "boa") r.problem = SynthProblem::Boa;
            else if (word == "reachable") r.problem = SynthProblem::Reachable;
            else if (word == "l2gain") r.problem = SynthProblem::L2Gain;
            else throw std::runtime_error("read_result: unknown problem tag " + word);
        } else if (word == "mode") {
            in >> word;
            r.mode = synth_mode_from_string(word);
        } else if (word == "status") {
            in >> word;
            if (word == "optimal") r.status = SdpStatus::Optimal;
            else if (word == "infeasible") r.status = SdpStatus::Infeasible;
            else if (word == "inaccurate") r.status = SdpStatus::Inaccurate;
            else r.status = SdpStatus::NumericalFailure;
        } else if (word == "objective") {
            in >> r.objective;
        } else if (word == "eta") {
            in >> r.eta;
        } else if (word == "s") {
            in >> r.s;
        } else if (word == "refined") {
            in >> r.refined_rate;
        } else if (word == "consistency") {
            in >> r.consistency;
        } else if (word == "iterations") {
            in >> r.iterations;
        } else if (word == "K" || word == "Q" || word == "N" || word == "M" || word == "F" ||
                   word == "Y") {
            int rows, cols;
            if (!(in >> rows >> cols)) throw std::runtime_error("read_result: bad matrix header");
            Mat m = parse_matrix(in, rows, cols);
            if (word == "K") r.K = m;
            else if (word == "Q") r.Q = m;
            else if (word == "N") r.N = m;
            else if (word == "M") r.M = m;
            else if (word == "F") r.F = m;
            else r.Y = m;
        } else {
            throw std::runtime_error("read_result: unknown tag " + word);
        }
    }
    throw std::runtime_error("read_result: missing end marker in " + path);
}

} // namespace ddsat
