#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ddsat/types.hpp"

namespace ddsat {

enum class VarKind { Symmetric, Rectangular, Diagonal, Scalar };

struct SdpVariable {
    int id = -1;
    VarKind kind = VarKind::Scalar;
    int rows = 0;
    int cols = 0;
    std::string name;

    // Number of scalar coordinates backing the variable.
    int scalar_count() const;
};

// One product L * X * R (or L * X^T * R) placed at (row0, col0) of the expression.
struct MatrixTerm {
    Mat L;
    int var = -1;
    Mat R;
    bool transpose_var = false;
    int row0 = 0;
    int col0 = 0;
};

using VarAssignment = std::map<int, Mat>;

// Matrix-valued expression affine in the declared variables.
struct AffineMatrixExpr {
    int rows = 0;
    int cols = 0;
    Mat constant;
    std::vector<MatrixTerm> terms;

    static AffineMatrixExpr zero(int r, int c);

    void add_constant(const Mat& c, int row0 = 0, int col0 = 0);
    // Adds L * var * R (var transposed first when transpose_var).
    void add_term(const Mat& L, const SdpVariable& v, const Mat& R,
                  bool transpose_var = false, int row0 = 0, int col0 = 0);
    // Shorthand: coef * var placed at a block offset.
    void add_scaled_var(double coef, const SdpVariable& v, int row0 = 0, int col0 = 0);

    AffineMatrixExpr transposed() const;
    Mat evaluate(const VarAssignment& a) const;
};

enum class ConstraintSense { Psd, Nsd }; // expr >= margin*I  /  expr <= -margin*I

struct SdpConstraint {
    ConstraintSense sense = ConstraintSense::Psd;
    AffineMatrixExpr expr;
    double margin = 0.0;
    std::string name;
};

struct SdpEquality {
    AffineMatrixExpr expr; // == 0 entrywise, any shape
    std::string name;
};

struct SdpProblem {
    std::vector<SdpVariable> variables;
    std::vector<SdpConstraint> inequalities;
    std::vector<SdpEquality> equalities;
    // Objective: minimize sum_v <gradient[v], X_v>; empty map = feasibility problem.
    std::map<int, Mat> objective;

    // Returns a copy of the descriptor: handles stay valid as more variables
    // are declared (expressions reference variables by id).
    SdpVariable add_variable(VarKind kind, int rows, int cols, const std::string& name);
    int add_psd(AffineMatrixExpr expr, double margin, const std::string& name);
    int add_nsd(AffineMatrixExpr expr, double margin, const std::string& name);
    void add_equality(AffineMatrixExpr expr, const std::string& name);
    void set_objective_term(const SdpVariable& v, const Mat& gradient);

    const SdpVariable& var(int id) const { return variables.at(static_cast<std::size_t>(id)); }
};

// Installs He(grid) + margin handling as one NSD constraint. grid is the
// lower-triangular block layout; entries above the diagonal must be absent.
// A missing margin defaults to 1e-7 * max(1, ||constant||_F) of the assembled
// expression. Returns the constraint id.
int add_he_block_inequality(SdpProblem& p,
                            const std::vector<std::vector<std::optional<AffineMatrixExpr>>>& grid,
                            std::optional<double> margin,
                            const std::string& name);

enum class SdpStatus { Optimal, Infeasible, NumericalFailure, Inaccurate };

std::string to_string(SdpStatus s);

struct ConstraintSlack {
    std::string name;
    double slack_with_margin = 0.0; // min eig of the PSD-form block minus margin
    double raw_min_eig = 0.0;       // min eig of the PSD-form block (margin excluded)
    double margin = 0.0;
};

struct EqualitySlack {
    std::string name;
    double max_abs_residual = 0.0;
};

struct ResidualReport {
    std::vector<ConstraintSlack> inequality_slacks;
    std::vector<EqualitySlack> equality_residuals;
    double min_slack = 0.0;          // over inequality_slacks (with margin)
    double max_equality_residual = 0.0;

    bool feasible(double tol) const {
        return min_slack >= -tol && max_equality_residual <= tol;
    }
};

struct SolveOptions {
    double tolerance = 1e-8;
    int max_iterations = 150;
    // Residual level below which a stalled run is reported inaccurate rather
    // than a numerical failure.
    double inaccurate_tolerance = 1e-4;
    std::string backend = "dense-ipm";
};

struct SdpSolution {
    SdpStatus status = SdpStatus::NumericalFailure;
    VarAssignment assignment;
    double objective_value = 0.0;   // raw objective at the assignment
    double objective_scale = 1.0;   // norm used to normalize the objective internally
    ResidualReport residuals;       // recomputed on the returned assignment
    int iterations = 0;
    std::string message;
    // Solver-side relative accuracy measures at the returned iterate.
    double rel_primal = 0.0, rel_dual = 0.0, rel_gap = 0.0;
};

SdpSolution solve(const SdpProblem& p, const SolveOptions& opts = {});

// Exact recomputation of every constraint's eigenvalue slack and equality
// residual at a given assignment; independent of any solver state.
ResidualReport evaluate_constraints(const SdpProblem& p, const VarAssignment& a);

// Self-describing text dump of the scalarized problem (objective vector,
// equality rows, per-block constant and per-coordinate coefficient matrices).
void dump_problem(const SdpProblem& p, std::ostream& out);
void dump_problem(const SdpProblem& p, const std::string& path);

} // namespace ddsat
