#include "ddsat/sdp.hpp"
#include "sdp_internal.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace ddsat {

int SdpVariable::scalar_count() const {
    switch (kind) {
        case VarKind::Symmetric: return rows * (rows + 1) / 2;
        case VarKind::Rectangular: return rows * cols;
        case VarKind::Diagonal: return rows;
        case VarKind::Scalar: return 1;
    }
    return 0;
}

AffineMatrixExpr AffineMatrixExpr::zero(int r, int c) {
    AffineMatrixExpr e;
    e.rows = r;
    e.cols = c;
    e.constant = Mat::Zero(r, c);
    return e;
}

void AffineMatrixExpr::add_constant(const Mat& c, int row0, int col0) {
    if (row0 < 0 || col0 < 0 || row0 + c.rows() > rows || col0 + c.cols() > cols)
        throw std::invalid_argument("AffineMatrixExpr: constant block out of range");
    constant.block(row0, col0, c.rows(), c.cols()) += c;
}

void AffineMatrixExpr::add_term(const Mat& L, const SdpVariable& v, const Mat& R,
                                bool transpose_var, int row0, int col0) {
    const int vr = transpose_var ? v.cols : v.rows;
    const int vc = transpose_var ? v.rows : v.cols;
    if (L.cols() != vr || R.rows() != vc)
        throw std::invalid_argument("AffineMatrixExpr: term coefficients do not conform to variable");
    if (row0 < 0 || col0 < 0 || row0 + L.rows() > rows || col0 + R.cols() > cols)
        throw std::invalid_argument("AffineMatrixExpr: term block out of range");
    terms.push_back(MatrixTerm{L, v.id, R, transpose_var, row0, col0});
}

void AffineMatrixExpr::add_scaled_var(double coef, const SdpVariable& v, int row0, int col0) {
    add_term(coef * Mat::Identity(v.rows, v.rows), v, Mat::Identity(v.cols, v.cols),
             false, row0, col0);
}

AffineMatrixExpr AffineMatrixExpr::transposed() const {
    AffineMatrixExpr e;
    e.rows = cols;
    e.cols = rows;
    e.constant = constant.transpose();
    for (const MatrixTerm& t : terms)
        e.terms.push_back(MatrixTerm{t.R.transpose(), t.var, t.L.transpose(),
                                     !t.transpose_var, t.col0, t.row0});
    return e;
}

Mat AffineMatrixExpr::evaluate(const VarAssignment& a) const {
    Mat out = constant;
    for (const MatrixTerm& t : terms) {
        auto it = a.find(t.var);
        if (it == a.end())
            throw std::invalid_argument("AffineMatrixExpr: assignment missing a variable");
        const Mat& X = it->second;
        Mat piece = t.transpose_var ? Mat(t.L * X.transpose() * t.R) : Mat(t.L * X * t.R);
        out.block(t.row0, t.col0, piece.rows(), piece.cols()) += piece;
    }
    return out;
}

SdpVariable SdpProblem::add_variable(VarKind kind, int rows, int cols, const std::string& name) {
    if (kind == VarKind::Scalar) rows = cols = 1;
    if (kind == VarKind::Diagonal || kind == VarKind::Symmetric) cols = rows;
    if (rows <= 0 || cols <= 0)
        throw std::invalid_argument("SdpProblem: variable dimensions must be positive");
    SdpVariable v;
    v.id = static_cast<int>(variables.size());
    v.kind = kind;
    v.rows = rows;
    v.cols = cols;
    v.name = name;
    variables.push_back(v);
    return variables.back();
}

namespace {

void check_expr(const SdpProblem& p, const AffineMatrixExpr& e, bool square) {
    if (square && e.rows != e.cols)
        throw std::invalid_argument("SdpProblem: inequality expression must be square");
    if (e.constant.rows() != e.rows || e.constant.cols() != e.cols)
        throw std::invalid_argument("SdpProblem: expression constant has wrong shape");
    for (const MatrixTerm& t : e.terms)
        if (t.var < 0 || t.var >= static_cast<int>(p.variables.size()))
            throw std::invalid_argument("SdpProblem: expression references an undeclared variable");
}

} // namespace

int SdpProblem::add_psd(AffineMatrixExpr expr, double margin, const std::string& name) {
    check_expr(*this, expr, true);
    if (margin < 0.0) throw std::invalid_argument("SdpProblem: margin must be nonnegative");
    inequalities.push_back(SdpConstraint{ConstraintSense::Psd, std::move(expr), margin, name});
    return static_cast<int>(inequalities.size()) - 1;
}

int SdpProblem::add_nsd(AffineMatrixExpr expr, double margin, const std::string& name) {
    check_expr(*this, expr, true);
    if (margin < 0.0) throw std::invalid_argument("SdpProblem: margin must be nonnegative");
    inequalities.push_back(SdpConstraint{ConstraintSense::Nsd, std::move(expr), margin, name});
    return static_cast<int>(inequalities.size()) - 1;
}

void SdpProblem::add_equality(AffineMatrixExpr expr, const std::string& name) {
    check_expr(*this, expr, false);
    equalities.push_back(SdpEquality{std::move(expr), name});
}

void SdpProblem::set_objective_term(const SdpVariable& v, const Mat& gradient) {
    if (gradient.rows() != v.rows || gradient.cols() != v.cols)
        throw std::invalid_argument("SdpProblem: objective gradient shape mismatch");
    objective[v.id] = gradient;
}

int add_he_block_inequality(SdpProblem& p,
                            const std::vector<std::vector<std::optional<AffineMatrixExpr>>>& grid,
                            std::optional<double> margin,
                            const std::string& name) {
    const std::size_t nb = grid.size();
    if (nb == 0) throw std::invalid_argument("add_he_block_inequality: empty grid");

    // Row/col sizes of the block partition, from the diagonal blocks.
    std::vector<int> bsize(nb, -1);
    for (std::size_t i = 0; i < nb; ++i) {
        if (grid[i].size() != nb)
            throw std::invalid_argument("add_he_block_inequality: grid must be square");
        for (std::size_t j = i + 1; j < nb; ++j)
            if (grid[i][j].has_value())
                throw std::invalid_argument(
                    "add_he_block_inequality: entries above the diagonal must be absent");
        if (!grid[i][i].has_value())
            throw std::invalid_argument("add_he_block_inequality: diagonal blocks are required");
        if (grid[i][i]->rows != grid[i][i]->cols)
            throw std::invalid_argument("add_he_block_inequality: diagonal blocks must be square");
        bsize[i] = grid[i][i]->rows;
    }
    std::vector<int> off(nb + 1, 0);
    for (std::size_t i = 0; i < nb; ++i) off[i + 1] = off[i] + bsize[i];
    const int n = off[nb];

    AffineMatrixExpr lower = AffineMatrixExpr::zero(n, n);
    for (std::size_t i = 0; i < nb; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            if (!grid[i][j].has_value()) continue;
            const AffineMatrixExpr& b = *grid[i][j];
            if (b.rows != bsize[i] || b.cols != bsize[j])
                throw std::invalid_argument("add_he_block_inequality: block shape mismatch");
            lower.add_constant(b.constant, off[i], off[j]);
            for (const MatrixTerm& t : b.terms) {
                MatrixTerm shifted = t;
                shifted.row0 += off[i];
                shifted.col0 += off[j];
                lower.terms.push_back(std::move(shifted));
            }
        }
    }

    // He(lower) = lower + lower^T, still affine.
    AffineMatrixExpr he = lower;
    AffineMatrixExpr lt = lower.transposed();
    he.constant += lt.constant;
    he.terms.insert(he.terms.end(), lt.terms.begin(), lt.terms.end());

    const double m = margin.has_value() ? *margin : 1e-7 * std::max(1.0, he.constant.norm());
    return p.add_nsd(std::move(he), m, name);
}

std::string to_string(SdpStatus s) {
    switch (s) {
        case SdpStatus::Optimal: return "optimal";
        case SdpStatus::Infeasible: return "infeasible";
        case SdpStatus::NumericalFailure: return "numerical-failure";
        case SdpStatus::Inaccurate: return "inaccurate";
    }
    return "unknown";
}

ResidualReport evaluate_constraints(const SdpProblem& p, const VarAssignment& a) {
    VarAssignment canon;
    for (const SdpVariable& v : p.variables) {
        auto it = a.find(v.id);
        if (it == a.end())
            throw std::invalid_argument("evaluate_constraints: assignment missing variable " + v.name);
        canon[v.id] = detail::canonicalize(v, it->second);
    }

    ResidualReport rep;
    rep.min_slack = std::numeric_limits<double>::infinity();
    rep.max_equality_residual = 0.0;
    for (const SdpConstraint& c : p.inequalities) {
        Mat e = c.expr.evaluate(canon);
        Mat sym = 0.5 * (e + e.transpose());
        if (c.sense == ConstraintSense::Nsd) sym = -sym;
        Eigen::SelfAdjointEigenSolver<Mat> eig(sym, Eigen::EigenvaluesOnly);
        const double raw = eig.eigenvalues().minCoeff();
        ConstraintSlack slack;
        slack.name = c.name;
        slack.margin = c.margin;
        slack.raw_min_eig = raw;
        slack.slack_with_margin = raw - c.margin;
        rep.min_slack = std::min(rep.min_slack, slack.slack_with_margin);
        rep.inequality_slacks.push_back(std::move(slack));
    }
    if (p.inequalities.empty()) rep.min_slack = 0.0;
    for (const SdpEquality& q : p.equalities) {
        Mat e = q.expr.evaluate(canon);
        EqualitySlack s;
        s.name = q.name;
        s.max_abs_residual = e.size() == 0 ? 0.0 : e.cwiseAbs().maxCoeff();
        rep.max_equality_residual = std::max(rep.max_equality_residual, s.max_abs_residual);
        rep.equality_residuals.push_back(std::move(s));
    }
    return rep;
}

namespace detail {

Mat coordinate_basis(const SdpVariable& v, int k) {
    Mat E = Mat::Zero(v.rows, v.cols);
    switch (v.kind) {
        case VarKind::Symmetric: {
            // Column-major upper triangle: (0,0), (0,1), (1,1), (0,2), ...
            int idx = 0;
            for (int j = 0; j < v.cols; ++j) {
                for (int i = 0; i <= j; ++i) {
                    if (idx == k) {
                        if (i == j) {
                            E(i, j) = 1.0;
                        } else {
                            E(i, j) = E(j, i) = 1.0 / std::sqrt(2.0);
                        }
                        return E;
                    }
                    ++idx;
                }
            }
            break;
        }
        case VarKind::Rectangular: {
            const int j = k / v.rows;
            const int i = k % v.rows;
            E(i, j) = 1.0;
            return E;
        }
        case VarKind::Diagonal:
            E(k, k) = 1.0;
            return E;
        case VarKind::Scalar:
            E(0, 0) = 1.0;
            return E;
    }
    throw std::out_of_range("coordinate_basis: coordinate out of range");
}

Mat canonicalize(const SdpVariable& v, const Mat& value) {
    if (v.kind == VarKind::Scalar && value.size() == 1) {
        Mat m(1, 1);
        m(0, 0) = value(0, 0);
        return m;
    }
    if (value.rows() != v.rows || value.cols() != v.cols)
        throw std::invalid_argument("assignment matrix shape mismatch for variable " + v.name);
    switch (v.kind) {
        case VarKind::Symmetric: return 0.5 * (value + value.transpose());
        case VarKind::Diagonal: return value.diagonal().asDiagonal();
        default: return value;
    }
}

namespace {

// Coordinates of a variable's value matrix (inverse of coordinate_basis layout).
void write_coords(const SdpVariable& v, const Mat& value, Vec& t, int offset) {
    switch (v.kind) {
        case VarKind::Symmetric: {
            int idx = 0;
            for (int j = 0; j < v.cols; ++j)
                for (int i = 0; i <= j; ++i) {
                    t(offset + idx) = i == j ? value(i, j) : value(i, j) * std::sqrt(2.0);
                    ++idx;
                }
            break;
        }
        case VarKind::Rectangular:
            for (int j = 0; j < v.cols; ++j)
                for (int i = 0; i < v.rows; ++i)
                    t(offset + j * v.rows + i) = value(i, j);
            break;
        case VarKind::Diagonal:
            for (int i = 0; i < v.rows; ++i) t(offset + i) = value(i, i);
            break;
        case VarKind::Scalar:
            t(offset) = value(0, 0);
            break;
    }
}

Mat read_coords(const SdpVariable& v, const Vec& t, int offset) {
    Mat value = Mat::Zero(v.rows, v.cols);
    switch (v.kind) {
        case VarKind::Symmetric: {
            int idx = 0;
            for (int j = 0; j < v.cols; ++j)
                for (int i = 0; i <= j; ++i) {
                    if (i == j) {
                        value(i, j) = t(offset + idx);
                    } else {
                        value(i, j) = value(j, i) = t(offset + idx) / std::sqrt(2.0);
                    }
                    ++idx;
                }
            break;
        }
        case VarKind::Rectangular:
            for (int j = 0; j < v.cols; ++j)
                for (int i = 0; i < v.rows; ++i)
                    value(i, j) = t(offset + j * v.rows + i);
            break;
        case VarKind::Diagonal:
            for (int i = 0; i < v.rows; ++i) value(i, i) = t(offset + i);
            break;
        case VarKind::Scalar:
            value(0, 0) = t(offset);
            break;
    }
    return value;
}

} // namespace

VarAssignment unpack(const SdpProblem& p, const std::vector<int>& offsets, const Vec& t) {
    VarAssignment a;
    for (const SdpVariable& v : p.variables)
        a[v.id] = read_coords(v, t, offsets[static_cast<std::size_t>(v.id)]);
    return a;
}

Vec pack(const SdpProblem& p, const std::vector<int>& offsets, int total, const VarAssignment& a) {
    Vec t = Vec::Zero(total);
    for (const SdpVariable& v : p.variables) {
        auto it = a.find(v.id);
        if (it == a.end())
            throw std::invalid_argument("pack: assignment missing variable " + v.name);
        write_coords(v, canonicalize(v, it->second), t, offsets[static_cast<std::size_t>(v.id)]);
    }
    return t;
}

Scalarized scalarize(const SdpProblem& p) {
    Scalarized s;
    s.var_offset.resize(p.variables.size());
    int total = 0;
    for (const SdpVariable& v : p.variables) {
        s.var_offset[static_cast<std::size_t>(v.id)] = total;
        total += v.scalar_count();
    }
    s.p = total;

    // Objective vector.
    s.c = Vec::Zero(total);
    for (const auto& [vid, grad] : p.objective) {
        const SdpVariable& v = p.var(vid);
        Vec g = Vec::Zero(total);
        write_coords(v, canonicalize(v, grad), g, s.var_offset[static_cast<std::size_t>(vid)]);
        s.c += g;
    }

    // Per-coordinate derivative of a term: L * basis(^T) * R.
    auto term_derivative = [&](const MatrixTerm& t, const SdpVariable& v, int k) {
        Mat E = coordinate_basis(v, k);
        if (t.transpose_var) E.transposeInPlace();
        return Mat(t.L * E * t.R);
    };

    // Inequality blocks, PSD-converted: expr - margin*I (Psd) or -expr - margin*I (Nsd).
    for (const SdpConstraint& c : p.inequalities) {
        ScalarizedBlock b;
        b.size = c.expr.rows;
        b.name = c.name;
        const double sign = c.sense == ConstraintSense::Psd ? 1.0 : -1.0;
        Mat F0 = sign * c.expr.constant - c.margin * Mat::Identity(b.size, b.size);
        b.F0 = 0.5 * (F0 + F0.transpose());
        b.F.assign(static_cast<std::size_t>(total), Mat());
        std::vector<bool> touched(static_cast<std::size_t>(total), false);
        for (const MatrixTerm& t : c.expr.terms) {
            const SdpVariable& v = p.var(t.var);
            const int base = s.var_offset[static_cast<std::size_t>(t.var)];
            for (int k = 0; k < v.scalar_count(); ++k) {
                Mat d = sign * term_derivative(t, v, k);
                Mat placed = Mat::Zero(b.size, b.size);
                placed.block(t.row0, t.col0, d.rows(), d.cols()) = d;
                Mat symd = 0.5 * (placed + placed.transpose());
                const std::size_t idx = static_cast<std::size_t>(base + k);
                if (!touched[idx]) {
                    b.F[idx] = symd;
                    touched[idx] = true;
                } else {
                    b.F[idx] += symd;
                }
            }
        }
        for (int k = 0; k < total; ++k)
            if (!touched[static_cast<std::size_t>(k)])
                b.F[static_cast<std::size_t>(k)] = Mat::Zero(b.size, b.size);
        s.blocks.push_back(std::move(b));
    }

    // Equality rows.
    int eq_rows = 0;
    for (const SdpEquality& q : p.equalities) eq_rows += q.expr.rows * q.expr.cols;
    s.Aeq = Mat::Zero(eq_rows, total);
    s.beq = Vec::Zero(eq_rows);
    int row = 0;
    for (const SdpEquality& q : p.equalities) {
        const int er = q.expr.rows, ec = q.expr.cols;
        for (int j = 0; j < ec; ++j)
            for (int i = 0; i < er; ++i)
                s.beq(row + j * er + i) = -q.expr.constant(i, j);
        for (const MatrixTerm& t : q.expr.terms) {
            const SdpVariable& v = p.var(t.var);
            const int base = s.var_offset[static_cast<std::size_t>(t.var)];
            for (int k = 0; k < v.scalar_count(); ++k) {
                Mat d = term_derivative(t, v, k);
                for (int j = 0; j < d.cols(); ++j)
                    for (int i = 0; i < d.rows(); ++i)
                        s.Aeq(row + (t.col0 + j) * er + (t.row0 + i), base + k) += d(i, j);
            }
        }
        row += er * ec;
    }
    return s;
}

} // namespace detail

} // namespace ddsat
