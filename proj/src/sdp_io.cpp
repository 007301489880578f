#include "ddsat/sdp.hpp"
#include "sdp_internal.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>

namespace ddsat {

namespace {

const char* kind_name(VarKind k) {
    switch (k) {
        case VarKind::Symmetric: return "symmetric";
        case VarKind::Rectangular: return "rectangular";
        case VarKind::Diagonal: return "diagonal";
        case VarKind::Scalar: return "scalar";
    }
    return "?";
}

void emit(std::ostream& out, double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    out << buf;
}

void emit_matrix(std::ostream& out, const Mat& m) {
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) {
            if (j) out << ' ';
            emit(out, m(i, j));
        }
        out << '\n';
    }
}

} // namespace

// Scalarized dump: minimize c^T t s.t. Aeq t = beq and, per block,
// F0 + sum_k t_k F_k PSD (strictness margins already folded into F0).
// Symmetric variables use scaled svec coordinates (off-diagonals * sqrt 2),
// column-major over the upper triangle; rectangular variables are vectorized
// column-major.
void dump_problem(const SdpProblem& p, std::ostream& out) {
    detail::Scalarized sc = detail::scalarize(p);
    out << "sdpdump v1\n";
    out << "coords " << sc.p << "\n";
    out << "vars " << p.variables.size() << "\n";
    for (const SdpVariable& v : p.variables)
        out << "var " << v.id << ' ' << kind_name(v.kind) << ' ' << v.rows << ' ' << v.cols
            << ' ' << sc.var_offset[static_cast<std::size_t>(v.id)] << ' '
            << (v.name.empty() ? "_" : v.name) << "\n";
    out << "objective\n";
    for (int i = 0; i < sc.p; ++i) {
        if (i) out << ' ';
        emit(out, sc.c(i));
    }
    out << "\n";
    out << "equalities " << sc.Aeq.rows() << "\n";
    for (int r = 0; r < sc.Aeq.rows(); ++r) {
        for (int j = 0; j < sc.p; ++j) {
            emit(out, sc.Aeq(r, j));
            out << ' ';
        }
        emit(out, sc.beq(r));
        out << "\n";
    }
    out << "blocks " << sc.blocks.size() << "\n";
    for (std::size_t i = 0; i < sc.blocks.size(); ++i) {
        const auto& b = sc.blocks[i];
        out << "block " << i << ' ' << b.size << ' '
            << (b.name.empty() ? "_" : b.name) << "\n";
        out << "F0\n";
        emit_matrix(out, b.F0);
        for (int k = 0; k < sc.p; ++k) {
            if (b.F[static_cast<std::size_t>(k)].norm() == 0.0) continue;
            out << "F " << k << "\n";
            emit_matrix(out, b.F[static_cast<std::size_t>(k)]);
        }
        out << "endblock\n";
    }
    out << "end\n";
}

void dump_problem(const SdpProblem& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("dump_problem: cannot open " + path);
    dump_problem(p, out);
}

} // namespace ddsat
