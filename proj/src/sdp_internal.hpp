#pragma once

#include <vector>

#include "ddsat/sdp.hpp"

namespace ddsat::detail {

// Scalarized form of an SdpProblem over the stacked coordinate vector t:
//   minimize  c^T t
//   s.t.      Aeq t = beq
//             F0_i + sum_k t_k F_ik  is PSD        (margins folded into F0)
// Symmetric variables use scaled svec coordinates (off-diagonals * sqrt(2)) so
// matrix inner products equal coordinate dot products.
struct ScalarizedBlock {
    int size = 0;
    Mat F0;
    std::vector<Mat> F; // one per coordinate, zero matrices included
    std::string name;
};

struct Scalarized {
    int p = 0;
    std::vector<int> var_offset;
    Vec c;
    Mat Aeq;
    Vec beq;
    std::vector<ScalarizedBlock> blocks;
};

Scalarized scalarize(const SdpProblem& p);

// Basis matrix of coordinate k of a variable (in the variable's natural shape).
Mat coordinate_basis(const SdpVariable& v, int k);

VarAssignment unpack(const SdpProblem& p, const std::vector<int>& offsets, const Vec& t);
Vec pack(const SdpProblem& p, const std::vector<int>& offsets, int total, const VarAssignment& a);

// Canonicalize an assignment matrix to its variable kind (symmetrize, zero
// off-diagonals, shape checks).
Mat canonicalize(const SdpVariable& v, const Mat& value);

} // namespace ddsat::detail
