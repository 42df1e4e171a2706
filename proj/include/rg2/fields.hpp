#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace rg2 {

// Node values. Frame classes (ConstantCurvature, Homogeneous3) carry a single
// value because every invariant quantity is spatially constant there.
using ScalarField = std::vector<double>;

// Class-specific vector field representation.
//   ConstantCurvature: v = {s}, amplitude of a Killing field of unit g0-length.
//   Homogeneous3:      v = {x1, x2, x3}, components along the left-invariant frame e_i.
//   WarpedTorus:       v[j] = xi^r at the half node r_{j+1/2}, theta[i] = xi^theta at node r_i.
struct VectorField {
    std::vector<double> v;
    std::vector<double> theta;
};

// Symmetric 2-tensors, one triple per node.
//   ConstantCurvature: c[0][0] = coefficient of g (T = c g).
//   Homogeneous3:      c[0] = {T(e1,e1), T(e2,e2), T(e3,e3)}; off-diagonal parts are not representable.
//   WarpedTorus:       c[i] = {T_rr, T_thth, T_rth} at node r_i.
struct SymmetricTensorField {
    std::vector<std::array<double, 3>> c;
};

// xi = grad psi + perp, with perp divergence-free for the weighted measure.
struct DriftField {
    ScalarField psi;
    VectorField perp;
};

} // namespace rg2
