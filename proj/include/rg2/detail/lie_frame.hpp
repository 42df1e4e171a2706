#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "../geometry.hpp"

namespace rg2::detail {

// Tensor calculus for left-invariant tensors in the orthonormal frame
// E_i = e_i / sqrt(a_i). Components are constant, so covariant derivatives
// are pure connection terms.
class LieFrame {
public:
    explicit LieFrame(const Homogeneous3& h) {
        const auto& a = h.a;
        mu_ = {h.lambda[0] * std::sqrt(a[0] / (a[1] * a[2])), h.lambda[1] * std::sqrt(a[1] / (a[0] * a[2])),
               h.lambda[2] * std::sqrt(a[2] / (a[0] * a[1]))};
        double c[3][3][3] = {};
        c[1][2][0] = mu_[0];
        c[2][1][0] = -mu_[0];
        c[2][0][1] = mu_[1];
        c[0][2][1] = -mu_[1];
        c[0][1][2] = mu_[2];
        c[1][0][2] = -mu_[2];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                for (int k = 0; k < 3; ++k) {
                    c_[i][j][k] = c[i][j][k];
                    gam_[i][j][k] = 0.5 * (c[i][j][k] - c[j][k][i] + c[k][i][j]);
                }
        riemann_.assign(81, 0.0);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                for (int k = 0; k < 3; ++k)
                    for (int l = 0; l < 3; ++l) {
                        double s = 0.0;
                        for (int m = 0; m < 3; ++m)
                            s += gam_[j][k][m] * gam_[i][m][l] - gam_[i][k][m] * gam_[j][m][l] -
                                 c_[i][j][m] * gam_[m][k][l];
                        riemann_[idx(i, j, k, l)] = s;
                    }
    }

    const std::array<double, 3>& mu() const { return mu_; }
    // <nabla_{E_i} E_j, E_k>
    double gamma(int i, int j, int k) const { return gam_[i][j][k]; }
    // <R(E_i,E_j)E_k, E_l>, so R_ijji is the sectional curvature of E_i ^ E_j.
    const std::vector<double>& riemann() const { return riemann_; }

    static std::size_t idx(int i, int j, int k, int l) { return ((i * 3 + j) * 3 + k) * 3 + l; }

    std::vector<double> ricci() const {
        std::vector<double> r(9, 0.0);
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
                for (int i = 0; i < 3; ++i) r[j * 3 + k] += riemann_[idx(i, j, k, i)];
        return r;
    }

    // (nabla T)_{a, b1..br}; the new slot comes first.
    std::vector<double> nabla(const std::vector<double>& t, int rank) const {
        std::size_t block = 1;
        for (int r = 0; r < rank; ++r) block *= 3;
        std::vector<double> out(3 * block, 0.0);
        std::vector<int> id(static_cast<std::size_t>(rank));
        for (int a = 0; a < 3; ++a)
            for (std::size_t flat = 0; flat < block; ++flat) {
                std::size_t f = flat;
                for (int r = rank - 1; r >= 0; --r) {
                    id[static_cast<std::size_t>(r)] = static_cast<int>(f % 3);
                    f /= 3;
                }
                double s = 0.0;
                std::size_t stride = block;
                for (int p = 0; p < rank; ++p) {
                    stride /= 3;
                    const int b = id[static_cast<std::size_t>(p)];
                    const std::size_t base = flat - static_cast<std::size_t>(b) * stride;
                    for (int m = 0; m < 3; ++m) s -= gam_[a][b][m] * t[base + static_cast<std::size_t>(m) * stride];
                }
                out[static_cast<std::size_t>(a) * block + flat] = s;
            }
        return out;
    }

    // Rough Laplacian sum_a nabla^2_{E_a,E_a} of a constant-component tensor.
    std::vector<double> rough_laplacian(const std::vector<double>& t, int rank) const {
        const auto dd = nabla(nabla(t, rank), rank + 1);
        const std::size_t block = t.size();
        std::vector<double> out(block, 0.0);
        for (int a = 0; a < 3; ++a)
            for (std::size_t f = 0; f < block; ++f)
                out[f] += dd[(static_cast<std::size_t>(a) * 3 + static_cast<std::size_t>(a)) * block + f];
        return out;
    }

private:
    std::array<double, 3> mu_{};
    double c_[3][3][3] = {};
    double gam_[3][3][3] = {};
    std::vector<double> riemann_;
};

} // namespace rg2::detail
