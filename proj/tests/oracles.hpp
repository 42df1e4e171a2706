#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance binary. Nothing here calls into the rg2 solvers.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <utility>

namespace oracle {

// Brute-force Lambda on the flat torus [0,L) x [0,2pi) for r-dependent (h, psi):
// minimise int (4|h'|^2 + |psi'|^2 h^2) over
//   Gamma = { int h^2 = A, int psi h^2 = 0, int psi^2 h^2 = A }
// with Fourier collocation (odd N; even N admits the Nyquist mode as a
// spurious zero-energy psi), projected gradient steps and retraction onto
// Gamma, Barzilai-Borwein step lengths and Armijo backtracking.
struct LambdaOracle {
    double value = 0.0;
    int iterations = 0;
};

inline Eigen::MatrixXd fourier_derivative(int n, double L) {
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
    const double h = L / n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) {
                const double sgn = (i - j) % 2 == 0 ? 1.0 : -1.0;
                D(i, j) = 0.5 * sgn / std::sin((i - j) * h * std::numbers::pi / L) * (2.0 * std::numbers::pi / L);
            }
    return D;
}

inline LambdaOracle flat_torus_lambda(int n, double L = 2.0 * std::numbers::pi,
                                      double A = 4.0 * std::numbers::pi * std::numbers::pi) {
    using Eigen::VectorXd;
    const Eigen::MatrixXd D = fourier_derivative(n, L);
    const double w = 2.0 * std::numbers::pi * L / n;

    auto retract = [&](VectorXd h, VectorXd p) {
        h = h.cwiseAbs();
        h *= std::sqrt(A / (w * h.squaredNorm()));
        const VectorXd h2 = h.cwiseProduct(h);
        p.array() -= p.dot(h2) / h2.sum();
        p *= std::sqrt(A / (w * p.cwiseProduct(p).dot(h2)));
        return std::pair{h, p};
    };
    auto objective = [&](const VectorXd& h, const VectorXd& p, VectorXd& grad) {
        const VectorXd dp = D * p, dh = D * h;
        const VectorXd dp2 = dp.cwiseProduct(dp);
        const VectorXd h2 = h.cwiseProduct(h);
        grad.resize(2 * n);
        grad.head(n) = w * (2.0 * dp2.cwiseProduct(h) + 8.0 * (D.transpose() * dh));
        grad.tail(n) = w * 2.0 * (D.transpose() * dp.cwiseProduct(h2));
        return w * (dp2.dot(h2) + 4.0 * dh.squaredNorm());
    };
    auto project = [&](const VectorXd& x, const VectorXd& g) {
        const VectorXd h = x.head(n), p = x.tail(n);
        Eigen::MatrixXd C(2 * n, 3);
        C.col(0) << 2.0 * w * h, VectorXd::Zero(n);
        C.col(1) << 2.0 * w * p.cwiseProduct(h), w * h.cwiseProduct(h);
        C.col(2) << 2.0 * w * p.cwiseProduct(p).cwiseProduct(h), 2.0 * w * p.cwiseProduct(h).cwiseProduct(h);
        const VectorXd coef = C.colPivHouseholderQr().solve(g);
        return VectorXd(g - C * coef);
    };

    VectorXd h0(n), p0(n);
    for (int i = 0; i < n; ++i) {
        const double r = L * i / n;
        h0[i] = 1.0 + 0.2 * std::cos(2.0 * r * 2.0 * std::numbers::pi / L);
        p0[i] = std::cos(r * 2.0 * std::numbers::pi / L);
    }
    auto [h, p] = retract(h0, p0);
    VectorXd x(2 * n);
    x << h, p;
    VectorXd g;
    double val = objective(h, p, g);
    g = project(x, g);
    double step = 1e-3;
    LambdaOracle out;
    for (int it = 0; it < 200000; ++it) {
        VectorXd xn, gn;
        double vn = 0.0;
        while (true) {
            auto [hn, pn] = retract(x.head(n) - step * g.head(n), x.tail(n) - step * g.tail(n));
            xn.resize(2 * n);
            xn << hn, pn;
            vn = objective(hn, pn, gn);
            gn = project(xn, gn);
            if (vn <= val - 1e-4 * step * g.squaredNorm() || step < 1e-14) break;
            step *= 0.5;
        }
        const VectorXd s = xn - x, y = gn - g;
        x = xn;
        g = gn;
        val = vn;
        const double sy = s.dot(y);
        step = sy > 0.0 ? std::min(std::max(s.squaredNorm() / sy, 1e-10), 10.0) : 1e-3;
        out.iterations = it + 1;
        if (s.norm() < 1e-13) break;
    }
    out.value = val;
    return out;
}

// Second eigenvalue of -Lap_w on r-dependent functions of the warped torus,
// Lap_w u = (rho phi p)^{-1} (phi p u' / rho)' with p = e^{-f}, by Fourier
// collocation (odd n) and a dense non-symmetric eigensolve.
template <class Rho, class Phi, class F>
double weighted_lambda2_fourier(int n, double L, Rho rho, Phi phi, F f) {
    const Eigen::MatrixXd D = fourier_derivative(n, L);
    Eigen::VectorXd a(n), b(n);
    for (int i = 0; i < n; ++i) {
        const double r = L * i / n, p = std::exp(-f(r));
        a[i] = 1.0 / (rho(r) * phi(r) * p);
        b[i] = phi(r) * p / rho(r);
    }
    const Eigen::MatrixXd op = -(a.asDiagonal() * D * b.asDiagonal() * D);
    Eigen::VectorXd ev = Eigen::EigenSolver<Eigen::MatrixXd>(op, false).eigenvalues().real();
    std::sort(ev.data(), ev.data() + n);
    return ev[1];
}

// sup over s in (0,1) of 4 s (1 - s) pi^2 / diam^2 + s C0, by golden-section
// search on the concave quadratic (boundary values as limits).
inline double futaki_golden(double diam, double C0) {
    const double a = std::numbers::pi * std::numbers::pi / (diam * diam);
    auto q = [&](double s) { return 4.0 * s * (1.0 - s) * a + s * C0; };
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        const double m1 = hi - phi * (hi - lo), m2 = lo + phi * (hi - lo);
        if (q(m1) < q(m2)) lo = m1;
        else hi = m2;
    }
    return q(0.5 * (lo + hi));
}

// RK4 for dsigma/dt = -(n-1) K (2 sigma + alpha K) / sigma.
inline double sigma_rk4(int n, double K, double alpha, double sigma0, double t0, double t1, int steps) {
    auto f = [&](double s) { return -(n - 1.0) * K * (2.0 * s + alpha * K) / s; };
    const double dt = (t1 - t0) / steps;
    double s = sigma0;
    for (int k = 0; k < steps; ++k) {
        const double k1 = f(s), k2 = f(s + 0.5 * dt * k1), k3 = f(s + 0.5 * dt * k2), k4 = f(s + dt * k3);
        s += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return s;
}

// Koszul formula on an orthonormal left-invariant frame E_i = e_i / sqrt(a_i):
// Gamma_ijk = g(nabla_{E_i} E_j, E_k) = (C_ijk - C_jki + C_kij) / 2 with
// C_ijk = g([E_i, E_j], E_k). Curvature from
// R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z.
struct Koszul {
    double C[3][3][3]{};
    double G[3][3][3]{};

    Koszul(std::array<double, 3> l, std::array<double, 3> a) {
        auto set = [&](int i, int j, int k, double v) {
            C[i][j][k] = v;
            C[j][i][k] = -v;
        };
        set(1, 2, 0, l[0] * std::sqrt(a[0] / (a[1] * a[2])));
        set(2, 0, 1, l[1] * std::sqrt(a[1] / (a[2] * a[0])));
        set(0, 1, 2, l[2] * std::sqrt(a[2] / (a[0] * a[1])));
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                for (int k = 0; k < 3; ++k) G[i][j][k] = 0.5 * (C[i][j][k] - C[j][k][i] + C[k][i][j]);
    }

    // g(R(E_i,E_j)E_k, E_m)
    double R(int i, int j, int k, int m) const {
        double s = 0.0;
        for (int p = 0; p < 3; ++p) {
            s += G[j][k][p] * G[i][p][m] - G[i][k][p] * G[j][p][m];
            s -= C[i][j][p] * G[p][k][m];
        }
        return s;
    }
    double sectional(int i, int j) const { return R(i, j, j, i); }
    double ricci(int i) const {
        double s = 0.0;
        for (int j = 0; j < 3; ++j)
            if (j != i) s += sectional(i, j);
        return s;
    }
};


// RK4 for the metric coefficients a_i of a left-invariant metric under
// da_i/dt = a_i (-2 Ric - (alpha/2) Rm2)(E_i, E_i), curvature from Koszul.
inline std::array<double, 3> homogeneous_rk4(std::array<double, 3> l, std::array<double, 3> a, double alpha, double T,
                                             int steps) {
    auto f = [&](const std::array<double, 3>& x) {
        const Koszul o(l, x);
        std::array<double, 3> d{};
        for (int j = 0; j < 3; ++j) {
            double rm2 = 0.0;
            for (int p = 0; p < 3; ++p)
                for (int q = 0; q < 3; ++q)
                    for (int r = 0; r < 3; ++r) rm2 += o.R(j, p, q, r) * o.R(j, p, q, r);
            d[j] = x[j] * (-2.0 * o.ricci(j) - 0.5 * alpha * rm2);
        }
        return d;
    };
    auto axpy = [](std::array<double, 3> x, double s, const std::array<double, 3>& y) {
        for (int i = 0; i < 3; ++i) x[i] += s * y[i];
        return x;
    };
    const double dt = T / steps;
    for (int k = 0; k < steps; ++k) {
        const auto k1 = f(a), k2 = f(axpy(a, 0.5 * dt, k1)), k3 = f(axpy(a, 0.5 * dt, k2)), k4 = f(axpy(a, dt, k3));
        for (int i = 0; i < 3; ++i) a[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return a;
}

} // namespace oracle
