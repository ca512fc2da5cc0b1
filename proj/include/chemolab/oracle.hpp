// Independent 1D reference solvers: adaptive Runge-Kutta integration plus
// shooting (bisection for the scalar signal problem, damped Newton for the
// coupled steady system). These validate the grid solvers and are kept free
// of any finite-difference machinery.
#pragma once

#include <array>
#include <functional>

#include "chemolab/params.hpp"

namespace chemolab {

namespace detail {

/// One adaptive Dormand-Prince 5(4) sweep from x0 to x1 (x1 > x0).
template <int N>
void rk45_integrate(const std::function<void(double, const std::array<double, N>&,
                                             std::array<double, N>&)>& f,
                    double x0, double x1, std::array<double, N>& y, double tol) {
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 5179.0 / 57600, e3 = 7571.0 / 16695, e4 = 393.0 / 640,
                            e5 = -92097.0 / 339200, e6 = 187.0 / 2100, e7 = 1.0 / 40;

    double x = x0;
    double h = std::min(x1 - x0, 1e-2 * (x1 - x0) + 1e-6);
    std::array<double, N> k1, k2, k3, k4, k5, k6, k7, yt, y5;
    int guard = 0;
    while (x < x1) {
        if (++guard > 2000000)
            throw NumericalError("rk45: step count exceeded between " + str(x0) + " and " + str(x1));
        h = std::min(h, x1 - x);
        f(x, y, k1);
        for (int i = 0; i < N; ++i) yt[i] = y[i] + h * a21 * k1[i];
        f(x + h / 5, yt, k2);
        for (int i = 0; i < N; ++i) yt[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        f(x + 3 * h / 10, yt, k3);
        for (int i = 0; i < N; ++i) yt[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        f(x + 4 * h / 5, yt, k4);
        for (int i = 0; i < N; ++i)
            yt[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        f(x + 8 * h / 9, yt, k5);
        for (int i = 0; i < N; ++i)
            yt[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        f(x + h, yt, k6);
        for (int i = 0; i < N; ++i)
            y5[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        f(x + h, y5, k7);
        double err = 0.0;
        for (int i = 0; i < N; ++i) {
            const double y4 = y[i] + h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                          e6 * k6[i] + e7 * k7[i]);
            err = std::max(err, std::abs(y5[i] - y4) / (tol + tol * std::abs(y5[i])));
        }
        if (err <= 1.0) {
            x += h;
            y = y5;
        }
        const double scale = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
        h *= std::min(4.0, std::max(0.2, scale));
        if (h < 1e-14 * (x1 - x0))
            throw NumericalError("rk45: step size underflow at x = " + str(x));
    }
}

}  // namespace detail

/// Signal profile on an interval for a given density profile, by shooting on
/// the left value and bisecting the right flux-condition residual.
inline ScalarField shoot_signal_1d(const std::function<double(double)>& W_of_x,
                                   const ModelParams& params, const Grid& grid, double tol) {
    ensure(grid.dim == 1, "shoot_signal_1d: interval domain required");
    const double a = grid.lo[0], b = grid.hi[0];
    const double ga = params.g.eval(0.0), gb = params.g.eval(1.0);
    const double gamma = params.gamma;
    const double ode_tol = tol / 10.0;

    using Y = std::array<double, 2>;
    auto rhs = [&](double x, const Y& y, Y& dy) {
        dy[0] = y[1];
        dy[1] = y[0] * W_of_x(x) * std::exp(y[0]);
    };
    auto shoot = [&](double s, std::vector<double>* nodes_out) {
        Y y{s, (s - gamma) * ga};
        if (nodes_out) {
            nodes_out->assign(grid.n, 0.0);
            (*nodes_out)[0] = y[0];
            for (int i = 1; i < grid.n; ++i) {
                detail::rk45_integrate<2>(rhs, grid.x(i - 1), grid.x(i), y, ode_tol);
                (*nodes_out)[i] = y[0];
            }
        } else {
            detail::rk45_integrate<2>(rhs, a, b, y, ode_tol);
        }
        return y[1] - (gamma - y[0]) * gb;
    };

    double lo = 0.0, hi = gamma;
    double rlo = shoot(lo, nullptr), rhi = shoot(hi, nullptr);
    int widen = 0;
    while (rlo * rhi > 0.0) {
        if (++widen > 4)
            throw NumericalError("shoot_signal_1d: could not bracket the shooting residual in [" +
                                 str(lo) + ", " + str(hi) + "]");
        const double span = hi - lo;
        lo -= 0.5 * span;
        hi += 0.5 * span;
        rlo = shoot(lo, nullptr);
        rhi = shoot(hi, nullptr);
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, gamma); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double rm = shoot(mid, nullptr);
        if (rm * rlo <= 0.0) {
            hi = mid;
        } else {
            lo = mid;
            rlo = rm;
        }
    }
    ScalarField V(grid);
    shoot(0.5 * (lo + hi), &V.values);
    V.check_finite("shoot_signal_1d");
    return V;
}

struct OracleSteady {
    ScalarField U, V, W;
    double residual = 0.0;
};

/// Coupled steady profiles on an interval via two-parameter shooting on the
/// left values (W(a), V(a)), damped Newton on the two right-end residuals
/// with finite-difference Jacobian.
inline OracleSteady shoot_coupled_steady_1d(const ModelParams& params, const Grid& grid,
                                            double tol) {
    ensure(grid.dim == 1, "shoot_coupled_steady_1d: interval domain required");
    const double a = grid.lo[0], b = grid.hi[0];
    const double ga = params.g.eval(0.0), gb = params.g.eval(1.0);
    const double gamma = params.gamma, lambda = params.lambda, mu = params.mu;
    const double ode_tol = tol / 10.0;

    using Y = std::array<double, 4>;  // (W, W', V, V')
    auto rhs = [&](double, const Y& y, Y& dy) {
        const double ev = std::exp(y[2]);
        dy[0] = y[1];
        dy[1] = -y[3] * y[1] - lambda * y[0] + mu * y[0] * y[0] * ev;
        dy[2] = y[3];
        dy[3] = y[2] * y[0] * ev;
    };
    auto integrate = [&](double p, double q, std::vector<std::array<double, 4>>* nodes_out) {
        Y y{p, 0.0, q, (q - gamma) * ga};
        if (nodes_out) {
            nodes_out->assign(grid.n, Y{});
            (*nodes_out)[0] = y;
            for (int i = 1; i < grid.n; ++i) {
                detail::rk45_integrate<4>(rhs, grid.x(i - 1), grid.x(i), y, ode_tol);
                (*nodes_out)[i] = y;
            }
        } else {
            detail::rk45_integrate<4>(rhs, a, b, y, ode_tol);
        }
        return std::array<double, 2>{y[1], y[3] - (gamma - y[2]) * gb};
    };

    double p = (lambda / mu) * std::exp(-0.5 * gamma), q = 0.5 * gamma;
    auto rnorm = [](const std::array<double, 2>& r) {
        return std::max(std::abs(r[0]), std::abs(r[1]));
    };
    std::array<double, 2> r = integrate(p, q, nullptr);
    std::vector<double> residual_samples{rnorm(r)};
    for (int it = 0; it < 80 && rnorm(r) > tol; ++it) {
        const double dp = 1e-7 * std::max(1.0, std::abs(p));
        const double dq = 1e-7 * std::max(1.0, std::abs(q));
        const auto rp1 = integrate(p + dp, q, nullptr), rp0 = integrate(p - dp, q, nullptr);
        const auto rq1 = integrate(p, q + dq, nullptr), rq0 = integrate(p, q - dq, nullptr);
        const double j00 = (rp1[0] - rp0[0]) / (2 * dp), j01 = (rq1[0] - rq0[0]) / (2 * dq);
        const double j10 = (rp1[1] - rp0[1]) / (2 * dp), j11 = (rq1[1] - rq0[1]) / (2 * dq);
        const double det = j00 * j11 - j01 * j10;
        if (std::abs(det) < 1e-300)
            throw NumericalError("shoot_coupled_steady_1d: singular shooting Jacobian",
                                 residual_samples);
        const double sp = -(j11 * r[0] - j01 * r[1]) / det;
        const double sq = -(-j10 * r[0] + j00 * r[1]) / det;
        double damp = 1.0;
        while (damp >= 1.0 / 1024) {
            const auto rt = integrate(p + damp * sp, q + damp * sq, nullptr);
            if (rnorm(rt) < rnorm(r)) {
                p += damp * sp;
                q += damp * sq;
                r = rt;
                break;
            }
            damp *= 0.5;
        }
        residual_samples.push_back(rnorm(r));
        if (residual_samples.size() >= 3 &&
            residual_samples.end()[-1] >= residual_samples.end()[-2] &&
            residual_samples.end()[-2] >= residual_samples.end()[-3] && rnorm(r) > tol)
            break;
    }
    if (rnorm(r) > tol)
        throw NumericalError("shoot_coupled_steady_1d: shooting residual " + str(rnorm(r)) +
                                 " above tolerance " + str(tol),
                             residual_samples);

    std::vector<std::array<double, 4>> nodes;
    integrate(p, q, &nodes);
    OracleSteady out{ScalarField(grid), ScalarField(grid), ScalarField(grid), rnorm(r)};
    for (int i = 0; i < grid.n; ++i) {
        out.W.values[i] = nodes[i][0];
        out.V.values[i] = nodes[i][2];
        out.U.values[i] = nodes[i][0] * std::exp(nodes[i][2]);
    }
    out.U.check_finite("shoot_coupled_steady_1d");
    return out;
}

}  // namespace chemolab
