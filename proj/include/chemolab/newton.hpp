// Damped Newton iteration for nodal nonlinear systems.
#pragma once

#include <functional>

#include "chemolab/operators.hpp"

namespace chemolab {

struct NewtonConfig {
    double tol_residual = 1e-12;
    double tol_step = 1e-14;
    int max_iter = 60;
    double damping_min = 1.0 / 4096.0;
};

using ResidualFn = std::function<ScalarField(const ScalarField&)>;
using JacobianFn = std::function<SparseOperator(const ScalarField&)>;

/// Newton with monotone line search: the step is halved until the max-norm
/// residual decreases, down to cfg.damping_min. Converges when the residual
/// drops below tol_residual or the accepted step is below tol_step.
inline ScalarField newton_solve(const ResidualFn& residual_fn, const JacobianFn& jacobian_fn,
                                const ScalarField& init, const NewtonConfig& cfg,
                                std::vector<double>* history_out = nullptr) {
    if (cfg.max_iter < 1 || !(cfg.tol_residual > 0.0) || !(cfg.tol_step > 0.0))
        throw ConfigError("newton_solve: invalid NewtonConfig");
    ScalarField x = init;
    ScalarField r = residual_fn(x);
    auto linf = [](const ScalarField& f) {
        double m = 0.0;
        for (double v : f.values) m = std::max(m, std::abs(v));
        return m;
    };
    double rn = linf(r);
    std::vector<double> history{rn};
    for (int it = 0; it < cfg.max_iter; ++it) {
        if (rn <= cfg.tol_residual) {
            if (history_out) *history_out = history;
            return x;
        }
        SparseOperator jac = jacobian_fn(x);
        ScalarField neg_r = -1.0 * r;
        const double lin_tol = std::max(1e-13, 1e-6 * std::min(1.0, norm2(r.values)));
        ScalarField step = solve_linear(jac, neg_r, lin_tol);

        double t = 1.0;
        ScalarField xt(*x.grid);
        ScalarField rt(*x.grid);
        bool accepted = false;
        while (t >= cfg.damping_min) {
            xt = x;
            axpy(t, step, xt);
            rt = residual_fn(xt);
            const double rtn = linf(rt);
            if (rtn < rn) {
                x = xt;
                r = rt;
                rn = rtn;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        history.push_back(rn);
        if (!accepted)
            throw NumericalError("newton_solve: line search stalled at damping " +
                                     str(cfg.damping_min) + " with residual " + str(rn),
                                 history);
        if (t * linf(step) <= cfg.tol_step) {
            if (history_out) *history_out = history;
            return x;
        }
    }
    if (rn <= cfg.tol_residual) {
        if (history_out) *history_out = history;
        return x;
    }
    throw NumericalError("newton_solve: no convergence after " + str(cfg.max_iter) +
                             " iterations, residual " + str(rn),
                         history);
}

}  // namespace chemolab
