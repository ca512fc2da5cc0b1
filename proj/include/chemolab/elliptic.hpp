// Nonlinear elliptic solvers for the two stationary subproblems: the ambient
// signal for a given transformed density, and the transformed density for a
// given signal.
#pragma once

#include "chemolab/params.hpp"

namespace chemolab {

/// Solve  Laplacian V = V W e^V  with flux condition  dV/dnu = (gamma - V) g
/// for a given nonnegative W. The solution satisfies 0 <= V <= gamma.
inline ScalarField solve_signal(const ScalarField& W, const ModelParams& params, const Grid& grid,
                                const NewtonConfig& cfg, std::vector<double>* history = nullptr) {
    for (int i = 0; i < grid.n; ++i)
        if (W.values[i] < 0.0)
            throw DomainError("solve_signal: W must be nonnegative, node " + str(i) + " has " +
                              str(W.values[i]));
    const ScalarField ones(grid, 1.0);
    const ScalarField zeros(grid, 0.0);
    const ScalarField g = g_boundary_field(grid, params.g);
    RobinOperator robin = assemble_robin_elliptic(grid, ones, zeros, g, BoundaryTag::robin);
    std::vector<double> gamma_g(grid.n, 0.0);
    for (int node : grid.boundary_nodes) gamma_g[node] = params.gamma * g.values[node];
    const std::vector<double> load = robin.rhs(std::vector<double>(grid.n, 0.0), gamma_g);

    auto residual = [&](const ScalarField& V) {
        ScalarField r(grid);
        robin.A.apply(V.values, r.values);
        for (int i = 0; i < grid.n; ++i)
            r.values[i] += W.values[i] * V.values[i] * std::exp(V.values[i]) - load[i];
        return r;
    };
    auto jacobian = [&](const ScalarField& V) {
        SparseOperator jac = robin.A;
        for (int i = 0; i < grid.n; ++i)
            jac.add(i, i, W.values[i] * std::exp(V.values[i]) * (1.0 + V.values[i]));
        return jac;
    };

    ScalarField init(grid, 0.5 * params.gamma);
    ScalarField V = newton_solve(residual, jacobian, init, cfg, history);
    V.check_finite("solve_signal");
    const double slack = 1e-10;
    if (min_value(V) < -slack || max_value(V) > params.gamma + slack)
        throw NumericalError("solve_signal: solution escaped [0, gamma]: range [" +
                             str(min_value(V)) + ", " + str(max_value(V)) + "], gamma " +
                             str(params.gamma));
    return V;
}

/// Solve  0 = div(e^V grad W) + lambda W e^V - mu (W e^V)^2  with no-flux
/// boundary, for a given signal V. The positive branch is returned; collapse
/// onto W == 0 raises BranchError. The solution lies between
/// min(e^-V) lambda/mu and max(e^-V) lambda/mu.
inline ScalarField solve_density_steady(const ScalarField& V, const ModelParams& params,
                                        const Grid& grid, const NewtonConfig& cfg,
                                        std::vector<double>* history = nullptr) {
    V.check_finite("solve_density_steady: input V");
    ensure(params.lambda > 0.0 && params.mu > 0.0, "solve_density_steady: lambda, mu must be positive");
    ScalarField diffusivity(grid);
    ScalarField e_v(grid);
    for (int i = 0; i < grid.n; ++i) diffusivity.values[i] = e_v.values[i] = std::exp(V.values[i]);
    const ScalarField zeros(grid, 0.0);
    RobinOperator neumann =
        assemble_robin_elliptic(grid, diffusivity, zeros, zeros, BoundaryTag::neumann);

    auto residual = [&](const ScalarField& W) {
        ScalarField r(grid);
        neumann.A.apply(W.values, r.values);
        for (int i = 0; i < grid.n; ++i) {
            const double we = W.values[i] * e_v.values[i];
            r.values[i] += -params.lambda * we + params.mu * we * we;
        }
        return r;
    };
    auto jacobian = [&](const ScalarField& W) {
        SparseOperator jac = neumann.A;
        for (int i = 0; i < grid.n; ++i)
            jac.add(i, i, -params.lambda * e_v.values[i] +
                              2.0 * params.mu * e_v.values[i] * e_v.values[i] * W.values[i]);
        return jac;
    };

    const double mean_v = integrate(V) / grid.measure();
    ScalarField init(grid, (params.lambda / params.mu) * std::exp(-mean_v));
    ScalarField W = newton_solve(residual, jacobian, init, cfg, history);
    W.check_finite("solve_density_steady");

    const double ratio = params.lambda / params.mu;
    if (max_value(W) < 1e-8 * ratio)
        throw BranchError("solve_density_steady: converged to the trivial branch (max W = " +
                          str(max_value(W)) + "); restart with a positive initial guess");
    const double lo_bound = std::exp(-max_value(V)) * ratio;
    const double hi_bound = std::exp(-min_value(V)) * ratio;
    const double slack = 1e-8;
    if (min_value(W) < lo_bound - slack || max_value(W) > hi_bound + slack)
        throw NumericalError("solve_density_steady: solution escaped its a priori box [" +
                             str(lo_bound) + ", " + str(hi_bound) + "]: range [" +
                             str(min_value(W)) + ", " + str(max_value(W)) + "]");
    if (!(min_value(W) > 0.0))
        throw NumericalError("solve_density_steady: solution not strictly positive");
    return W;
}

}  // namespace chemolab
