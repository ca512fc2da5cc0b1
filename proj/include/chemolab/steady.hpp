// Steady states by fixed-point composition of the two elliptic subproblems,
// the seeded multi-start uniqueness sweep, and the uniqueness threshold.
#pragma once

#include <atomic>
#include <thread>

#include "chemolab/elliptic.hpp"
#include "chemolab/thresholds.hpp"

namespace chemolab {

struct SteadyStatePair {
    ScalarField U, V, W;
    int iterations = 0;
    double final_update = 0.0;
    std::string residual_report;
};

inline int thread_cap() {
    if (const char* env = std::getenv("CHEMOLAB_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

/// Iterate  f -> W[V[f]]  on the box  X = [e^{-gamma} lambda/mu, lambda/mu]
/// until the sup-norm update drops below fp_tol relative to the iterate.
/// Every iterate is checked to remain in X (within 1e-8); escape indicates a
/// discretization too coarse for the a priori box and is reported as such.
inline SteadyStatePair fixed_point_steady(const ModelParams& params, const Grid& grid,
                                          const ScalarField* init_W = nullptr) {
    params.validate();
    const double ratio = params.lambda / params.mu;
    const double box_lo = std::exp(-params.gamma) * ratio, box_hi = ratio;
    const double box_slack = 1e-8 * std::max(1.0, ratio);

    ScalarField W = init_W ? *init_W : ScalarField(grid, ratio);
    if (min_value(W) < box_lo - box_slack || max_value(W) > box_hi + box_slack)
        throw ConfigError("fixed_point_steady: initial iterate outside the box [" + str(box_lo) +
                          ", " + str(box_hi) + "]: range [" + str(min_value(W)) + ", " +
                          str(max_value(W)) + "]");

    ScalarField V(grid);
    std::vector<double> updates;
    for (int it = 1; it <= params.fp_max_iter; ++it) {
        V = solve_signal(W, params, grid, params.newton);
        ScalarField W_next = solve_density_steady(V, params, grid, params.newton);
        if (params.fp_relaxation < 1.0) {
            for (int i = 0; i < grid.n; ++i)
                W_next.values[i] = (1.0 - params.fp_relaxation) * W.values[i] +
                                   params.fp_relaxation * W_next.values[i];
        }
        if (min_value(W_next) < box_lo - box_slack || max_value(W_next) > box_hi + box_slack)
            throw VerificationError(
                "fixed_point_steady: iterate escaped the invariant box [" + str(box_lo) + ", " +
                str(box_hi) + "] at iteration " + str(it) + " (range [" + str(min_value(W_next)) +
                ", " + str(max_value(W_next)) + "]); the discretization is too coarse");
        const double update = linf_diff(W_next, W);
        updates.push_back(update);
        W = W_next;
        if (update <= params.fp_tol * lp_norm(W, std::numeric_limits<double>::infinity())) {
            SteadyStatePair pair;
            pair.W = W;
            pair.V = V;
            pair.U = ScalarField(grid);
            for (int i = 0; i < grid.n; ++i)
                pair.U.values[i] = W.values[i] * std::exp(V.values[i]);
            pair.iterations = it;
            pair.final_update = update;
            pair.residual_report = "converged in " + str(it) + " iterations, final update " +
                                   str(update);
            // type invariants: (lambda/mu) e^{V-gamma} <= U <= (lambda/mu) e^{V}
            // is the box on W; V strictly inside (0, gamma) up to 1e-10
            if (min_value(pair.V) < -1e-10 || max_value(pair.V) > params.gamma + 1e-10)
                throw VerificationError("fixed_point_steady: V outside [0, gamma]: [" +
                                        str(min_value(pair.V)) + ", " + str(max_value(pair.V)) + "]");
            return pair;
        }
    }
    std::string msg = "fixed_point_steady: no convergence after " + str(params.fp_max_iter) +
                      " iterations; last updates:";
    for (std::size_t k = updates.size() > 5 ? updates.size() - 5 : 0; k < updates.size(); ++k)
        msg += " " + str(updates[k]);
    throw NumericalError(msg, updates);
}

/// Uniqueness threshold: the largest value below which both F1 and F2 stay
/// positive, located by bisection on min(F1, F2) over (0, 2/||g||_inf).
struct GammaStarResult {
    double gamma_star = 0.0;
    std::function<double(double)> F1, F2;
};

inline GammaStarResult compute_gamma_star(double lambda, double mu, double g_sup_value,
                                          double trace_constant) {
    ensure(lambda > 0 && mu > 0 && g_sup_value > 0 && trace_constant > 0,
           "compute_gamma_star: all inputs must be positive");
    ThresholdFunctions th{lambda, mu, g_sup_value, trace_constant};
    GammaStarResult out;
    out.F1 = [th](double gamma) { return th.F1(gamma); };
    out.F2 = [th](double gamma) { return th.F2(gamma); };
    out.gamma_star = first_positive_root(
        [&th](double gamma) { return std::min(th.F1(gamma), th.F2(gamma)); }, 2.0 / g_sup_value);
    return out;
}

struct UniquenessReport {
    int n_inits = 0;
    std::uint64_t seed = 0;
    double gamma = 0.0;
    double gamma_star = 0.0;
    std::vector<int> iterations;        // per init; -1 when the solve failed
    std::vector<std::string> errors;    // per init; empty string = success
    std::vector<double> pairwise_linf;  // upper-triangular distances between limits U
    double max_pairwise = 0.0;
    std::vector<ScalarField> limits_U;
};

/// Run fixed_point_steady from seeded random initial fields inside X and
/// report pairwise distances of the limits. Per-init failures are collected,
/// not fatal. Deterministic for a fixed seed regardless of the thread cap.
inline UniquenessReport uniqueness_sweep(const ModelParams& params, const Grid& grid, int n_inits,
                                         std::uint64_t seed) {
    ensure(n_inits >= 1, "uniqueness_sweep: n_inits must be at least 1");
    const double ratio = params.lambda / params.mu;
    const double box_lo = std::exp(-params.gamma) * ratio, box_hi = ratio;

    UniquenessReport report;
    report.n_inits = n_inits;
    report.seed = seed;
    report.gamma = params.gamma;
    const GridConstants gc = grid_constants(grid);
    report.gamma_star =
        compute_gamma_star(params.lambda, params.mu, g_sup(grid, params.g), gc.trace_constant)
            .gamma_star;

    report.iterations.assign(n_inits, -1);
    report.errors.assign(n_inits, "");
    report.limits_U.assign(n_inits, ScalarField(grid));

    auto run_one = [&](int idx) {
        std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(idx)));
        std::uniform_real_distribution<double> ud(box_lo, box_hi);
        ScalarField init(grid);
        for (double& v : init.values) v = ud(rng);
        detail::jacobi_smooth(init, 2);  // convex averaging keeps the iterate in X
        try {
            SteadyStatePair pair = fixed_point_steady(params, grid, &init);
            report.limits_U[idx] = pair.U;
            report.iterations[idx] = pair.iterations;
        } catch (const std::exception& e) {
            report.errors[idx] = e.what();
        }
    };

    const int workers = std::min(thread_cap(), n_inits);
    if (workers <= 1) {
        for (int i = 0; i < n_inits; ++i) run_one(i);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (int i = next.fetch_add(1); i < n_inits; i = next.fetch_add(1)) run_one(i);
            });
        for (auto& t : pool) t.join();
    }

    for (int i = 0; i < n_inits; ++i) {
        for (int j = i + 1; j < n_inits; ++j) {
            if (report.iterations[i] < 0 || report.iterations[j] < 0) continue;
            const double d = linf_diff(report.limits_U[i], report.limits_U[j]);
            report.pairwise_linf.push_back(d);
            report.max_pairwise = std::max(report.max_pairwise, d);
        }
    }
    return report;
}

}  // namespace chemolab
