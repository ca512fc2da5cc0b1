// Closed-form threshold functions controlling uniqueness and exponential
// convergence, and the bisection used to locate their positivity ranges.
#pragma once

#include <functional>

#include "chemolab/constants.hpp"

namespace chemolab {

/// F1, F2 and F_e2* as functions of the ambient level. All are positive near
/// zero and strictly decreasing, so each positivity range is an interval.
struct ThresholdFunctions {
    double lambda = 1.0, mu = 1.0, g_sup = 1.0, trace_constant = 1.0;

    double F1(double gamma) const { return 1.0 - gamma * g_sup / 2.0; }

    double F2(double gamma) const {
        const double c1h = c1_eps(trace_constant, 0.5);
        const double ratio = lambda / mu;
        return ratio * (2.0 * std::exp(-gamma) - 1.0) -
               gamma * gamma * (std::exp(gamma) / (4.0 * lambda)) *
                   std::pow(ratio * std::exp(gamma), 2) -
               gamma * g_sup * c1h / (2.0 * mu);
    }

    double F_e2_star(double gamma, double inf_u0) const {
        const double c1h = c1_eps(trace_constant, 0.5);
        const double ratio = lambda / mu;
        return ratio * (std::exp(-gamma) - 1.0) +
               std::min(inf_u0, lambda / (mu + gamma)) -
               gamma * gamma * (std::exp(gamma) / (4.0 * lambda)) *
                   std::pow(ratio * std::exp(gamma), 2) -
               gamma * g_sup * c1h / (2.0 * mu);
    }
};

/// First zero in (0, hi] of a function that is positive near 0, by bisection.
inline double first_positive_root(const std::function<double(double)>& f, double hi,
                                  double tol = 1e-12) {
    double lo = 0.0;
    if (!(f(1e-15) > 0.0))
        throw NumericalError("first_positive_root: function not positive near zero");
    double a = 1e-15, b = hi;
    if (f(b) > 0.0) return b;  // positive on the whole interval
    (void)lo;
    while (b - a > tol) {
        const double m = 0.5 * (a + b);
        (f(m) > 0.0 ? a : b) = m;
    }
    return 0.5 * (a + b);
}

}  // namespace chemolab
