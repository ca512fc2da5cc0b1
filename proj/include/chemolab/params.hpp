// Model parameters: growth/crowding/ambient-level coefficients, the boundary
// coefficient family g, and initial-density profiles.
#pragma once

#include <random>

#include "chemolab/grid.hpp"
#include "chemolab/newton.hpp"

namespace chemolab {

enum class GFamily { constant, affine, cosine_bump };

/// Positive boundary coefficient, parametrized by normalized boundary
/// arclength s in [0,1].
struct GSpec {
    GFamily family = GFamily::constant;
    std::vector<double> params{1.0};

    double eval(double s) const {
        switch (family) {
            case GFamily::constant:
                return params.at(0);
            case GFamily::affine:
                return params.at(0) + params.at(1) * s;
            case GFamily::cosine_bump:
                return params.at(0) +
                       params.at(1) * 0.5 * (1.0 + std::cos(2.0 * M_PI * (s - params.at(2))));
        }
        return 0.0;
    }
};

/// Nodal field holding g on boundary nodes (zero elsewhere).
inline ScalarField g_boundary_field(const Grid& grid, const GSpec& g) {
    ScalarField out(grid);
    for (std::size_t k = 0; k < grid.boundary_nodes.size(); ++k) {
        const double v = g.eval(grid.boundary_arclength[k]);
        if (!(v > 0.0))
            throw ConfigError("g_spec: boundary coefficient must be positive, got " + str(v) +
                              " at arclength " + str(grid.boundary_arclength[k]));
        out.values[grid.boundary_nodes[k]] = v;
    }
    return out;
}

inline double g_sup(const Grid& grid, const GSpec& g) {
    double m = 0.0;
    for (double s : grid.boundary_arclength) m = std::max(m, g.eval(s));
    return m;
}

struct ModelParams {
    double lambda = 1.0;
    double mu = 1.0;
    double gamma = 0.5;
    GSpec g;
    DomainSpec domain;
    NewtonConfig newton;
    double fp_tol = 1e-10;
    int fp_max_iter = 500;
    double fp_relaxation = 1.0;  // 1 = plain Picard composition

    void validate() const {
        ensure(lambda > 0.0, "lambda must be positive, got " + str(lambda));
        ensure(mu > 0.0, "mu must be positive, got " + str(mu));
        ensure(gamma > 0.0, "gamma must be positive, got " + str(gamma));
        ensure(fp_tol > 0.0, "fp_tol must be positive");
        ensure(fp_max_iter >= 1, "fp_max_iter must be at least 1");
        ensure(fp_relaxation > 0.0 && fp_relaxation <= 1.0, "fp_relaxation must be in (0,1]");
    }
};

enum class U0Family { constant, gaussian_bump, perturbed_constant, cosine };

struct U0Spec {
    U0Family family = U0Family::constant;
    std::vector<double> params{1.0};
};

/// Initial density profile; must be strictly positive on the grid.
/// Parameter layout per family:
///   constant:            [value]
///   gaussian_bump (1D):  [center, width, amplitude, baseline]
///   gaussian_bump (2D):  [center_x, center_y, width, amplitude, baseline]
///   perturbed_constant:  [baseline, amplitude]   (seeded nodewise uniform)
///   cosine (1D):         [baseline, amplitude, mode]
///   cosine (2D):         [baseline, amplitude, mode_x, mode_y]
inline ScalarField build_u0(const Grid& grid, const U0Spec& spec, std::uint64_t seed) {
    ScalarField u0(grid);
    const auto& p = spec.params;
    switch (spec.family) {
        case U0Family::constant:
            u0 = ScalarField(grid, p.at(0));
            break;
        case U0Family::gaussian_bump: {
            const bool two_d = grid.dim == 2;
            const double cx = p.at(0), cy = two_d ? p.at(1) : 0.0;
            const double w = p.at(two_d ? 2 : 1), amp = p.at(two_d ? 3 : 2),
                         base = p.at(two_d ? 4 : 3);
            u0 = ScalarField::from_function(grid, [&](double x, double y) {
                const double dx = (x - cx) / w, dy = two_d ? (y - cy) / w : 0.0;
                return base + amp * std::exp(-(dx * dx + dy * dy));
            });
            break;
        }
        case U0Family::perturbed_constant: {
            std::mt19937_64 rng(mix_seed(seed, 7));
            std::uniform_real_distribution<double> ud(-1.0, 1.0);
            u0 = ScalarField(grid, p.at(0));
            for (double& v : u0.values) v += p.at(1) * ud(rng);
            break;
        }
        case U0Family::cosine: {
            const double base = p.at(0), amp = p.at(1), kx = p.at(2);
            const double ky = grid.dim == 2 ? p.at(3) : 0.0;
            u0 = ScalarField::from_function(grid, [&](double x, double y) {
                double v = base + amp * std::cos(kx * M_PI * (x - grid.lo[0]) / (grid.hi[0] - grid.lo[0]));
                if (grid.dim == 2 && ky != 0.0)
                    v *= std::cos(ky * M_PI * (y - grid.lo[1]) / (grid.hi[1] - grid.lo[1]));
                return v;
            });
            break;
        }
    }
    if (!(min_value(u0) > 0.0))
        throw ConfigError("u0_spec: initial density must be strictly positive (min " +
                          str(min_value(u0)) + ")");
    return u0;
}

}  // namespace chemolab
