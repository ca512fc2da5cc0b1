// Structured tensor-product grids (interval / rectangle), nodal scalar fields,
// trapezoidal volume and boundary quadrature, discrete differential norms.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <vector>

#include "chemolab/common.hpp"

namespace chemolab {

enum class DomainKind { interval, rectangle };

struct DomainSpec {
    DomainKind kind = DomainKind::interval;
    std::array<double, 2> lo{0.0, 0.0};
    std::array<double, 2> hi{1.0, 0.0};
};

/// Uniform tensor-product grid with boundary metadata. Immutable after build_grid.
struct Grid {
    DomainKind kind = DomainKind::interval;
    int dim = 1;
    std::array<double, 2> lo{0.0, 0.0};
    std::array<double, 2> hi{1.0, 0.0};
    std::array<int, 2> res{0, 1};     // nodes per axis; res[1] == 1 in 1D
    std::array<double, 2> h{0.0, 0.0};
    int n = 0;

    std::vector<double> volume_weights;            // per node, sums to |Omega|
    std::vector<int> boundary_nodes;               // sorted node indices
    std::vector<double> boundary_weights;          // parallel; sums to |dOmega|
    std::vector<std::array<double, 2>> normals;    // parallel; unit outward
    std::vector<double> boundary_arclength;        // parallel; normalized to [0,1]
    std::vector<int> boundary_slot;                // n-sized; index into the above or -1

    int index(int ix, int iy = 0) const { return iy * res[0] + ix; }
    double x(int ix) const { return lo[0] + ix * h[0]; }
    double y(int iy) const { return lo[1] + iy * h[1]; }
    std::array<double, 2> coords(int node) const {
        const int ix = node % res[0], iy = node / res[0];
        return {x(ix), y(iy)};
    }
    bool is_boundary(int node) const { return boundary_slot[node] >= 0; }
    double measure() const {
        double m = hi[0] - lo[0];
        if (dim == 2) m *= hi[1] - lo[1];
        return m;
    }
    double boundary_measure() const {
        if (dim == 1) return 2.0;  // counting measure on the two endpoints
        return 2.0 * ((hi[0] - lo[0]) + (hi[1] - lo[1]));
    }
    double min_spacing() const { return dim == 2 ? std::min(h[0], h[1]) : h[0]; }
};

inline Grid build_grid(const DomainSpec& spec, std::array<int, 2> resolution) {
    Grid g;
    g.kind = spec.kind;
    g.dim = spec.kind == DomainKind::rectangle ? 2 : 1;
    g.lo = spec.lo;
    g.hi = spec.hi;
    g.res = {resolution[0], g.dim == 2 ? resolution[1] : 1};
    for (int a = 0; a < g.dim; ++a) {
        if (g.res[a] < 3)
            throw ConfigError("build_grid: resolution axis " + str(a) + " is " + str(g.res[a]) +
                              ", need at least 3 nodes per axis");
        if (!(spec.hi[a] > spec.lo[a]))
            throw ConfigError("build_grid: degenerate extents on axis " + str(a) + " [" +
                              str(spec.lo[a]) + ", " + str(spec.hi[a]) + "]");
        g.h[a] = (spec.hi[a] - spec.lo[a]) / (g.res[a] - 1);
    }
    g.n = g.res[0] * g.res[1];
    g.volume_weights.assign(g.n, 0.0);
    g.boundary_slot.assign(g.n, -1);

    auto axis_w = [](int i, int m, double h) { return (i == 0 || i == m - 1) ? 0.5 * h : h; };

    if (g.dim == 1) {
        const int m = g.res[0];
        for (int i = 0; i < m; ++i) g.volume_weights[i] = axis_w(i, m, g.h[0]);
        g.boundary_nodes = {0, m - 1};
        g.boundary_weights = {1.0, 1.0};
        g.normals = {{{-1.0, 0.0}}, {{1.0, 0.0}}};
        g.boundary_arclength = {0.0, 1.0};
    } else {
        const int mx = g.res[0], my = g.res[1];
        for (int j = 0; j < my; ++j)
            for (int i = 0; i < mx; ++i)
                g.volume_weights[g.index(i, j)] = axis_w(i, mx, g.h[0]) * axis_w(j, my, g.h[1]);

        const double lx = g.hi[0] - g.lo[0], ly = g.hi[1] - g.lo[1];
        const double perim = 2.0 * (lx + ly);
        for (int j = 0; j < my; ++j) {
            for (int i = 0; i < mx; ++i) {
                const bool bx0 = i == 0, bx1 = i == mx - 1, by0 = j == 0, by1 = j == my - 1;
                if (!(bx0 || bx1 || by0 || by1)) continue;
                double w = 0.0, nx = 0.0, ny = 0.0;
                if (by0 || by1) w += axis_w(i, mx, g.h[0]);  // edge running along x
                if (bx0 || bx1) w += axis_w(j, my, g.h[1]);  // edge running along y
                if (bx0) nx -= 1.0;
                if (bx1) nx += 1.0;
                if (by0) ny -= 1.0;
                if (by1) ny += 1.0;
                const double nn = std::sqrt(nx * nx + ny * ny);
                // counterclockwise perimeter coordinate from (lo_x, lo_y)
                double s;
                if (by0 && !bx1)
                    s = g.x(i) - g.lo[0];
                else if (bx1 && !by1)
                    s = lx + (g.y(j) - g.lo[1]);
                else if (by1 && !bx0)
                    s = lx + ly + (g.hi[0] - g.x(i));
                else
                    s = 2.0 * lx + ly + (g.hi[1] - g.y(j));
                const int node = g.index(i, j);
                g.boundary_slot[node] = static_cast<int>(g.boundary_nodes.size());
                g.boundary_nodes.push_back(node);
                g.boundary_weights.push_back(w);
                g.normals.push_back({nx / nn, ny / nn});
                g.boundary_arclength.push_back(s / perim);
            }
        }
    }
    if (g.dim == 1) {
        g.boundary_slot[0] = 0;
        g.boundary_slot[g.n - 1] = 1;
    }
    return g;
}

/// Nodal values of a function on a Grid. The grid must outlive the field.
struct ScalarField {
    const Grid* grid = nullptr;
    std::vector<double> values;

    ScalarField() = default;
    explicit ScalarField(const Grid& g, double fill = 0.0) : grid(&g), values(g.n, fill) {}

    static ScalarField from_function(const Grid& g, const std::function<double(double, double)>& f) {
        ScalarField out(g);
        for (int node = 0; node < g.n; ++node) {
            auto c = g.coords(node);
            out.values[node] = f(c[0], c[1]);
        }
        return out;
    }

    double& operator[](int i) { return values[i]; }
    double operator[](int i) const { return values[i]; }
    int size() const { return static_cast<int>(values.size()); }

    void check_finite(const char* where) const {
        if (!all_finite(values))
            throw NumericalError(std::string(where) + ": field contains NaN/Inf");
    }
};

inline double min_value(const ScalarField& f) {
    return *std::min_element(f.values.begin(), f.values.end());
}
inline double max_value(const ScalarField& f) {
    return *std::max_element(f.values.begin(), f.values.end());
}

inline double integrate(const ScalarField& f) {
    double s = 0.0;
    for (int i = 0; i < f.size(); ++i) s += f.grid->volume_weights[i] * f.values[i];
    return s;
}

inline double boundary_integrate(const ScalarField& f) {
    const Grid& g = *f.grid;
    double s = 0.0;
    for (std::size_t k = 0; k < g.boundary_nodes.size(); ++k)
        s += g.boundary_weights[k] * f.values[g.boundary_nodes[k]];
    return s;
}

inline double lp_norm(const ScalarField& f, double p) {
    if (std::isinf(p)) {
        double m = 0.0;
        for (double v : f.values) m = std::max(m, std::abs(v));
        return m;
    }
    if (p < 1.0) throw DomainError("lp_norm: p must be >= 1 or infinity, got " + str(p));
    double s = 0.0;
    for (int i = 0; i < f.size(); ++i)
        s += f.grid->volume_weights[i] * std::pow(std::abs(f.values[i]), p);
    return std::pow(s, 1.0 / p);
}

/// Nodal gradient component along `axis`: centered inside, one-sided at the ends.
inline ScalarField gradient_component(const ScalarField& f, int axis) {
    const Grid& g = *f.grid;
    ScalarField out(g);
    const int mx = g.res[0], my = g.res[1];
    const int m = axis == 0 ? mx : my;
    const double hh = g.h[axis];
    for (int j = 0; j < my; ++j) {
        for (int i = 0; i < mx; ++i) {
            const int k = axis == 0 ? i : j;
            auto at = [&](int q) { return f.values[axis == 0 ? g.index(q, j) : g.index(i, q)]; };
            double d;
            if (k == 0)
                d = (at(1) - at(0)) / hh;
            else if (k == m - 1)
                d = (at(m - 1) - at(m - 2)) / hh;
            else
                d = (at(k + 1) - at(k - 1)) / (2.0 * hh);
            out.values[g.index(i, j)] = d;
        }
    }
    return out;
}

inline double grad_sq_integral(const ScalarField& f) {
    double s = 0.0;
    for (int a = 0; a < f.grid->dim; ++a) {
        ScalarField d = gradient_component(f, a);
        for (int i = 0; i < d.size(); ++i)
            s += f.grid->volume_weights[i] * d.values[i] * d.values[i];
    }
    return s;
}

inline double h1_norm(const ScalarField& f) {
    const double l2 = lp_norm(f, 2.0);
    return std::sqrt(l2 * l2 + grad_sq_integral(f));
}

/// L2 norm of the pure second differences (f_{k-1} - 2 f_k + f_{k+1}) / h^2,
/// accumulated per axis over nodes with two neighbours on that axis.
inline double second_difference_l2(const ScalarField& f) {
    const Grid& g = *f.grid;
    double s = 0.0;
    for (int axis = 0; axis < g.dim; ++axis) {
        const int m = axis == 0 ? g.res[0] : g.res[1];
        const double h2 = g.h[axis] * g.h[axis];
        for (int j = 0; j < g.res[1]; ++j) {
            for (int i = 0; i < g.res[0]; ++i) {
                const int k = axis == 0 ? i : j;
                if (k == 0 || k == m - 1) continue;
                auto at = [&](int q) { return f.values[axis == 0 ? g.index(q, j) : g.index(i, q)]; };
                const double d2 = (at(k - 1) - 2.0 * at(k) + at(k + 1)) / h2;
                s += g.volume_weights[g.index(i, j)] * d2 * d2;
            }
        }
    }
    return std::sqrt(s);
}

// elementwise helpers

inline ScalarField operator+(ScalarField a, const ScalarField& b) {
    for (int i = 0; i < a.size(); ++i) a.values[i] += b.values[i];
    return a;
}
inline ScalarField operator-(ScalarField a, const ScalarField& b) {
    for (int i = 0; i < a.size(); ++i) a.values[i] -= b.values[i];
    return a;
}
inline ScalarField operator*(double c, ScalarField a) {
    for (double& v : a.values) v *= c;
    return a;
}
inline void axpy(double c, const ScalarField& x, ScalarField& y) {
    for (int i = 0; i < y.size(); ++i) y.values[i] += c * x.values[i];
}
inline double linf_diff(const ScalarField& a, const ScalarField& b) {
    double m = 0.0;
    for (int i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
    return m;
}

}  // namespace chemolab
