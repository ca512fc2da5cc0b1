// Sparse elliptic operators on structured grids: Robin / no-flux assembly via
// ghost-node elimination, banded direct factorization, preconditioned BiCGStab.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "chemolab/grid.hpp"

namespace chemolab {

enum class BoundaryTag { robin, neumann, flux };

/// Fixed-stencil sparse matrix (at most 5 entries per row on tensor grids).
struct SparseOperator {
    int n = 0;
    int stride = 5;
    BoundaryTag tag = BoundaryTag::neumann;
    int bandwidth = 0;
    std::vector<int> cols;      // n * stride, -1 = unused slot
    std::vector<double> vals;

    explicit SparseOperator(int dim = 0, BoundaryTag t = BoundaryTag::neumann)
        : n(dim), tag(t), cols(static_cast<std::size_t>(dim) * 5, -1),
          vals(static_cast<std::size_t>(dim) * 5, 0.0) {}

    void add(int i, int j, double v) {
        const int base = i * stride;
        for (int k = 0; k < stride; ++k) {
            if (cols[base + k] == j) {
                vals[base + k] += v;
                return;
            }
            if (cols[base + k] < 0) {
                cols[base + k] = j;
                vals[base + k] = v;
                bandwidth = std::max(bandwidth, std::abs(i - j));
                return;
            }
        }
        throw NumericalError("SparseOperator: more than 5 entries in row " + str(i));
    }

    double diagonal(int i) const {
        const int base = i * stride;
        for (int k = 0; k < stride; ++k)
            if (cols[base + k] == i) return vals[base + k];
        return 0.0;
    }

    double row_sum(int i) const {
        double s = 0.0;
        const int base = i * stride;
        for (int k = 0; k < stride; ++k)
            if (cols[base + k] >= 0) s += vals[base + k];
        return s;
    }

    double off_diagonal_abs_sum(int i) const {
        double s = 0.0;
        const int base = i * stride;
        for (int k = 0; k < stride; ++k)
            if (cols[base + k] >= 0 && cols[base + k] != i) s += std::abs(vals[base + k]);
        return s;
    }

    void apply(const std::vector<double>& x, std::vector<double>& y) const {
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            const int base = i * stride;
            for (int k = 0; k < stride; ++k) {
                const int j = cols[base + k];
                if (j >= 0) s += vals[base + k] * x[j];
            }
            y[i] = s;
        }
    }

    std::vector<double> apply(const std::vector<double>& x) const {
        std::vector<double> y(n);
        apply(x, y);
        return y;
    }
};

/// Elliptic operator together with the scale factors that map boundary data
/// into the right-hand side of the ghost-eliminated rows.
struct RobinOperator {
    SparseOperator A;
    std::vector<double> load_scale;  // per node; zero at interior nodes

    /// rhs for  A x = volume_source + (boundary data folded in).
    std::vector<double> rhs(const std::vector<double>& volume_source,
                            const std::vector<double>& boundary_data) const {
        std::vector<double> b(volume_source);
        for (int i = 0; i < A.n; ++i)
            if (load_scale[i] != 0.0) b[i] += load_scale[i] * boundary_data[i];
        return b;
    }
};

/// Assemble the nodal operator for  -div(a grad V) + c V  with the flux
/// condition  a dV/dnu + g V = r  folded into boundary rows by ghost-node
/// elimination (second-order consistent; rows keep the M-matrix sign pattern
/// when c >= 0). Pass g identically zero with BoundaryTag::neumann for the
/// no-flux closure.
inline RobinOperator assemble_robin_elliptic(const Grid& grid, const ScalarField& a,
                                             const ScalarField& c, const ScalarField& g_field,
                                             BoundaryTag tag = BoundaryTag::robin) {
    for (int i = 0; i < grid.n; ++i)
        if (!(a.values[i] > 0.0))
            throw ConfigError("assemble_robin_elliptic: diffusivity must be positive everywhere "
                              "(node " + str(i) + " has a = " + str(a.values[i]) + ")");
    if (tag == BoundaryTag::robin)
        for (int node : grid.boundary_nodes)
            if (!(g_field.values[node] > 0.0))
                throw ConfigError("assemble_robin_elliptic: boundary coefficient must be positive "
                                  "(node " + str(node) + " has g = " + str(g_field.values[node]) + ")");

    RobinOperator out{SparseOperator(grid.n, tag), std::vector<double>(grid.n, 0.0)};
    SparseOperator& A = out.A;

    const int mx = grid.res[0], my = grid.res[1];
    for (int j = 0; j < my; ++j) {
        for (int i = 0; i < mx; ++i) {
            const int node = grid.index(i, j);
            A.add(node, node, c.values[node]);
            for (int axis = 0; axis < grid.dim; ++axis) {
                const int m = axis == 0 ? mx : my;
                const int k = axis == 0 ? i : j;
                const int step = axis == 0 ? 1 : mx;
                const double h = grid.h[axis], h2 = h * h;
                auto aval = [&](int q) {
                    return a.values[axis == 0 ? grid.index(q, j) : grid.index(i, q)];
                };
                if (k > 0 && k < m - 1) {
                    const double aw = 0.5 * (aval(k - 1) + aval(k));
                    const double ae = 0.5 * (aval(k) + aval(k + 1));
                    A.add(node, node - step, -aw / h2);
                    A.add(node, node + step, -ae / h2);
                    A.add(node, node, (aw + ae) / h2);
                } else {
                    // ghost node eliminated with the face's flux condition
                    const int inner = k == 0 ? 1 : m - 2;
                    const double af = 0.5 * (aval(k) + aval(inner));
                    const int nb = node + (k == 0 ? step : -step);
                    const double kappa = 2.0 * af / (aval(k) * h);
                    A.add(node, nb, -2.0 * af / h2);
                    A.add(node, node, 2.0 * af / h2);
                    if (tag != BoundaryTag::neumann) {
                        A.add(node, node, kappa * g_field.values[node]);
                        out.load_scale[node] += kappa;
                    }
                }
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// banded LU with partial pivoting (LAPACK-style band storage)

struct BandedLU {
    int n = 0, kl = 0, ku = 0;
    std::vector<double> ab;   // (2*kl+ku+1) x n, column-major
    std::vector<int> piv;
    bool singular = false;

    double& at(int r, int jcol) { return ab[static_cast<std::size_t>(jcol) * (2 * kl + ku + 1) + r]; }
    double at(int r, int jcol) const { return ab[static_cast<std::size_t>(jcol) * (2 * kl + ku + 1) + r]; }

    void factor(const SparseOperator& A) {
        n = A.n;
        kl = ku = std::max(1, A.bandwidth);
        const int rows = 2 * kl + ku + 1;
        ab.assign(static_cast<std::size_t>(rows) * n, 0.0);
        piv.assign(n, 0);
        double max_diag = 0.0;
        for (int i = 0; i < n; ++i) {
            max_diag = std::max(max_diag, std::abs(A.diagonal(i)));
            const int base = i * A.stride;
            for (int k = 0; k < A.stride; ++k) {
                const int j = A.cols[base + k];
                if (j >= 0) at(kl + ku + i - j, j) += A.vals[base + k];
            }
        }
        const double pivot_floor = 1e-14 * std::max(max_diag, 1.0);
        singular = false;
        for (int jcol = 0; jcol < n; ++jcol) {
            const int reach = std::min(kl, n - 1 - jcol);
            int pr = 0;
            double pmax = std::abs(at(kl + ku, jcol));
            for (int r = 1; r <= reach; ++r) {
                const double v = std::abs(at(kl + ku + r, jcol));
                if (v > pmax) {
                    pmax = v;
                    pr = r;
                }
            }
            piv[jcol] = jcol + pr;
            if (pmax <= pivot_floor) {
                singular = true;
                return;
            }
            if (pr != 0) {
                const int width = std::min(ku + kl, n - 1 - jcol);
                for (int w = 0; w <= width; ++w)
                    std::swap(at(kl + ku - w, jcol + w), at(kl + ku + pr - w, jcol + w));
            }
            const double d = at(kl + ku, jcol);
            for (int r = 1; r <= reach; ++r) {
                const double mlt = at(kl + ku + r, jcol) / d;
                at(kl + ku + r, jcol) = mlt;
                const int width = std::min(ku + kl, n - 1 - jcol);
                for (int w = 1; w <= width; ++w)
                    at(kl + ku + r - w, jcol + w) -= mlt * at(kl + ku - w, jcol + w);
            }
        }
    }

    void solve(std::vector<double>& x) const {
        for (int j = 0; j < n; ++j) {
            if (piv[j] != j) std::swap(x[j], x[piv[j]]);
            const int reach = std::min(kl, n - 1 - j);
            for (int r = 1; r <= reach; ++r) x[j + r] -= at(kl + ku + r, j) * x[j];
        }
        for (int j = n - 1; j >= 0; --j) {
            const int width = std::min(ku + kl, j);
            for (int w = 1; w <= width; ++w) x[j] -= at(kl + ku - w, j + w) * x[j + w];
            x[j] /= at(kl + ku, j);
        }
    }
};

// ---------------------------------------------------------------------------
// Jacobi-preconditioned BiCGStab

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}
inline double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

inline std::vector<double> bicgstab(const SparseOperator& A, const std::vector<double>& b,
                                    double tol, int max_iter,
                                    const std::vector<double>* x0 = nullptr) {
    const int n = A.n;
    std::vector<double> x = x0 ? *x0 : std::vector<double>(n, 0.0);
    std::vector<double> invd(n);
    for (int i = 0; i < n; ++i) {
        const double d = A.diagonal(i);
        invd[i] = std::abs(d) > 1e-300 ? 1.0 / d : 1.0;
    }
    std::vector<double> r(n), rhat(n), p(n, 0.0), v(n, 0.0), s(n), t(n), phat(n), shat(n);
    A.apply(x, r);
    for (int i = 0; i < n; ++i) r[i] = b[i] - r[i];
    rhat = r;
    const double target = tol * std::max(1.0, norm2(b));
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    double rnorm = norm2(r);
    int restarts = 0;
    for (int it = 0; it < max_iter && rnorm > target; ++it) {
        const double rho1 = dot(rhat, r);
        if (std::abs(rho1) < 1e-300 || std::abs(omega) < 1e-300) {
            if (++restarts > 8)
                throw NumericalError("bicgstab: repeated breakdown, residual " + str(rnorm),
                                     {rnorm});
            rhat = r;
            rho = alpha = omega = 1.0;
            std::fill(p.begin(), p.end(), 0.0);
            std::fill(v.begin(), v.end(), 0.0);
            continue;
        }
        const double beta = (rho1 / rho) * (alpha / omega);
        for (int i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
        for (int i = 0; i < n; ++i) phat[i] = invd[i] * p[i];
        A.apply(phat, v);
        const double denom = dot(rhat, v);
        if (std::abs(denom) < 1e-300) {
            rhat = r;
            rho = alpha = omega = 1.0;
            continue;
        }
        alpha = rho1 / denom;
        for (int i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
        if (norm2(s) <= target) {
            for (int i = 0; i < n; ++i) x[i] += alpha * phat[i];
            A.apply(x, r);
            for (int i = 0; i < n; ++i) r[i] = b[i] - r[i];
            rnorm = norm2(r);
            if (rnorm <= target) return x;
            continue;
        }
        for (int i = 0; i < n; ++i) shat[i] = invd[i] * s[i];
        A.apply(shat, t);
        const double tt = dot(t, t);
        if (tt < 1e-300) {
            rhat = r;
            continue;
        }
        omega = dot(t, s) / tt;
        for (int i = 0; i < n; ++i) x[i] += alpha * phat[i] + omega * shat[i];
        for (int i = 0; i < n; ++i) r[i] = s[i] - omega * t[i];
        rho = rho1;
        rnorm = norm2(r);
    }
    if (rnorm > target)
        throw NumericalError("bicgstab: no convergence after " + str(max_iter) +
                                 " iterations, residual " + str(rnorm) + " (target " + str(target) + ")",
                             {rnorm});
    return x;
}

/// Solve A x = b to relative residual `tol`. Narrow-band systems (1D stencils)
/// go through banded LU; wide-band (2D) systems through BiCGStab. A singular
/// direct factorization falls back to the iterative path, which still converges
/// for consistent singular systems and reports non-convergence otherwise.
inline ScalarField solve_linear(const SparseOperator& A, const ScalarField& rhs, double tol,
                                const ScalarField* initial = nullptr) {
    if (!(tol > 0.0)) throw DomainError("solve_linear: tolerance must be positive");
    ScalarField out(*rhs.grid);
    if (A.bandwidth <= 2) {
        BandedLU lu;
        lu.factor(A);
        if (!lu.singular) {
            out.values = rhs.values;
            lu.solve(out.values);
            std::vector<double> r = A.apply(out.values);
            for (int i = 0; i < A.n; ++i) r[i] -= rhs.values[i];
            if (norm2(r) <= tol * std::max(1.0, norm2(rhs.values))) {
                out.check_finite("solve_linear");
                return out;
            }
        }
    }
    out.values = bicgstab(A, rhs.values, tol, 40 * A.n + 200,
                          initial ? &initial->values : nullptr);
    out.check_finite("solve_linear");
    return out;
}

}  // namespace chemolab
