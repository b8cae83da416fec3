#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "otto/density.hpp"

namespace otto {

struct SolverOptions {
    double relative_tolerance = 1e-12;
    // 0 means 10 * node count.
    std::size_t max_iterations = 0;
    bool precondition = true;
};

struct SolveStats {
    std::size_t iterations = 0;
    double relative_residual = 0;
};

// The rho-weighted operator d_rho^* d, assembled in Euclidean form
//   A phi = sum_ab D_a^T (w rho g^ab D_b phi),
// which is symmetric positive semidefinite.  Its kernel is the kernel of the
// discrete differential: constants plus, on even axes, the Nyquist checkerboards.
// Right-hand sides are deflated against that kernel before conjugate gradients,
// and iterates stay in its orthogonal complement.
class WeightedLaplacian {
public:
    explicit WeightedLaplacian(const Density& rho, SolverOptions opt = {}) : rho_(rho), opt_(opt) {
        const Grid& g = rho.grid();
        const std::size_t n = g.size(), dim = g.dim();
        coef_.assign(dim * dim, std::vector<double>(n, 0.0));
        std::array<double, 2> mean{0.0, 0.0};
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t a = 0; a < dim; ++a)
                for (std::size_t b = 0; b < dim; ++b) {
                    const double c = g.weight(p) * rho(p) * g.inverse_metric(p, a, b);
                    coef_[a * dim + b][p] = c;
                    if (a == b) mean[a] += c / static_cast<double>(n);
                }
        build_kernel(g);
        if (opt_.precondition) build_preconditioner(g, mean);
    }

    const Density& density() const { return rho_; }
    const Grid& grid() const { return rho_.grid(); }

    std::vector<double> apply(const std::vector<double>& phi) const {
        const Grid& g = grid();
        const std::size_t n = g.size(), dim = g.dim();
        std::vector<std::vector<double>> dphi(dim, std::vector<double>(n));
        for (std::size_t a = 0; a < dim; ++a) detail::apply_axis(g, a, phi.data(), dphi[a].data());
        return codifferential_raw(dphi);
    }

    // sum_a D_a^T (sum_b w rho g^ab alpha_b) for covariant components alpha_b.
    std::vector<double> codifferential_raw(const std::vector<std::vector<double>>& alpha) const {
        const Grid& g = grid();
        const std::size_t n = g.size(), dim = g.dim();
        std::vector<double> out(n, 0.0), flux(n), tmp(n);
        for (std::size_t a = 0; a < dim; ++a) {
            for (std::size_t p = 0; p < n; ++p) {
                double s = 0.0;
                for (std::size_t b = 0; b < dim; ++b) s += coef_[a * dim + b][p] * alpha[b][p];
                flux[p] = s;
            }
            detail::apply_axis(g, a, flux.data(), tmp.data(), /*transpose=*/true);
            for (std::size_t p = 0; p < n; ++p) out[p] += tmp[p];
        }
        return out;
    }

    // Removes the Euclidean component of v along the kernel of d.
    void deflate(std::vector<double>& v) const {
        for (const auto& k : kernel_) {
            double num = 0.0, den = 0.0;
            for (std::size_t p = 0; p < v.size(); ++p) {
                num += k[p] * v[p];
                den += k[p] * k[p];
            }
            const double c = num / den;
            for (std::size_t p = 0; p < v.size(); ++p) v[p] -= c * k[p];
        }
    }

    // Minimum-norm solution of A x = b after deflating b; throws on non-convergence.
    std::vector<double> solve(std::vector<double> b, SolveStats* stats = nullptr) const {
        const std::size_t n = b.size();
        deflate(b);
        std::vector<double> x(n, 0.0);
        const double bnorm = norm(b);
        if (stats) *stats = {};
        if (bnorm == 0.0) return x;
        const std::size_t max_it = opt_.max_iterations ? opt_.max_iterations : 10 * n;
        std::vector<double> r = b, z = precondition(r), d = z, ad;
        double rz = dot(r, z);
        double rel = 1.0;
        for (std::size_t it = 1; it <= max_it; ++it) {
            ad = apply(d);
            const double dad = dot(d, ad);
            if (!(dad > 0.0)) throw numerical_error("weighted CG: search direction left the range of the operator");
            const double alpha = rz / dad;
            for (std::size_t p = 0; p < n; ++p) {
                x[p] += alpha * d[p];
                r[p] -= alpha * ad[p];
            }
            rel = norm(r) / bnorm;
            if (rel <= opt_.relative_tolerance) {
                if (stats) *stats = {it, rel};
                deflate(x);
                return x;
            }
            z = precondition(r);
            const double rz_new = dot(r, z);
            const double beta = rz_new / rz;
            rz = rz_new;
            for (std::size_t p = 0; p < n; ++p) d[p] = z[p] + beta * d[p];
        }
        throw numerical_error("weighted CG did not converge in " + std::to_string(max_it) +
                              " iterations (relative residual " + std::to_string(rel) + ")");
    }

private:
    static double dot(const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
        return s;
    }
    static double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

    void build_kernel(const Grid& g) {
        const std::size_t nx = g.nx(), ny = g.ny();
        auto axis_modes = [&](std::size_t axis, std::size_t len) {
            std::vector<int> modes{0};
            // The first-derivative symbol vanishes at the Nyquist index on even axes.
            if (len % 2 == 0 && std::abs(g.derivative(axis).symbol(static_cast<long>(len / 2))) < 1e-9)
                modes.push_back(1);
            return modes;
        };
        const auto mx = axis_modes(0, nx);
        const auto my = g.dim() == 2 ? axis_modes(1, ny) : std::vector<int>{0};
        for (int a : mx)
            for (int b : my) {
                std::vector<double> v(g.size());
                for (std::size_t i = 0; i < nx; ++i)
                    for (std::size_t j = 0; j < ny; ++j)
                        v[i * ny + j] = ((a && (i % 2)) != (b && (j % 2))) ? -1.0 : 1.0;
                kernel_.push_back(std::move(v));
            }
    }

    void build_preconditioner(const Grid& g, std::array<double, 2> mean) {
        const std::size_t nx = g.nx(), ny = g.ny();
        std::vector<double> sx(nx), sy(ny, 0.0);
        for (std::size_t k = 0; k < nx; ++k) sx[k] = std::norm(g.derivative(0).symbol(wavenumber(k, nx)));
        if (g.dim() == 2)
            for (std::size_t k = 0; k < ny; ++k) sy[k] = std::norm(g.derivative(1).symbol(wavenumber(k, ny)));
        inv_symbol_.assign(nx * ny, 0.0);
        double smax = 0.0;
        for (std::size_t i = 0; i < nx; ++i)
            for (std::size_t j = 0; j < ny; ++j) smax = std::max(smax, mean[0] * sx[i] + mean[1] * sy[j]);
        for (std::size_t i = 0; i < nx; ++i)
            for (std::size_t j = 0; j < ny; ++j) {
                const double s = mean[0] * sx[i] + mean[1] * sy[j];
                inv_symbol_[i * ny + j] = s > 1e-12 * smax ? 1.0 / s : 0.0;
            }
    }

    std::vector<double> precondition(const std::vector<double>& r) const {
        if (!opt_.precondition) return r;
        const Grid& g = grid();
        auto c = g.dft().forward(r);
        for (std::size_t i = 0; i < c.size(); ++i) c[i] *= inv_symbol_[i];
        auto z = g.dft().inverse_real(std::move(c));
        deflate(z);
        return z;
    }

    Density rho_;
    SolverOptions opt_;
    std::vector<std::vector<double>> coef_;
    std::vector<std::vector<double>> kernel_;
    std::vector<double> inv_symbol_;
};

// d_rho^* alpha = -(1/rho) div(rho alpha^sharp), realized as the exact adjoint of d
// under the rho-weighted quadrature inner products.
inline ScalarField weighted_codifferential(const Density& rho, const OneForm& alpha) {
    require_same_grid(rho.grid_ptr(), alpha.grid_ptr(), "weighted_codifferential");
    WeightedLaplacian op(rho, {.precondition = false});
    const Grid& g = rho.grid();
    std::vector<std::vector<double>> comps;
    for (std::size_t a = 0; a < g.dim(); ++a) comps.emplace_back(alpha.component(a).begin(), alpha.component(a).end());
    auto b = op.codifferential_raw(comps);
    for (std::size_t p = 0; p < g.size(); ++p) b[p] /= g.weight(p) * rho(p);
    return ScalarField(rho.grid_ptr(), std::move(b));
}

// -(1/rho) div(rho grad phi)
inline ScalarField weighted_laplacian(const Density& rho, const ScalarField& phi) {
    return weighted_codifferential(rho, differential(phi));
}

// Green's operator G_rho: phi with -(1/rho) div(rho grad phi) = f and int phi rho = 0.
// Requires int f rho dvol = 0.
inline Potential solve_green(const WeightedLaplacian& op, const ScalarField& f, SolveStats* stats = nullptr) {
    const Density& rho = op.density();
    require_same_grid(rho.grid_ptr(), f.grid_ptr(), "solve_green");
    const double mean = integrate(f * rho.field());
    if (std::abs(mean) > 1e-8 * std::max(1.0, f.max_abs()))
        throw invalid_argument("solve_green: right-hand side has nonzero weighted mean " + std::to_string(mean));
    const Grid& g = rho.grid();
    std::vector<double> b(g.size());
    for (std::size_t p = 0; p < g.size(); ++p) b[p] = g.weight(p) * rho(p) * (f(p) - mean);
    return Potential(rho, ScalarField(rho.grid_ptr(), op.solve(std::move(b), stats)));
}
inline Potential solve_green(const Density& rho, const ScalarField& f, SolverOptions opt = {}) {
    return solve_green(WeightedLaplacian(rho, opt), f);
}

// Potential of the rho-weighted L^2 projection of alpha onto exact forms: d phi = Pi_rho alpha.
inline Potential project_exact(const WeightedLaplacian& op, const OneForm& alpha, SolveStats* stats = nullptr) {
    const Density& rho = op.density();
    require_same_grid(rho.grid_ptr(), alpha.grid_ptr(), "project_exact");
    const Grid& g = rho.grid();
    std::vector<std::vector<double>> comps;
    for (std::size_t a = 0; a < g.dim(); ++a) comps.emplace_back(alpha.component(a).begin(), alpha.component(a).end());
    return Potential(rho, ScalarField(rho.grid_ptr(), op.solve(op.codifferential_raw(comps), stats)));
}
inline Potential project_exact(const Density& rho, const OneForm& alpha, SolverOptions opt = {}) {
    return project_exact(WeightedLaplacian(rho, opt), alpha);
}

} // namespace otto
