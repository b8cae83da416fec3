#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "otto/density.hpp"
#include "otto/differential.hpp"

namespace otto {

// Skew bivector field p on a 2D grid.  In two dimensions p is fixed by the single
// component p^{01} = -p^{10}; every such field is Poisson.
class PoissonStructure {
public:
    PoissonStructure(ScalarField p01) : p01_(std::move(p01)) {
        if (p01_.grid().dim() != 2) throw invalid_argument("PoissonStructure: a 2D grid is required");
        if (!p01_.all_finite()) throw invalid_argument("PoissonStructure: non-finite bivector");
        double lo = p01_(0), hi = p01_(0);
        for (std::size_t p = 0; p < p01_.size(); ++p) {
            lo = std::min(lo, p01_(p));
            hi = std::max(hi, p01_(p));
        }
        constant_symplectic_ = lo == hi && lo != 0.0;
    }

    // p = [[0, 1], [-1, 0]], the inverse of omega = dx ^ dy.
    static PoissonStructure standard(const GridPtr& grid) {
        if (grid->spec().kind != ManifoldKind::flat_torus)
            throw invalid_argument("PoissonStructure: the standard symplectic structure lives on the flat torus");
        return PoissonStructure(ScalarField(grid, 1.0));
    }

    const GridPtr& grid_ptr() const { return p01_.grid_ptr(); }
    const Grid& grid() const { return p01_.grid(); }
    const ScalarField& component() const { return p01_; }
    double operator()(std::size_t node, std::size_t i, std::size_t j) const {
        if (i == j) return 0.0;
        return i == 0 ? p01_(node) : -p01_(node);
    }
    bool constant_symplectic() const { return constant_symplectic_; }

private:
    ScalarField p01_;
    bool constant_symplectic_ = false;
};

// {f, g} = p(df, dg) = p^{ij} d_i f d_j g nodewise.
inline ScalarField base_bracket(const PoissonStructure& P, const ScalarField& f, const ScalarField& g) {
    require_same_grid(P.grid_ptr(), f.grid_ptr(), "base_bracket");
    require_same_grid(P.grid_ptr(), g.grid_ptr(), "base_bracket");
    const ScalarField fx = partial(f, 0), fy = partial(f, 1), gx = partial(g, 0), gy = partial(g, 1);
    ScalarField out(f.grid_ptr());
    for (std::size_t p = 0; p < out.size(); ++p) out(p) = P.component()(p) * (fx(p) * gy(p) - fy(p) * gx(p));
    return out;
}

namespace detail {

inline PoissonStructure standard_structure(const Density& mu) {
    return PoissonStructure::standard(mu.grid_ptr());
}

} // namespace detail

// {F_phi1, F_phi2}(mu) = int {phi1, phi2} dmu.
inline double lifted_bracket(const PoissonStructure& P, const Density& mu, const ScalarField& phi1,
                             const ScalarField& phi2) {
    require_same_grid(P.grid_ptr(), mu.grid_ptr(), "lifted_bracket");
    return integrate(base_bracket(P, phi1, phi2) * mu.field());
}
inline double lifted_bracket(const Density& mu, const ScalarField& phi1, const ScalarField& phi2) {
    return lifted_bracket(detail::standard_structure(mu), mu, phi1, phi2);
}

// F_{{{1,2},3}} + F_{{{2,3},1}} + F_{{{3,1},2}} at mu.
inline double jacobiator(const PoissonStructure& P, const Density& mu, const ScalarField& phi1,
                         const ScalarField& phi2, const ScalarField& phi3) {
    ScalarField s = base_bracket(P, base_bracket(P, phi1, phi2), phi3);
    s += base_bracket(P, base_bracket(P, phi2, phi3), phi1);
    s += base_bracket(P, base_bracket(P, phi3, phi1), phi2);
    return integrate(s * mu.field());
}
inline double jacobiator(const Density& mu, const ScalarField& phi1, const ScalarField& phi2,
                         const ScalarField& phi3) {
    return jacobiator(detail::standard_structure(mu), mu, phi1, phi2, phi3);
}

// Max nodewise cyclic sum of nested brackets over all triples of the Fourier modes
// cos, sin of (kx x + ky y) with |kx|, |ky| <= max_mode.
inline double jacobi_defect(const PoissonStructure& P, int max_mode = 1) {
    const GridPtr& g = P.grid_ptr();
    const double lx = 2.0 * std::numbers::pi / g->period(0), ly = 2.0 * std::numbers::pi / g->period(1);
    std::vector<ScalarField> basis;
    for (int kx = 0; kx <= max_mode; ++kx)
        for (int ky = -max_mode; ky <= max_mode; ++ky) {
            if (kx == 0 && ky <= 0) continue;
            basis.push_back(sample(g, [=](double x, double y) { return std::cos(kx * lx * x + ky * ly * y); }));
            basis.push_back(sample(g, [=](double x, double y) { return std::sin(kx * lx * x + ky * ly * y); }));
        }
    double worst = 0;
    for (std::size_t a = 0; a < basis.size(); ++a)
        for (std::size_t b = a + 1; b < basis.size(); ++b)
            for (std::size_t c = b + 1; c < basis.size(); ++c) {
                ScalarField s = base_bracket(P, base_bracket(P, basis[a], basis[b]), basis[c]);
                s += base_bracket(P, base_bracket(P, basis[b], basis[c]), basis[a]);
                s += base_bracket(P, base_bracket(P, basis[c], basis[a]), basis[b]);
                worst = std::max(worst, s.max_abs());
            }
    return worst;
}

// H_phi = p(d phi, .) with components H^j = p^{ij} d_i phi, so that H_phi(f) = {phi, f}.
inline VectorField hamiltonian_velocity(const PoissonStructure& P, const ScalarField& phi) {
    require_same_grid(P.grid_ptr(), phi.grid_ptr(), "hamiltonian_velocity");
    const ScalarField px = partial(phi, 0), py = partial(phi, 1);
    VectorField h(phi.grid_ptr());
    for (std::size_t p = 0; p < h.size(); ++p) {
        h(p, 0) = -P.component()(p) * py(p);
        h(p, 1) = P.component()(p) * px(p);
    }
    return h;
}

// d rho / dt = -{phi, rho} in the skew split -(H . grad rho + div(rho H)) / 2.  The split is
// antisymmetric in the quadrature inner product and annihilates constants, so mass and
// the L2 norm are conserved by the semi-discrete flow.
inline ScalarField hamiltonian_rate(const VectorField& h, const ScalarField& rho) {
    const Grid& g = rho.grid();
    const ScalarField rx = partial(rho, 0), ry = partial(rho, 1);
    ScalarField fx(rho.grid_ptr()), fy(rho.grid_ptr());
    for (std::size_t p = 0; p < rho.size(); ++p) {
        fx(p) = rho(p) * h(p, 0);
        fy(p) = rho(p) * h(p, 1);
    }
    const ScalarField dfx = partial(fx, 0), dfy = partial(fy, 1);
    ScalarField out(rho.grid_ptr());
    for (std::size_t p = 0; p < g.size(); ++p)
        out(p) = -0.5 * (h(p, 0) * rx(p) + h(p, 1) * ry(p) + dfx(p) + dfy(p));
    return out;
}
inline ScalarField hamiltonian_rate(const PoissonStructure& P, const ScalarField& phi, const ScalarField& rho) {
    return hamiltonian_rate(hamiltonian_velocity(P, phi), rho);
}

struct HamiltonianFlowOptions {
    bool filter = true;
    double cfl = 0.5;
};

// Density curve t -> mu(t) of the Hamiltonian vector field of F_phi: rho advected by the
// divergence-free field H_phi.  RK4 with substeps below the advective CFL limit and the
// same spectral filter as geodesic_flow; returns steps + 1 densities at uniform times.
// mass_history, when given, receives the integral of each state before normalization.
inline std::vector<Density> hamiltonian_flow(const PoissonStructure& P, const Density& mu0, const ScalarField& phi,
                                             double t_final, std::size_t steps, HamiltonianFlowOptions opt = {},
                                             std::vector<double>* mass_history = nullptr) {
    require_same_grid(P.grid_ptr(), mu0.grid_ptr(), "hamiltonian_flow");
    require_same_grid(P.grid_ptr(), phi.grid_ptr(), "hamiltonian_flow");
    if (!P.constant_symplectic())
        throw invalid_argument("hamiltonian_flow: only the constant symplectic structure is supported");
    if (steps < 1) throw invalid_argument("hamiltonian_flow: steps must be positive");
    if (!(t_final >= 0.0) || !std::isfinite(t_final)) throw invalid_argument("hamiltonian_flow: bad t_final");
    const Grid& g = mu0.grid();
    const VectorField h = hamiltonian_velocity(P, phi);
    double vmax = 0;
    for (std::size_t p = 0; p < g.size(); ++p) vmax = std::max(vmax, std::hypot(h(p, 0), h(p, 1)));
    const double dt = t_final / static_cast<double>(steps);
    const double hmin = std::min(g.spacing()[0], g.spacing()[1]);
    const std::size_t sub =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(vmax * dt / (opt.cfl * hmin))));
    const double k = dt / static_cast<double>(sub);

    std::vector<Density> out{mu0};
    ScalarField rho = mu0.field();
    if (mass_history) mass_history->assign(1, integrate(rho));
    for (std::size_t s = 0; s < steps; ++s) {
        for (std::size_t q = 0; q < sub; ++q) {
            const ScalarField k1 = hamiltonian_rate(h, rho);
            const ScalarField k2 = hamiltonian_rate(h, rho + k1 * (0.5 * k));
            const ScalarField k3 = hamiltonian_rate(h, rho + k2 * (0.5 * k));
            const ScalarField k4 = hamiltonian_rate(h, rho + k3 * k);
            rho.axpy(k / 6.0, k1 + k2 * 2.0 + k3 * 2.0 + k4);
            if (opt.filter) rho = filtered(rho);
            if (!rho.all_finite()) throw numerical_error("hamiltonian_flow: non-finite density");
            for (std::size_t p = 0; p < rho.size(); ++p)
                if (!(rho(p) > kPositivityFloor))
                    throw positivity_error("hamiltonian_flow: density lost positivity at t = " +
                                           std::to_string(static_cast<double>(s) * dt + static_cast<double>(q + 1) * k));
        }
        if (mass_history) mass_history->push_back(integrate(rho));
        out.emplace_back(rho);
    }
    return out;
}
inline std::vector<Density> hamiltonian_flow(const Density& mu0, const ScalarField& phi, double t_final,
                                             std::size_t steps, HamiltonianFlowOptions opt = {},
                                             std::vector<double>* mass_history = nullptr) {
    return hamiltonian_flow(detail::standard_structure(mu0), mu0, phi, t_final, steps, opt, mass_history);
}

// Omega(H_phi1, H_phi2) on the symplectic leaf through mu; equal to the lifted bracket.
inline double leaf_form(const PoissonStructure& P, const Density& mu, const ScalarField& phi1,
                        const ScalarField& phi2) {
    if (!P.constant_symplectic())
        throw invalid_argument("leaf_form: only the constant symplectic structure is supported");
    return lifted_bracket(P, mu, phi1, phi2);
}
inline double leaf_form(const Density& mu, const ScalarField& phi1, const ScalarField& phi2) {
    return leaf_form(detail::standard_structure(mu), mu, phi1, phi2);
}

// int rho^2 dvol
inline double l2_norm_squared(const Density& mu) { return integrate(mu.field() * mu.field()); }

} // namespace otto
