#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <utility>

#include "otto/differential.hpp"

namespace otto {

inline constexpr double kPositivityFloor = 1e-12;

// A point rho dvol_M of P^infty(M): strictly positive, unit mass.  Cheap to copy;
// the node values are shared and immutable.
class Density {
public:
    Density() = default;

    // Normalizes to unit mass; rejects non-finite values and any node <= 1e-12.
    explicit Density(const ScalarField& rho) {
        if (!rho.grid_ptr()) throw invalid_argument("Density: missing grid");
        if (!rho.all_finite()) throw invalid_argument("Density: non-finite values");
        const double mass = integrate(rho);
        if (!(mass > 0.0)) throw positivity_error("Density: non-positive total mass");
        ScalarField r = std::abs(mass - 1.0) <= 4.0 * std::numeric_limits<double>::epsilon() ? rho : rho * (1.0 / mass);
        for (std::size_t p = 0; p < r.size(); ++p)
            if (!(r(p) > kPositivityFloor))
                throw positivity_error("Density: value " + std::to_string(r(p)) + " at node " +
                                       std::to_string(p) + " is not above the positivity floor");
        rho_ = std::make_shared<const ScalarField>(std::move(r));
    }

    static Density uniform(const GridPtr& grid) { return Density(ScalarField(grid, 1.0)); }

    const ScalarField& field() const { return *rho_; }
    const GridPtr& grid_ptr() const { return rho_->grid_ptr(); }
    const Grid& grid() const { return rho_->grid(); }
    double operator()(std::size_t p) const { return (*rho_)(p); }
    std::size_t size() const { return rho_->size(); }
    bool valid() const { return static_cast<bool>(rho_); }

    double min() const { return *std::min_element(rho_->data().begin(), rho_->data().end()); }

private:
    std::shared_ptr<const ScalarField> rho_;
};

// Tangent potential phi modulo constants, stored in the gauge int phi rho dvol = 0
// for its anchor density.
class Potential {
public:
    Potential() = default;
    Potential(const Density& anchor, ScalarField phi) : anchor_(anchor), phi_(std::move(phi)) {
        require_same_grid(anchor.grid_ptr(), phi_.grid_ptr(), "Potential");
        if (!phi_.all_finite()) throw invalid_argument("Potential: non-finite values");
        regauge();
    }

    const ScalarField& field() const { return phi_; }
    const Density& anchor() const { return anchor_; }
    const GridPtr& grid_ptr() const { return phi_.grid_ptr(); }
    const Grid& grid() const { return phi_.grid(); }
    double operator()(std::size_t p) const { return phi_(p); }

    Potential reanchored(const Density& rho) const { return Potential(rho, phi_); }

    // int phi rho dvol for the anchor; zero up to round-off.
    double gauge_residual() const { return integrate(phi_ * anchor_.field()); }

    friend Potential operator+(const Potential& a, const Potential& b) {
        return Potential(a.anchor_, a.phi_ + b.phi_);
    }
    friend Potential operator-(const Potential& a, const Potential& b) {
        return Potential(a.anchor_, a.phi_ - b.phi_);
    }
    friend Potential operator*(double s, const Potential& a) { return Potential(a.anchor_, a.phi_ * s); }

private:
    void regauge() {
        const double mean = integrate(phi_ * anchor_.field());
        for (std::size_t p = 0; p < phi_.size(); ++p) phi_(p) -= mean;
    }

    Density anchor_;
    ScalarField phi_;
};

// Gauge-insensitive comparison: oscillation of the difference.
inline double tangent_distance(const ScalarField& a, const ScalarField& b) {
    require_same_grid(a.grid_ptr(), b.grid_ptr(), "tangent_distance");
    double lo = 1e300, hi = -1e300;
    for (std::size_t p = 0; p < a.size(); ++p) {
        const double d = a(p) - b(p);
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    return hi - lo;
}
inline double tangent_distance(const Potential& a, const Potential& b) {
    return tangent_distance(a.field(), b.field());
}
inline bool same_tangent(const Potential& a, const Potential& b, double tol = 1e-10) {
    return tangent_distance(a, b) <= tol;
}

// F_phi(rho dvol) = int phi rho dvol.
inline double coordinate_functional(const Density& rho, const ScalarField& phi) {
    require_same_grid(rho.grid_ptr(), phi.grid_ptr(), "coordinate_functional");
    return integrate(phi * rho.field());
}

// delta_{V_phi} rho = -div(rho grad phi).
inline ScalarField apply_tangent(const Density& rho, const ScalarField& phi) {
    require_same_grid(rho.grid_ptr(), phi.grid_ptr(), "apply_tangent");
    VectorField flux = gradient(phi);
    for (std::size_t a = 0; a < rho.grid().dim(); ++a)
        for (std::size_t p = 0; p < rho.size(); ++p) flux(p, a) *= rho(p);
    return -divergence(flux);
}
inline ScalarField apply_tangent(const Density& rho, const Potential& phi) { return apply_tangent(rho, phi.field()); }

// Otto metric int <grad phi1, grad phi2> rho dvol.
inline double otto_inner(const Density& rho, const ScalarField& phi1, const ScalarField& phi2) {
    require_same_grid(rho.grid_ptr(), phi1.grid_ptr(), "otto_inner");
    require_same_grid(rho.grid_ptr(), phi2.grid_ptr(), "otto_inner");
    const double v = integrate(pointwise_inner(differential(phi1), differential(phi2)) * rho.field());
#ifndef NDEBUG
    // Second form of the metric, -int phi1 div(rho grad phi2).
    const double alt = integrate(phi1 * apply_tangent(rho, phi2));
    const double scale = std::max(1.0, phi1.max_abs() * phi2.max_abs());
    if (std::abs(v - alt) > 1e-9 * scale)
        throw invariant_violation("otto_inner: gradient and divergence forms disagree");
#endif
    return v;
}
inline double otto_inner(const Density& rho, const Potential& phi1, const Potential& phi2) {
    return otto_inner(rho, phi1.field(), phi2.field());
}
inline double otto_norm(const Density& rho, const Potential& phi) { return std::sqrt(otto_inner(rho, phi, phi)); }

// rho-weighted L^2 pairing of one-forms, int g^ab alpha_a beta_b rho dvol.
inline double weighted_inner(const Density& rho, const OneForm& a, const OneForm& b) {
    require_same_grid(rho.grid_ptr(), a.grid_ptr(), "weighted_inner");
    return integrate(pointwise_inner(a, b) * rho.field());
}

struct GradientCheck {
    double finite_difference = 0;
    double metric = 0;
};

// Compares d/de F_phi(rho + e delta_{V_psi} rho) by central differences against
// <V_phi, V_psi>.  The gradient of F_phi is V_phi, so the two should agree.
inline GradientCheck metric_gradient_check(const Density& rho, const ScalarField& phi, const Potential& psi,
                                           double eps = 1e-5) {
    require_same_grid(rho.grid_ptr(), phi.grid_ptr(), "metric_gradient_check");
    const ScalarField dr = apply_tangent(rho, psi);
    auto shifted = [&](double e) {
        ScalarField r = rho.field();
        r.axpy(e, dr);
        for (std::size_t p = 0; p < r.size(); ++p)
            if (!(r(p) > kPositivityFloor))
                throw positivity_error("metric_gradient_check: perturbed density is not positive; reduce eps");
        return integrate(phi * r);  // unit mass is preserved exactly by the divergence form
    };
    const double fd = (shifted(eps) - shifted(-eps)) / (2.0 * eps);
    return {fd, otto_inner(rho, phi, psi.field())};
}

} // namespace otto
