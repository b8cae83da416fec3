#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "otto/elliptic.hpp"

namespace otto {

// The one-form (nabla nabla phi2)(grad phi1, .), i.e. nabla_i nabla_j phi2 nabla^j phi1 dx^i.
inline OneForm hessian_contract(const ScalarField& phi1, const ScalarField& phi2) {
    require_same_grid(phi1.grid_ptr(), phi2.grid_ptr(), "hessian_contract");
    const Grid& g = phi1.grid();
    const std::size_t dim = g.dim();
    const TensorField h = covariant_hessian(phi2);
    const VectorField v = gradient(phi1);
    OneForm out(phi1.grid_ptr());
    for (std::size_t p = 0; p < g.size(); ++p)
        for (std::size_t i = 0; i < dim; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < dim; ++j) s += h(p, i * dim + j) * v(p, j);
            out(p, i) = s;
        }
    return out;
}

// -div(rho alpha^sharp): the density variation carried by a one-form.
inline ScalarField flux_variation(const ScalarField& rho, const OneForm& alpha) {
    VectorField flux = raise(alpha);
    for (std::size_t a = 0; a < rho.grid().dim(); ++a)
        for (std::size_t p = 0; p < rho.size(); ++p) flux(p, a) *= rho(p);
    return -divergence(flux);
}

// Potential of the Levi-Civita derivative: G_rho d_rho^* ((nabla nabla phi2)(grad phi1, .)).
inline Potential covariant_derivative(const WeightedLaplacian& op, const ScalarField& phi1, const ScalarField& phi2) {
    return project_exact(op, hessian_contract(phi1, phi2));
}
inline Potential covariant_derivative(const Density& rho, const ScalarField& phi1, const ScalarField& phi2) {
    return covariant_derivative(WeightedLaplacian(rho), phi1, phi2);
}
inline Potential covariant_derivative(const Density& rho, const Potential& phi1, const Potential& phi2) {
    return covariant_derivative(rho, phi1.field(), phi2.field());
}

// Potential of [V_phi1, V_phi2] = G_rho d_rho^* (H2(grad phi1) - H1(grad phi2)).
inline Potential commutator(const WeightedLaplacian& op, const ScalarField& phi1, const ScalarField& phi2) {
    return project_exact(op, hessian_contract(phi1, phi2) - hessian_contract(phi2, phi1));
}
inline Potential commutator(const Density& rho, const ScalarField& phi1, const ScalarField& phi2) {
    return commutator(WeightedLaplacian(rho), phi1, phi2);
}
inline Potential commutator(const Density& rho, const Potential& phi1, const Potential& phi2) {
    return commutator(rho, phi1.field(), phi2.field());
}

// The two forms of the commutator's density variation.
//   direct: -div(rho (H2 grad phi1 - H1 grad phi2))
//   nested: div(div(rho grad phi1) grad phi2) - div(div(rho grad phi2) grad phi1)
struct CommutatorVariation {
    ScalarField direct;
    ScalarField nested;
};

inline CommutatorVariation commutator_density_variation(const Density& rho, const ScalarField& phi1,
                                                        const ScalarField& phi2) {
    const ScalarField& r = rho.field();
    ScalarField direct = flux_variation(r, hessian_contract(phi1, phi2) - hessian_contract(phi2, phi1));
    const ScalarField d1 = apply_tangent(rho, phi1);  // -div(rho grad phi1)
    const ScalarField d2 = apply_tangent(rho, phi2);
    // div(div(rho grad phi1) grad phi2) = flux_variation(d1, d phi2)
    ScalarField nested = flux_variation(d1, differential(phi2)) - flux_variation(d2, differential(phi1));
    return {std::move(direct), std::move(nested)};
}

// Commutator of the two tangent flows by two-parameter central differencing:
// d/de1 d/de2 of the composed first-order flows, ordered both ways.
inline ScalarField commutator_flow_variation(const Density& rho, const ScalarField& phi1, const ScalarField& phi2,
                                             double eps = 1e-3) {
    auto step = [](const ScalarField& r, const ScalarField& phi, double e) {
        ScalarField out = r;
        out.axpy(e, flux_variation(r, differential(phi)));
        return out;
    };
    auto mixed = [&](const ScalarField& first, const ScalarField& second) {
        auto f = [&](double e1, double e2) { return step(step(rho.field(), first, e1), second, e2); };
        ScalarField m = f(eps, eps) - f(eps, -eps) - f(-eps, eps) + f(-eps, -eps);
        return m * (1.0 / (4.0 * eps * eps));
    };
    // [V1, V2] F = V1 (V2 F) - V2 (V1 F): flow along phi1 first, then phi2.
    return mixed(phi1, phi2) - mixed(phi2, phi1);
}

// int nabla_i phi1 nabla_j phi3 nabla^i nabla^j phi2 rho dvol
inline double connection_coefficient(const Density& rho, const ScalarField& phi1, const ScalarField& phi2,
                                     const ScalarField& phi3) {
    require_same_grid(rho.grid_ptr(), phi1.grid_ptr(), "connection_coefficient");
    require_same_grid(rho.grid_ptr(), phi3.grid_ptr(), "connection_coefficient");
    return weighted_inner(rho, hessian_contract(phi1, phi2), differential(phi3));
}
inline double connection_coefficient(const Density& rho, const Potential& phi1, const Potential& phi2,
                                     const Potential& phi3) {
    return connection_coefficient(rho, phi1.field(), phi2.field(), phi3.field());
}

namespace detail {

inline double otto_pairing(const ScalarField& rho, const ScalarField& a, const ScalarField& b) {
    return integrate(pointwise_inner(differential(a), differential(b)) * rho);
}

} // namespace detail

// V_dir <V_a, V_b> at rho by central differences along the first-order flow of dir.
inline double directional_derivative_of_metric(const Density& rho, const ScalarField& dir, const ScalarField& a,
                                               const ScalarField& b, double eps = 1e-4) {
    const ScalarField dr = apply_tangent(rho, dir);
    ScalarField plus = rho.field(), minus = rho.field();
    plus.axpy(eps, dr);
    minus.axpy(-eps, dr);
    return (detail::otto_pairing(plus, a, b) - detail::otto_pairing(minus, a, b)) / (2.0 * eps);
}

// Right-hand side of the Koszul formula for 2 <nabla_{V1} V2, V3>.
inline double koszul_rhs(const Density& rho, const ScalarField& phi1, const ScalarField& phi2,
                         const ScalarField& phi3, double eps = 1e-4) {
    const WeightedLaplacian op(rho);
    const double d1 = directional_derivative_of_metric(rho, phi1, phi2, phi3, eps);
    const double d2 = directional_derivative_of_metric(rho, phi2, phi3, phi1, eps);
    const double d3 = directional_derivative_of_metric(rho, phi3, phi1, phi2, eps);
    const double c12 = otto_inner(rho, phi3, commutator(op, phi1, phi2).field());
    const double c13 = otto_inner(rho, phi2, commutator(op, phi1, phi3).field());
    const double c23 = otto_inner(rho, phi1, commutator(op, phi2, phi3).field());
    return d1 + d2 - d3 + c12 - c13 - c23;
}

// Time-sampled curve t -> (rho(t), phi(t)) obeying the continuity equation.
class DensityCurve {
public:
    static constexpr double kDefaultContinuityTolerance = 1e-3;

    DensityCurve() = default;
    DensityCurve(std::vector<double> times, std::vector<Density> rho, std::vector<Potential> phi,
                 double continuity_tolerance = kDefaultContinuityTolerance)
        : t_(std::move(times)), rho_(std::move(rho)), phi_(std::move(phi)), tol_(continuity_tolerance) {
        if (t_.size() < 2) throw invalid_argument("DensityCurve: need at least two time nodes");
        if (rho_.size() != t_.size() || phi_.size() != t_.size())
            throw invalid_argument("DensityCurve: node count mismatch");
        for (std::size_t j = 0; j < t_.size(); ++j) {
            if (!std::isfinite(t_[j])) throw invalid_argument("DensityCurve: non-finite time");
            if (j > 0 && !(t_[j] > t_[j - 1])) throw invalid_argument("DensityCurve: times must increase");
            require_same_grid(rho_[0].grid_ptr(), rho_[j].grid_ptr(), "DensityCurve");
            require_same_grid(rho_[0].grid_ptr(), phi_[j].grid_ptr(), "DensityCurve");
            phi_[j] = phi_[j].reanchored(rho_[j]);
        }
        if (!(tol_ > 0.0)) throw invalid_argument("DensityCurve: tolerance must be positive");
        residual_ = compute_residual();
        if (residual_ > tol_)
            throw invariant_violation("DensityCurve: continuity residual " + std::to_string(residual_) +
                                      " exceeds tolerance " + std::to_string(tol_));
    }

    // rho(t) = rho0 for all t, with zero velocity.
    static DensityCurve constant(const Density& rho0, std::size_t intervals, double t_final = 1.0) {
        std::vector<double> t(intervals + 1);
        for (std::size_t j = 0; j <= intervals; ++j) t[j] = t_final * static_cast<double>(j) / intervals;
        return DensityCurve(t, std::vector<Density>(intervals + 1, rho0),
                            std::vector<Potential>(intervals + 1, Potential(rho0, ScalarField(rho0.grid_ptr()))));
    }

    std::size_t size() const { return t_.size(); }
    std::size_t intervals() const { return t_.size() - 1; }
    double time(std::size_t j) const { return t_[j]; }
    const std::vector<double>& times() const { return t_; }
    const Density& density(std::size_t j) const { return rho_[j]; }
    const Potential& potential(std::size_t j) const { return phi_[j]; }
    const GridPtr& grid_ptr() const { return rho_[0].grid_ptr(); }
    const Grid& grid() const { return rho_[0].grid(); }
    double tolerance() const { return tol_; }
    double continuity_residual() const { return residual_; }
    bool uniform_times(double rel = 1e-12) const {
        const double dt = (t_.back() - t_.front()) / static_cast<double>(intervals());
        for (std::size_t j = 0; j + 1 < t_.size(); ++j)
            if (std::abs(t_[j + 1] - t_[j] - dt) > rel * std::max(1.0, dt)) return false;
        return true;
    }

    // Max-norm of (rho_{j+1} - rho_j)/dt + div(rho_{j+1/2} grad phi_{j+1/2}) over all intervals.
    double compute_residual() const {
        double worst = 0.0;
        for (std::size_t j = 0; j + 1 < t_.size(); ++j) {
            const double dt = t_[j + 1] - t_[j];
            ScalarField rm = (rho_[j].field() + rho_[j + 1].field()) * 0.5;
            ScalarField pm = (phi_[j].field() + phi_[j + 1].field()) * 0.5;
            ScalarField r = (rho_[j + 1].field() - rho_[j].field()) * (1.0 / dt) - flux_variation(rm, differential(pm));
            worst = std::max(worst, r.max_abs());
        }
        return worst;
    }

private:
    std::vector<double> t_;
    std::vector<Density> rho_;
    std::vector<Potential> phi_;
    double tol_ = kDefaultContinuityTolerance;
    double residual_ = 0.0;
};

// Builds a curve from a density path by solving the continuity equation for phi(t):
// phi(t) = G_rho (d rho/dt / rho).  When drho is empty the time derivative is taken
// by fourth-order central differences with step 1e-3.
inline DensityCurve curve_from_density_path(const GridPtr& grid, const std::function<ScalarField(double)>& rho_of_t,
                                            std::size_t intervals, double t_final = 1.0,
                                            std::function<ScalarField(double)> drho = {},
                                            double continuity_tolerance = DensityCurve::kDefaultContinuityTolerance) {
    if (intervals < 1) throw invalid_argument("curve_from_density_path: need at least one interval");
    std::vector<double> t(intervals + 1);
    std::vector<Density> rho;
    std::vector<Potential> phi;
    for (std::size_t j = 0; j <= intervals; ++j) {
        t[j] = t_final * static_cast<double>(j) / static_cast<double>(intervals);
        ScalarField raw = rho_of_t(t[j]);
        require_same_grid(grid, raw.grid_ptr(), "curve_from_density_path");
        const double mass = integrate(raw);
        Density r(raw);
        ScalarField dr(grid);
        if (drho) {
            dr = drho(t[j]) * (1.0 / mass);
        } else {
            const double h = 1e-3;
            auto at = [&](double s) {
                ScalarField v = rho_of_t(s);
                return v * (1.0 / integrate(v));
            };
            dr = (at(t[j] - 2 * h) * (1.0 / 12) - at(t[j] - h) * (8.0 / 12) + at(t[j] + h) * (8.0 / 12) -
                  at(t[j] + 2 * h) * (1.0 / 12)) *
                 (1.0 / h);
        }
        ScalarField f(grid);
        for (std::size_t p = 0; p < grid->size(); ++p) f(p) = dr(p) / r(p);
        // Remove round-off in the weighted mean so the Green solve is well posed.
        const double mean = integrate(f * r.field());
        for (std::size_t p = 0; p < grid->size(); ++p) f(p) -= mean;
        phi.push_back(solve_green(r, f));
        rho.push_back(std::move(r));
    }
    return DensityCurve(std::move(t), std::move(rho), std::move(phi), continuity_tolerance);
}

struct TransportOptions {
    double drift_tolerance = 1e-6;
    bool throw_on_drift = true;
    SolverOptions solver{};
};

// A potential eta(t) per curve node; parallel along the curve.
struct TransportState {
    std::shared_ptr<const DensityCurve> curve;
    std::vector<Potential> eta;
    std::vector<double> norms;  // Otto norm of eta(t_j) at rho(t_j)
    double drift = 0.0;         // max_j |norm_j - norm_0|
    double tolerance = 0.0;
    bool node_stage = false;    // RK4 stages placed on curve nodes

    double initial_norm() const { return norms.front(); }
    double final_norm() const { return norms.back(); }
};

namespace detail {

// d eta / dt = -(covariant derivative of eta along phi), gauged at rho.
inline ScalarField transport_rate(const Density& rho, const ScalarField& phi, const ScalarField& eta,
                                  const SolverOptions& opt) {
    const WeightedLaplacian op(rho, opt);
    return -covariant_derivative(op, phi, eta).field();
}

inline Density blend(const Density& a, const Density& b, double s) {
    return Density(a.field() * (1.0 - s) + b.field() * s);
}

} // namespace detail

// Parallel transport of eta0 along the curve: V_{d eta/dt} + nabla_{V_phi} V_eta = 0.
// Fourth-order Runge-Kutta in t.  With an even number of uniform intervals the
// stages sit on stored nodes (step 2 dt, midpoint at the odd node) and odd nodes are
// filled by cubic Hermite interpolation; otherwise stage data is interpolated
// linearly in t between nodes.
inline TransportState parallel_transport(const DensityCurve& curve, const ScalarField& eta0,
                                         TransportOptions opt = {}) {
    require_same_grid(curve.grid_ptr(), eta0.grid_ptr(), "parallel_transport");
    TransportState st;
    st.curve = std::make_shared<const DensityCurve>(curve);
    st.tolerance = opt.drift_tolerance;
    const std::size_t n = curve.size();
    std::vector<ScalarField> eta(n);
    eta[0] = Potential(curve.density(0), eta0).field();

    auto rate = [&](const Density& r, const ScalarField& phi, const ScalarField& e) {
        return detail::transport_rate(r, phi, e, opt.solver);
    };

    const bool node_stage = curve.intervals() % 2 == 0 && curve.uniform_times();
    st.node_stage = node_stage;
    if (node_stage) {
        ScalarField k_start = rate(curve.density(0), curve.potential(0).field(), eta[0]);
        for (std::size_t j = 0; j + 2 < n; j += 2) {
            const double h = curve.time(j + 2) - curve.time(j);
            const Density& rm = curve.density(j + 1);
            const ScalarField& pm = curve.potential(j + 1).field();
            const ScalarField& k1 = k_start;
            ScalarField k2 = rate(rm, pm, eta[j] + k1 * (0.5 * h));
            ScalarField k3 = rate(rm, pm, eta[j] + k2 * (0.5 * h));
            ScalarField k4 = rate(curve.density(j + 2), curve.potential(j + 2).field(), eta[j] + k3 * h);
            ScalarField next = eta[j] + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            next = Potential(curve.density(j + 2), next).field();
            ScalarField k_end = rate(curve.density(j + 2), curve.potential(j + 2).field(), next);
            // Cubic Hermite value at the midpoint.
            ScalarField mid = (eta[j] + next) * 0.5 + (k_start - k_end) * (h / 8.0);
            eta[j + 1] = Potential(rm, mid).field();
            eta[j + 2] = std::move(next);
            k_start = std::move(k_end);
        }
    } else {
        for (std::size_t j = 0; j + 1 < n; ++j) {
            const double h = curve.time(j + 1) - curve.time(j);
            const Density rm = detail::blend(curve.density(j), curve.density(j + 1), 0.5);
            const ScalarField pm = (curve.potential(j).field() + curve.potential(j + 1).field()) * 0.5;
            ScalarField k1 = rate(curve.density(j), curve.potential(j).field(), eta[j]);
            ScalarField k2 = rate(rm, pm, eta[j] + k1 * (0.5 * h));
            ScalarField k3 = rate(rm, pm, eta[j] + k2 * (0.5 * h));
            ScalarField k4 = rate(curve.density(j + 1), curve.potential(j + 1).field(), eta[j] + k3 * h);
            ScalarField next = eta[j] + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            eta[j + 1] = Potential(curve.density(j + 1), next).field();
        }
    }

    for (std::size_t j = 0; j < n; ++j) {
        st.eta.emplace_back(curve.density(j), eta[j]);
        st.norms.push_back(otto_norm(curve.density(j), st.eta.back()));
        st.drift = std::max(st.drift, std::abs(st.norms.back() - st.norms.front()));
    }
    if (opt.throw_on_drift && st.drift > opt.drift_tolerance)
        throw invariant_violation("parallel_transport: Otto-norm drift " + std::to_string(st.drift) +
                                  " exceeds tolerance " + std::to_string(opt.drift_tolerance));
    return st;
}
inline TransportState parallel_transport(const DensityCurve& curve, const Potential& eta0, TransportOptions opt = {}) {
    return parallel_transport(curve, eta0.field(), opt);
}

// Angle between eta(0) and eta(1) in the Otto metric; meaningful for closed curves.
inline double holonomy_angle(const TransportState& st) {
    const Density& r0 = st.curve->density(0);
    const Potential end = st.eta.back().reanchored(r0);
    const double a = otto_norm(r0, st.eta.front());
    const double b = otto_norm(r0, end);
    if (a == 0.0 || b == 0.0) return 0.0;
    const double c = std::clamp(otto_inner(r0, st.eta.front(), end) / (a * b), -1.0, 1.0);
    return std::acos(c);
}

// Largest eigenvalue over M of -g^{-1} nabla nabla phi0; infinite horizon when it is <= 0.
inline double shock_horizon(const ScalarField& phi0) {
    const Grid& g = phi0.grid();
    const TensorField h = covariant_hessian(phi0);
    double lam = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) {
        if (g.dim() == 1) {
            lam = std::max(lam, -h(p) * g.inverse_metric(p, 0, 0));
        } else {
            // Diagonal conformal metric: eigenvalues of -H scaled by g^{11}.
            const double a = -h(p, 0), b = -h(p, 1), d = -h(p, 3);
            const double tr = 0.5 * (a + d), disc = std::sqrt(0.25 * (a - d) * (a - d) + b * b);
            lam = std::max(lam, (tr + disc) * g.inverse_metric(p, 0, 0));
        }
    }
    return lam > 0.0 ? 1.0 / lam : std::numeric_limits<double>::infinity();
}

struct GeodesicOptions {
    bool filter = true;
    double cfl = 0.5;
    double horizon_fraction = 0.8;
    double continuity_tolerance = DensityCurve::kDefaultContinuityTolerance;
};

// Initial-value geodesic: d phi/dt + |grad phi|^2 / 2 = 0 with d rho/dt = -div(rho grad phi).
// RK4 in time, internal substeps to keep the advective CFL number below opt.cfl, optional
// exponential filter after each substep, and phi re-anchored to rho(t) on every step.
inline DensityCurve geodesic_flow(const Density& rho0, const ScalarField& phi0, double t_final, std::size_t steps,
                                  GeodesicOptions opt = {}) {
    require_same_grid(rho0.grid_ptr(), phi0.grid_ptr(), "geodesic_flow");
    if (steps < 16) throw invalid_argument("geodesic_flow: steps must be at least 16");
    if (!(t_final > 0.0) || !std::isfinite(t_final)) throw invalid_argument("geodesic_flow: t_final must be positive");
    const double horizon = shock_horizon(phi0);
    if (t_final > opt.horizon_fraction * horizon)
        throw invalid_argument("geodesic_flow: t_final " + std::to_string(t_final) + " exceeds " +
                               std::to_string(opt.horizon_fraction) + " of the shock horizon " +
                               std::to_string(horizon));
    const Grid& g = rho0.grid();
    const GridPtr& gp = rho0.grid_ptr();
    const double dt = t_final / static_cast<double>(steps);
    double hmin = g.spacing()[0];
    if (g.dim() == 2) hmin = std::min(hmin, g.spacing()[1]);

    auto speed = [&](const ScalarField& phi) {
        const ScalarField s = pointwise_inner(differential(phi), differential(phi));
        return std::sqrt(s.max_abs());
    };
    const double vmax = speed(phi0);
    const std::size_t sub = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(vmax * dt / (opt.cfl * hmin))));
    const double h = dt / static_cast<double>(sub);

    auto rhs = [&](const ScalarField& phi, const ScalarField& rho, ScalarField& dphi, ScalarField& drho) {
        const OneForm d = differential(phi);
        dphi = pointwise_inner(d, d) * -0.5;
        drho = flux_variation(rho, d);
    };

    ScalarField phi = Potential(rho0, phi0).field();
    ScalarField rho = rho0.field();
    const double e0 = detail::otto_pairing(rho, phi, phi);

    std::vector<double> times{0.0};
    std::vector<Density> rhos{rho0};
    std::vector<Potential> phis{Potential(rho0, phi)};
    ScalarField k1p(gp), k1r(gp), k2p(gp), k2r(gp), k3p(gp), k3r(gp), k4p(gp), k4r(gp);
    for (std::size_t s = 0; s < steps; ++s) {
        for (std::size_t q = 0; q < sub; ++q) {
            rhs(phi, rho, k1p, k1r);
            rhs(phi + k1p * (0.5 * h), rho + k1r * (0.5 * h), k2p, k2r);
            rhs(phi + k2p * (0.5 * h), rho + k2r * (0.5 * h), k3p, k3r);
            rhs(phi + k3p * h, rho + k3r * h, k4p, k4r);
            phi.axpy(h / 6.0, k1p + k2p * 2.0 + k3p * 2.0 + k4p);
            rho.axpy(h / 6.0, k1r + k2r * 2.0 + k3r * 2.0 + k4r);
            if (opt.filter) {
                phi = filtered(phi);
                rho = filtered(rho);
            }
            if (!phi.all_finite() || !rho.all_finite())
                throw numerical_error("geodesic_flow: non-finite state at t = " + std::to_string((s + 1) * dt));
            for (std::size_t p = 0; p < rho.size(); ++p)
                if (!(rho(p) > kPositivityFloor))
                    throw positivity_error("geodesic_flow: density lost positivity at t = " +
                                           std::to_string(s * dt + (q + 1) * h));
            const double mean = integrate(phi * rho) / integrate(rho);
            for (std::size_t p = 0; p < phi.size(); ++p) phi(p) -= mean;
        }
        const double e = detail::otto_pairing(rho, phi, phi);
        if (e > 2.0 * e0 + 1e-300)
            throw numerical_error("geodesic_flow: energy blow-up detected at t = " + std::to_string((s + 1) * dt));
        times.push_back(static_cast<double>(s + 1) * dt);
        rhos.emplace_back(rho);
        phis.emplace_back(rhos.back(), phi);
    }
    return DensityCurve(std::move(times), std::move(rhos), std::move(phis), opt.continuity_tolerance);
}
inline DensityCurve geodesic_flow(const Density& rho0, const Potential& phi0, double t_final, std::size_t steps,
                                  GeodesicOptions opt = {}) {
    return geodesic_flow(rho0, phi0.field(), t_final, steps, opt);
}

// Max-norm of div(rho grad(d phi/dt + |grad phi|^2 / 2)) at interior nodes, with d/dt by
// central differences on the stored samples.
inline double geodesic_residual(const DensityCurve& c) {
    double worst = 0.0;
    for (std::size_t j = 1; j + 1 < c.size(); ++j) {
        const double dt = c.time(j + 1) - c.time(j - 1);
        ScalarField psi = (c.potential(j + 1).field() - c.potential(j - 1).field()) * (1.0 / dt);
        const OneForm d = differential(c.potential(j).field());
        psi.axpy(0.5, pointwise_inner(d, d));
        worst = std::max(worst, flux_variation(c.density(j).field(), differential(psi)).max_abs());
    }
    return worst;
}

struct HopfLaxOptions {
    // Candidate minimizers on a lattice this many times finer than the grid.
    std::size_t candidate_refinement = 1;
    // Newton polish of the best candidate on the trigonometric interpolant of phi0.
    bool polish = true;
};

namespace detail {

inline void require_flat_base(const Grid& g, const char* where) {
    if (g.spec().kind == ManifoldKind::conformal_torus)
        throw invalid_argument(std::string(where) + ": geodesic distance on the conformal torus is not implemented");
}

} // namespace detail

// Hopf-Lax inf-convolution phi(t, m) = inf_{m'} phi0(m') + d(m, m')^2 / (2t) on a flat base with
// the exact periodic distance.  phi0 is taken as its trigonometric interpolant.
inline ScalarField hopf_lax(const ScalarField& phi0, double t, HopfLaxOptions opt = {}) {
    const Grid& g = phi0.grid();
    detail::require_flat_base(g, "hopf_lax");
    if (!(t > 0.0)) throw invalid_argument("hopf_lax: t must be positive");
    if (opt.candidate_refinement < 1) throw invalid_argument("hopf_lax: refinement must be at least 1");
    const std::size_t dim = g.dim();
    const TrigInterpolant ip(phi0);
    const std::size_t r = opt.candidate_refinement;

    // Candidate lattice values.
    const std::size_t cx = g.nx() * r, cy = dim == 2 ? g.ny() * r : 1;
    const double hx = g.period(0) / static_cast<double>(cx);
    const double hy = dim == 2 ? g.period(1) / static_cast<double>(cy) : 0.0;
    std::vector<double> cand(cx * cy);
    for (std::size_t i = 0; i < cx; ++i)
        for (std::size_t j = 0; j < cy; ++j) {
            if (r == 1)
                cand[i * cy + j] = phi0(i * cy + j);
            else
                cand[i * cy + j] = ip(i * hx, j * hy);
        }

    ScalarField out(phi0.grid_ptr());
    for (std::size_t p = 0; p < g.size(); ++p) {
        const double x = g.coord(p, 0), y = dim == 2 ? g.coord(p, 1) : 0.0;
        double best = std::numeric_limits<double>::infinity();
        double bx = 0, by = 0;
        for (std::size_t i = 0; i < cx; ++i) {
            const double dx = g.wrap(i * hx - x, 0);
            for (std::size_t j = 0; j < cy; ++j) {
                const double dy = dim == 2 ? g.wrap(j * hy - y, 1) : 0.0;
                const double v = cand[i * cy + j] + (dx * dx + dy * dy) / (2.0 * t);
                if (v < best) {
                    best = v;
                    bx = dx;
                    by = dy;
                }
            }
        }
        if (opt.polish) {
            // Newton on F(d) = phi0(m + d) + |d|^2 / 2t with backtracking.
            auto value = [&](double ddx, double ddy) {
                return ip(x + ddx, y + ddy) + (ddx * ddx + ddy * ddy) / (2.0 * t);
            };
            for (int it = 0; it < 30; ++it) {
                const auto jet = ip.eval(x + bx, y + by);
                const double gx = jet.d[0] + bx / t;
                double sx, sy = 0.0;
                if (dim == 1) {
                    const double hxx = jet.dd[0][0] + 1.0 / t;
                    sx = hxx > 0 ? -gx / hxx : -gx * t;
                } else {
                    const double gy = jet.d[1] + by / t;
                    const double a = jet.dd[0][0] + 1.0 / t, b = jet.dd[0][1], d = jet.dd[1][1] + 1.0 / t;
                    const double det = a * d - b * b;
                    if (a > 0 && det > 0) {
                        sx = -(d * gx - b * gy) / det;
                        sy = -(a * gy - b * gx) / det;
                    } else {
                        sx = -gx * t;
                        sy = -gy * t;
                    }
                }
                double step = 1.0, trial = value(bx + sx, by + sy);
                while (trial > best && step > 1e-6) {
                    step *= 0.5;
                    trial = value(bx + step * sx, by + step * sy);
                }
                if (trial > best) break;
                bx += step * sx;
                by += step * sy;
                const bool small = std::abs(step * sx) + std::abs(step * sy) < 1e-15;
                best = trial;
                if (small) break;
            }
        }
        out(p) = best;
    }
    return out;
}

} // namespace otto
