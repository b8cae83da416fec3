#pragma once

#include <algorithm>
#include <cmath>

#include "otto/connection.hpp"
#include "otto/curvature.hpp"
#include "otto/poisson.hpp"
#include "otto/sampling.hpp"

// Residuals of the structural identities, each zero in exact arithmetic.

namespace otto::props {

// |d/de F_phi(rho + e V_psi rho) - <V_phi, V_psi>|
inline double gradient_identity(const Density& rho, const ScalarField& phi, const Potential& psi) {
    const GradientCheck c = metric_gradient_check(rho, phi, psi);
    return std::abs(c.finite_difference - c.metric);
}

// |int f div X + int <grad f, X>|
inline double adjointness(const ScalarField& f, const VectorField& x) {
    return std::abs(integrate(f * divergence(x)) + integrate(pointwise_inner(gradient(f), x)));
}

// max_p |H_01 - H_10|
inline double hessian_symmetry(const ScalarField& f) {
    if (f.grid().dim() == 1) return 0.0;
    const TensorField h = covariant_hessian(f);
    double worst = 0;
    for (std::size_t p = 0; p < f.size(); ++p) worst = std::max(worst, std::abs(h(p, 1) - h(p, 2)));
    return worst;
}

// max_p |tr_g Hess f - div grad f|
inline double trace_identity(const ScalarField& f) {
    return max_abs_diff(trace(covariant_hessian(f)).values(), laplacian(f).values());
}

// tangent distance between Pi(Pi alpha) and Pi alpha
inline double projection_idempotence(const WeightedLaplacian& op, const OneForm& alpha) {
    const Potential once = project_exact(op, alpha);
    const Potential twice = project_exact(op, differential(once.field()));
    return tangent_distance(once, twice);
}

// max_p |f - L G f| for the weighted Laplacian L = -(1/rho) div(rho grad)
inline double green_residual(const Density& rho, const ScalarField& f0) {
    ScalarField f = f0;
    const double mean = integrate(f * rho.field());
    for (std::size_t p = 0; p < f.size(); ++p) f(p) -= mean;
    const Potential phi = solve_green(rho, f);
    return max_abs_diff(weighted_laplacian(rho, phi.field()).values(), f.values());
}

// Torsion: max-norm of the density variation of nabla_1 phi2 - nabla_2 phi1 - [V1, V2],
// with the Lie bracket taken from nested density variations.
inline double torsion(const WeightedLaplacian& op, const ScalarField& a, const ScalarField& b) {
    const Density& rho = op.density();
    const Potential d12 = covariant_derivative(op, a, b), d21 = covariant_derivative(op, b, a);
    const ScalarField lhs = apply_tangent(rho, (d12 - d21).field());
    const CommutatorVariation var = commutator_density_variation(rho, a, b);
    return max_abs_diff(lhs.values(), var.nested.values());
}

// Metric compatibility: |V_a <V_b, V_c> - <nabla_a b, c> - <b, nabla_a c>|
inline double metric_compatibility(const Density& rho, const ScalarField& a, const ScalarField& b,
                                   const ScalarField& c) {
    const double lhs = directional_derivative_of_metric(rho, a, b, c);
    return std::abs(lhs - connection_coefficient(rho, a, b, c) - connection_coefficient(rho, a, c, b));
}

// max of the nodewise |T_ab + T_ba| and the codifferentials d_rho^* T_ab, d_rho^* T_ba
inline double t_tensor_identities(const WeightedLaplacian& op, const ScalarField& a, const ScalarField& b) {
    const TTensorValue tab = t_tensor(op, a, b), tba = t_tensor(op, b, a);
    return std::max({(tab.form + tba.form).max_abs(), tab.orthogonality_residual, tba.orthogonality_residual});
}

// max of the two antisymmetries, pair symmetry and the first Bianchi cyclic sum
inline double curvature_symmetries(const WeightedLaplacian& op, const ScalarField& a, const ScalarField& b,
                                   const ScalarField& c, const ScalarField& d) {
    const double q = curvature_quadform(op, a, b, c, d);
    const double anti1 = std::abs(q + curvature_quadform(op, b, a, c, d));
    const double anti2 = std::abs(q + curvature_quadform(op, a, b, d, c));
    const double pair = std::abs(q - curvature_quadform(op, c, d, a, b));
    const double bianchi = std::abs(q + curvature_quadform(op, b, c, a, d) + curvature_quadform(op, c, a, b, d));
    return std::max({anti1, anti2, pair, bianchi});
}

} // namespace otto::props
