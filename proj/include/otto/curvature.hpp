#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "otto/connection.hpp"
#include "otto/sampling.hpp"

namespace otto {

// T_{phi phi'} = (I - Pi_rho)((nabla nabla phi')(grad phi, .)) together with its anchor density.
struct TTensorValue {
    Density rho;
    OneForm form;
    // max-norm of d_rho^* T; zero when T is weighted-orthogonal to every exact form
    double orthogonality_residual = 0.0;

    double norm2() const { return weighted_inner(rho, form, form); }
};

inline double t_pairing(const TTensorValue& a, const TTensorValue& b) {
    require_same_grid(a.rho.grid_ptr(), b.rho.grid_ptr(), "t_pairing");
    return weighted_inner(a.rho, a.form, b.form);
}

inline TTensorValue t_tensor(const WeightedLaplacian& op, const ScalarField& phi, const ScalarField& phi_prime) {
    const Density& rho = op.density();
    require_same_grid(rho.grid_ptr(), phi.grid_ptr(), "t_tensor");
    OneForm alpha = hessian_contract(phi, phi_prime);
    const Potential exact = project_exact(op, alpha);
    alpha -= differential(exact.field());
    TTensorValue t{rho, std::move(alpha), 0.0};
    t.orthogonality_residual = weighted_codifferential(rho, t.form).max_abs();
    return t;
}
inline TTensorValue t_tensor(const Density& rho, const ScalarField& phi, const ScalarField& phi_prime) {
    return t_tensor(WeightedLaplacian(rho), phi, phi_prime);
}
inline TTensorValue t_tensor(const Density& rho, const Potential& phi, const Potential& phi_prime) {
    return t_tensor(rho, phi.field(), phi_prime.field());
}

// int <R(grad a, grad b) grad c, grad d> rho dvol with R(X,Y)Z = K(<Y,Z>X - <X,Z>Y) on 2D bases.
inline double base_curvature_term(const Density& rho, const ScalarField& a, const ScalarField& b,
                                  const ScalarField& c, const ScalarField& d) {
    const Grid& g = rho.grid();
    if (g.dim() == 1 || g.spec().flat()) return 0.0;
    const OneForm da = differential(a), db = differential(b), dc = differential(c), dd = differential(d);
    const ScalarField bc = pointwise_inner(db, dc), ad = pointwise_inner(da, dd);
    const ScalarField ac = pointwise_inner(da, dc), bd = pointwise_inner(db, dd);
    ScalarField f(rho.grid_ptr());
    for (std::size_t p = 0; p < g.size(); ++p) f(p) = g.gauss_curvature(p) * (bc(p) * ad(p) - ac(p) * bd(p)) * rho(p);
    return integrate(f);
}

// <Rbar(V1, V2) V3, V4> = int <R(grad 1, grad 2) grad 3, grad 4> rho
//                         - 2 <T12, T34> + <T23, T14> - <T13, T24>
inline double curvature_quadform(const WeightedLaplacian& op, const ScalarField& p1, const ScalarField& p2,
                                 const ScalarField& p3, const ScalarField& p4) {
    const Density& rho = op.density();
    const double base = base_curvature_term(rho, p1, p2, p3, p4);
    const auto t12 = t_tensor(op, p1, p2), t34 = t_tensor(op, p3, p4);
    const auto t23 = t_tensor(op, p2, p3), t14 = t_tensor(op, p1, p4);
    const auto t13 = t_tensor(op, p1, p3), t24 = t_tensor(op, p2, p4);
    return base - 2.0 * t_pairing(t12, t34) + t_pairing(t23, t14) - t_pairing(t13, t24);
}
inline double curvature_quadform(const Density& rho, const ScalarField& p1, const ScalarField& p2,
                                 const ScalarField& p3, const ScalarField& p4) {
    return curvature_quadform(WeightedLaplacian(rho), p1, p2, p3, p4);
}
inline double curvature_quadform(const Density& rho, const Potential& p1, const Potential& p2, const Potential& p3,
                                 const Potential& p4) {
    return curvature_quadform(rho, p1.field(), p2.field(), p3.field(), p4.field());
}

struct OrthonormalPair {
    ScalarField e1, e2;
};

inline constexpr double kDegenerateGram = 1e-10;

// Otto-metric Gram-Schmidt; rejects pairs whose normalized Gram determinant
// (g11 g22 - g12^2) / (g11 g22) is below 1e-10.
inline OrthonormalPair otto_orthonormalize(const Density& rho, const ScalarField& a, const ScalarField& b) {
    const double g11 = otto_inner(rho, a, a), g22 = otto_inner(rho, b, b), g12 = otto_inner(rho, a, b);
    const double scale = std::max(g11, g22);
    if (!(scale > 0.0) || std::min(g11, g22) <= 1e-20 * scale) throw invalid_argument("sectional_curvature: degenerate 2-plane (zero vector)");
    const double det = (g11 * g22 - g12 * g12) / (g11 * g22);
    if (det < kDegenerateGram)
        throw invalid_argument("sectional_curvature: degenerate 2-plane (normalized Gram determinant " +
                               std::to_string(det) + ")");
    ScalarField e1 = a * (1.0 / std::sqrt(g11));
    ScalarField e2 = b;
    e2.axpy(-otto_inner(rho, b, e1), e1);
    e2 *= 1.0 / std::sqrt(otto_inner(rho, e2, e2));
    return {std::move(e1), std::move(e2)};
}

struct SectionalTerms {
    double base_term = 0;  // int K (|grad e1|^2 |grad e2|^2 - <grad e1, grad e2>^2) rho
    double gram_mass = 0;  // int (|grad e1|^2 |grad e2|^2 - <grad e1, grad e2>^2) rho
    double t_term = 0;     // 3 |T_{e1 e2}|^2
    double value() const { return base_term + t_term; }
};

inline SectionalTerms sectional_terms(const WeightedLaplacian& op, const ScalarField& a, const ScalarField& b) {
    const Density& rho = op.density();
    const auto [e1, e2] = otto_orthonormalize(rho, a, b);
    const Grid& g = rho.grid();
    const OneForm d1 = differential(e1), d2 = differential(e2);
    const ScalarField n1 = pointwise_inner(d1, d1), n2 = pointwise_inner(d2, d2), c = pointwise_inner(d1, d2);
    ScalarField gram(rho.grid_ptr()), weighted(rho.grid_ptr());
    for (std::size_t p = 0; p < g.size(); ++p) {
        const double q = (n1(p) * n2(p) - c(p) * c(p)) * rho(p);
        gram(p) = q;
        weighted(p) = g.gauss_curvature(p) * q;
    }
    SectionalTerms s;
    s.gram_mass = integrate(gram);
    s.base_term = g.spec().flat() ? 0.0 : integrate(weighted);
    s.t_term = 3.0 * t_tensor(op, e1, e2).norm2();
    return s;
}

inline double sectional_curvature(const WeightedLaplacian& op, const ScalarField& a, const ScalarField& b) {
    return sectional_terms(op, a, b).value();
}
inline double sectional_curvature(const Density& rho, const ScalarField& a, const ScalarField& b) {
    return sectional_curvature(WeightedLaplacian(rho), a, b);
}
inline double sectional_curvature(const Density& rho, const Potential& a, const Potential& b) {
    return sectional_curvature(rho, a.field(), b.field());
}

struct ComparisonSample {
    std::size_t index = 0;
    double min_k = 0;
    double gram_mass = 0;
    double t_term = 0;
    double sectional = 0;
};

struct ComparisonReport {
    std::string manifold;
    std::uint64_t seed = 0;
    double min_base_curvature = 0;
    std::vector<ComparisonSample> samples;
    std::size_t violations = 0;  // samples with sectional < min base curvature
    double min_sectional = std::numeric_limits<double>::infinity();

    bool found_violation() const { return violations > 0; }

    std::string csv() const {
        std::ostringstream os;
        os.precision(17);
        os << "index,min_k,gram_mass,three_t_squared,sectional\n";
        for (const auto& s : samples)
            os << s.index << ',' << s.min_k << ',' << s.gram_mass << ',' << s.t_term << ',' << s.sectional << '\n';
        return os.str();
    }
};

// Samples random densities and 2-planes on the grid and records the sectional curvature
// next to the minimum base curvature, looking for planes with Kbar below min K.
inline ComparisonReport comparison_experiment(const GridPtr& grid, std::size_t samples, std::uint64_t seed,
                                              int band = 0) {
    ComparisonReport rep;
    rep.manifold = std::string(to_string(grid->spec().kind));
    rep.seed = seed;
    double kmin = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < grid->size(); ++p) kmin = std::min(kmin, grid->gauss_curvature(p));
    rep.min_base_curvature = kmin;
    if (band <= 0) band = default_band(*grid);
    Rng rng(seed);
    for (std::size_t i = 0; i < samples; ++i) {
        const Density rho = random_density(grid, rng, std::max(1, band / 2));
        const WeightedLaplacian op(rho);
        SectionalTerms t;
        for (;;) {
            const ScalarField a = random_field(grid, rng, band), b = random_field(grid, rng, band);
            try {
                t = sectional_terms(op, a, b);
                break;
            } catch (const invalid_argument&) {
                // Degenerate draw; sample again.
            }
        }
        ComparisonSample s{i, kmin, t.gram_mass, t.t_term, t.value()};
        rep.min_sectional = std::min(rep.min_sectional, s.sectional);
        if (s.sectional < kmin) ++rep.violations;
        rep.samples.push_back(s);
    }
    return rep;
}

} // namespace otto
