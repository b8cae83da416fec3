#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "otto/curvature.hpp"

using namespace otto;
using Catch::Approx;

namespace {

GridPtr circle(std::size_t n) { return build_grid(ManifoldSpec::circle(), n); }
GridPtr torus(std::size_t n) { return build_grid(ManifoldSpec::flat_torus(), n, n); }
GridPtr conformal(std::size_t n) {
    return build_grid(ManifoldSpec::conformal_torus(ConformalFactor::fourier({{0.3, 1, 0, 0.0}})), n, n);
}
ScalarField wave(const GridPtr& g, double (*f)(double), double a = 1.0) {
    return sample(g, [=](double x, double) { return a * f(x); });
}

} // namespace

TEST_CASE("t-tensor", "[curvature]") {
    auto g = circle(64);
    auto u = Density::uniform(g);
    auto p1 = wave(g, std::sin, std::sqrt(2.0)), p2 = wave(g, std::cos, std::sqrt(2.0));
    REQUIRE(t_tensor(u, p1, p1).form.max_abs() < 1e-12);
    auto t = t_tensor(u, p1, p2);
    for (std::size_t p = 0; p < g->size(); ++p) REQUIRE(t.form(p) == Approx(-1.0).margin(1e-12));
    REQUIRE(t.norm2() == Approx(1.0).epsilon(1e-12));
    REQUIRE(t.orthogonality_residual < 1e-9);

    Rng rng(17);
    for (auto gg : {circle(64), torus(32), conformal(32)}) {
        auto rho = random_density(gg, rng);
        const WeightedLaplacian op(rho);
        for (int s = 0; s < 4; ++s) {
            auto a = random_field(gg, rng), b = random_field(gg, rng);
            auto tab = t_tensor(op, a, b), tba = t_tensor(op, b, a);
            REQUIRE((tab.form + tba.form).max_abs() < 1e-9);
            REQUIRE(tab.orthogonality_residual < 1e-9);
            for (int k = 0; k < 2; ++k)
                REQUIRE(std::abs(weighted_inner(rho, tab.form, differential(random_field(gg, rng)))) < 1e-9);
        }
    }
}

TEST_CASE("curvature quadform", "[curvature]") {
    auto g = circle(64);
    auto u = Density::uniform(g);
    auto p1 = wave(g, std::sin, std::sqrt(2.0)), p2 = wave(g, std::cos, std::sqrt(2.0));
    REQUIRE(curvature_quadform(u, p1, p2, p2, p1) == Approx(3.0).epsilon(1e-10));
    REQUIRE(std::abs(curvature_quadform(u, p1, p1, p2, p1)) < 1e-12);

    Rng rng(23);
    for (auto gg : {circle(64), torus(24), conformal(24)}) {
        auto rho = random_density(gg, rng);
        const WeightedLaplacian op(rho);
        for (int s = 0; s < 2; ++s) {
            auto a = random_field(gg, rng), b = random_field(gg, rng), c = random_field(gg, rng),
                 d = random_field(gg, rng);
            const double q = curvature_quadform(op, a, b, c, d);
            REQUIRE(std::abs(q + curvature_quadform(op, b, a, c, d)) < 1e-8);
            REQUIRE(std::abs(q + curvature_quadform(op, a, b, d, c)) < 1e-8);
            REQUIRE(std::abs(q - curvature_quadform(op, c, d, a, b)) < 1e-8);
            const double bianchi = q + curvature_quadform(op, b, c, a, d) + curvature_quadform(op, c, a, b, d);
            REQUIRE(std::abs(bianchi) < 1e-8);
        }
    }
}

TEST_CASE("sectional curvature", "[curvature]") {
    auto g = circle(64);
    auto u = Density::uniform(g);
    auto p1 = wave(g, std::sin, std::sqrt(2.0)), p2 = wave(g, std::cos, std::sqrt(2.0));
    REQUIRE(sectional_curvature(u, p1, p2) == Approx(3.0).epsilon(1e-10));
    // Non-orthonormal inputs spanning the same plane give the same value.
    REQUIRE(sectional_curvature(u, p1 * 3.0, p2 + p1 * 0.5) == Approx(3.0).epsilon(1e-10));
    REQUIRE_THROWS_AS(sectional_curvature(u, p1, p1 * 2.0), invalid_argument);
    REQUIRE_THROWS_AS(sectional_curvature(u, p1, constant_field(g, 1.0)), invalid_argument);

    Rng rng(29);
    for (auto gg : {circle(64), torus(24), conformal(24)}) {
        auto rho = random_density(gg, rng);
        const WeightedLaplacian op(rho);
        for (int s = 0; s < 4; ++s) {
            auto a = random_field(gg, rng), b = random_field(gg, rng);
            const double k = sectional_curvature(op, a, b);
            if (gg->spec().flat()) REQUIRE(k >= -1e-9);
            auto [e1, e2] = otto_orthonormalize(rho, a, b);
            REQUIRE(std::abs(k - curvature_quadform(op, e1, e2, e2, e1)) < 1e-9);
        }
    }
}

TEST_CASE("comparison experiment", "[curvature]") {
    auto empty = comparison_experiment(torus(16), 0, 1);
    REQUIRE(empty.samples.empty());
    auto flat = comparison_experiment(torus(16), 10, 3);
    REQUIRE(flat.samples.size() == 10);
    REQUIRE(flat.min_base_curvature == 0.0);
    for (const auto& s : flat.samples) REQUIRE(s.sectional >= -1e-9);
    auto conf = comparison_experiment(conformal(16), 5, 7);
    REQUIRE(conf.min_base_curvature < 0.0);
    REQUIRE(conf.samples.size() == 5);
    auto again = comparison_experiment(conformal(16), 5, 7);
    REQUIRE(again.csv() == conf.csv());
}
