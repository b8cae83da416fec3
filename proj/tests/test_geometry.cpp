#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "otto/differential.hpp"
#include "otto/sampling.hpp"

using namespace otto;
using Catch::Approx;

namespace {

constexpr double pi = std::numbers::pi;

GridPtr circle(std::size_t n) { return build_grid(ManifoldSpec::circle(), n); }
GridPtr torus(std::size_t n) { return build_grid(ManifoldSpec::flat_torus(), n, n); }
GridPtr conformal(std::size_t n) {
    return build_grid(ManifoldSpec::conformal_torus(ConformalFactor::fourier({{0.3, 1, 0, 0.0}})), n, n);
}

} // namespace

TEST_CASE("build_grid populates metric data", "[geometry]") {
    SECTION("circle") {
        auto g = circle(64);
        REQUIRE(g->size() == 64);
        for (std::size_t p = 0; p < g->size(); ++p) {
            REQUIRE(g->weight(p) == Approx(2 * pi / 64).epsilon(1e-15));
            REQUIRE(g->metric(p, 0, 0) == 1.0);
            REQUIRE(g->christoffel(p, 0, 0, 0) == 0.0);
        }
        REQUIRE(g->total_volume() == Approx(2 * pi).epsilon(1e-14));
    }
    SECTION("flat torus") {
        auto g = torus(32);
        REQUIRE(g->weight(17) == Approx(std::pow(2 * pi / 32, 2)).epsilon(1e-15));
        REQUIRE(g->total_volume() == Approx(4 * pi * pi).epsilon(1e-13));
    }
    SECTION("conformal torus") {
        auto g = conformal(32);
        // int e^{0.6 cos x} dx dy = 4 pi^2 I0(0.6)
        REQUIRE(g->total_volume() == Approx(4 * pi * pi * std::cyl_bessel_i(0.0, 0.6)).epsilon(1e-13));
        std::mt19937_64 rng(3);
        std::uniform_int_distribution<std::size_t> pick(0, g->size() - 1);
        for (int t = 0; t < 10; ++t) {
            const std::size_t p = pick(rng);
            const double x = g->coord(p, 0);
            const double ux = -0.3 * std::sin(x);
            REQUIRE(g->christoffel(p, 0, 0, 0) == Approx(ux).margin(1e-14));
            REQUIRE(g->christoffel(p, 1, 1, 0) == Approx(ux).margin(1e-14));
            REQUIRE(g->christoffel(p, 0, 1, 1) == Approx(-ux).margin(1e-14));
            REQUIRE(g->christoffel(p, 1, 0, 0) == 0.0);
            REQUIRE(g->metric(p, 0, 0) == Approx(std::exp(0.6 * std::cos(x))).epsilon(1e-14));
        }
    }
    SECTION("errors") {
        REQUIRE_THROWS_AS(build_grid(ManifoldSpec::circle(), 0), invalid_argument);
        REQUIRE_THROWS_AS(build_grid(ManifoldSpec::circle(), 4), invalid_argument);
        REQUIRE_THROWS_AS(build_grid(ManifoldSpec::circle(-1.0), 16), invalid_argument);
        auto bad = ManifoldSpec::conformal_torus(ConformalFactor::from_function([](double, double) { return NAN; }));
        REQUIRE_THROWS_AS(build_grid(bad, 16, 16), invalid_argument);
    }
}

TEST_CASE("callable conformal factor matches the Fourier form", "[geometry]") {
    auto a = conformal(32);
    auto b = build_grid(ManifoldSpec::conformal_torus(ConformalFactor::from_function(
                            [](double x, double) { return 0.3 * std::cos(x); })),
                        32, 32);
    for (std::size_t p = 0; p < a->size(); ++p) {
        REQUIRE(b->christoffel(p, 0, 0, 0) == Approx(a->christoffel(p, 0, 0, 0)).margin(1e-12));
        REQUIRE(b->gauss_curvature(p) == Approx(a->gauss_curvature(p)).margin(1e-11));
    }
}

TEST_CASE("gradient and divergence", "[geometry]") {
    SECTION("circle sin -> cos") {
        auto g = circle(64);
        auto f = sample(g, [](double x, double) { return std::sin(x); });
        auto grad = gradient(f);
        for (std::size_t p = 0; p < g->size(); ++p) REQUIRE(grad(p, 0) == Approx(std::cos(g->coord(p, 0))).margin(1e-13));
        auto div = divergence(VectorField(g, sample(g, [](double x, double) { return std::cos(x); }).data()));
        for (std::size_t p = 0; p < g->size(); ++p) REQUIRE(div(p) == Approx(-std::sin(g->coord(p, 0))).margin(1e-13));
    }
    SECTION("constant has zero gradient") {
        for (auto g : {circle(32), torus(16), conformal(16)}) {
            auto grad = gradient(constant_field(g, 2.5));
            REQUIRE(grad.max_abs() < 1e-12);
            REQUIRE(divergence(VectorField(g)).max_abs() == 0.0);
        }
    }
    SECTION("conformal raise") {
        auto g = conformal(32);
        auto grad = gradient(sample(g, [](double x, double) { return std::sin(x); }));
        for (std::size_t p = 0; p < g->size(); ++p) {
            const double x = g->coord(p, 0);
            REQUIRE(grad(p, 0) == Approx(std::exp(-0.6 * std::cos(x)) * std::cos(x)).margin(1e-12));
            REQUIRE(grad(p, 1) == Approx(0.0).margin(1e-12));
        }
    }
    SECTION("fd4 fallback is fourth order") {
        double prev = 0;
        for (std::size_t n : {16, 32, 64}) {
            auto g = build_grid(ManifoldSpec::circle(), n, 1, DiffScheme::fd4);
            auto d = partial(sample(g, [](double x, double) { return std::sin(x); }), 0);
            double err = 0;
            for (std::size_t p = 0; p < n; ++p) err = std::max(err, std::abs(d(p) - std::cos(g->coord(p, 0))));
            if (prev > 0) REQUIRE(prev / err > 14.0);
            prev = err;
        }
    }
}

TEST_CASE("adjointness, divergence theorem and hessian symmetry on every manifold", "[geometry][property]") {
    Rng rng(11);
    for (auto g : {circle(64), torus(32), conformal(32)}) {
        for (int t = 0; t < 10; ++t) {
            auto f = random_field(g, rng);
            VectorField x(g);
            for (std::size_t a = 0; a < g->dim(); ++a) {
                auto c = random_field(g, rng);
                for (std::size_t p = 0; p < g->size(); ++p) x(p, a) = c(p);
            }
            const double lhs = integrate(f * divergence(x));
            const double rhs = -integrate(pointwise_inner(gradient(f), x));
            REQUIRE(std::abs(lhs - rhs) < 1e-10);
            REQUIRE(std::abs(integrate(divergence(x))) < 1e-10);

            auto h = covariant_hessian(f);
            if (g->dim() == 2)
                for (std::size_t p = 0; p < g->size(); ++p) REQUIRE(h(p, 1) == h(p, 2));
            auto tr = trace(h);
            auto lap = laplacian(f);
            REQUIRE(max_abs_diff(tr.values(), lap.values()) < 1e-8);
        }
    }
}

TEST_CASE("covariant hessian closed forms", "[geometry]") {
    auto c = circle(32);
    auto h1 = covariant_hessian(sample(c, [](double x, double) { return std::sin(x); }));
    for (std::size_t p = 0; p < c->size(); ++p) REQUIRE(h1(p) == Approx(-std::sin(c->coord(p, 0))).margin(1e-12));
    auto t = torus(32);
    auto h2 = covariant_hessian(sample(t, [](double x, double y) { return std::sin(x) * std::sin(y); }));
    for (std::size_t p = 0; p < t->size(); ++p) {
        const double x = t->coord(p, 0), y = t->coord(p, 1);
        REQUIRE(h2(p, 0) == Approx(-std::sin(x) * std::sin(y)).margin(1e-12));
        REQUIRE(h2(p, 1) == Approx(std::cos(x) * std::cos(y)).margin(1e-12));
        REQUIRE(h2(p, 3) == Approx(-std::sin(x) * std::sin(y)).margin(1e-12));
    }
    REQUIRE(covariant_hessian(constant_field(t, 1.0)).max_abs() < 1e-12);
}

TEST_CASE("gaussian curvature", "[geometry]") {
    REQUIRE(gauss_curvature(circle(16)).max_abs() == 0.0);
    REQUIRE(gauss_curvature(torus(16)).max_abs() == 0.0);
    auto g = conformal(32);
    auto k = gauss_curvature(g);
    for (std::size_t p = 0; p < g->size(); p += 37) {
        const double x = g->coord(p, 0);
        REQUIRE(k(p) == Approx(0.3 * std::cos(x) * std::exp(-0.6 * std::cos(x))).margin(1e-14));
    }
}

TEST_CASE("integration", "[geometry]") {
    auto g = circle(64);
    REQUIRE(integrate(constant_field(g, 1.0)) == Approx(2 * pi).epsilon(1e-15));
    REQUIRE(std::abs(integrate(sample(g, [](double x, double) { return std::sin(x); }))) < 1e-12);
    REQUIRE(integrate(sample(g, [](double x, double) { return std::cos(x) * std::cos(x); })) ==
            Approx(pi).epsilon(1e-14));
}

TEST_CASE("spectral convergence on flat grids", "[geometry]") {
    // f = exp(sin x) is analytic; the derivative error should collapse super-algebraically.
    std::vector<double> err;
    for (std::size_t n : {16, 32, 64}) {
        auto g = circle(n);
        auto d = partial(sample(g, [](double x, double) { return std::exp(std::sin(x)); }), 0);
        double e = 0;
        for (std::size_t p = 0; p < n; ++p) {
            const double x = g->coord(p, 0);
            e = std::max(e, std::abs(d(p) - std::cos(x) * std::exp(std::sin(x))));
        }
        err.push_back(e);
    }
    REQUIRE(err[0] / err[1] > 1e3);
    REQUIRE(err[2] < 1e-12);
}

TEST_CASE("trig interpolant and filter", "[geometry]") {
    auto g = torus(16);
    auto f = sample(g, [](double x, double y) { return std::sin(2 * x) * std::cos(y) + 0.1 * std::cos(8 * x); });
    TrigInterpolant ip(f);
    const double x = 0.37, y = 1.91;
    auto j = ip.eval(x, y);
    REQUIRE(j.value == Approx(std::sin(2 * x) * std::cos(y) + 0.1 * std::cos(8 * x)).margin(1e-13));
    REQUIRE(j.d[0] == Approx(2 * std::cos(2 * x) * std::cos(y) - 0.8 * std::sin(8 * x)).margin(1e-12));
    REQUIRE(j.d[1] == Approx(-std::sin(2 * x) * std::sin(y)).margin(1e-12));
    REQUIRE(j.dd[0][1] == Approx(-2 * std::cos(2 * x) * std::sin(y)).margin(1e-12));

    // Filter leaves low modes untouched.
    auto low = sample(g, [](double x, double y) { return std::sin(x) + std::cos(2 * y); });
    REQUIRE(max_abs_diff(filtered(low).values(), low.values()) < 1e-13);
}
