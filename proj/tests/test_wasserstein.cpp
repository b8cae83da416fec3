#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "otto/sampling.hpp"
#include "otto/wasserstein.hpp"
#include "support/circle_ot.hpp"

using namespace otto;
using Catch::Approx;

namespace {

constexpr double pi = std::numbers::pi;

GridPtr circle(std::size_t n) { return build_grid(ManifoldSpec::circle(), n); }

Density bump(const GridPtr& g, double center, double kappa = 4.0) {
    return Density(sample(g, [=](double x, double) { return std::exp(kappa * std::cos(x - center)); }));
}

double oracle_w2(const Density& a, const Density& b) {
    auto pa = node_masses(a), pb = node_masses(b);
    std::vector<double> xa, xb;
    for (const auto& p : pa.points) xa.push_back(p[0]);
    for (const auto& p : pb.points) xb.push_back(p[0]);
    const double l = a.grid().period(0);
    return oracle::circle_w2(oracle::circle_measure(xa, pa.mass, l), oracle::circle_measure(xb, pb.mass, l), l);
}

} // namespace

TEST_CASE("exact W2 on the circle", "[wasserstein]") {
    auto g = circle(64);
    auto a = bump(g, 1.0);
    REQUIRE(w2_exact(a, a) == 0.0);
    auto b = bump(g, 1.3);
    const double w = w2_exact(a, b);
    REQUIRE(std::abs(w - 0.3) < 2e-2);
    REQUIRE(std::abs(w - oracle_w2(a, b)) < 1e-10);

    Rng rng(3);
    for (int t = 0; t < 6; ++t) {
        auto x = random_density(g, rng), y = random_density(g, rng), z = random_density(g, rng);
        const double xy = w2_exact(x, y), yz = w2_exact(y, z), xz = w2_exact(x, z);
        REQUIRE(xz <= xy + yz + 1e-10);
        REQUIRE(std::abs(xy - w2_exact(y, x)) < 1e-10);
        REQUIRE(std::abs(xy - oracle_w2(x, y)) < 1e-10);
    }
}

TEST_CASE("transport plan invariants", "[wasserstein]") {
    auto g = circle(48);
    Rng rng(8);
    auto x = random_density(g, rng), y = random_density(g, rng);
    auto plan = optimal_plan(x, y);
    REQUIRE(plan.marginal_residual() < 1e-10);
    auto px = node_masses(x), py = node_masses(y);
    double cost = 0;
    for (const auto& e : plan.entries) {
        REQUIRE(e.mass >= 0.0);
        cost += e.mass * periodic_sq_distance(px, px.points[e.source], py.points[e.target]);
    }
    REQUIRE(cost == Approx(plan.cost).epsilon(1e-12));
    // A basic optimal solution has at most n + m - 1 nonzero entries.
    REQUIRE(plan.entries.size() <= 2 * g->size() - 1);
}

TEST_CASE("refined LP grids match the circle oracle", "[wasserstein]") {
    auto g = circle(24);
    Rng rng(12);
    auto x = random_density(g, rng), y = random_density(g, rng);
    for (std::size_t r : {2, 5}) {
        const double w = w2_exact(x, y, r);
        REQUIRE(std::abs(w - oracle_w2(refine_density(x, r), refine_density(y, r))) < 1e-10);
    }
}

TEST_CASE("product measures on the flat torus", "[wasserstein]") {
    // W2^2 of product measures splits into the two circle problems.
    auto t = build_grid(ManifoldSpec::flat_torus(), 12, 12);
    auto c = circle(12);
    auto f1 = [](double x) { return 1 + 0.4 * std::cos(x); };
    auto f2 = [](double y) { return 1 + 0.3 * std::sin(2 * y); };
    auto g1 = [](double x) { return 1 + 0.4 * std::cos(x - 0.5); };
    auto g2 = [](double y) { return 1 - 0.2 * std::cos(y); };
    Density mu(sample(t, [&](double x, double y) { return f1(x) * f2(y); }));
    Density nu(sample(t, [&](double x, double y) { return g1(x) * g2(y); }));
    const double w1 = oracle_w2(Density(sample(c, [&](double x, double) { return f1(x); })),
                                Density(sample(c, [&](double x, double) { return g1(x); })));
    const double w2 = oracle_w2(Density(sample(c, [&](double x, double) { return f2(x); })),
                                Density(sample(c, [&](double x, double) { return g2(x); })));
    REQUIRE(w2_exact(mu, nu) == Approx(std::sqrt(w1 * w1 + w2 * w2)).epsilon(1e-10));
}

TEST_CASE("w2 preconditions", "[wasserstein]") {
    auto big = circle(4098);
    REQUIRE_THROWS_AS(w2_exact(Density::uniform(big), Density::uniform(big)), invalid_argument);
    auto g = circle(512);
    REQUIRE_THROWS_AS(w2_exact(Density::uniform(g), Density::uniform(g), 10), invalid_argument);
    auto conf = build_grid(ManifoldSpec::conformal_torus(ConformalFactor::fourier({{0.3, 1, 0, 0.0}})), 8, 8);
    REQUIRE_THROWS_AS(w2_exact(Density::uniform(conf), Density::uniform(conf)), invalid_argument);
    REQUIRE_THROWS_AS(w2_exact(Density::uniform(g), Density::uniform(circle(64))), grid_mismatch);
}

TEST_CASE("riemannian length", "[wasserstein]") {
    auto g = circle(48);
    auto u = Density::uniform(g);
    REQUIRE(riemannian_length(DensityCurve::constant(u, 8)) == 0.0);

    auto phi0 = sample(g, [](double x, double) { return 0.5 * std::sin(x); });
    auto c = geodesic_flow(u, phi0, 1.0, 64);
    const double speed = otto_norm(u, Potential(u, phi0));
    REQUIRE(std::abs(riemannian_length(c) - speed) < 1e-6);

    // Reparametrization invariance on an analytic loop.
    auto path = [&](double s) {
        const double a = 0.15 * (1 - std::cos(2 * pi * s)), b = 0.2 * std::sin(2 * pi * s);
        return sample(g, [=](double x, double) { return (1 + a * std::cos(x) + b * std::sin(2 * x)) / (2 * pi); });
    };
    auto rate = [&](double s, double ds) {
        const double da = 0.3 * pi * std::sin(2 * pi * s) * ds, db = 0.4 * pi * std::cos(2 * pi * s) * ds;
        return sample(g, [=](double x, double) { return (da * std::cos(x) + db * std::sin(2 * x)) / (2 * pi); });
    };
    auto s_of_t = [](double t) { return t + 0.1 * std::sin(2 * pi * t) / (2 * pi); };
    auto ds_dt = [](double t) { return 1 + 0.1 * std::cos(2 * pi * t); };
    auto plain = curve_from_density_path(g, path, 200, 1.0, [&](double t) { return rate(t, 1.0); });
    auto reparam = curve_from_density_path(
        g, [&](double t) { return path(s_of_t(t)); }, 200, 1.0,
        [&](double t) { return rate(s_of_t(t), ds_dt(t)); });
    REQUIRE(std::abs(riemannian_length(plain) - riemannian_length(reparam)) < 1e-6);
}

TEST_CASE("polygonal length", "[wasserstein]") {
    auto g = circle(48);
    auto u = Density::uniform(g);
    auto phi0 = sample(g, [](double x, double) { return 0.5 * std::sin(x); });
    auto c = geodesic_flow(u, phi0, 1.0, 64);
    REQUIRE(polygonal_length(c, 1) == Approx(w2_exact(c.density(0), c.density(64))).epsilon(1e-14));
    double prev = 0;
    for (std::size_t j : {1, 2, 4, 8, 16}) {
        const double l = polygonal_length(c, j, 4);
        REQUIRE(l >= prev - 1e-9);
        prev = l;
    }
    const double riem = riemannian_length(c);
    const double poly = polygonal_length(c, 16, 20);
    REQUIRE(std::abs(poly / riem - 1.0) < 0.03);
    REQUIRE(polygonal_length(c, 8, 20) <= riem * 1.03);
}

TEST_CASE("resample_curve", "[wasserstein]") {
    auto g = circle(32);
    auto u = Density::uniform(g);
    auto c = geodesic_flow(u, sample(g, [](double x, double) { return 0.2 * std::sin(x); }), 1.0, 16);
    auto r = resample_curve(c, 4);
    REQUIRE(r.size() == 5);
    REQUIRE(max_abs_diff(r[1].field().values(), c.density(4).field().values()) == 0.0);
    auto mid = resample_curve(c, 32);
    REQUIRE(std::abs(integrate(mid[1].field()) - 1.0) < 1e-14);
    REQUIRE_THROWS_AS(resample_curve(c, 0), invalid_argument);
}

TEST_CASE("flow-map advection", "[wasserstein]") {
    auto g = circle(64);
    auto u = Density::uniform(g);
    Rng rng(19);
    auto rho0 = random_density(g, rng);
    SECTION("zero potential") {
        auto r = advect_flow(rho0, {0.0, 1.0}, {ScalarField(g), ScalarField(g)}, 16);
        REQUIRE(max_abs_diff(r.field().values(), rho0.field().values()) < 1e-13);
    }
    SECTION("matches the geodesic density") {
        auto phi0 = sample(g, [](double x, double) { return 0.3 * std::sin(x) + 0.1 * std::cos(2 * x); });
        auto c = geodesic_flow(rho0, phi0, 1.0, 64);
        auto r = advect_flow(c, 256);
        REQUIRE(std::abs(integrate(r.field()) - 1.0) < 1e-9);
        REQUIRE(l1_distance(r, c.density(64)) < 1e-3);
        for (std::size_t j = 0; j < 64; j += 8) REQUIRE(monge_bound(c, j).holds());
    }
    SECTION("flat torus") {
        auto t = build_grid(ManifoldSpec::flat_torus(), 24, 24);
        auto phi0 = sample(t, [](double x, double y) { return 0.2 * std::sin(x) * std::cos(y); });
        auto c = geodesic_flow(Density::uniform(t), phi0, 0.5, 32);
        auto r = advect_flow(c, 32, 2);
        REQUIRE(std::abs(integrate(r.field()) - 1.0) < 1e-9);
        REQUIRE(l1_distance(r, c.density(32)) < 1e-3);
        REQUIRE(monge_bound(c, 5, 8).holds());
    }
    SECTION("errors") {
        auto conf = build_grid(ManifoldSpec::conformal_torus(ConformalFactor::fourier({{0.3, 1, 0, 0.0}})), 8, 8);
        REQUIRE_THROWS_AS(advect_flow(Density::uniform(conf), {0.0, 1.0}, {ScalarField(conf), ScalarField(conf)}, 4),
                          invalid_argument);
        REQUIRE_THROWS_AS(advect_flow(u, {0.0}, {ScalarField(g)}, 4), invalid_argument);
    }
}
