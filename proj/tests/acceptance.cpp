// Acceptance suite: one line per criterion with the measured value, the tolerance and the
// runtime budget.  Exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "otto/connection.hpp"
#include "otto/curvature.hpp"
#include "otto/poisson.hpp"
#include "otto/properties.hpp"
#include "otto/sampling.hpp"
#include "otto/wasserstein.hpp"
#include "support/dense_oracle.hpp"

using namespace otto;

namespace {

constexpr double pi = std::numbers::pi;

GridPtr circle(std::size_t n) { return build_grid(ManifoldSpec::circle(), n); }
GridPtr torus(std::size_t n) { return build_grid(ManifoldSpec::flat_torus(), n, n); }
GridPtr conformal(std::size_t n) {
    return build_grid(ManifoldSpec::conformal_torus(ConformalFactor::fourier({{0.3, 1, 0, 0.0}})), n, n);
}
ScalarField wave(const GridPtr& g, double (*f)(double), double a = 1.0) {
    return sample(g, [=](double x, double) { return a * f(x); });
}

struct Outcome {
    bool pass = true;
    std::string detail;
};

struct Measure {
    std::string label;
    double value;
    double tolerance;
    bool ok() const { return value < tolerance; }
};

Outcome from(const std::vector<Measure>& ms) {
    Outcome o;
    char buf[160];
    for (const auto& m : ms) {
        std::snprintf(buf, sizeof buf, "%s%s %.3g < %.3g", o.detail.empty() ? "" : "; ", m.label.c_str(), m.value,
                      m.tolerance);
        o.detail += buf;
        o.pass = o.pass && m.ok();
    }
    return o;
}

int failures = 0;

void criterion(int id, const char* title, double budget_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < budget_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::printf("[%s] criterion %2d: %s | %s | runtime %.2f s < %.0f s%s\n", pass ? "PASS" : "FAIL", id, title,
                o.detail.c_str(), secs, budget_s, in_time ? "" : " (over budget)");
    std::fflush(stdout);
}

// Closed loop uniform -> bump -> uniform on the circle.
ScalarField loop_density(const GridPtr& g, double t) {
    const double a = 0.15 * (1 - std::cos(2 * pi * t)), b = 0.2 * std::sin(2 * pi * t);
    return sample(g, [=](double x, double) { return (1 + a * std::cos(x) + b * std::sin(2 * x)) / (2 * pi); });
}
ScalarField loop_rate(const GridPtr& g, double t) {
    const double da = 0.3 * pi * std::sin(2 * pi * t), db = 0.4 * pi * std::cos(2 * pi * t);
    return sample(g, [=](double x, double) { return (da * std::cos(x) + db * std::sin(2 * x)) / (2 * pi); });
}

// Max-norm gauge-free error between the geodesic potential and Hopf-Lax at t <= 0.5.
double hopf_lax_error(std::size_t n) {
    const GridPtr g = circle(n);
    const ScalarField phi0 = wave(g, std::sin, 0.05);
    const DensityCurve c = geodesic_flow(Density::uniform(g), phi0, 0.5, 64);
    double worst = 0;
    for (std::size_t j = 8; j < c.size(); j += 8) {
        const Potential hl(c.density(j), hopf_lax(phi0, c.time(j)));
        worst = std::max(worst, tangent_distance(hl, c.potential(j)));
    }
    return worst;
}

double closed_form_curvature_error(std::size_t n) {
    const GridPtr g = circle(n);
    return std::abs(sectional_curvature(Density::uniform(g), wave(g, std::sin, std::sqrt(2.0)),
                                        wave(g, std::cos, std::sqrt(2.0))) -
                    3.0);
}

} // namespace

int main() {
    std::setvbuf(stdout, nullptr, _IOLBF, 0);

    criterion(1, "Otto-metric gradient, 50 samples per manifold, N = 64", 10, [] {
        double worst = 0;
        Rng rng(101);
        for (const auto& g : {circle(64), torus(64), conformal(64)})
            for (int s = 0; s < 50; ++s) {
                const Density rho = random_density(g, rng);
                const ScalarField phi = random_field(g, rng);
                worst = std::max(worst, props::gradient_identity(rho, phi, random_potential(rho, rng)));
            }
        return from({{"max |FD - otto_inner|", worst, 1e-7}});
    });

    criterion(2, "torsion-freeness and metric compatibility, 50 triples per manifold", 30, [] {
        double tors = 0, compat = 0;
        Rng rng(202);
        for (const auto& g : {circle(64), torus(32), conformal(32)})
            for (int s = 0; s < 50; ++s) {
                const Density rho = random_density(g, rng);
                const WeightedLaplacian op(rho);
                const ScalarField a = random_field(g, rng), b = random_field(g, rng), c = random_field(g, rng);
                tors = std::max(tors, props::torsion(op, a, b));
                compat = std::max(compat, props::metric_compatibility(rho, a, b, c));
            }
        return from({{"torsion", tors, 1e-8}, {"metric compatibility", compat, 1e-6}});
    });

    criterion(3, "parallel-transport isometry, 200-step loop on the circle, N = 64", 20, [] {
        const GridPtr g = circle(64);
        const DensityCurve loop = curve_from_density_path(g, [&](double t) { return loop_density(g, t); }, 200, 1.0,
                                                          [&](double t) { return loop_rate(g, t); });
        TransportOptions opt;
        opt.throw_on_drift = false;
        const TransportState s1 = parallel_transport(loop, wave(g, std::sin), opt);
        const TransportState s2 =
            parallel_transport(loop, sample(g, [](double x, double) { return std::cos(2 * x) + 0.5 * std::sin(3 * x); }), opt);
        const double ip0 = otto_inner(loop.density(0), s1.eta[0], s2.eta[0]);
        double ip = 0;
        for (std::size_t j = 0; j < loop.size(); ++j)
            ip = std::max(ip, std::abs(otto_inner(loop.density(j), s1.eta[j], s2.eta[j]) - ip0));
        return from({{"norm drift", std::max(s1.drift, s2.drift), 1e-6}, {"inner-product drift", ip, 1e-6}});
    });

    criterion(4, "geodesic vs Hopf-Lax, phi0 = 0.05 sin x, N = 128, t <= 0.5", 10,
              [] { return from({{"max-norm error", hopf_lax_error(128), 1e-5}}); });

    criterion(5, "T-tensor antisymmetry and exact-form annihilation, 100 pairs", 20, [] {
        double worst = 0;
        Rng rng(505);
        const std::vector<std::pair<GridPtr, int>> cases{{circle(64), 40}, {torus(32), 30}, {conformal(32), 30}};
        for (const auto& [g, count] : cases)
            for (int s = 0; s < count; ++s) {
                const Density rho = random_density(g, rng);
                const WeightedLaplacian op(rho);
                worst = std::max(worst, props::t_tensor_identities(op, random_field(g, rng), random_field(g, rng)));
            }
        return from({{"nodewise residual", worst, 1e-9}});
    });

    criterion(6, "curvature symmetries and first Bianchi, 30 quadruples per manifold", 60, [] {
        double worst = 0;
        Rng rng(606);
        for (const auto& g : {circle(64), torus(24), conformal(24)})
            for (int s = 0; s < 30; ++s) {
                const Density rho = random_density(g, rng);
                const WeightedLaplacian op(rho);
                const ScalarField a = random_field(g, rng), b = random_field(g, rng), c = random_field(g, rng),
                                  d = random_field(g, rng);
                worst = std::max(worst, props::curvature_symmetries(op, a, b, c, d));
            }
        return from({{"max residual", worst, 1e-8}});
    });

    criterion(7, "closed-form Kbar = 3 on the uniform circle, N = 64", 5, [] {
        const GridPtr g = circle(64);
        const ScalarField p1 = wave(g, std::sin, std::sqrt(2.0)), p2 = wave(g, std::cos, std::sqrt(2.0));
        const double k = sectional_curvature(Density::uniform(g), p1, p2);
        const oracle::DenseCircle dc(64, 2 * pi, std::vector<double>(64, 1.0));
        const Eigen::VectorXd e1 = Eigen::Map<const Eigen::VectorXd>(p1.data().data(), 64);
        const Eigen::VectorXd e2 = Eigen::Map<const Eigen::VectorXd>(p2.data().data(), 64);
        const double gram = dc.ip(dc.d * e1, dc.d * e1) * dc.ip(dc.d * e2, dc.d * e2) -
                            std::pow(dc.ip(dc.d * e1, dc.d * e2), 2);
        const double dense = dc.quadform(e1, e2, e2, e1) / gram;
        return from({{"|Kbar - 3|", std::abs(k - 3.0), 1e-6}, {"|dense oracle - 3|", std::abs(dense - 3.0), 1e-6}});
    });

    criterion(8, "nonnegativity on flat bases, 500 samples each on S1 and flat T2", 120, [] {
        const ComparisonReport c = comparison_experiment(circle(64), 500, 808);
        const ComparisonReport t = comparison_experiment(torus(32), 500, 809);
        return from({{"-min Kbar (S1)", -c.min_sectional, 1e-9}, {"-min Kbar (T2)", -t.min_sectional, 1e-9}});
    });

    criterion(9, "polygonal W2 length, J = 16, exact LP, N = 48 on S1", 300, [] {
        const GridPtr g = circle(48);
        const DensityCurve c = geodesic_flow(Density::uniform(g), wave(g, std::sin, 0.5), 1.0, 64);
        const double riem = riemannian_length(c);
        const double poly = polygonal_length(c, 16, 20);
        return from({{"|L_16 / L - 1|", std::abs(poly / riem - 1.0), 0.03}});
    });

    criterion(10, "Poisson suite: Jacobiator, documented bracket, conservation", 60, [] {
        const GridPtr g = torus(32);
        Rng rng(1010);
        double jac = 0;
        for (int d = 0; d < 4; ++d) {
            const Density rho = random_density(g, rng);
            for (int s = 0; s < 25; ++s)
                jac = std::max(jac, std::abs(jacobiator(rho, random_field(g, rng), random_field(g, rng), random_field(g, rng))));
        }
        const Density doc(sample(g, [](double x, double y) { return 1 + 0.5 * std::cos(x) * std::cos(y); }));
        const double br = lifted_bracket(doc, sample(g, [](double x, double) { return std::sin(x); }),
                                         sample(g, [](double, double y) { return std::sin(y); }));
        // Independent quadrature of the analytic integrand on an odd, unrelated lattice.
        double q = 0, mass = 0;
        const int m1 = 37, m2 = 41;
        for (int i = 0; i < m1; ++i)
            for (int j = 0; j < m2; ++j) {
                const double x = 2 * pi * i / m1, y = 2 * pi * j / m2, r = 1 + 0.5 * std::cos(x) * std::cos(y);
                q += std::cos(x) * std::cos(y) * r;
                mass += r;
            }
        const double oracle_value = q / mass;
        const Density mu = random_density(g, rng);
        const ScalarField phi = sample(g, [](double x, double y) { return std::sin(x) * std::cos(y) + 0.3 * std::cos(2 * y); });
        const auto path = hamiltonian_flow(mu, phi, 1.0, 50);
        const double f0 = coordinate_functional(mu, phi), l0 = l2_norm_squared(mu);
        double df = 0, dl = 0;
        for (const auto& r : path) {
            df = std::max(df, std::abs(coordinate_functional(r, phi) - f0));
            dl = std::max(dl, std::abs(l2_norm_squared(r) - l0));
        }
        return from({{"max |Jacobiator|", jac, 1e-8},
                     {"|bracket - 1/8|", std::abs(br - 0.125), 1e-10},
                     {"|quadrature oracle - 1/8|", std::abs(oracle_value - 0.125), 1e-10},
                     {"F_phi drift", df, 1e-7},
                     {"L2 drift", dl, 1e-6}});
    });

    criterion(11, "refinement of criteria 4 and 7 at N = 32/64/128", 120, [] {
        constexpr double floor = 1e-12;
        Outcome o;
        char buf[200];
        for (int which = 0; which < 2; ++which) {
            std::vector<double> err;
            for (std::size_t n : {32, 64, 128}) err.push_back(which == 0 ? hopf_lax_error(n) : closed_form_curvature_error(n));
            bool ok = true;
            for (std::size_t k = 1; k < err.size(); ++k) {
                const bool at_floor = err[k] < floor && err[k - 1] < floor;
                const bool converging = err[k] < floor || err[k - 1] > 4 * err[k];
                ok = ok && (at_floor || converging);
            }
            std::snprintf(buf, sizeof buf, "%s%s errors %.2e, %.2e, %.2e (ratio > 4 or below %.0e)",
                          which ? "; " : "", which == 0 ? "Hopf-Lax" : "Kbar", err[0], err[1], err[2], floor);
            o.detail += buf;
            o.pass = o.pass && ok;
        }
        return o;
    });

    std::printf("%d of 11 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
