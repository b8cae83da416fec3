#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "otto/connection.hpp"
#include "otto/network_simplex.hpp"

namespace otto {

inline constexpr std::size_t kMaxTransportNodes = 4096;

// Weighted atoms on a flat periodic box of the given dimension.
struct PointCloud {
    std::size_t dim = 1;
    std::array<double, 2> period{0.0, 0.0};
    std::vector<std::array<double, 2>> points;
    std::vector<double> mass;

    std::size_t size() const { return points.size(); }
    double total_mass() const {
        double s = 0;
        for (double m : mass) s += m;
        return s;
    }
};

inline double periodic_delta(double d, double period) { return d - period * std::nearbyint(d / period); }

inline double periodic_sq_distance(const PointCloud& box, const std::array<double, 2>& x,
                                   const std::array<double, 2>& y) {
    double s = 0;
    for (std::size_t a = 0; a < box.dim; ++a) {
        const double d = periodic_delta(x[a] - y[a], box.period[a]);
        s += d * d;
    }
    return s;
}

// Coupling between two discrete measures; entries are the nonzero x_ij.
struct TransportPlan {
    std::vector<double> source_mass, target_mass;
    std::vector<lp::FlowEntry> entries;
    double cost = 0;  // sum x_ij d(m_i, m'_j)^2
    std::size_t pivots = 0;

    // Max deviation of row/column sums from the marginals.
    double marginal_residual() const {
        std::vector<double> r(source_mass.size(), 0.0), c(target_mass.size(), 0.0);
        for (const auto& e : entries) {
            r[e.source] += e.mass;
            c[e.target] += e.mass;
        }
        double worst = 0;
        for (std::size_t i = 0; i < r.size(); ++i) worst = std::max(worst, std::abs(r[i] - source_mass[i]));
        for (std::size_t j = 0; j < c.size(); ++j) worst = std::max(worst, std::abs(c[j] - target_mass[j]));
        return worst;
    }
};

inline TransportPlan optimal_plan(const PointCloud& mu, const PointCloud& nu) {
    if (mu.dim != nu.dim || mu.period != nu.period) throw grid_mismatch("optimal_plan: point clouds on different boxes");
    if (mu.points.size() != mu.mass.size() || nu.points.size() != nu.mass.size())
        throw invalid_argument("optimal_plan: point and mass counts differ");
    if (mu.size() > kMaxTransportNodes || nu.size() > kMaxTransportNodes)
        throw invalid_argument("optimal_plan: more than " + std::to_string(kMaxTransportNodes) +
                               " atoms per side exceeds the exact LP budget");
    auto sol = lp::solve_transport(mu.mass, nu.mass, [&](std::size_t i, std::size_t j) {
        return periodic_sq_distance(mu, mu.points[i], nu.points[j]);
    });
    TransportPlan plan;
    plan.source_mass = mu.mass;
    plan.target_mass = nu.mass;
    plan.entries = std::move(sol.flows);
    plan.cost = sol.cost;
    plan.pivots = sol.pivots;
    return plan;
}

inline double w2_exact(const PointCloud& mu, const PointCloud& nu) {
    return std::sqrt(std::max(0.0, optimal_plan(mu, nu).cost));
}

// Quadrature-weighted node masses w_p rho_p as atoms at the grid nodes.
inline PointCloud node_masses(const Density& rho) {
    const Grid& g = rho.grid();
    detail::require_flat_base(g, "w2_exact");
    PointCloud pc;
    pc.dim = g.dim();
    pc.period = {g.period(0), g.dim() == 2 ? g.period(1) : 0.0};
    pc.points.resize(g.size());
    pc.mass.resize(g.size());
    for (std::size_t p = 0; p < g.size(); ++p) {
        pc.points[p] = {g.coord(p, 0), g.dim() == 2 ? g.coord(p, 1) : 0.0};
        pc.mass[p] = g.weight(p) * rho(p);
    }
    return pc;
}

// Trigonometric interpolation of rho onto a grid refined by the given factor per axis.
inline Density refine_density(const Density& rho, std::size_t refinement) {
    if (refinement < 1) throw invalid_argument("refine_density: refinement must be at least 1");
    if (refinement == 1) return rho;
    const Grid& g = rho.grid();
    const GridPtr fine = build_grid(g.spec(), g.nx() * refinement, g.dim() == 2 ? g.ny() * refinement : 1,
                                    g.scheme());
    return Density(resample(rho.field(), fine));
}

inline TransportPlan optimal_plan(const Density& mu, const Density& nu, std::size_t lp_refinement = 1) {
    require_same_grid(mu.grid_ptr(), nu.grid_ptr(), "w2_exact");
    const std::size_t fine = mu.size() * static_cast<std::size_t>(std::pow(lp_refinement, mu.grid().dim()));
    if (fine > kMaxTransportNodes)
        throw invalid_argument("w2_exact: " + std::to_string(fine) + " LP nodes exceed the limit of " +
                               std::to_string(kMaxTransportNodes));
    return optimal_plan(node_masses(refine_density(mu, lp_refinement)),
                        node_masses(refine_density(nu, lp_refinement)));
}

// Exact discrete W2 between the node masses of mu and nu, optionally on a finer LP grid.
inline double w2_exact(const Density& mu, const Density& nu, std::size_t lp_refinement = 1) {
    return std::sqrt(std::max(0.0, optimal_plan(mu, nu, lp_refinement).cost));
}

// int_t sqrt(<phi(t), phi(t)>_rho(t)) dt; Simpson on uniform even meshes, trapezoid otherwise.
inline double riemannian_length(const DensityCurve& c) {
    const std::size_t k = c.intervals();
    std::vector<double> s(c.size());
    for (std::size_t j = 0; j < c.size(); ++j) s[j] = otto_norm(c.density(j), c.potential(j));
    double len = 0;
    if (k % 2 == 0 && c.uniform_times()) {
        const double h = (c.time(k) - c.time(0)) / static_cast<double>(k);
        for (std::size_t j = 0; j < k; j += 2) len += h / 3.0 * (s[j] + 4.0 * s[j + 1] + s[j + 2]);
    } else {
        for (std::size_t j = 0; j < k; ++j) len += 0.5 * (c.time(j + 1) - c.time(j)) * (s[j] + s[j + 1]);
    }
    return len;
}

// rho at J + 1 uniform times over the curve's span, linear in t between stored nodes
// and renormalized to unit mass.
inline std::vector<Density> resample_curve(const DensityCurve& c, std::size_t parts) {
    if (parts < 1) throw invalid_argument("resample_curve: need at least one part");
    const double t0 = c.time(0), t1 = c.time(c.intervals());
    std::vector<Density> out;
    out.reserve(parts + 1);
    std::size_t j = 0;
    for (std::size_t k = 0; k <= parts; ++k) {
        const double t = k == parts ? t1 : t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(parts);
        while (j + 1 < c.intervals() && c.time(j + 1) <= t) ++j;
        const double s = std::clamp((t - c.time(j)) / (c.time(j + 1) - c.time(j)), 0.0, 1.0);
        if (s == 0.0)
            out.push_back(c.density(j));
        else if (s == 1.0)
            out.push_back(c.density(j + 1));
        else
            out.push_back(detail::blend(c.density(j), c.density(j + 1), s));
    }
    return out;
}

// Sum of exact W2 distances over the uniform partition into J parts.
inline double polygonal_length(const DensityCurve& c, std::size_t parts, std::size_t lp_refinement = 1) {
    const auto rho = resample_curve(c, parts);
    double len = 0;
    for (std::size_t k = 0; k < parts; ++k) len += w2_exact(rho[k], rho[k + 1], lp_refinement);
    return len;
}

namespace detail {

// Periodic Lagrange interpolation through the 8 nearest nodes of one axis.
struct LagrangeStencil {
    static constexpr int kWidth = 8;
    std::array<long, kWidth> index{};
    std::array<double, kWidth> weight{};
};

inline LagrangeStencil lagrange_stencil(double x, double spacing, std::size_t n) {
    LagrangeStencil s;
    const double u = x / spacing;
    const long base = static_cast<long>(std::floor(u)) - LagrangeStencil::kWidth / 2 + 1;
    for (int k = 0; k < LagrangeStencil::kWidth; ++k) {
        const long node = base + k;
        double w = 1.0;
        for (int q = 0; q < LagrangeStencil::kWidth; ++q)
            if (q != k) w *= (u - static_cast<double>(base + q)) / static_cast<double>(k - q);
        const long nn = static_cast<long>(n);
        s.index[k] = ((node % nn) + nn) % nn;
        s.weight[k] = w;
    }
    return s;
}

inline double lagrange_eval(const Grid& g, const std::vector<double>& f, double x, double y) {
    const auto sx = lagrange_stencil(x, g.spacing()[0], g.nx());
    if (g.dim() == 1) {
        double v = 0;
        for (int a = 0; a < LagrangeStencil::kWidth; ++a) v += sx.weight[a] * f[sx.index[a]];
        return v;
    }
    const auto sy = lagrange_stencil(y, g.spacing()[1], g.ny());
    double v = 0;
    for (int a = 0; a < LagrangeStencil::kWidth; ++a) {
        double row = 0;
        for (int b = 0; b < LagrangeStencil::kWidth; ++b) row += sy.weight[b] * f[sx.index[a] * g.ny() + sy.index[b]];
        v += sx.weight[a] * row;
    }
    return v;
}

// M4' kernel: interpolating, partition of unity, exact for quadratics.
inline double m4prime(double q) {
    q = std::abs(q);
    if (q < 1.0) return 1.0 - 2.5 * q * q + 1.5 * q * q * q;
    if (q < 2.0) return 0.5 * (2.0 - q) * (2.0 - q) * (1.0 - q);
    return 0.0;
}

} // namespace detail

// Particles started at the grid nodes of rho0 and moved by the characteristic flow.
struct ParticleState {
    PointCloud start;
    PointCloud position;
};

struct AdvectionOptions {
    std::size_t steps = 256;
};

// dS/dt = grad phi(t)(S) over [t_begin, t_end], phi(t) sampled at increasing times.
// Particles start on a lattice with per_cell points per grid cell and axis, carrying the
// masses of the trigonometric interpolant of rho0.  RK4 in time with phi interpolated by cubic Lagrange polynomials through the nearest
// samples and grad phi evaluated in space by 8-point periodic Lagrange stencils.
inline ParticleState advect_particles(const Density& rho0, const std::vector<double>& times,
                                      const std::vector<ScalarField>& potentials, double t_begin, double t_end,
                                      std::size_t steps, std::size_t per_cell = 1) {
    const Grid& g = rho0.grid();
    if (g.spec().kind != ManifoldKind::circle && g.spec().kind != ManifoldKind::flat_torus)
        throw invalid_argument("advect_particles: flat base required");
    if (times.size() != potentials.size() || times.size() < 2)
        throw invalid_argument("advect_particles: need at least two (time, potential) samples");
    if (steps < 1) throw invalid_argument("advect_particles: steps must be positive");
    for (std::size_t j = 0; j < times.size(); ++j) {
        require_same_grid(rho0.grid_ptr(), potentials[j].grid_ptr(), "advect_particles");
        if (j > 0 && !(times[j] > times[j - 1])) throw invalid_argument("advect_particles: times must increase");
    }
    if (!(t_begin >= times.front() && t_end <= times.back() && t_begin <= t_end))
        throw invalid_argument("advect_particles: time window outside the sampled range");
    const std::size_t dim = g.dim(), k = times.size();
    // Nodal gradient; the flat metric raises indices trivially.
    std::vector<std::array<std::vector<double>, 2>> grad(k);
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t a = 0; a < dim; ++a) grad[j][a] = partial(potentials[j], a).data();

    auto velocity = [&](double t, const std::array<double, 2>& x) {
        std::size_t i = 0;
        while (i + 2 < k && times[i + 1] < t) ++i;
        const std::size_t width = std::min<std::size_t>(4, k);
        std::size_t lo = i >= 1 ? i - 1 : 0;
        if (lo + width > k) lo = k - width;
        std::array<double, 2> v{0.0, 0.0};
        for (std::size_t q = lo; q < lo + width; ++q) {
            double w = 1.0;
            for (std::size_t r = lo; r < lo + width; ++r)
                if (r != q) w *= (t - times[r]) / (times[q] - times[r]);
            for (std::size_t a = 0; a < dim; ++a) v[a] += w * detail::lagrange_eval(g, grad[q][a], x[0], x[1]);
        }
        return v;
    };
    auto shifted = [](const std::array<double, 2>& base, const std::array<double, 2>& d, double f) {
        return std::array<double, 2>{base[0] + f * d[0], base[1] + f * d[1]};
    };

    ParticleState st;
    st.start = node_masses(refine_density(rho0, per_cell));
    st.position = st.start;
    const double h = (t_end - t_begin) / static_cast<double>(steps);
    for (std::size_t p = 0; p < st.position.size(); ++p) {
        std::array<double, 2> x = st.position.points[p];
        for (std::size_t s = 0; s < steps && h > 0.0; ++s) {
            const double t = t_begin + h * static_cast<double>(s);
            const auto k1 = velocity(t, x);
            const auto k2 = velocity(t + 0.5 * h, shifted(x, k1, 0.5 * h));
            const auto k3 = velocity(t + 0.5 * h, shifted(x, k2, 0.5 * h));
            const auto k4 = velocity(t + h, shifted(x, k3, h));
            for (std::size_t a = 0; a < dim; ++a) x[a] += h / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
            if (!std::isfinite(x[0]) || !std::isfinite(x[1]))
                throw numerical_error("advect_particles: particle step became non-finite");
        }
        st.position.points[p] = x;
    }
    return st;
}

// Particles from the grid nodes of rho(t_first) moved along the curve to t_last.
inline ParticleState advect_particles(const DensityCurve& c, std::size_t steps, std::size_t first = 0,
                                      std::size_t last = std::numeric_limits<std::size_t>::max(),
                                      std::size_t per_cell = 1) {
    if (last == std::numeric_limits<std::size_t>::max()) last = c.intervals();
    if (!(first < last) || last > c.intervals()) throw invalid_argument("advect_particles: bad node range");
    std::vector<ScalarField> phi;
    for (std::size_t j = 0; j < c.size(); ++j) phi.push_back(c.potential(j).field());
    return advect_particles(c.density(first), c.times(), phi, c.time(first), c.time(last), steps, per_cell);
}

namespace detail {

// M4' deposit of particle masses onto the nodes of a grid, as node densities.
inline ScalarField deposit_nodes(const GridPtr& grid, const PointCloud& particles) {
    const Grid& g = *grid;
    ScalarField mass(grid);
    const double hx = g.spacing()[0], hy = g.dim() == 2 ? g.spacing()[1] : 1.0;
    const long nx = static_cast<long>(g.nx()), ny = static_cast<long>(g.ny());
    for (std::size_t p = 0; p < particles.size(); ++p) {
        const double ux = particles.points[p][0] / hx;
        const long ix = static_cast<long>(std::floor(ux));
        for (long a = ix - 1; a <= ix + 2; ++a) {
            const double wx = m4prime(ux - static_cast<double>(a));
            if (wx == 0.0) continue;
            const long i = ((a % nx) + nx) % nx;
            if (g.dim() == 1) {
                mass(static_cast<std::size_t>(i)) += particles.mass[p] * wx;
                continue;
            }
            const double uy = particles.points[p][1] / hy;
            const long iy = static_cast<long>(std::floor(uy));
            for (long b = iy - 1; b <= iy + 2; ++b) {
                const double wy = m4prime(uy - static_cast<double>(b));
                if (wy == 0.0) continue;
                const long j = ((b % ny) + ny) % ny;
                mass(static_cast<std::size_t>(i * ny + j)) += particles.mass[p] * wx * wy;
            }
        }
    }
    for (std::size_t p = 0; p < g.size(); ++p) mass(p) /= g.weight(p);
    return mass;
}

// Fourier symbol along one axis of the M4' deposit of an undisplaced lattice with q
// particles per cell: sigma(k) = (1/q) sum_s sum_j W(j + s/q) e^{-2 pi i k (j + s/q) / n}.
inline std::vector<double> deposit_symbol(std::size_t n, std::size_t q) {
    std::vector<double> sym(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double w = 2.0 * std::numbers::pi * static_cast<double>(wavenumber(k, n)) / static_cast<double>(n);
        double re = 0;
        for (std::size_t s = 0; s < q; ++s)
            for (int j = -2; j <= 2; ++j) {
                const double off = j + static_cast<double>(s) / static_cast<double>(q);
                re += m4prime(off) * std::cos(w * off);
            }
        // The kernel is even and the lattice symmetric, so the symbol is real.
        sym[k] = re / static_cast<double>(q);
    }
    return sym;
}

} // namespace detail

// Mass-conserving M4' deposit of particles seeded per_cell to a cell and axis.  For
// per_cell > 1 the smoothing of the undisplaced lattice is divided out in Fourier space,
// so a stationary flow returns rho0 exactly.
inline Density deposit(const GridPtr& grid, const PointCloud& particles, std::size_t per_cell = 1) {
    const Grid& g = *grid;
    ScalarField rho = detail::deposit_nodes(grid, particles);
    if (per_cell > 1) {
        auto c = g.dft().forward(rho.values());
        const auto sx = detail::deposit_symbol(g.nx(), per_cell);
        const auto sy = g.dim() == 2 ? detail::deposit_symbol(g.ny(), per_cell) : std::vector<double>{1.0};
        for (std::size_t i = 0; i < g.nx(); ++i)
            for (std::size_t j = 0; j < g.ny(); ++j) c[i * g.ny() + j] /= sx[i] * sy[j];
        rho = ScalarField(grid, g.dft().inverse_real(std::move(c)));
    }
    for (std::size_t p = 0; p < rho.size(); ++p)
        if (!(rho(p) > 0.0))
            throw positivity_error("advect_flow: deposited density is not positive; refine the grid or steps");
    return Density(rho);
}

// Several particles per cell keep the deposit free of the aliasing a distorted
// one-per-node lattice produces.
inline constexpr std::size_t kDefaultParticlesPerCell = 4;

// Pushforward of rho0 under the characteristic flow of the potentials.
inline Density advect_flow(const Density& rho0, const std::vector<double>& times,
                           const std::vector<ScalarField>& potentials, std::size_t steps,
                           std::size_t per_cell = kDefaultParticlesPerCell) {
    const auto st = advect_particles(rho0, times, potentials, times.front(), times.back(), steps, per_cell);
    return deposit(rho0.grid_ptr(), st.position, per_cell);
}
inline Density advect_flow(const DensityCurve& c, std::size_t steps, std::size_t per_cell = kDefaultParticlesPerCell) {
    return deposit(c.grid_ptr(), advect_particles(c, steps, 0, c.intervals(), per_cell).position, per_cell);
}

// int |a - b| dvol
inline double l1_distance(const Density& a, const Density& b) {
    require_same_grid(a.grid_ptr(), b.grid_ptr(), "l1_distance");
    ScalarField d(a.grid_ptr());
    for (std::size_t p = 0; p < d.size(); ++p) d(p) = std::abs(a(p) - b(p));
    return integrate(d);
}

// Exact W2^2 between the atoms at rho(t_j) and their flow images at t_{j+1}, next to the
// transport cost of the flow map itself.
struct MongeBound {
    double w2_squared = 0;
    double flow_cost = 0;
    bool holds(double slack = 1e-8) const { return w2_squared <= flow_cost + slack; }
};

inline MongeBound monge_bound(const DensityCurve& c, std::size_t j, std::size_t steps = 32) {
    const auto st = advect_particles(c, steps, j, j + 1);
    MongeBound mb;
    mb.w2_squared = optimal_plan(st.start, st.position).cost;
    for (std::size_t p = 0; p < st.start.size(); ++p)
        mb.flow_cost += st.start.mass[p] * periodic_sq_distance(st.start, st.start.points[p], st.position.points[p]);
    return mb;
}

} // namespace otto
