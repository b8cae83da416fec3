#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "otto/errors.hpp"
#include "otto/spectral.hpp"

namespace otto {

enum class ManifoldKind { circle, flat_torus, conformal_torus };

inline std::string_view to_string(ManifoldKind k) {
    switch (k) {
    case ManifoldKind::circle: return "circle";
    case ManifoldKind::flat_torus: return "flat-torus-2d";
    case ManifoldKind::conformal_torus: return "conformal-torus-2d";
    }
    return "?";
}

inline ManifoldKind manifold_kind_from_string(std::string_view s) {
    if (s == "circle") return ManifoldKind::circle;
    if (s == "flat-torus-2d" || s == "flat-torus") return ManifoldKind::flat_torus;
    if (s == "conformal-torus-2d" || s == "conformal-torus") return ManifoldKind::conformal_torus;
    throw invalid_argument("unknown manifold kind '" + std::string(s) + "'");
}

// One term a * cos(kx * 2pi x / Lx + ky * 2pi y / Ly + phase) of a conformal factor.
struct FourierTerm {
    double amplitude = 0.0;
    int kx = 0;
    int ky = 0;
    double phase = 0.0;
};

// Conformal factor u of the metric g = e^{2u} g_flat.  A finite Fourier sum is
// periodic by construction and has analytic derivatives; an arbitrary callable is
// also accepted, in which case derivatives are taken spectrally on the grid.
struct ConformalFactor {
    std::vector<FourierTerm> terms;
    std::function<double(double, double)> callable;

    static ConformalFactor fourier(std::vector<FourierTerm> t) { return {std::move(t), {}}; }
    static ConformalFactor from_function(std::function<double(double, double)> f) { return {{}, std::move(f)}; }

    bool analytic() const { return !callable; }
    bool empty() const { return terms.empty() && !callable; }

    struct Jet {
        double u = 0, ux = 0, uy = 0, uxx = 0, uxy = 0, uyy = 0;
    };

    // Value and derivatives of a Fourier-sum factor at (x, y).
    Jet jet(double x, double y, double lx, double ly) const {
        Jet j;
        for (const auto& t : terms) {
            const double ax = 2.0 * std::numbers::pi * t.kx / lx;
            const double ay = 2.0 * std::numbers::pi * t.ky / ly;
            const double arg = ax * x + ay * y + t.phase;
            const double c = std::cos(arg), s = std::sin(arg);
            j.u += t.amplitude * c;
            j.ux -= t.amplitude * ax * s;
            j.uy -= t.amplitude * ay * s;
            j.uxx -= t.amplitude * ax * ax * c;
            j.uxy -= t.amplitude * ax * ay * c;
            j.uyy -= t.amplitude * ay * ay * c;
        }
        return j;
    }
};

struct ManifoldSpec {
    ManifoldKind kind = ManifoldKind::circle;
    std::array<double, 2> periods{2.0 * std::numbers::pi, 2.0 * std::numbers::pi};
    ConformalFactor conformal;

    static ManifoldSpec circle(double period = 2.0 * std::numbers::pi) {
        return {ManifoldKind::circle, {period, 1.0}, {}};
    }
    static ManifoldSpec flat_torus(double lx = 2.0 * std::numbers::pi, double ly = 2.0 * std::numbers::pi) {
        return {ManifoldKind::flat_torus, {lx, ly}, {}};
    }
    static ManifoldSpec conformal_torus(ConformalFactor u, double lx = 2.0 * std::numbers::pi,
                                        double ly = 2.0 * std::numbers::pi) {
        return {ManifoldKind::conformal_torus, {lx, ly}, std::move(u)};
    }

    std::size_t dimension() const { return kind == ManifoldKind::circle ? 1 : 2; }
    bool flat() const { return kind != ManifoldKind::conformal_torus; }
};

// Structural equality; callables compare equal only when both are absent.
inline bool same_spec(const ManifoldSpec& a, const ManifoldSpec& b) {
    if (a.kind != b.kind || a.periods[0] != b.periods[0]) return false;
    if (a.dimension() == 2 && a.periods[1] != b.periods[1]) return false;
    if (a.kind != ManifoldKind::conformal_torus) return true;
    if (a.conformal.callable || b.conformal.callable) return false;
    if (a.conformal.terms.size() != b.conformal.terms.size()) return false;
    for (std::size_t i = 0; i < a.conformal.terms.size(); ++i) {
        const auto& s = a.conformal.terms[i];
        const auto& t = b.conformal.terms[i];
        if (s.amplitude != t.amplitude || s.kx != t.kx || s.ky != t.ky || s.phase != t.phase) return false;
    }
    return true;
}

// Uniform periodic discretization of a base manifold.  Immutable after build_grid;
// shared between fields through GridPtr.  Nodes are stored row-major,
// index = i * ny + j with i along x; the circle has ny == 1.
class Grid {
public:
    const ManifoldSpec& spec() const { return spec_; }
    std::size_t dim() const { return dim_; }
    std::size_t size() const { return n_; }
    std::array<std::size_t, 2> resolution() const { return res_; }
    std::size_t nx() const { return res_[0]; }
    std::size_t ny() const { return res_[1]; }
    DiffScheme scheme() const { return scheme_; }
    std::array<double, 2> spacing() const { return h_; }
    double period(std::size_t axis) const { return spec_.periods[axis]; }

    double coord(std::size_t node, std::size_t axis) const {
        const std::size_t idx = axis == 0 ? node / res_[1] : node % res_[1];
        return static_cast<double>(idx) * h_[axis];
    }
    std::size_t index(std::size_t i, std::size_t j = 0) const { return i * res_[1] + j; }

    // g_ab, g^ab at node; a, b < dim().
    double metric(std::size_t node, std::size_t a, std::size_t b) const { return g_[node * 4 + a * 2 + b]; }
    double inverse_metric(std::size_t node, std::size_t a, std::size_t b) const {
        return ginv_[node * 4 + a * 2 + b];
    }
    double sqrt_det(std::size_t node) const { return sqrtg_[node]; }
    // dvol_M quadrature weight: sqrt(det g) times the coordinate cell size.
    double weight(std::size_t node) const { return w_[node]; }
    std::span<const double> weights() const { return w_; }
    // Gamma^k_{ab}
    double christoffel(std::size_t node, std::size_t k, std::size_t a, std::size_t b) const {
        return gamma_[node * 8 + k * 4 + a * 2 + b];
    }
    double gauss_curvature(std::size_t node) const { return k_[node]; }
    double total_volume() const { return volume_; }

    const Circulant& derivative(std::size_t axis) const { return d_[axis]; }
    const Dft2& dft() const { return dft_; }

    // Smooth diagonal metric on every supported manifold.
    bool diagonal_metric() const { return true; }

    // Shortest periodic coordinate separation along an axis, in [-L/2, L/2].
    double wrap(double delta, std::size_t axis) const {
        const double l = spec_.periods[axis];
        delta -= l * std::round(delta / l);
        return delta;
    }

private:
    friend std::shared_ptr<const Grid> build_grid(const ManifoldSpec&, std::array<std::size_t, 2>, DiffScheme);

    ManifoldSpec spec_;
    std::size_t dim_ = 1, n_ = 0;
    std::array<std::size_t, 2> res_{0, 1};
    std::array<double, 2> h_{0, 1};
    DiffScheme scheme_ = DiffScheme::spectral;
    std::vector<double> g_, ginv_, sqrtg_, w_, gamma_, k_;
    double volume_ = 0;
    std::array<Circulant, 2> d_;
    Dft2 dft_;
};

using GridPtr = std::shared_ptr<const Grid>;

inline bool same_grid(const Grid& a, const Grid& b) {
    if (&a == &b) return true;
    return a.resolution() == b.resolution() && a.scheme() == b.scheme() && same_spec(a.spec(), b.spec());
}

inline void require_same_grid(const GridPtr& a, const GridPtr& b, const char* where) {
    if (!a || !b || !same_grid(*a, *b)) throw grid_mismatch(where);
}

inline GridPtr build_grid(const ManifoldSpec& spec, std::array<std::size_t, 2> resolution,
                          DiffScheme scheme = DiffScheme::spectral) {
    auto grid = std::shared_ptr<Grid>(new Grid());
    Grid& g = *grid;
    g.spec_ = spec;
    g.dim_ = spec.dimension();
    g.scheme_ = scheme;
    if (g.dim_ == 1) resolution[1] = 1;
    for (std::size_t a = 0; a < g.dim_; ++a) {
        if (resolution[a] == 0) throw invalid_argument("build_grid: resolution must be positive");
        if (resolution[a] < 8) throw invalid_argument("build_grid: resolution must be at least 8 per axis");
        if (!(spec.periods[a] > 0.0) || !std::isfinite(spec.periods[a]))
            throw invalid_argument("build_grid: period lengths must be positive and finite");
    }
    if (spec.kind == ManifoldKind::conformal_torus && spec.conformal.empty())
        throw invalid_argument("build_grid: conformal torus needs a conformal factor");
    for (const auto& t : spec.conformal.terms)
        if (!std::isfinite(t.amplitude) || !std::isfinite(t.phase))
            throw invalid_argument("build_grid: non-finite conformal factor");

    g.res_ = {resolution[0], g.dim_ == 2 ? resolution[1] : 1};
    g.n_ = g.res_[0] * g.res_[1];
    g.h_ = {spec.periods[0] / static_cast<double>(g.res_[0]),
            g.dim_ == 2 ? spec.periods[1] / static_cast<double>(g.res_[1]) : 1.0};
    for (std::size_t a = 0; a < g.dim_; ++a) g.d_[a] = Circulant::derivative(g.res_[a], spec.periods[a], scheme);
    g.dft_ = Dft2(g.res_[0], g.res_[1]);

    const std::size_t n = g.n_;
    g.g_.assign(n * 4, 0.0);
    g.ginv_.assign(n * 4, 0.0);
    g.sqrtg_.assign(n, 1.0);
    g.w_.assign(n, 0.0);
    g.gamma_.assign(n * 8, 0.0);
    g.k_.assign(n, 0.0);
    const double cell = g.h_[0] * (g.dim_ == 2 ? g.h_[1] : 1.0);

    // Conformal factor jets: analytic for Fourier sums, spectral otherwise.
    std::vector<ConformalFactor::Jet> jets(n);
    if (spec.kind == ManifoldKind::conformal_torus) {
        if (spec.conformal.analytic()) {
            for (std::size_t p = 0; p < n; ++p)
                jets[p] = spec.conformal.jet(g.coord(p, 0), g.coord(p, 1), spec.periods[0], spec.periods[1]);
        } else {
            std::vector<double> u(n), ux(n), uy(n), uxx(n), uxy(n), uyy(n);
            for (std::size_t p = 0; p < n; ++p) {
                u[p] = spec.conformal.callable(g.coord(p, 0), g.coord(p, 1));
                if (!std::isfinite(u[p])) throw invalid_argument("build_grid: non-finite conformal factor");
            }
            const std::size_t nx = g.res_[0], ny = g.res_[1];
            auto dx = [&](const std::vector<double>& in, std::vector<double>& out) {
                for (std::size_t j = 0; j < ny; ++j) g.d_[0].apply_line(&in[j], &out[j], ny);
            };
            auto dy = [&](const std::vector<double>& in, std::vector<double>& out) {
                for (std::size_t i = 0; i < nx; ++i) g.d_[1].apply_line(&in[i * ny], &out[i * ny], 1);
            };
            dx(u, ux);
            dy(u, uy);
            dx(ux, uxx);
            dy(ux, uxy);
            dy(uy, uyy);
            for (std::size_t p = 0; p < n; ++p) jets[p] = {u[p], ux[p], uy[p], uxx[p], uxy[p], uyy[p]};
        }
    }

    double vol = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        double e2u = 1.0;
        if (spec.kind == ManifoldKind::conformal_torus) {
            const auto& j = jets[p];
            if (!std::isfinite(j.u)) throw invalid_argument("build_grid: non-finite conformal factor");
            e2u = std::exp(2.0 * j.u);
            const double du[2] = {j.ux, j.uy};
            // Gamma^k_ab = delta^k_a d_b u + delta^k_b d_a u - delta_ab d_k u
            for (std::size_t k = 0; k < 2; ++k)
                for (std::size_t a = 0; a < 2; ++a)
                    for (std::size_t b = 0; b < 2; ++b) {
                        double v = 0.0;
                        if (k == a) v += du[b];
                        if (k == b) v += du[a];
                        if (a == b) v -= du[k];
                        g.gamma_[p * 8 + k * 4 + a * 2 + b] = v;
                    }
            g.k_[p] = -std::exp(-2.0 * j.u) * (j.uxx + j.uyy);
        }
        for (std::size_t a = 0; a < g.dim_; ++a) {
            g.g_[p * 4 + a * 3] = e2u;
            g.ginv_[p * 4 + a * 3] = 1.0 / e2u;
        }
        g.sqrtg_[p] = g.dim_ == 2 ? e2u : 1.0;
        g.w_[p] = g.sqrtg_[p] * cell;
        vol += g.w_[p];
    }
    g.volume_ = vol;
    return grid;
}

inline GridPtr build_grid(const ManifoldSpec& spec, std::size_t nx, std::size_t ny = 1,
                          DiffScheme scheme = DiffScheme::spectral) {
    return build_grid(spec, std::array<std::size_t, 2>{nx, ny}, scheme);
}

} // namespace otto
