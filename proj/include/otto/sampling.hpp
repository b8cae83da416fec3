#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "otto/density.hpp"

namespace otto {

using Rng = std::mt19937_64;

// Default band limit for sampled fields: quadratic and cubic expressions of
// sampled fields stay below the Nyquist frequency.
inline int default_band(const Grid& g) {
    std::size_t n = g.nx();
    if (g.dim() == 2) n = std::min(n, g.ny());
    int k = static_cast<int>(n / 8);
    if (g.spec().kind == ManifoldKind::conformal_torus) k = std::min(k, 3);
    return std::max(k, 1);
}

namespace detail {

struct SampledMode {
    int kx, ky;
    double a, b;  // a cos + b sin
};

inline std::vector<SampledMode> sample_modes(const Grid& g, Rng& rng, int max_mode) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<SampledMode> modes;
    const int ky_lo = g.dim() == 2 ? -max_mode : 0;
    const int ky_hi = g.dim() == 2 ? max_mode : 0;
    for (int kx = 0; kx <= max_mode; ++kx)
        for (int ky = ky_lo; ky <= ky_hi; ++ky) {
            if (kx == 0 && ky <= 0) continue;  // each +-k pair once, no constant
            const double decay = 1.0 / (1.0 + kx * kx + ky * ky);
            const double a = u(rng) * decay;
            const double b = u(rng) * decay;
            modes.push_back({kx, ky, a, b});
        }
    return modes;
}

inline ScalarField synthesize(const GridPtr& grid, const std::vector<SampledMode>& modes) {
    const Grid& g = *grid;
    const double lx = g.period(0), ly = g.dim() == 2 ? g.period(1) : 1.0;
    ScalarField f(grid);
    for (std::size_t p = 0; p < g.size(); ++p) {
        const double x = g.coord(p, 0), y = g.dim() == 2 ? g.coord(p, 1) : 0.0;
        double s = 0.0;
        for (const auto& m : modes) {
            const double arg = 2.0 * std::numbers::pi * (m.kx * x / lx + m.ky * y / ly);
            s += m.a * std::cos(arg) + m.b * std::sin(arg);
        }
        f(p) = s;
    }
    return f;
}

} // namespace detail

// Band-limited random field with amplitudes decaying like 1/(1+|k|^2), modes <= max_mode.
inline ScalarField random_field(const GridPtr& grid, Rng& rng, int max_mode, double scale = 1.0) {
    auto f = detail::synthesize(grid, detail::sample_modes(*grid, rng, max_mode));
    return f * scale;
}
inline ScalarField random_field(const GridPtr& grid, Rng& rng) {
    return random_field(grid, rng, default_band(*grid));
}

inline Potential random_potential(const Density& rho, Rng& rng, int max_mode) {
    return Potential(rho, random_field(rho.grid_ptr(), rng, max_mode));
}
inline Potential random_potential(const Density& rho, Rng& rng) {
    return random_potential(rho, rng, default_band(rho.grid()));
}

// Band-limited density c (1 + s) with sum |coefficients of s| <= contrast < 1,
// so min rho >= (1 - contrast) c.
inline Density random_density(const GridPtr& grid, Rng& rng, int max_mode, double contrast = 0.5) {
    auto modes = detail::sample_modes(*grid, rng, max_mode);
    double total = 0.0;
    for (const auto& m : modes) total += std::abs(m.a) + std::abs(m.b);
    if (total > 0.0)
        for (auto& m : modes) {
            m.a *= contrast / total;
            m.b *= contrast / total;
        }
    auto s = detail::synthesize(grid, modes);
    for (std::size_t p = 0; p < s.size(); ++p) s(p) += 1.0;
    return Density(s);
}
inline Density random_density(const GridPtr& grid, Rng& rng) {
    return random_density(grid, rng, std::max(1, default_band(*grid) / 2));
}

} // namespace otto
