#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "otto/fields.hpp"

namespace otto {

namespace detail {

// Apply the axis derivative (transpose == false) or its transpose to raw node data.
inline void apply_axis(const Grid& g, std::size_t axis, const double* in, double* out, bool transpose = false) {
    const std::size_t nx = g.nx(), ny = g.ny();
    const Circulant& d = g.derivative(axis);
    if (axis == 0) {
        for (std::size_t j = 0; j < ny; ++j) d.apply_line(in + j, out + j, ny);
    } else {
        for (std::size_t i = 0; i < nx; ++i) d.apply_line(in + i * ny, out + i * ny, 1);
    }
    if (transpose) {
        const std::size_t n = g.size();
        for (std::size_t p = 0; p < n; ++p) out[p] = -out[p];
    }
}

} // namespace detail

// Coordinate partial derivative d_axis f.
inline ScalarField partial(const ScalarField& f, std::size_t axis) {
    ScalarField r(f.grid_ptr());
    detail::apply_axis(f.grid(), axis, f.values().data(), r.values().data());
    return r;
}

// df as a covariant one-form.
inline OneForm differential(const ScalarField& f) {
    const Grid& g = f.grid();
    OneForm r(f.grid_ptr());
    for (std::size_t a = 0; a < g.dim(); ++a)
        detail::apply_axis(g, a, f.values().data(), r.component(a).data());
    return r;
}

inline VectorField raise(const OneForm& alpha) {
    const Grid& g = alpha.grid();
    VectorField r(alpha.grid_ptr());
    for (std::size_t p = 0; p < g.size(); ++p)
        for (std::size_t a = 0; a < g.dim(); ++a) {
            double s = 0.0;
            for (std::size_t b = 0; b < g.dim(); ++b) s += g.inverse_metric(p, a, b) * alpha(p, b);
            r(p, a) = s;
        }
    return r;
}

inline OneForm lower(const VectorField& x) {
    const Grid& g = x.grid();
    OneForm r(x.grid_ptr());
    for (std::size_t p = 0; p < g.size(); ++p)
        for (std::size_t a = 0; a < g.dim(); ++a) {
            double s = 0.0;
            for (std::size_t b = 0; b < g.dim(); ++b) s += g.metric(p, a, b) * x(p, b);
            r(p, a) = s;
        }
    return r;
}

// Contravariant gradient grad^a f = g^ab d_b f.
inline VectorField gradient(const ScalarField& f) { return raise(differential(f)); }

// Riemannian divergence (1/sqrt g) d_a (sqrt g X^a).  On the quadrature inner
// product this is exactly minus the adjoint of gradient().
inline ScalarField divergence(const VectorField& x) {
    const Grid& g = x.grid();
    const std::size_t n = g.size();
    ScalarField r(x.grid_ptr());
    std::vector<double> tmp(n), out(n);
    for (std::size_t a = 0; a < g.dim(); ++a) {
        for (std::size_t p = 0; p < n; ++p) tmp[p] = g.sqrt_det(p) * x(p, a);
        detail::apply_axis(g, a, tmp.data(), out.data());
        for (std::size_t p = 0; p < n; ++p) r(p) += out[p];
    }
    for (std::size_t p = 0; p < n; ++p) r(p) /= g.sqrt_det(p);
    return r;
}

// Covariant Hessian (nabla nabla f)_ab = d_a d_b f - Gamma^k_ab d_k f.
// The mixed partial is computed once, so the result is symmetric bit for bit.
inline TensorField covariant_hessian(const ScalarField& f) {
    const Grid& g = f.grid();
    const std::size_t n = g.size(), dim = g.dim();
    TensorField h(f.grid_ptr());
    const OneForm df = differential(f);
    std::vector<double> second(n);
    for (std::size_t a = 0; a < dim; ++a)
        for (std::size_t b = a; b < dim; ++b) {
            detail::apply_axis(g, a, df.component(b).data(), second.data());
            for (std::size_t p = 0; p < n; ++p) {
                double v = second[p];
                if (!g.spec().flat())
                    for (std::size_t k = 0; k < dim; ++k) v -= g.christoffel(p, k, a, b) * df(p, k);
                h(p, a * dim + b) = v;
                h(p, b * dim + a) = v;
            }
        }
    return h;
}

// Gaussian curvature per node; identically zero on the circle.
inline ScalarField gauss_curvature(const GridPtr& grid) {
    ScalarField k(grid);
    for (std::size_t p = 0; p < grid->size(); ++p) k(p) = grid->gauss_curvature(p);
    return k;
}

// Quadrature integral with dvol_M weights, fixed summation order.
inline double integrate(const ScalarField& f) {
    const Grid& g = f.grid();
    double s = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) s += g.weight(p) * f(p);
    return s;
}

// Pointwise g^ab alpha_a beta_b.
inline ScalarField pointwise_inner(const OneForm& a, const OneForm& b) {
    require_same_grid(a.grid_ptr(), b.grid_ptr(), "pointwise_inner");
    const Grid& g = a.grid();
    ScalarField r(a.grid_ptr());
    for (std::size_t p = 0; p < g.size(); ++p) {
        double s = 0.0;
        for (std::size_t i = 0; i < g.dim(); ++i)
            for (std::size_t j = 0; j < g.dim(); ++j) s += g.inverse_metric(p, i, j) * a(p, i) * b(p, j);
        r(p) = s;
    }
    return r;
}

// Pointwise g_ab X^a Y^b.
inline ScalarField pointwise_inner(const VectorField& a, const VectorField& b) {
    require_same_grid(a.grid_ptr(), b.grid_ptr(), "pointwise_inner");
    const Grid& g = a.grid();
    ScalarField r(a.grid_ptr());
    for (std::size_t p = 0; p < g.size(); ++p) {
        double s = 0.0;
        for (std::size_t i = 0; i < g.dim(); ++i)
            for (std::size_t j = 0; j < g.dim(); ++j) s += g.metric(p, i, j) * a(p, i) * b(p, j);
        r(p) = s;
    }
    return r;
}

// g^ab d_a d_b-style trace of a covariant 2-tensor.
inline ScalarField trace(const TensorField& t) {
    const Grid& g = t.grid();
    const std::size_t dim = g.dim();
    ScalarField r(t.grid_ptr());
    for (std::size_t p = 0; p < g.size(); ++p) {
        double s = 0.0;
        for (std::size_t a = 0; a < dim; ++a)
            for (std::size_t b = 0; b < dim; ++b) s += g.inverse_metric(p, a, b) * t(p, a * dim + b);
        r(p) = s;
    }
    return r;
}

// Laplace-Beltrami, div grad.
inline ScalarField laplacian(const ScalarField& f) { return divergence(gradient(f)); }

// Exponential spectral filter on the top third of modes along each axis.
inline ScalarField filtered(const ScalarField& f) {
    const Grid& g = f.grid();
    auto c = g.dft().forward(f.values());
    const std::size_t nx = g.nx(), ny = g.ny();
    for (std::size_t i = 0; i < nx; ++i) {
        const double sx = exponential_filter(wavenumber(i, nx), nx);
        for (std::size_t j = 0; j < ny; ++j) {
            const double sy = ny > 1 ? exponential_filter(wavenumber(j, ny), ny) : 1.0;
            c[i * ny + j] *= sx * sy;
        }
    }
    return ScalarField(f.grid_ptr(), g.dft().inverse_real(std::move(c)));
}

// Trigonometric interpolant of grid data, evaluable at arbitrary points together
// with its first and second derivatives.  The Nyquist mode is split symmetrically
// so the interpolant is real.
class TrigInterpolant {
public:
    explicit TrigInterpolant(const ScalarField& f)
        : nx_(f.grid().nx()), ny_(f.grid().ny()), dim_(f.grid().dim()),
          lx_(f.grid().period(0)), ly_(dim_ == 2 ? f.grid().period(1) : 1.0) {
        coeff_ = f.grid().dft().forward(f.values());
        const double scale = 1.0 / static_cast<double>(nx_ * ny_);
        for (auto& c : coeff_) c *= scale;
    }

    struct Jet {
        double value = 0;
        double d[2] = {0, 0};
        double dd[2][2] = {{0, 0}, {0, 0}};
    };

    Jet eval(double x, double y = 0.0) const {
        // Per-axis basis factors e^{i k x} with Nyquist replaced by cos.
        auto axis = [](std::size_t n, double l, double t, std::vector<std::complex<double>>& e,
                       std::vector<double>& kk) {
            e.resize(n);
            kk.resize(n);
            for (std::size_t k = 0; k < n; ++k) {
                const long w = wavenumber(k, n);
                const double kw = 2.0 * std::numbers::pi * static_cast<double>(w) / l;
                kk[k] = kw;
                if (n % 2 == 0 && 2 * k == n)
                    e[k] = {std::cos(kw * t), 0.0};
                else
                    e[k] = {std::cos(kw * t), std::sin(kw * t)};
            }
        };
        std::vector<std::complex<double>> ex, ey;
        std::vector<double> kx, ky;
        axis(nx_, lx_, x, ex, kx);
        axis(ny_, ly_, y, ey, ky);
        Jet j;
        const std::complex<double> I{0.0, 1.0};
        for (std::size_t a = 0; a < nx_; ++a) {
            const bool nyq_x = (nx_ % 2 == 0 && 2 * a == nx_);
            // d/dx of the Nyquist cosine is -k sin(kx); handle it separately.
            const std::complex<double> fx = ex[a];
            const std::complex<double> dfx = nyq_x ? std::complex<double>(-kx[a] * std::sin(kx[a] * x), 0.0)
                                                   : I * kx[a] * ex[a];
            const std::complex<double> ddfx = -kx[a] * kx[a] * ex[a];
            for (std::size_t b = 0; b < ny_; ++b) {
                const bool nyq_y = (ny_ % 2 == 0 && 2 * b == ny_ && ny_ > 1);
                const std::complex<double> fy = ey[b];
                const std::complex<double> dfy =
                    nyq_y ? std::complex<double>(-ky[b] * std::sin(ky[b] * y), 0.0) : I * ky[b] * ey[b];
                const std::complex<double> ddfy = -ky[b] * ky[b] * ey[b];
                const std::complex<double> c = coeff_[a * ny_ + b];
                j.value += (c * fx * fy).real();
                j.d[0] += (c * dfx * fy).real();
                j.dd[0][0] += (c * ddfx * fy).real();
                if (dim_ == 2) {
                    j.d[1] += (c * fx * dfy).real();
                    j.dd[1][1] += (c * fx * ddfy).real();
                    j.dd[0][1] += (c * dfx * dfy).real();
                }
            }
        }
        j.dd[1][0] = j.dd[0][1];
        return j;
    }

    double operator()(double x, double y = 0.0) const { return eval(x, y).value; }

private:
    std::size_t nx_, ny_, dim_;
    double lx_, ly_;
    std::vector<std::complex<double>> coeff_;
};

// Trigonometric interpolation of f onto another grid over the same manifold.
inline ScalarField resample(const ScalarField& f, const GridPtr& target) {
    if (!same_spec(f.grid().spec(), target->spec()))
        throw grid_mismatch("resample: target grid covers a different manifold");
    TrigInterpolant ip(f);
    ScalarField r(target);
    for (std::size_t p = 0; p < target->size(); ++p)
        r(p) = ip(target->coord(p, 0), target->dim() == 2 ? target->coord(p, 1) : 0.0);
    return r;
}

} // namespace otto
