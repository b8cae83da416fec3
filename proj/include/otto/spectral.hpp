#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "otto/errors.hpp"

namespace otto {

enum class DiffScheme { spectral, fd4 };

// Periodic first-derivative operator stored as one circulant row:
// (Df)_j = sum_k row[(j - k) mod n] f_k.  The row is antisymmetric,
// row[n - m] == -row[m] bit for bit, so D^T == -D exactly.
class Circulant {
public:
    Circulant() = default;

    static Circulant derivative(std::size_t n, double period, DiffScheme scheme) {
        Circulant c;
        c.row_.assign(n, 0.0);
        const double h = period / static_cast<double>(n);
        if (scheme == DiffScheme::spectral) {
            const double scale = 2.0 * std::numbers::pi / period;
            const double hh = 2.0 * std::numbers::pi / static_cast<double>(n);
            for (std::size_t m = 1; m <= n / 2; ++m) {
                const double sign = (m % 2 == 0) ? 1.0 : -1.0;
                const double t = 0.5 * static_cast<double>(m) * hh;
                double v = (n % 2 == 0) ? 0.5 * sign / std::tan(t) : 0.5 * sign / std::sin(t);
                v *= scale;
                if (2 * m == n) v = 0.0; // cot(pi/2)
                c.row_[m] = v;
                c.row_[n - m] = -v;
            }
        } else {
            if (n < 5) throw invalid_argument("fd4 derivative needs at least 5 nodes per axis");
            const double a = 8.0 / (12.0 * h);
            const double b = 1.0 / (12.0 * h);
            // f'_j = (8(f_{j+1} - f_{j-1}) - (f_{j+2} - f_{j-2})) / 12h
            c.row_[n - 1] = a;
            c.row_[1] = -a;
            c.row_[n - 2] = -b;
            c.row_[2] = b;
        }
        return c;
    }

    std::size_t size() const { return row_.size(); }
    std::span<const double> row() const { return row_; }

    // out[j] = sum_k row[(j-k) mod n] in[k], over a strided line.
    void apply_line(const double* in, double* out, std::size_t stride) const {
        const std::size_t n = row_.size();
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                const std::size_t m = (j + n - k) % n;
                acc += row_[m] * in[k * stride];
            }
            out[j * stride] = acc;
        }
    }

    // Eigenvalue on the Fourier mode e^{i k x_j}; purely imaginary for an antisymmetric row.
    std::complex<double> symbol(long k) const {
        const std::size_t n = row_.size();
        std::complex<double> s{0.0, 0.0};
        for (std::size_t m = 0; m < n; ++m) {
            const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) * static_cast<double>(m) /
                               static_cast<double>(n);
            s += row_[m] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        return s;
    }

private:
    std::vector<double> row_;
};

// Signed wavenumber of DFT index k on an n-point grid; the Nyquist index maps to +n/2.
inline long wavenumber(std::size_t k, std::size_t n) {
    const long kk = static_cast<long>(k);
    const long nn = static_cast<long>(n);
    return (2 * kk <= nn) ? kk : kk - nn;
}

// Dense O(n^2) DFT along one axis with precomputed twiddles.  Grids here are
// at most a few hundred nodes per axis, where this is cheap and deterministic.
class Dft {
public:
    Dft() = default;
    explicit Dft(std::size_t n) : n_(n), tw_(n) {
        for (std::size_t m = 0; m < n; ++m) {
            const double ang = -2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n);
            tw_[m] = {std::cos(ang), std::sin(ang)};
        }
    }
    std::size_t size() const { return n_; }

    // Forward when sign < 0: X_k = sum_j x_j e^{-2 pi i jk/n}.  Inverse includes 1/n.
    void transform(const std::complex<double>* in, std::complex<double>* out, std::size_t stride,
                   bool inverse) const {
        std::vector<std::complex<double>> tmp(n_);
        for (std::size_t k = 0; k < n_; ++k) {
            std::complex<double> acc{0.0, 0.0};
            for (std::size_t j = 0; j < n_; ++j) {
                auto t = tw_[(j * k) % n_];
                if (inverse) t = std::conj(t);
                acc += in[j * stride] * t;
            }
            tmp[k] = inverse ? acc / static_cast<double>(n_) : acc;
        }
        for (std::size_t k = 0; k < n_; ++k) out[k * stride] = tmp[k];
    }

private:
    std::size_t n_ = 0;
    std::vector<std::complex<double>> tw_;
};

// Separable 2D (or 1D when ny == 1) DFT over row-major data, index = i * ny + j.
class Dft2 {
public:
    Dft2() = default;
    Dft2(std::size_t nx, std::size_t ny) : nx_(nx), ny_(ny), x_(nx), y_(ny) {}

    std::vector<std::complex<double>> forward(std::span<const double> f) const {
        std::vector<std::complex<double>> c(f.begin(), f.end());
        run(c, false);
        return c;
    }
    std::vector<double> inverse_real(std::vector<std::complex<double>> c) const {
        run(c, true);
        std::vector<double> out(c.size());
        for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].real();
        return out;
    }
    std::size_t nx() const { return nx_; }
    std::size_t ny() const { return ny_; }

private:
    void run(std::vector<std::complex<double>>& c, bool inverse) const {
        if (ny_ > 1)
            for (std::size_t i = 0; i < nx_; ++i) y_.transform(&c[i * ny_], &c[i * ny_], 1, inverse);
        if (nx_ > 1)
            for (std::size_t j = 0; j < ny_; ++j) x_.transform(&c[j], &c[j], ny_, inverse);
    }

    std::size_t nx_ = 0, ny_ = 0;
    Dft x_, y_;
};

// Smooth exponential filter acting on the top third of the resolved modes:
// sigma(eta) = exp(-alpha ((eta - 2/3) / (1/3))^order) for eta = |k| / k_max > 2/3.
inline double exponential_filter(long k, std::size_t n, double alpha = 36.0, int order = 8) {
    const double kmax = static_cast<double>(n / 2);
    if (kmax <= 0.0) return 1.0;
    const double eta = std::abs(static_cast<double>(k)) / kmax;
    constexpr double cutoff = 2.0 / 3.0;
    if (eta <= cutoff) return 1.0;
    const double s = (eta - cutoff) / (1.0 - cutoff);
    return std::exp(-alpha * std::pow(s, order));
}

} // namespace otto
