#pragma once

// Dense-matrix reference for the circle: D assembled from explicit DFT matrices,
// G_rho and Pi_rho through Moore-Penrose pseudo-inverses.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace oracle {

struct DenseCircle {
    int n;
    double period;
    Eigen::MatrixXd d;  // spectral first derivative
    Eigen::VectorXd w;  // quadrature weights
    Eigen::VectorXd rho;

    DenseCircle(int n_, double period_, const std::vector<double>& density)
        : n(n_), period(period_), d(n_, n_), w(n_), rho(n_) {
        using cd = std::complex<double>;
        Eigen::MatrixXcd f(n, n), finv(n, n);
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j) {
                const double ang = -2.0 * std::numbers::pi * k * j / n;
                f(k, j) = cd(std::cos(ang), std::sin(ang));
                finv(j, k) = std::conj(f(k, j)) / static_cast<double>(n);
            }
        Eigen::VectorXcd sym(n);
        for (int k = 0; k < n; ++k) {
            int kk = (2 * k <= n) ? k : k - n;
            if (2 * k == n) kk = 0;  // Nyquist derivative set to zero
            sym(k) = cd(0.0, 2.0 * std::numbers::pi * kk / period);
        }
        d = (finv * sym.asDiagonal() * f).real();
        w.setConstant(period / n);
        double mass = 0;
        for (int i = 0; i < n; ++i) mass += w(i) * density[i];
        for (int i = 0; i < n; ++i) rho(i) = density[i] / mass;
    }

    Eigen::MatrixXd weight() const { return (w.array() * rho.array()).matrix().asDiagonal(); }

    // phi with d phi = Pi_rho alpha (minimum-norm representative)
    Eigen::VectorXd project(const Eigen::VectorXd& alpha) const {
        const Eigen::MatrixXd wm = weight();
        const Eigen::MatrixXd a = d.transpose() * wm * d;
        const Eigen::MatrixXd pinv = a.completeOrthogonalDecomposition().pseudoInverse();
        return pinv * (d.transpose() * wm * alpha);
    }

    // G_rho f for right-hand sides with zero weighted mean
    Eigen::VectorXd green(const Eigen::VectorXd& f) const {
        const Eigen::MatrixXd wm = weight();
        const Eigen::MatrixXd a = d.transpose() * wm * d;
        const Eigen::MatrixXd pinv = a.completeOrthogonalDecomposition().pseudoInverse();
        Eigen::VectorXd phi = pinv * (wm * f);
        const double mean = (w.array() * rho.array() * phi.array()).sum();
        return phi.array() - mean;
    }

    Eigen::VectorXd alpha(const Eigen::VectorXd& p, const Eigen::VectorXd& q) const {
        return ((d * p).array() * (d * (d * q)).array()).matrix();
    }
    Eigen::VectorXd t(const Eigen::VectorXd& p, const Eigen::VectorXd& q) const {
        const Eigen::VectorXd a = alpha(p, q);
        return a - d * project(a);
    }
    double ip(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
        return (w.array() * rho.array() * a.array() * b.array()).sum();
    }
    double quadform(const Eigen::VectorXd& p1, const Eigen::VectorXd& p2, const Eigen::VectorXd& p3,
                    const Eigen::VectorXd& p4) const {
        return -2.0 * ip(t(p1, p2), t(p3, p4)) + ip(t(p2, p3), t(p1, p4)) - ip(t(p1, p3), t(p2, p4));
    }
};

} // namespace oracle
