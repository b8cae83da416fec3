#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "otto/grid.hpp"

namespace otto {

namespace field_kind {
struct scalar {
    static constexpr std::size_t components(std::size_t) { return 1; }
};
struct vector {  // contravariant X^a
    static constexpr std::size_t components(std::size_t dim) { return dim; }
};
struct covector {  // covariant alpha_a
    static constexpr std::size_t components(std::size_t dim) { return dim; }
};
struct tensor2 {  // covariant rank 2, T_ab stored at component a * dim + b
    static constexpr std::size_t components(std::size_t dim) { return dim * dim; }
};
} // namespace field_kind

// Per-node values tied to a grid.  Component-major storage:
// value of component c at node p is data()[c * grid.size() + p].
template <class Kind>
class BasicField {
public:
    BasicField() = default;
    explicit BasicField(GridPtr grid, double fill = 0.0)
        : grid_(std::move(grid)), v_(grid_->size() * Kind::components(grid_->dim()), fill) {}
    BasicField(GridPtr grid, std::vector<double> values) : grid_(std::move(grid)), v_(std::move(values)) {
        if (v_.size() != grid_->size() * Kind::components(grid_->dim()))
            throw invalid_argument("field: value count does not match grid resolution and rank");
    }

    const GridPtr& grid_ptr() const { return grid_; }
    const Grid& grid() const { return *grid_; }
    std::size_t size() const { return grid_ ? grid_->size() : 0; }
    std::size_t components() const { return Kind::components(grid_->dim()); }

    std::span<double> component(std::size_t c) { return {v_.data() + c * size(), size()}; }
    std::span<const double> component(std::size_t c) const { return {v_.data() + c * size(), size()}; }
    std::span<const double> values() const { return v_; }
    std::span<double> values() { return v_; }
    const std::vector<double>& data() const { return v_; }

    double& operator()(std::size_t p, std::size_t c = 0) { return v_[c * size() + p]; }
    double operator()(std::size_t p, std::size_t c = 0) const { return v_[c * size() + p]; }

    bool all_finite() const {
        return std::all_of(v_.begin(), v_.end(), [](double x) { return std::isfinite(x); });
    }
    double max_abs() const {
        double m = 0.0;
        for (double x : v_) m = std::max(m, std::abs(x));
        return m;
    }

    BasicField& operator+=(const BasicField& o) {
        check(o, "field +=");
        for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
        return *this;
    }
    BasicField& operator-=(const BasicField& o) {
        check(o, "field -=");
        for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
        return *this;
    }
    BasicField& operator*=(double s) {
        for (double& x : v_) x *= s;
        return *this;
    }
    // a += s * b
    BasicField& axpy(double s, const BasicField& o) {
        check(o, "field axpy");
        for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += s * o.v_[i];
        return *this;
    }

    friend BasicField operator+(BasicField a, const BasicField& b) { return a += b; }
    friend BasicField operator-(BasicField a, const BasicField& b) { return a -= b; }
    friend BasicField operator*(BasicField a, double s) { return a *= s; }
    friend BasicField operator*(double s, BasicField a) { return a *= s; }
    friend BasicField operator-(BasicField a) { return a *= -1.0; }

private:
    void check(const BasicField& o, const char* where) const { require_same_grid(grid_, o.grid_, where); }

    GridPtr grid_;
    std::vector<double> v_;
};

using ScalarField = BasicField<field_kind::scalar>;
using VectorField = BasicField<field_kind::vector>;
using OneForm = BasicField<field_kind::covector>;
using TensorField = BasicField<field_kind::tensor2>;

// Node-wise product of scalar fields.
inline ScalarField operator*(const ScalarField& a, const ScalarField& b) {
    require_same_grid(a.grid_ptr(), b.grid_ptr(), "scalar product");
    ScalarField r(a.grid_ptr());
    for (std::size_t p = 0; p < a.size(); ++p) r(p) = a(p) * b(p);
    return r;
}

inline ScalarField constant_field(const GridPtr& grid, double c) { return ScalarField(grid, c); }

inline ScalarField sample(const GridPtr& grid, const std::function<double(double, double)>& f) {
    ScalarField r(grid);
    for (std::size_t p = 0; p < grid->size(); ++p) {
        r(p) = f(grid->coord(p, 0), grid->dim() == 2 ? grid->coord(p, 1) : 0.0);
        if (!std::isfinite(r(p))) throw invalid_argument("sample: non-finite value");
    }
    return r;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace otto
