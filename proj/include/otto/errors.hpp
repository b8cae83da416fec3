#pragma once

#include <stdexcept>
#include <string>

namespace otto {

// Base of every exception thrown by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller passed something outside an operation's domain.
class invalid_argument : public error {
public:
    using error::error;
};

// Two fields, densities or potentials live on different grids.
class grid_mismatch : public error {
public:
    explicit grid_mismatch(const std::string& where)
        : error(where + ": operands live on different grids") {}
};

// A density lost strict positivity (construction or time stepping).
class positivity_error : public error {
public:
    using error::error;
};

// Iterative solver or time integrator failed to produce a usable result.
class numerical_error : public error {
public:
    using error::error;
};

// A conserved quantity or structural identity drifted past its tolerance.
class invariant_violation : public error {
public:
    using error::error;
};

} // namespace otto
