#pragma once

#include <stdexcept>
#include <string>

namespace cyclharm {

// Domain violations: evaluation at a singular point, inapplicable expansion
// case, non-interlaced coordinates, and the like. CLI maps these to exit 2.
class DomainError : public std::runtime_error {
public:
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failures: eigenvalue search exhausted, unconverged quadrature,
// propagation breakdown. CLI maps these to exit 3.
class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

// Cache/config file problems: schema or parameter mismatch, corrupt data.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace cyclharm
