#pragma once

#include <stdexcept>
#include <string>

namespace fraccurv {

/// Invalid user input: out-of-range parameters, malformed configs, violated preconditions.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A computation would exceed a configured size cap.
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The exact boundary failed its Gauss-Bonnet or loop-closure self-check.
class GeometryError : public std::runtime_error {
public:
    GeometryError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

}  // namespace fraccurv
