#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace orthopred {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shape contract violated (mismatched dimensions, non-square input, ...).
class DimensionError : public Error {
public:
    using Error::Error;
};

// Input outside the admissible domain (asymmetric, indefinite, zero, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// A NaN or Inf appeared inside an iteration.
class NumericError : public Error {
public:
    NumericError(const std::string& what, std::size_t iteration)
        : Error(what + " (iteration " + std::to_string(iteration) + ")"),
          iteration_(iteration) {}

    std::size_t iteration() const noexcept { return iteration_; }

protected:
    struct Verbatim {};
    // Message used as given, for subclasses that already name the position.
    NumericError(Verbatim, const std::string& what, std::size_t iteration)
        : Error(what), iteration_(iteration) {}

private:
    std::size_t iteration_;
};

// An iteration whose residual is growing instead of shrinking.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, std::size_t iteration, double residual)
        : Error(what + " (iteration " + std::to_string(iteration) +
                ", residual " + std::to_string(residual) + ")"),
          iteration_(iteration), residual_(residual) {}

    std::size_t iteration() const noexcept { return iteration_; }
    double residual() const noexcept { return residual_; }

private:
    std::size_t iteration_;
    double residual_;
};

// Malformed configuration (unknown key, unparsable value, bad range).
class ConfigError : public Error {
public:
    using Error::Error;
};

// File-system failure; the message carries the offending path.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace orthopred
