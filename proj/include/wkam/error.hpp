#pragma once

#include <stdexcept>
#include <string>

namespace wkam {

/// Invalid input: malformed configuration, violated preconditions, bad shapes.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// A numerical procedure failed: non-convergence, divergence, saturation.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Min-plus closure diverged to -inf: the normalization is below the critical value.
class DivergenceError : public NumericalError {
public:
    explicit DivergenceError(const std::string& what) : NumericalError(what) {}
};

} // namespace wkam
