#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace hamlearn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Inconsistent dimensions, invalid hyperparameters, malformed configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A point left the domain of a potential, a basis function or a transform.
/// Simulation errors carry the index of the failing step.
class DomainError : public Error {
public:
    explicit DomainError(const std::string& what, std::optional<std::size_t> step = std::nullopt)
        : Error(step ? what + " (step " + std::to_string(*step) + ")" : what), step_(step) {}

    std::optional<std::size_t> step() const { return step_; }

private:
    std::optional<std::size_t> step_;
};

/// Malformed or version-incompatible serialized data.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, long step)
        : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

    long step() const { return step_; }

private:
    long step_;
};

/// Thresholding removed every candidate function.
class AllPrunedError : public Error {
public:
    using Error::Error;
};

/// No threshold on the tuning path produced an acceptable fit.
class NoFitError : public Error {
public:
    using Error::Error;
};

}  // namespace hamlearn
