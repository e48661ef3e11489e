#ifndef PHASECORR_ERRORS_HPP
#define PHASECORR_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace phasecorr {

// Bad user input (config file, CLI arguments, inconsistent run schedule).
// The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure beyond policy (Fock cutoff exceeded, ensemble fully
// escaped, non-finite reductions). The CLI maps this to exit code 3.
class NumericalFailure : public std::runtime_error {
public:
    explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

class CutoffExceeded : public NumericalFailure {
public:
    explicit CutoffExceeded(const std::string& what) : NumericalFailure(what) {}
};

// Sample conversion can only move toward less normal ordering (s decreasing).
class OrderingDirection : public std::logic_error {
public:
    explicit OrderingDirection(const std::string& what) : std::logic_error(what) {}
};

// Estimator asked to read an ensemble in a representation it does not handle.
class RepresentationMismatch : public std::logic_error {
public:
    explicit RepresentationMismatch(const std::string& what) : std::logic_error(what) {}
};

// A correlation plan needs a snapshot that was never recorded.
class MissingSnapshot : public std::logic_error {
public:
    explicit MissingSnapshot(const std::string& what) : std::logic_error(what) {}
};

} // namespace phasecorr

#endif
