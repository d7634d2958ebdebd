#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace discnet {

// Input outside the valid domain of an operation (hazards out of range,
// empty distributions, bad tolerances, ...).
class domain_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A model consistency constraint was violated beyond tolerance.
// Carries the relative residual that triggered the failure.
class consistency_error : public domain_error {
public:
    consistency_error(const std::string& what, double residual)
        : domain_error(what), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

// Invalid run configuration (roster, ensemble sizing, missing salt, ...).
class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input file. Carries the 1-based line number when known.
class parse_error : public std::runtime_error {
public:
    parse_error(const std::string& what, std::size_t line)
        : std::runtime_error(what + " (line " + std::to_string(line) + ")"),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// An agent backend failed after exhausting its retry budget.
class backend_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Operation not available for the given backend (e.g. hazard estimation
// without statement-level ground truth).
class unsupported_error : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace discnet
