#pragma once

#include <stdexcept>
#include <string>

namespace kfe {

// Error taxonomy mirrors the CLI exit codes:
// validation-type errors exit 2, numerical-consistency errors exit 3, I/O exits 4.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid configuration, parameters, or violated preconditions.
class validation_error : public error {
public:
    using error::error;
};

// Requested operation is not supported for the given inputs; the message
// names the supported alternative.
class capability_error : public validation_error {
public:
    using validation_error::validation_error;
};

// Required mass or payoff support falls outside the computational grid.
class coverage_error : public validation_error {
public:
    using validation_error::validation_error;
};

// Exact computation would exceed a resource cap (e.g. discrete support blow-up).
class resource_error : public validation_error {
public:
    using validation_error::validation_error;
};

// A numerical consistency check failed: large imaginary residual, wrap-around
// contamination in strict mode, or a series that cannot meet its tolerance.
class numerical_error : public error {
public:
    using error::error;
};

class io_error : public error {
public:
    using error::error;
};

} // namespace kfe
