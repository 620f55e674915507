#pragma once

#include <stdexcept>
#include <string>

namespace saal {

// Base class for all toolkit errors.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Incompatible tensor shapes or graph wiring.
class dimension_error : public error {
public:
    using error::error;
};

// NaN/Inf encountered in a public operation.
class numeric_error : public error {
public:
    using error::error;
};

// Invalid configuration (rejected before any compute).
class config_error : public error {
public:
    using error::error;
};

// Violated operation contract (e.g. non-scalar loss output).
class contract_error : public error {
public:
    using error::error;
};

// Malformed external input (CSV, schema, config file).
class parse_error : public error {
public:
    using error::error;
};

// A coefficient group summed to zero during normalisation.
class degenerate_group_error : public error {
public:
    using error::error;
};

}  // namespace saal
