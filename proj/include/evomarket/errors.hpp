#pragma once

#include <stdexcept>
#include <string>

namespace evomarket {

/// Base class of every error raised by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the operation (non-positive income, t < 0, ...).
class domain_error : public error {
public:
    using error::error;
};

/// Malformed input data: non-uniform grid, bad CSV, non-monotone years.
class format_error : public error {
public:
    using error::error;
};

/// A value violates the range invariant of its series kind (e.g. penetration above 1).
class range_error : public format_error {
public:
    using format_error::format_error;
};

/// A calibration found no feasible parameter set.
class fit_error : public error {
public:
    using error::error;
};

/// The state of an ODE integration became non-finite.
class integration_error : public error {
public:
    using error::error;
};

/// A time step was too large for the dynamics (negative densities, unstable relaxation).
class step_size_error : public error {
public:
    using error::error;
};

/// A run configuration is invalid (unknown key value, violated parameter invariant).
class config_error : public error {
public:
    using error::error;
};

namespace detail {

inline void require(bool ok, const char* what) {
    if (!ok) throw domain_error(what);
}

inline void require(bool ok, const std::string& what) {
    if (!ok) throw domain_error(what);
}

} // namespace detail

} // namespace evomarket
