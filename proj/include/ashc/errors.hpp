// Copyright 2026 The ashc Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace ashc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dimension mismatch or otherwise malformed argument.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// A point lies outside the region on which a map or guarantee is defined.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A certificate or rank condition does not hold.
class CertificateError : public Error {
public:
    using Error::Error;
};

/// Iterative method hit its iteration cap.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// A callable produced a non-finite value.
class EvaluationError : public Error {
public:
    using Error::Error;
};

/// Time stepping failed; carries the time of the last good state.
class IntegrationError : public Error {
public:
    IntegrationError(const std::string& what, double last_good_time)
        : Error(what), last_good_time_(last_good_time) {}

    double last_good_time() const noexcept { return last_good_time_; }

private:
    double last_good_time_;
};

/// The operation needs structure the system does not expose.
class UnsupportedError : public Error {
public:
    using Error::Error;
};

/// Malformed configuration file or value.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace ashc
