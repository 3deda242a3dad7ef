// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace hpcc_mesh {

// Root of every exception thrown by the suite.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid run configuration (grid/world mismatch, bad sizes, unknown keys).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Unreachable peer, disconnect, aborted world, protocol violation.
class TransportError : public Error {
public:
    using Error::Error;
};

// Frame larger than the wire format allows.
class SizeError : public TransportError {
public:
    using TransportError::TransportError;
};

// Collective or receive did not complete in time.
class TimeoutError : public TransportError {
public:
    using TransportError::TransportError;
};

// Operation not available on the selected backend.
class UnsupportedError : public Error {
public:
    using Error::Error;
};

// Zero pivot, singular triangular factor, shape mismatch in a kernel.
class NumericalError : public Error {
public:
    using Error::Error;
};

// Benchmark output did not match its reference.
class ValidationError : public Error {
public:
    using Error::Error;
};

}  // namespace hpcc_mesh
