#pragma once

#include <stdexcept>
#include <string>

namespace gridsched {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument does not hold.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Simultaneous charge and discharge requested for one device.
class MutualExclusionViolation : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// Configuration file missing or unreadable.
class ConfigUnreadable : public Error {
public:
    using Error::Error;
};

/// Configuration parsed but does not satisfy the schema.
class SchemaViolation : public Error {
public:
    using Error::Error;
};

/// Reading or writing a result file failed.
class IoError : public Error {
public:
    using Error::Error;
};

/// Loss or parameters became non-finite during learning.
class NumericalDivergence : public Error {
public:
    using Error::Error;
};

} // namespace gridsched
