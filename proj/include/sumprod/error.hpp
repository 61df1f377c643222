#pragma once

#include <stdexcept>
#include <string>

namespace sumprod {

// Base of every error raised by the library. Callers that only care about
// "something went wrong" catch this; the CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A requested scale is finer than the information stored in the measure.
class ScaleOrderError : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class InvalidMeasure : public Error {
public:
    using Error::Error;
};

class ZeroMassEventError : public Error {
public:
    using Error::Error;
};

// Support or argument outside the domain where a map is defined/bi-Lipschitz.
class DomainError : public Error {
public:
    using Error::Error;
};

// Cylinder, cell or window budget exceeded.
class ResourceError : public Error {
public:
    using Error::Error;
};

class SeparationError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

class DeterminationError : public Error {
public:
    using Error::Error;
};

// A proven inequality came out negative beyond tolerance.
class InternalConsistencyError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& what, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

} // namespace sumprod
