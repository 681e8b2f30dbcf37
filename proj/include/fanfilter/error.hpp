#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fanfilter {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A documented precondition was violated by the caller.
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// Arguments outside the mathematical domain of a function.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Lookup-table query outside the grid beyond the clamp tolerance.
class RangeError : public Error {
public:
    using Error::Error;
};

class DegenerateFraction : public Error {
public:
    using Error::Error;
};

/// MRP coordinates outside the closed ball of radius 4.
class ChartDomainError : public Error {
public:
    using Error::Error;
};

class FilterDivergence : public Error {
public:
    using Error::Error;
};

class SamplingError : public Error {
public:
    using Error::Error;
};

class MetricError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed or incompatible input file; carries the byte offset of the problem.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::uint64_t offset)
        : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

}  // namespace fanfilter
