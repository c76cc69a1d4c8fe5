#pragma once

#include <stdexcept>
#include <string>

namespace sage {

/// Base of every error raised by the harness.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller passed something outside an operation's domain.
class InputError : public Error {
public:
    using Error::Error;
};

/// Arithmetic is undefined for the given values (zero norm, etc).
class NumericError : public Error {
public:
    using Error::Error;
};

/// Statistic is undefined on the sample, e.g. Pearson with zero variance.
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// A dataset cannot be scored (for instance, a zero retrieval baseline).
class DatasetError : public Error {
public:
    using Error::Error;
};

class CacheError : public Error {
public:
    CacheError(const std::string& key, const std::string& what)
        : Error("cache entry " + key + ": " + what), key_(key) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// Network-level failure talking to an embedding provider.
class TransportError : public Error {
public:
    using Error::Error;
};

/// Provider answered with a non-success HTTP status.
class ProviderError : public Error {
public:
    ProviderError(int status, const std::string& what)
        : Error("provider returned HTTP " + std::to_string(status) + ": " + what), status_(status) {}

    int status() const noexcept { return status_; }

private:
    int status_;
};

}  // namespace sage
