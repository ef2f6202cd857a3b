#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace urbancast {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Wrong vector length, empty vector where one is required, mismatched shapes.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Value-level precondition violated (NaN, negative distance, empty text, ...).
class InputError : public Error {
public:
    using Error::Error;
};

// Unknown region id or missing key.
class LookupError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

enum class BundleErrorKind {
    missing_file,
    malformed,
    payload_size,
    dimension_mismatch,
    count_mismatch,
    duplicate_id,
    non_finite,
    entropy_mismatch,
    invalid_record,
};

const char* to_string(BundleErrorKind kind);

class BundleError : public Error {
public:
    BundleError(BundleErrorKind kind, const std::string& what)
        : Error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    BundleErrorKind kind() const noexcept { return kind_; }

private:
    BundleErrorKind kind_;
};

enum class LlmErrorKind { transport, status, empty_response, malformed_response };

const char* to_string(LlmErrorKind kind);

// Failure talking to a language model or embedding endpoint.
class LlmError : public Error {
public:
    LlmError(LlmErrorKind kind, bool retryable, const std::string& what, int status = 0)
        : Error(std::string(to_string(kind)) + ": " + what),
          kind_(kind), retryable_(retryable), status_(status) {}

    LlmErrorKind kind() const noexcept { return kind_; }
    bool retryable() const noexcept { return retryable_; }
    int status() const noexcept { return status_; }

private:
    LlmErrorKind kind_;
    bool retryable_;
    int status_;
};

// Training produced a non-finite loss or activation.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, std::int64_t where = -1)
        : Error(what), where_(where) {}

    // Epoch index for training aborts, layer index for forward failures.
    std::int64_t where() const noexcept { return where_; }

private:
    std::int64_t where_;
};

class CheckpointError : public Error {
public:
    using Error::Error;
};

}  // namespace urbancast
