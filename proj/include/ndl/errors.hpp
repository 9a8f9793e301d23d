#ifndef NDL_ERRORS_HPP
#define NDL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ndl {

/// Base class for every error thrown by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Operand dimensions do not line up (matrix shapes, vector lengths).
struct ShapeError : Error {
    using Error::Error;
};

/// A level index is outside 1..N.
struct LevelError : Error {
    using Error::Error;
};

/// An operation that needs at least one sample received none.
struct EmptyInputError : Error {
    using Error::Error;
};

/// Input to a factorization is not symmetric within tolerance.
struct SymmetryError : Error {
    using Error::Error;
};

/// Cholesky pivot went non-positive; caller may raise the ridge and retry.
struct FactorizationError : Error {
    using Error::Error;
};

/// Class statistics could not be fit even after ridge escalation.
struct StatsError : Error {
    using Error::Error;
};

/// A ReplayStore whose code width no longer matches the model was used.
struct StaleStatsError : Error {
    using Error::Error;
};

/// Malformed byte stream (IDX, checkpoint). Message carries the byte offset.
struct ParseError : Error {
    explicit ParseError(const std::string& msg, size_t offset)
        : Error(msg + " (at byte offset " + std::to_string(offset) + ")"), byte_offset(offset) {}
    size_t byte_offset;
};

/// Invalid or inconsistent experiment configuration.
struct ConfigError : Error {
    using Error::Error;
};

/// Dataset problems: missing files, image/label pairing mismatches.
struct DataError : Error {
    using Error::Error;
};

}  // namespace ndl

#endif
