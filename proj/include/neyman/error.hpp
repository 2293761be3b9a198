#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace neyman {

enum class ErrorCode {
    InvalidArgument,
    InfiniteVariance,
    ZeroBenchmark,
    TooFewObservations,
    EmptyArm,
    InfeasibleConfig,
    WrongStage,
    CountMismatch,
    IncompleteExperiment,
    BadM,
    TooSmallT,
    OutOfRange,
    ZeroVariance,
    InfiniteKL,
    ParseError,
    UnknownLemma,
    MismatchedHorizon,
    NotFound,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every domain failure in the library is reported as an Error carrying a code,
// so callers (service, CLI) can map it to a status without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace neyman
