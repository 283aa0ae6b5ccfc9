#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace meshpredict {

enum class ErrorCode {
    InvalidConfig,
    CyclicGraph,
    DisconnectedGraph,
    SinkHasOutgoingEdge,
    UnicastViolation,
    DeadlineExceedsSample,
    TooManyEdges,
    HorizonTooLarge,
    InconsistentObservation,
    BoundExceeded,
    SingularSystem,
    HorizonMismatch,
    ZeroProbabilityPrefix,
    NonPSDCovariance,
    IOError,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::CyclicGraph: return "CyclicGraph";
    case ErrorCode::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::SinkHasOutgoingEdge: return "SinkHasOutgoingEdge";
    case ErrorCode::UnicastViolation: return "UnicastViolation";
    case ErrorCode::DeadlineExceedsSample: return "DeadlineExceedsSample";
    case ErrorCode::TooManyEdges: return "TooManyEdges";
    case ErrorCode::HorizonTooLarge: return "HorizonTooLarge";
    case ErrorCode::InconsistentObservation: return "InconsistentObservation";
    case ErrorCode::BoundExceeded: return "BoundExceeded";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::HorizonMismatch: return "HorizonMismatch";
    case ErrorCode::ZeroProbabilityPrefix: return "ZeroProbabilityPrefix";
    case ErrorCode::NonPSDCovariance: return "NonPSDCovariance";
    case ErrorCode::IOError: return "IOError";
    }
    return "Unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Hard caps on the exponential tables (2^E beliefs, 2^H predictions, 2^(N-k) ledgers).
inline constexpr int kMaxEdges = 20;
inline constexpr int kMaxHorizon = 16;

} // namespace meshpredict
