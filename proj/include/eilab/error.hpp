#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace eilab {

enum class ErrorKind {
    NonPositivePivot,
    DimensionMismatch,
    QuadratureNotConverged,
    VariantUnsupported,
    MaximizationDiverged,
    DuplicatePoint,
    DuplicateNodes,
    DuplicatePoints,
    EmptyGrid,
    NegativeVariance,
    InvalidArgument,
    ConfigError,
    UnknownSuite,
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::NonPositivePivot: return "NonPositivePivot";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::QuadratureNotConverged: return "QuadratureNotConverged";
        case ErrorKind::VariantUnsupported: return "VariantUnsupported";
        case ErrorKind::MaximizationDiverged: return "MaximizationDiverged";
        case ErrorKind::DuplicatePoint: return "DuplicatePoint";
        case ErrorKind::DuplicateNodes: return "DuplicateNodes";
        case ErrorKind::DuplicatePoints: return "DuplicatePoints";
        case ErrorKind::EmptyGrid: return "EmptyGrid";
        case ErrorKind::NegativeVariance: return "NegativeVariance";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::ConfigError: return "ConfigError";
        case ErrorKind::UnknownSuite: return "UnknownSuite";
    }
    return "Unknown";
}

/// Every failure raised by the library carries a kind so callers (the
/// trajectory loop in particular) can decide whether to abort a run cleanly.
class LabError : public std::runtime_error {
public:
    LabError(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw LabError(kind, message);
}

}  // namespace eilab
