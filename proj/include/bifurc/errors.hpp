#pragma once

#include <stdexcept>
#include <string>

namespace bifurc {

// Every failure the library can raise, split into two families that the CLI
// maps onto exit codes: config/input problems (exit 2) and numerical
// breakdowns discovered mid-computation (exit 3).
enum class ErrorKind {
    // validation
    Syntax,
    Dimension,
    Determinant,
    UnknownSymbol,
    Config,
    InsufficientGrid,
    // numerical
    Pole,
    Singular,
    Convergence,
    RankCollapse,
    BoundaryZero,
    NonIntegerWinding,
    ChartDegenerate,
    VolumeUnreliable,
};

inline const char* error_kind_name(ErrorKind k) {
    switch (k) {
        case ErrorKind::Syntax: return "SyntaxError";
        case ErrorKind::Dimension: return "DimensionError";
        case ErrorKind::Determinant: return "DeterminantError";
        case ErrorKind::UnknownSymbol: return "UnknownSymbol";
        case ErrorKind::Config: return "ConfigError";
        case ErrorKind::InsufficientGrid: return "InsufficientGrid";
        case ErrorKind::Pole: return "PoleError";
        case ErrorKind::Singular: return "SingularError";
        case ErrorKind::Convergence: return "ConvergenceError";
        case ErrorKind::RankCollapse: return "RankCollapse";
        case ErrorKind::BoundaryZero: return "BoundaryZero";
        case ErrorKind::NonIntegerWinding: return "NonIntegerWinding";
        case ErrorKind::ChartDegenerate: return "ChartDegenerate";
        case ErrorKind::VolumeUnreliable: return "VolumeUnreliable";
    }
    return "Error";
}

inline bool is_validation_error(ErrorKind k) {
    switch (k) {
        case ErrorKind::Syntax:
        case ErrorKind::Dimension:
        case ErrorKind::Determinant:
        case ErrorKind::UnknownSymbol:
        case ErrorKind::Config:
        case ErrorKind::InsufficientGrid:
            return true;
        default:
            return false;
    }
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(std::string(error_kind_name(kind)) + ": " + msg), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

// Parse errors carry a byte offset into the offending expression so the CLI
// can point at the exact position.
class SyntaxError : public Error {
public:
    SyntaxError(const std::string& msg, std::size_t position)
        : Error(ErrorKind::Syntax, msg + " (at position " + std::to_string(position) + ")"),
          position_(position) {}

    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

}  // namespace bifurc
