#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nullflow {

enum class Errc {
    // network input
    ParseError,
    UnsupportedSection,
    DanglingNodeRef,
    DuplicateId,
    DisconnectedGraph,
    NoFixedHead,
    InvalidValue,
    // linear algebra
    DimensionMismatch,
    PatternMismatch,
    NotPositiveDefinite,
    // headloss
    NonPositiveInput,
    NonPositiveGeometry,
    IndexOutOfRange,
    AllZeroDiagonal,
    // basis / solver
    RankDeficient,
    AllZeroLoop,
    InvalidConfig,
    MaxIterations,
};

constexpr std::string_view to_string(Errc code) noexcept
{
    switch (code) {
        case Errc::ParseError:          return "ParseError";
        case Errc::UnsupportedSection:  return "UnsupportedSection";
        case Errc::DanglingNodeRef:     return "DanglingNodeRef";
        case Errc::DuplicateId:         return "DuplicateId";
        case Errc::DisconnectedGraph:   return "DisconnectedGraph";
        case Errc::NoFixedHead:         return "NoFixedHead";
        case Errc::InvalidValue:        return "InvalidValue";
        case Errc::DimensionMismatch:   return "DimensionMismatch";
        case Errc::PatternMismatch:     return "PatternMismatch";
        case Errc::NotPositiveDefinite: return "NotPositiveDefinite";
        case Errc::NonPositiveInput:    return "NonPositiveInput";
        case Errc::NonPositiveGeometry: return "NonPositiveGeometry";
        case Errc::IndexOutOfRange:     return "IndexOutOfRange";
        case Errc::AllZeroDiagonal:     return "AllZeroDiagonal";
        case Errc::RankDeficient:       return "RankDeficient";
        case Errc::AllZeroLoop:         return "AllZeroLoop";
        case Errc::InvalidConfig:       return "InvalidConfig";
        case Errc::MaxIterations:       return "MaxIterations";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (and tests) can branch on the kind rather than on message text.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), message_(what)
    {}

    Errc code() const noexcept { return code_; }

    /// The message without the code prefix.
    const std::string& message() const noexcept { return message_; }

    /// True for errors caused by bad user input rather than numerical failure.
    bool is_input_error() const noexcept
    {
        switch (code_) {
            case Errc::ParseError:
            case Errc::UnsupportedSection:
            case Errc::DanglingNodeRef:
            case Errc::DuplicateId:
            case Errc::DisconnectedGraph:
            case Errc::NoFixedHead:
            case Errc::InvalidValue:
            case Errc::NonPositiveInput:
            case Errc::NonPositiveGeometry:
            case Errc::InvalidConfig:
                return true;
            default:
                return false;
        }
    }

private:
    Errc code_;
    std::string message_;
};

}  // namespace nullflow
