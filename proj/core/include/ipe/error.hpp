#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ipe {

enum class ErrorCode {
    InvalidArgument,
    IoFailure,
    BadMagic,
    DimMismatch,
    NonFiniteValue,
    NonBinaryPixel,
    ZeroNormPixel,
    IsolatedVertex,
    EigFailure,
    DegenerateK,
    EmptyCluster,
    AllDegenerate,
    EmptyPick,
    SkippedImage,
    EpisodeDegenerate,
    ConfigError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Raised by the pseudo-label pipeline when an image yields no usable label.
/// `reason()` is the code of the underlying failure.
class SkippedImage : public Error {
public:
    SkippedImage(ErrorCode reason, const std::string& what)
        : Error(ErrorCode::SkippedImage, std::string(to_string(reason)) + ": " + what), reason_(reason) {}

    ErrorCode reason() const noexcept { return reason_; }

private:
    ErrorCode reason_;
};

}  // namespace ipe
