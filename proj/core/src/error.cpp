#include "ipe/error.hpp"

namespace ipe {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::IoFailure: return "IoFailure";
        case ErrorCode::BadMagic: return "BadMagic";
        case ErrorCode::DimMismatch: return "DimMismatch";
        case ErrorCode::NonFiniteValue: return "NonFiniteValue";
        case ErrorCode::NonBinaryPixel: return "NonBinaryPixel";
        case ErrorCode::ZeroNormPixel: return "ZeroNormPixel";
        case ErrorCode::IsolatedVertex: return "IsolatedVertex";
        case ErrorCode::EigFailure: return "EigFailure";
        case ErrorCode::DegenerateK: return "DegenerateK";
        case ErrorCode::EmptyCluster: return "EmptyCluster";
        case ErrorCode::AllDegenerate: return "AllDegenerate";
        case ErrorCode::EmptyPick: return "EmptyPick";
        case ErrorCode::SkippedImage: return "SkippedImage";
        case ErrorCode::EpisodeDegenerate: return "EpisodeDegenerate";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

}  // namespace ipe
