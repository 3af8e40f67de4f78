#include "ofatad/error.hpp"

namespace ofatad {

std::string_view errc_name(Errc code) noexcept {
    switch (code) {
    case Errc::MalformedCsv: return "MalformedCsv";
    case Errc::NonBinaryLabel: return "NonBinaryLabel";
    case Errc::AllMissingColumn: return "AllMissingColumn";
    case Errc::MissingValue: return "MissingValue";
    case Errc::TooFewNormals: return "TooFewNormals";
    case Errc::EmptyPool: return "EmptyPool";
    case Errc::EmptyTrainingSet: return "EmptyTrainingSet";
    case Errc::ViewIndexOutOfRange: return "ViewIndexOutOfRange";
    case Errc::EmptyDistanceSet: return "EmptyDistanceSet";
    case Errc::NegativeDistance: return "NegativeDistance";
    case Errc::EmptyContext: return "EmptyContext";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NegativeAlpha: return "NegativeAlpha";
    case Errc::BetaOutOfRange: return "BetaOutOfRange";
    case Errc::TooFewRows: return "TooFewRows";
    case Errc::NonpositiveScale: return "NonpositiveScale";
    case Errc::RatioOutOfRange: return "RatioOutOfRange";
    case Errc::SingleClusterInterpolation: return "SingleClusterInterpolation";
    case Errc::ProfileShapeMismatch: return "ProfileShapeMismatch";
    case Errc::StaleTrace: return "StaleTrace";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::TruncatedFile: return "TruncatedFile";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::EmptyBatch: return "EmptyBatch";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::SingleClass: return "SingleClass";
    case Errc::NoPositives: return "NoPositives";
    case Errc::IncompleteTable: return "IncompleteTable";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ConfigError: return "ConfigError";
    case Errc::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace ofatad
