#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ofatad {

enum class Errc {
    // data ingestion and splitting
    MalformedCsv,
    NonBinaryLabel,
    AllMissingColumn,
    MissingValue,
    TooFewNormals,
    EmptyPool,
    // transforms / neighbors / encoding
    EmptyTrainingSet,
    ViewIndexOutOfRange,
    EmptyDistanceSet,
    NegativeDistance,
    EmptyContext,
    DimensionMismatch,
    // synthesis
    NegativeAlpha,
    BetaOutOfRange,
    TooFewRows,
    NonpositiveScale,
    RatioOutOfRange,
    SingleClusterInterpolation,
    // network
    ProfileShapeMismatch,
    StaleTrace,
    VersionMismatch,
    ShapeMismatch,
    TruncatedFile,
    // training
    LengthMismatch,
    EmptyBatch,
    NonFiniteLoss,
    // evaluation
    SingleClass,
    NoPositives,
    IncompleteTable,
    // plumbing
    InvalidArgument,
    ConfigError,
    IoError,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace ofatad
