#pragma once

#include "ofatad/neighbors.hpp"
#include "ofatad/transforms.hpp"

#include <string>

namespace ofatad {

inline constexpr std::size_t kDefaultNeighbors = 16;

/// M x K matrix of normalized neighbor distances; row m belongs to view m.
struct DistanceProfile {
    Matrix values;
    std::vector<std::size_t> k_effective;

    std::size_t views() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t neighbors() const { return static_cast<std::size_t>(values.cols()); }
};

/// Frozen per-dataset state used to turn rows into distance profiles.
struct FittedContext {
    ViewTransformSet view_set;
    std::vector<NeighborIndex> indices;
    DistanceNormalizer normalizer;
    std::size_t neighbors = kDefaultNeighbors;
    std::size_t n_ctx = 0;
    std::string source_name;

    std::size_t views() const { return indices.size(); }
    std::size_t dims() const { return view_set.dims(); }

    bool operator==(const FittedContext&) const = default;
};

enum class SelfMode { None, ExcludeByRow };

/// Fits view transforms on the context, builds one index per view, then fits
/// the distance normalizer on self-excluded Top-K distances of every context row.
FittedContext fit_context(const Matrix& context_rows, std::size_t k,
                          const std::vector<ViewKind>& views = default_views(),
                          std::size_t quantile_cap = kDefaultQuantileCap, std::string source_name = {},
                          unsigned threads = 1);

DistanceProfile encode_sample(const FittedContext& ctx, std::span<const double> x,
                              std::optional<std::size_t> exclude = std::nullopt);

/// Rows [begin, end) encoded together so each context tile is read once per
/// block. Matches encode_sample row by row.
std::vector<DistanceProfile> encode_block(const FittedContext& ctx, const Matrix& rows, std::size_t begin,
                                          std::size_t end, SelfMode self_mode);

/// Rows per encode_block call in the batched helpers.
inline constexpr std::size_t kEncodeBlockRows = 32;

/// With ExcludeByRow, row i of `rows` is treated as context row i.
std::vector<DistanceProfile> encode_batch(const FittedContext& ctx, const Matrix& rows, SelfMode self_mode,
                                          unsigned threads = 1);

}  // namespace ofatad
