#pragma once

#include "ofatad/common.hpp"

#include <optional>

namespace ofatad {

struct RawDistanceSequence {
    std::vector<double> distances;      // ascending, length K
    std::vector<std::int64_t> neighbor_ids;  // -1 marks padded slots
    std::size_t k_effective = 0;
};

/// Exact brute-force Euclidean neighbor search over a fixed set of rows.
class NeighborIndex {
public:
    NeighborIndex() = default;
    explicit NeighborIndex(Matrix points);

    /// Top-K rows ordered by (distance, row index). When fewer than K rows are
    /// available the tail repeats the farthest available distance.
    RawDistanceSequence query_topk(std::span<const double> x, std::size_t k,
                                   std::optional<std::size_t> exclude = std::nullopt) const;

    /// Same result as query_topk for every row of `queries`, computed tile by
    /// tile over the indexed rows. exclude[r] (or -1) is the row dropped for query r.
    std::vector<RawDistanceSequence> query_block(const Matrix& queries, std::size_t k,
                                                 std::span<const std::int64_t> exclude = {}) const;

    std::size_t size() const { return static_cast<std::size_t>(points_.rows()); }
    std::size_t dims() const { return static_cast<std::size_t>(points_.cols()); }
    const Matrix& points() const { return points_; }

    bool operator==(const NeighborIndex& other) const {
        return points_.rows() == other.points_.rows() && points_.cols() == other.points_.cols() &&
               points_ == other.points_;
    }

private:
    Matrix points_;
};

NeighborIndex build_index(Matrix points);

/// Straight sequential sum of squared differences, then sqrt.
double euclidean_distance(std::span<const double> a, std::span<const double> b);

}  // namespace ofatad
