#include "ofatad/neighbors.hpp"

#include "ofatad/error.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace ofatad {

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double diff = a[j] - b[j];
        acc += diff * diff;
    }
    return std::sqrt(acc);
}

NeighborIndex::NeighborIndex(Matrix points) : points_(std::move(points)) {
    if (points_.rows() == 0 || points_.cols() == 0) fail(Errc::EmptyContext, "neighbor index needs at least one row");
    if (!points_.allFinite()) fail(Errc::InvalidArgument, "neighbor index rows must be finite");
}

NeighborIndex build_index(Matrix points) { return NeighborIndex(std::move(points)); }

namespace {

using Candidate = std::pair<double, std::int64_t>;

// Keeps the k smallest (distance, id) pairs as a max-heap.
void offer(std::vector<Candidate>& heap, std::size_t k, Candidate c) {
    if (heap.size() < k) {
        heap.push_back(c);
        std::push_heap(heap.begin(), heap.end());
    } else if (c < heap.front()) {
        std::pop_heap(heap.begin(), heap.end());
        heap.back() = c;
        std::push_heap(heap.begin(), heap.end());
    }
}

RawDistanceSequence finish(std::vector<Candidate>& heap, std::size_t k) {
    if (heap.empty()) fail(Errc::EmptyContext, "no rows left after self-exclusion");
    std::sort_heap(heap.begin(), heap.end());
    const std::size_t keep = heap.size();
    RawDistanceSequence out;
    out.k_effective = keep;
    out.distances.resize(k);
    out.neighbor_ids.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        if (i < keep) {
            out.distances[i] = heap[i].first;
            out.neighbor_ids[i] = heap[i].second;
        } else {
            out.distances[i] = heap[keep - 1].first;
            out.neighbor_ids[i] = -1;
        }
    }
    return out;
}

// Index rows per tile; 256 rows of 64 doubles stay well inside L2.
constexpr std::size_t kTileRows = 256;

}  // namespace

RawDistanceSequence NeighborIndex::query_topk(std::span<const double> x, std::size_t k,
                                              std::optional<std::size_t> exclude) const {
    if (k == 0) fail(Errc::InvalidArgument, "K must be at least 1");
    if (x.size() != dims()) {
        fail(Errc::DimensionMismatch,
             "query has " + std::to_string(x.size()) + " features, index has " + std::to_string(dims()));
    }
    const std::size_t n = size();
    std::vector<Candidate> heap;
    heap.reserve(k);
    for (std::size_t i = 0; i < n; ++i) {
        if (exclude && *exclude == i) continue;
        offer(heap, k, {euclidean_distance(x, row_span(points_, static_cast<Eigen::Index>(i))), static_cast<std::int64_t>(i)});
    }
    return finish(heap, k);
}

std::vector<RawDistanceSequence> NeighborIndex::query_block(const Matrix& queries, std::size_t k,
                                                            std::span<const std::int64_t> exclude) const {
    if (k == 0) fail(Errc::InvalidArgument, "K must be at least 1");
    if (static_cast<std::size_t>(queries.cols()) != dims()) {
        fail(Errc::DimensionMismatch,
             "query has " + std::to_string(queries.cols()) + " features, index has " + std::to_string(dims()));
    }
    const auto q = static_cast<std::size_t>(queries.rows());
    if (!exclude.empty() && exclude.size() != q) fail(Errc::LengthMismatch, "one exclusion entry per query");
    const std::size_t n = size();
    std::vector<std::vector<Candidate>> heaps(q);
    for (auto& h : heaps) h.reserve(k);
    for (std::size_t t0 = 0; t0 < n; t0 += kTileRows) {
        const std::size_t t1 = std::min(n, t0 + kTileRows);
        for (std::size_t r = 0; r < q; ++r) {
            const auto x = row_span(queries, static_cast<Eigen::Index>(r));
            const std::int64_t skip = exclude.empty() ? -1 : exclude[r];
            for (std::size_t i = t0; i < t1; ++i) {
                if (static_cast<std::int64_t>(i) == skip) continue;
                offer(heaps[r], k,
                      {euclidean_distance(x, row_span(points_, static_cast<Eigen::Index>(i))), static_cast<std::int64_t>(i)});
            }
        }
    }
    std::vector<RawDistanceSequence> out;
    out.reserve(q);
    for (auto& h : heaps) out.push_back(finish(h, k));
    return out;
}

}  // namespace ofatad
