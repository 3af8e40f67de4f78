#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <thread>
#include <vector>

namespace ofatad {

/// Row-major dense matrix; one sample per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Labels = std::vector<std::uint8_t>;

inline std::span<const double> row_span(const Matrix& m, Eigen::Index r) {
    return {m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())};
}

inline Matrix select_rows(const Matrix& m, std::span<const std::size_t> rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
    }
    return out;
}

/// Runs body(i) for i in [0, n). Work is split into fixed-size chunks so any
/// per-chunk reduction done by the caller is independent of the thread count.
template <typename Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
    threads = std::max(1u, threads);
    if (threads == 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < n; i += threads) body(i);
        });
    }
}

}  // namespace ofatad
