#include "ofatad/profile.hpp"

#include "ofatad/error.hpp"

#include <algorithm>

namespace ofatad {

FittedContext fit_context(const Matrix& context_rows, std::size_t k, const std::vector<ViewKind>& views,
                          std::size_t quantile_cap, std::string source_name, unsigned threads) {
    if (context_rows.rows() == 0) fail(Errc::EmptyContext, "context has no rows");
    if (k == 0) fail(Errc::InvalidArgument, "K must be at least 1");

    FittedContext ctx;
    ctx.view_set = ViewTransformSet::fit(context_rows, views, quantile_cap);
    ctx.neighbors = k;
    ctx.n_ctx = static_cast<std::size_t>(context_rows.rows());
    ctx.source_name = std::move(source_name);
    for (std::size_t m = 0; m < views.size(); ++m) {
        ctx.indices.emplace_back(ctx.view_set.apply_rows(m, context_rows));
    }

    // A single context row has nobody to compare against; its only distance is to itself.
    const bool can_exclude = ctx.n_ctx > 1;
    std::vector<std::vector<double>> pooled(views.size());
    for (auto& p : pooled) p.resize(ctx.n_ctx * k);
    const std::size_t blocks = (ctx.n_ctx + kEncodeBlockRows - 1) / kEncodeBlockRows;
    parallel_for(blocks, threads, [&](std::size_t b) {
        const std::size_t begin = b * kEncodeBlockRows;
        const std::size_t end = std::min(ctx.n_ctx, begin + kEncodeBlockRows);
        std::vector<std::int64_t> exclude;
        for (std::size_t i = begin; i < end; ++i) exclude.push_back(can_exclude ? static_cast<std::int64_t>(i) : -1);
        for (std::size_t m = 0; m < views.size(); ++m) {
            const auto& points = ctx.indices[m].points();
            const auto seqs = ctx.indices[m].query_block(
                points.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin)), k, exclude);
            for (std::size_t i = begin; i < end; ++i) {
                std::copy(seqs[i - begin].distances.begin(), seqs[i - begin].distances.end(),
                          pooled[m].begin() + static_cast<std::ptrdiff_t>(i * k));
            }
        }
    });
    ctx.normalizer = DistanceNormalizer::fit(std::move(pooled), quantile_cap);
    return ctx;
}

DistanceProfile encode_sample(const FittedContext& ctx, std::span<const double> x, std::optional<std::size_t> exclude) {
    if (x.size() != ctx.dims()) {
        fail(Errc::DimensionMismatch,
             "sample has " + std::to_string(x.size()) + " features, context has " + std::to_string(ctx.dims()));
    }
    const std::size_t M = ctx.views();
    const std::size_t K = ctx.neighbors;
    DistanceProfile profile;
    profile.values.resize(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(K));
    profile.k_effective.resize(M);
    if (exclude && ctx.n_ctx <= 1) exclude.reset();
    for (std::size_t m = 0; m < M; ++m) {
        const Vector xm = ctx.view_set.apply(m, x);
        auto seq = ctx.indices[m].query_topk({xm.data(), static_cast<std::size_t>(xm.size())}, K, exclude);
        for (std::size_t k = 0; k < K; ++k) {
            profile.values(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) =
                ctx.normalizer.normalize(m, seq.distances[k]);
        }
        profile.k_effective[m] = seq.k_effective;
    }
    return profile;
}

std::vector<DistanceProfile> encode_block(const FittedContext& ctx, const Matrix& rows, std::size_t begin,
                                          std::size_t end, SelfMode self_mode) {
    if (static_cast<std::size_t>(rows.cols()) != ctx.dims()) {
        fail(Errc::DimensionMismatch,
             "rows have " + std::to_string(rows.cols()) + " features, context has " + std::to_string(ctx.dims()));
    }
    const std::size_t M = ctx.views();
    const std::size_t K = ctx.neighbors;
    const std::size_t count = end - begin;
    std::vector<DistanceProfile> out(count);
    for (auto& p : out) {
        p.values.resize(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(K));
        p.k_effective.resize(M);
    }
    std::vector<std::int64_t> exclude;
    if (self_mode == SelfMode::ExcludeByRow && ctx.n_ctx > 1) {
        for (std::size_t i = begin; i < end; ++i) exclude.push_back(static_cast<std::int64_t>(i));
    }
    for (std::size_t m = 0; m < M; ++m) {
        const auto& index = ctx.indices[m];
        Matrix queries(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(index.dims()));
        for (std::size_t r = 0; r < count; ++r) {
            queries.row(static_cast<Eigen::Index>(r)) =
                ctx.view_set.apply(m, row_span(rows, static_cast<Eigen::Index>(begin + r))).transpose();
        }
        const auto seqs = index.query_block(queries, K, exclude);
        for (std::size_t r = 0; r < count; ++r) {
            for (std::size_t k = 0; k < K; ++k) {
                out[r].values(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) =
                    ctx.normalizer.normalize(m, seqs[r].distances[k]);
            }
            out[r].k_effective[m] = seqs[r].k_effective;
        }
    }
    return out;
}

std::vector<DistanceProfile> encode_batch(const FittedContext& ctx, const Matrix& rows, SelfMode self_mode,
                                          unsigned threads) {
    if (static_cast<std::size_t>(rows.cols()) != ctx.dims()) {
        fail(Errc::DimensionMismatch,
             "rows have " + std::to_string(rows.cols()) + " features, context has " + std::to_string(ctx.dims()));
    }
    const auto n = static_cast<std::size_t>(rows.rows());
    std::vector<DistanceProfile> out(n);
    const std::size_t blocks = (n + kEncodeBlockRows - 1) / kEncodeBlockRows;
    parallel_for(blocks, threads, [&](std::size_t b) {
        const std::size_t begin = b * kEncodeBlockRows;
        const std::size_t end = std::min(n, begin + kEncodeBlockRows);
        auto block = encode_block(ctx, rows, begin, end, self_mode);
        std::move(block.begin(), block.end(), out.begin() + static_cast<std::ptrdiff_t>(begin));
    });
    return out;
}

}  // namespace ofatad
