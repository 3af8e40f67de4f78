#include "ofatad/inference.hpp"

#include "ofatad/error.hpp"
#include "ofatad/io.hpp"
#include "ofatad/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace ofatad {

std::vector<std::size_t> subsample_context(std::size_t n, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0)) fail(Errc::RatioOutOfRange, "context fraction must lie in (0, 1]");
    if (n == 0) fail(Errc::EmptyContext, "context has no rows");
    auto take = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-12));
    take = std::clamp<std::size_t>(take, 1, n);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    if (take == n) return idx;
    std::vector<std::size_t> out;
    out.reserve(take);
    std::mt19937_64 rng(seed);
    std::sample(idx.begin(), idx.end(), std::back_inserter(out), take, rng);
    return out;
}

ScoredDataset score_with_context(const TrainedModel& model, const FittedContext& ctx, const Matrix& test_rows,
                                 bool keep_gates, unsigned threads) {
    if (static_cast<std::size_t>(test_rows.cols()) != ctx.dims()) {
        fail(Errc::DimensionMismatch, "context has d=" + std::to_string(ctx.dims()) +
                                          " but test rows have d=" + std::to_string(test_rows.cols()));
    }
    const std::size_t n = static_cast<std::size_t>(test_rows.rows());
    const std::size_t m = model.params.config().views;
    ScoredDataset out;
    out.n_ctx = ctx.n_ctx;
    out.scores.assign(n, 0.5);
    Matrix gates(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    std::vector<std::vector<std::size_t>> keff(n);

    const std::size_t blocks = (n + kEncodeBlockRows - 1) / kEncodeBlockRows;
    parallel_for(blocks, threads, [&](std::size_t b) {
        const std::size_t begin = b * kEncodeBlockRows;
        const std::size_t end = std::min(n, begin + kEncodeBlockRows);
        const auto profiles = encode_block(ctx, test_rows, begin, end, SelfMode::None);
        for (std::size_t i = begin; i < end; ++i) {
            const auto& profile = profiles[i - begin];
            const auto trace = forward(model.params, profile);
            out.scores[i] = trace.score;
            gates.row(static_cast<Eigen::Index>(i)) = trace.gates.transpose();
            keff[i] = profile.k_effective;
        }
    });

    out.gate_means = Vector::Zero(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < n; ++i) {
        out.gate_means += gates.row(static_cast<Eigen::Index>(i)).transpose();
        for (auto k : keff[i]) ++out.k_effective[k];
    }
    if (n > 0) out.gate_means /= static_cast<double>(n);
    if (keep_gates) out.per_row_gates = std::move(gates);
    return out;
}

ScoredDataset score_target(const TrainedModel& model, const Matrix& context_rows, const Matrix& test_rows,
                           const ScoreOptions& options) {
    if (context_rows.rows() == 0) fail(Errc::EmptyContext, "context has no rows");
    if (test_rows.cols() != context_rows.cols()) {
        fail(Errc::DimensionMismatch, "context has d=" + std::to_string(context_rows.cols()) +
                                          " but test rows have d=" + std::to_string(test_rows.cols()));
    }
    const auto keep = subsample_context(static_cast<std::size_t>(context_rows.rows()), options.context_fraction,
                                        options.seed);
    const Matrix ctx_rows = keep.size() == static_cast<std::size_t>(context_rows.rows())
                                ? context_rows
                                : select_rows(context_rows, keep);
    const auto ctx =
        fit_context(ctx_rows, model.neighbors(), model.views, model.quantile_cap, "target", options.threads);
    return score_with_context(model, ctx, test_rows, options.keep_gates, options.threads);
}

std::vector<double> default_sweep_fractions() {
    std::vector<double> f;
    for (int i = 1; i <= 10; ++i) f.push_back(i / 10.0);
    return f;
}

std::vector<SweepRow> context_sweep(const TrainedModel& model, const Matrix& context_rows, const Matrix& test_rows,
                                    std::span<const std::uint8_t> test_labels, std::span<const double> fractions,
                                    std::span<const std::uint64_t> seeds, unsigned threads) {
    for (double f : fractions) {
        if (!(f > 0.0 && f <= 1.0)) fail(Errc::RatioOutOfRange, "sweep fraction " + format_double(f));
    }
    std::vector<SweepRow> rows;
    for (double f : fractions) {
        for (auto seed : seeds) {
            ScoreOptions opt;
            opt.context_fraction = f;
            opt.seed = seed;
            opt.threads = threads;
            const auto scored = score_target(model, context_rows, test_rows, opt);
            rows.push_back({f, seed, auroc(scored.scores, test_labels), auprc(scored.scores, test_labels)});
        }
    }
    return rows;
}

std::string gating_header(const std::vector<ViewKind>& views) {
    std::string out = "dataset";
    for (auto v : views) {
        out += ",g_";
        out += view_name(v);
    }
    return out;
}

std::string export_gating(const ScoredDataset& scored, const std::string& dataset_name) {
    std::string out = csv_field(dataset_name);
    for (Eigen::Index m = 0; m < scored.gate_means.size(); ++m) {
        out += ',';
        out += format_double(scored.gate_means[m]);
    }
    return out;
}

std::string scores_to_csv(const ScoredDataset& scored, bool with_gates) {
    if (with_gates && !scored.per_row_gates) fail(Errc::InvalidArgument, "per-row gates were not kept");
    std::ostringstream out;
    out << "row_id,score";
    const Eigen::Index m = with_gates ? scored.per_row_gates->cols() : 0;
    for (Eigen::Index j = 0; j < m; ++j) out << ",g_" << (j + 1);
    out << '\n';
    for (std::size_t i = 0; i < scored.scores.size(); ++i) {
        out << i << ',' << format_double(scored.scores[i]);
        for (Eigen::Index j = 0; j < m; ++j) {
            out << ',' << format_double((*scored.per_row_gates)(static_cast<Eigen::Index>(i), j));
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace ofatad
