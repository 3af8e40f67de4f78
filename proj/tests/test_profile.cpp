#include "helpers.hpp"

#include "ofatad/error.hpp"
#include "ofatad/profile.hpp"

#include <doctest.h>

#include <cmath>

using namespace ofatad;

namespace {

double oracle_cdf(const std::vector<double>& ref, double v) {
    const auto L = ref.size();
    if (ref.front() == ref.back()) return 0.5;
    if (v < ref.front()) return 0.0;
    if (v > ref.back()) return 1.0;
    std::size_t lo = 0, hi = 0;
    for (std::size_t i = 0; i < L; ++i) {
        if (ref[i] < v) lo = i + 1;
        if (ref[i] <= v) hi = i + 1;
    }
    if (hi > lo) return (static_cast<double>(lo) + static_cast<double>(hi - 1)) / 2.0 / static_cast<double>(L - 1);
    const std::size_t j = lo - 1;
    return (static_cast<double>(j) + (v - ref[j]) / (ref[j + 1] - ref[j])) / static_cast<double>(L - 1);
}

Matrix standardize(const Matrix& rows, const Matrix& fit_on) {
    Matrix out = rows;
    for (Eigen::Index j = 0; j < rows.cols(); ++j) {
        double mean = 0.0;
        for (Eigen::Index i = 0; i < fit_on.rows(); ++i) mean += fit_on(i, j);
        mean /= static_cast<double>(fit_on.rows());
        double var = 0.0;
        for (Eigen::Index i = 0; i < fit_on.rows(); ++i) var += (fit_on(i, j) - mean) * (fit_on(i, j) - mean);
        double sd = std::sqrt(var / static_cast<double>(fit_on.rows()));
        if (sd == 0.0) sd = 1.0;
        for (Eigen::Index i = 0; i < rows.rows(); ++i) out(i, j) = (rows(i, j) - mean) / sd;
    }
    return out;
}

std::vector<double> sorted_distances(const Matrix& pts, const double* x, std::optional<Eigen::Index> skip) {
    std::vector<double> d;
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        if (skip && *skip == i) continue;
        double s = 0.0;
        for (Eigen::Index j = 0; j < pts.cols(); ++j) s += (pts(i, j) - x[j]) * (pts(i, j) - x[j]);
        d.push_back(std::sqrt(s));
    }
    std::sort(d.begin(), d.end());
    return d;
}

// transform -> sort -> empirical CDF, written out longhand for one view.
std::vector<double> oracle_profile_row(const Matrix& ctx_view, const double* x_view, std::size_t k, std::size_t cap) {
    std::vector<double> pooled;
    for (Eigen::Index i = 0; i < ctx_view.rows(); ++i) {
        auto d = sorted_distances(ctx_view, ctx_view.row(i).data(), i);
        for (std::size_t r = 0; r < k; ++r) pooled.push_back(r < d.size() ? d[r] : d.back());
    }
    std::sort(pooled.begin(), pooled.end());
    std::vector<double> ref;
    if (pooled.size() <= cap) {
        ref = pooled;
    } else {
        for (std::size_t i = 0; i < cap; ++i) {
            const auto at = std::llround(static_cast<double>(i) * static_cast<double>(pooled.size() - 1) /
                                         static_cast<double>(cap - 1));
            ref.push_back(pooled[static_cast<std::size_t>(at)]);
        }
    }
    const auto d = sorted_distances(ctx_view, x_view, std::nullopt);
    std::vector<double> row;
    for (std::size_t r = 0; r < k; ++r) row.push_back(oracle_cdf(ref, r < d.size() ? d[r] : d.back()));
    return row;
}

}  // namespace

TEST_SUITE("profile") {

TEST_CASE("context bookkeeping") {
    std::mt19937_64 rng(1);
    const Matrix rows = testing::random_matrix(50, 3, rng);
    const auto ctx = fit_context(rows, 5);
    CHECK(ctx.views() == 4);
    for (const auto& idx : ctx.indices) CHECK(idx.size() == 50);
    REQUIRE(ctx.normalizer.size() == 4);
    for (std::size_t m = 0; m < 4; ++m) CHECK(ctx.normalizer.map(m).length() == 250);
    CHECK(fit_context(rows, 5) == ctx);
}

TEST_CASE("tiny context pads after self-exclusion") {
    Matrix rows(3, 2);
    rows << 0, 0, 1, 0, 0, 2;
    const auto ctx = fit_context(rows, 5);
    const auto p = encode_sample(ctx, row_span(rows, 0), 0);
    for (auto k : p.k_effective) CHECK(k == 2);
    const auto q = encode_sample(ctx, row_span(rows, 0));
    for (auto k : q.k_effective) CHECK(k == 3);
    CHECK_THROWS_AS(fit_context(Matrix(0, 2), 5), Error);
}

TEST_CASE("zero self-distance and far outliers clamp") {
    std::mt19937_64 rng(4);
    const Matrix rows = testing::random_matrix(40, 2, rng);
    const auto ctx = fit_context(rows, 8);
    const auto p = encode_sample(ctx, row_span(rows, 3));
    CHECK(p.values(0, 0) == 0.0);
    const std::vector<double> far{1e6, -1e6};
    const auto f = encode_sample(ctx, far);
    for (Eigen::Index k = 0; k < 8; ++k) CHECK(f.values(0, k) == 1.0);
    CHECK(f.values(1, 0) == 1.0);
    const std::vector<double> wrong{1.0};
    CHECK_THROWS_AS(encode_sample(ctx, wrong), Error);
}

TEST_CASE("raw and std rows match the longhand oracle") {
    std::mt19937_64 rng(12);
    const Matrix rows = testing::random_matrix(100, 4, rng, 3.0);
    const std::size_t K = 16;
    const auto ctx = fit_context(rows, K, {ViewKind::Raw, ViewKind::Standardize});
    const Matrix std_rows = standardize(rows, rows);
    for (int t = 0; t < 10; ++t) {
        const Matrix x = testing::random_matrix(1, 4, rng, 3.0);
        const auto p = encode_sample(ctx, row_span(x, 0));
        const auto raw = oracle_profile_row(rows, x.data(), K, kDefaultQuantileCap);
        const Matrix xs = standardize(x, rows);
        const auto stdv = oracle_profile_row(std_rows, xs.data(), K, kDefaultQuantileCap);
        for (std::size_t k = 0; k < K; ++k) {
            CHECK(p.values(0, static_cast<Eigen::Index>(k)) == doctest::Approx(raw[k]).epsilon(1e-12));
            CHECK(p.values(1, static_cast<Eigen::Index>(k)) == doctest::Approx(stdv[k]).epsilon(1e-9));
        }
    }
}

TEST_CASE("profiles stay in the unit interval and rise along k") {
    std::mt19937_64 rng(6);
    const Matrix rows = testing::random_matrix(80, 5, rng);
    const auto ctx = fit_context(rows, 16);
    const Matrix test = testing::random_matrix(30, 5, rng, 2.0);
    for (const auto& p : encode_batch(ctx, test, SelfMode::None)) {
        CHECK(p.values.minCoeff() >= 0.0);
        CHECK(p.values.maxCoeff() <= 1.0);
        for (Eigen::Index m = 0; m < p.values.rows(); ++m)
            for (Eigen::Index k = 1; k < p.values.cols(); ++k) CHECK(p.values(m, k - 1) <= p.values(m, k));
    }
}

TEST_CASE("batch encoding: single row, permutation and threads") {
    std::mt19937_64 rng(10);
    const Matrix rows = testing::random_matrix(60, 3, rng);
    const auto ctx = fit_context(rows, 6);
    const Matrix batch = testing::random_matrix(64, 3, rng);

    const auto one = encode_batch(ctx, batch.topRows(1), SelfMode::None);
    CHECK(one[0].values == encode_sample(ctx, row_span(batch, 0)).values);

    const auto serial = encode_batch(ctx, batch, SelfMode::None, 1);
    const auto threaded = encode_batch(ctx, batch, SelfMode::None, 8);
    for (std::size_t i = 0; i < serial.size(); ++i) CHECK(serial[i].values == threaded[i].values);

    std::vector<std::size_t> perm(64);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto permuted = encode_batch(ctx, select_rows(batch, perm), SelfMode::None);
    for (std::size_t i = 0; i < perm.size(); ++i) CHECK(permuted[i].values == serial[perm[i]].values);

    const auto self = encode_batch(ctx, rows, SelfMode::ExcludeByRow, 3);
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        CHECK(self[static_cast<std::size_t>(i)].values ==
              encode_sample(ctx, row_span(rows, i), static_cast<std::size_t>(i)).values);
    }
}

TEST_CASE("raw profile is scale robust") {
    std::mt19937_64 rng(30);
    std::uniform_real_distribution<double> log_c(-6.0, 6.0);
    for (int t = 0; t < 20; ++t) {
        const Matrix rows = testing::random_matrix(70, 3, rng);
        const Matrix x = testing::random_matrix(1, 3, rng, 1.5);
        const double c = std::exp(log_c(rng));
        const auto a = encode_sample(fit_context(rows, 8, {ViewKind::Raw}), row_span(x, 0));
        const Matrix rows_c = rows * c;
        const Matrix x_c = x * c;
        const auto b = encode_sample(fit_context(rows_c, 8, {ViewKind::Raw}), row_span(x_c, 0));
        CHECK((a.values - b.values).cwiseAbs().maxCoeff() <= 1.0 / kDefaultQuantileCap);
    }
}

TEST_CASE("context storage order does not matter without ties") {
    std::mt19937_64 rng(31);
    const Matrix rows = testing::random_matrix(50, 3, rng);
    std::vector<std::size_t> perm(50);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto a = fit_context(rows, 7);
    const auto b = fit_context(select_rows(rows, perm), 7);
    const Matrix x = testing::random_matrix(5, 3, rng);
    for (Eigen::Index i = 0; i < 5; ++i) {
        const auto pa = encode_sample(a, row_span(x, i));
        const auto pb = encode_sample(b, row_span(x, i));
        CHECK((pa.values - pb.values).cwiseAbs().maxCoeff() < 1e-12);
    }
}

}  // TEST_SUITE
