#include "helpers.hpp"

#include "ofatad/error.hpp"
#include "ofatad/synthesis.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <set>

using namespace ofatad;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

Errc error_code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an ofatad::Error");
    return Errc::IoError;
}

double sse(const Matrix& rows, const std::vector<std::size_t>& labels, std::size_t k) {
    double total = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(rows.cols());
        double count = 0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == c) {
                mean += rows.row(static_cast<Eigen::Index>(i));
                ++count;
            }
        }
        if (count == 0) continue;
        mean /= count;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == c) total += (rows.row(static_cast<Eigen::Index>(i)) - mean).squaredNorm();
        }
    }
    return total;
}

}  // namespace

TEST_SUITE("synthesis") {

TEST_CASE("extrapolation formula") {
    CHECK(extrapolate(vec({2, 0}), vec({1, 0}), 1.0) == vec({3, 0}));
    CHECK(extrapolate(vec({2, 5}), vec({-1, 0}), 0.0) == vec({2, 5}));
    std::mt19937_64 rng(3);
    const Matrix m = testing::random_matrix(2, 6, rng);
    const Vector b = m.row(0).transpose(), a = m.row(1).transpose();
    const Vector got = extrapolate(b, a, 0.5);
    for (Eigen::Index j = 0; j < 6; ++j) CHECK(got(j) == b(j) + 0.5 * (b(j) - a(j)));
    CHECK(error_code_of([&] { extrapolate(b, a, -0.1); }) == Errc::NegativeAlpha);
    CHECK(error_code_of([&] { extrapolate(b, vec({1}), 1.0); }) == Errc::DimensionMismatch);
}

TEST_CASE("interpolation formula and convexity") {
    CHECK(interpolate(vec({0, 0}), vec({2, 2}), 0.5) == vec({1, 1}));
    CHECK(interpolate(vec({4, -3}), vec({2, 2}), 1.0) == vec({4, -3}));
    CHECK(error_code_of([] { interpolate(vec({0}), vec({1}), 1.5); }) == Errc::BetaOutOfRange);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 100; ++t) {
        const Matrix m = testing::random_matrix(2, 4, rng);
        const Vector a = m.row(0).transpose(), b = m.row(1).transpose();
        const Vector x = interpolate(a, b, u(rng));
        for (Eigen::Index j = 0; j < 4; ++j) {
            CHECK(x(j) >= std::min(a(j), b(j)));
            CHECK(x(j) <= std::max(a(j), b(j)));
        }
    }
}

TEST_CASE("k-means finds the optimal 2-partition of separated blobs") {
    std::mt19937_64 rng(21);
    for (int t = 0; t < 10; ++t) {
        Matrix rows = testing::random_matrix(10, 2, rng, 0.3);
        for (Eigen::Index i = 5; i < 10; ++i) rows(i, 0) += 10.0;
        const auto assignment = cluster_normals(rows, 2, rng());

        // Brute force over every labeling with both clusters non-empty.
        double best = std::numeric_limits<double>::infinity();
        std::vector<std::size_t> best_labels;
        for (unsigned mask = 1; mask < (1u << 10) - 1; ++mask) {
            std::vector<std::size_t> labels(10);
            for (std::size_t i = 0; i < 10; ++i) labels[i] = (mask >> i) & 1u;
            const double s = sse(rows, labels, 2);
            if (s < best) {
                best = s;
                best_labels = labels;
            }
        }
        CHECK(sse(rows, assignment.labels, 2) == doctest::Approx(best));
        for (std::size_t i = 0; i < 10; ++i) {
            CHECK((assignment.labels[i] == assignment.labels[0]) == (best_labels[i] == best_labels[0]));
        }
    }
}

TEST_CASE("k-means edge cases and determinism") {
    std::mt19937_64 rng(5);
    const Matrix rows = testing::random_matrix(6, 3, rng);
    const auto all = cluster_normals(rows, 6, 1);
    CHECK(std::set<std::size_t>(all.labels.begin(), all.labels.end()).size() == 6);
    CHECK(all.non_empty() == 6);

    const Matrix big = testing::random_matrix(300, 4, rng);
    const auto a = cluster_normals(big, 4, 99);
    const auto b = cluster_normals(big, 4, 99);
    CHECK(a.labels == b.labels);
    CHECK(a.centers == b.centers);
    for (auto l : a.labels) CHECK(l < 4);

    CHECK(error_code_of([&] { cluster_normals(rows, 7, 0); }) == Errc::TooFewRows);
    CHECK(error_code_of([&] { cluster_normals(rows, 1, 0); }) == Errc::TooFewRows);

    // Duplicate rows must not break seeding.
    const Matrix dup = Matrix::Ones(8, 2);
    const auto d = cluster_normals(dup, 3, 2);
    CHECK(d.labels.size() == 8);
}

TEST_CASE("gaussian noise has the requested spread") {
    std::mt19937_64 rng(77);
    const Vector x = vec({0.0});
    const Vector stds = vec({2.0});
    const int n = 100000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double e = inject_noise(x, NoiseKind::Gaussian, 0.5, stds, rng)(0);
        s += e;
        s2 += e * e;
    }
    const double mean = s / n;
    const double sd = std::sqrt(s2 / n - mean * mean);
    CHECK(sd == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("uniform noise stays within its support") {
    std::mt19937_64 rng(78);
    const Vector x = vec({1.0, -2.0, 0.0});
    const Vector stds = vec({0.5, 3.0, 0.0});  // zero std counts as 1
    for (int i = 0; i < 2000; ++i) {
        const Vector y = inject_noise(x, NoiseKind::Uniform, 1.5, stds, rng);
        CHECK(std::abs(y(0) - x(0)) <= 0.75);
        CHECK(std::abs(y(1) - x(1)) <= 4.5);
        CHECK(std::abs(y(2) - x(2)) <= 1.5);
    }
    const Vector tiny = inject_noise(x, NoiseKind::Gaussian, 1e-12, stds, rng);
    CHECK((tiny - x).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(error_code_of([&] { inject_noise(x, NoiseKind::Gaussian, 0.0, stds, rng); }) == Errc::NonpositiveScale);
}

TEST_CASE("masking replaces exactly ceil(ratio d) features") {
    std::mt19937_64 rng(9);
    Vector x(10), fill(10);
    for (Eigen::Index j = 0; j < 10; ++j) {
        x(j) = static_cast<double>(j + 1);
        fill(j) = -static_cast<double>(j + 1);
    }
    for (int t = 0; t < 50; ++t) {
        const Vector y = mask_features(x, 0.3, fill, rng);
        int replaced = 0;
        for (Eigen::Index j = 0; j < 10; ++j) {
            if (y(j) == fill(j)) ++replaced;
            else CHECK(y(j) == x(j));
        }
        CHECK(replaced == 3);
    }
    CHECK(mask_features(fill, 0.5, fill, rng) == fill);
    CHECK(masked_count(0.3, 10) == 3);
    CHECK(masked_count(0.01, 10) == 1);
    CHECK(masked_count(0.25, 3) == 1);
    CHECK(error_code_of([&] { mask_features(x, 1.0, fill, rng); }) == Errc::RatioOutOfRange);
}

TEST_CASE("negative batches") {
    std::mt19937_64 rng(14);
    Matrix batch = testing::random_matrix(32, 3, rng);
    for (Eigen::Index i = 16; i < 32; ++i) batch(i, 0) += 8.0;
    const auto assignment = cluster_normals(batch, 2, 1);
    const auto stats = feature_moments(batch);

    SynthesisConfig cfg;
    const auto neg = generate_negatives(batch, assignment, cfg, stats, 5);
    CHECK(neg.rows.rows() == 32);
    CHECK(neg.rows.allFinite());
    const auto again = generate_negatives(batch, assignment, cfg, stats, 5);
    CHECK(again.rows == neg.rows);

    cfg.negatives_per_positive = 3;
    CHECK(generate_negatives(batch, assignment, cfg, stats, 5).rows.rows() == 96);

    SynthesisConfig ident;
    ident.strategy_weights = {1, 0, 0, 0};
    ident.alpha_range = {0.0, 0.0};
    const auto same = generate_negatives(batch, assignment, ident, stats, 8);
    CHECK(same.rows == batch);

    SynthesisConfig inter;
    inter.strategy_weights = {0, 1, 0, 0};
    const auto cross = generate_negatives(batch, assignment, inter, stats, 3);
    for (std::size_t r = 0; r < 32; ++r) {
        CHECK(cross.strategies[r] == Strategy::Interpolation);
        REQUIRE(cross.partners[r] >= 0);
        CHECK(assignment.labels[cross.anchors[r]] != assignment.labels[static_cast<std::size_t>(cross.partners[r])]);
    }
}

TEST_CASE("disabled strategies never fire") {
    std::mt19937_64 rng(15);
    const Matrix batch = testing::random_matrix(40, 4, rng);
    const auto assignment = cluster_normals(batch, 3, 2);
    const auto stats = feature_moments(batch);
    for (auto s : {Strategy::Extrapolation, Strategy::Interpolation, Strategy::Noise, Strategy::Masking}) {
        const auto cfg = SynthesisConfig{}.without(s);
        double sum = 0.0;
        for (double w : cfg.strategy_weights) sum += w;
        CHECK(sum == doctest::Approx(1.0));
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const auto neg = generate_negatives(batch, assignment, cfg, stats, seed);
            for (auto got : neg.strategies) CHECK(got != s);
        }
    }
}

TEST_CASE("interpolation needs two clusters") {
    const Matrix batch = Matrix::Ones(4, 2);
    ClusterAssignment one;
    one.labels.assign(4, 0);
    one.centers = Matrix::Ones(2, 2);
    one.sizes = {4, 0};
    const auto stats = feature_moments(batch);
    CHECK(error_code_of([&] { generate_negatives(batch, one, SynthesisConfig{}, stats, 0); }) ==
          Errc::SingleClusterInterpolation);
    const auto ok = generate_negatives(batch, one, SynthesisConfig{}.without(Strategy::Interpolation), stats, 0);
    CHECK(ok.rows.rows() == 4);
}

TEST_CASE("single-cluster batch falls back to the nearest other center") {
    std::mt19937_64 rng(16);
    const Matrix rows = testing::random_matrix(20, 2, rng);
    ClusterAssignment full;
    full.labels.assign(20, 0);
    for (std::size_t i = 10; i < 20; ++i) full.labels[i] = 1;
    full.centers = Matrix(2, 2);
    full.centers << 0, 0, 5, 5;
    full.sizes = {10, 10};
    std::vector<std::size_t> first_half(10);
    std::iota(first_half.begin(), first_half.end(), 0);
    const auto sub = full.subset(first_half);
    SynthesisConfig inter;
    inter.strategy_weights = {0, 1, 0, 0};
    inter.beta_range = {0.5, 0.5};
    const Matrix batch = select_rows(rows, first_half);
    const auto neg = generate_negatives(batch, sub, inter, feature_moments(batch), 1);
    for (Eigen::Index r = 0; r < 10; ++r) {
        CHECK(neg.partners[static_cast<std::size_t>(r)] == -1);
        CHECK(neg.rows(r, 0) == doctest::Approx(0.5 * batch(r, 0) + 2.5));
    }
}

TEST_CASE("derived generators are reproducible and distinct") {
    auto a = derive_rng(1, 2);
    auto b = derive_rng(1, 2);
    auto c = derive_rng(1, 3);
    const auto va = a();
    CHECK(va == b());
    CHECK(va != c());
}

}  // TEST_SUITE
