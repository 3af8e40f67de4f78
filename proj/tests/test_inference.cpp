#include "helpers.hpp"

#include "ofatad/error.hpp"
#include "ofatad/inference.hpp"
#include "ofatad/metrics.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace ofatad;

namespace {

Errc error_code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an ofatad::Error");
    return Errc::IoError;
}

NetworkConfig small_network() {
    NetworkConfig cfg;
    cfg.width = 16;
    cfg.att_width = 16;
    cfg.score_hidden = 16;
    cfg.gate_hidden = 16;
    cfg.neighbors = 8;
    return cfg;
}

TrainedModel random_model(std::uint64_t seed) {
    return TrainedModel{init_params(small_network(), seed), default_views(), kDefaultQuantileCap, {}};
}

// Small trained model, shared by the tests that need learned behavior.
const TrainedModel& trained_model() {
    static const TrainedModel model = [] {
        std::mt19937_64 rng(40);
        SourcePool pool;
        for (int s = 0; s < 3; ++s) {
            Matrix rows = testing::random_matrix(200, 2 + static_cast<std::size_t>(s), rng, 1.0 + s);
            pool.datasets.emplace_back("src" + std::to_string(s), rows);
        }
        TrainConfig cfg;
        cfg.network = small_network();
        cfg.epochs = 15;
        cfg.batch_size = 64;
        cfg.seed = 3;
        return pretrain(pool, cfg);
    }();
    return model;
}

}  // namespace

TEST_SUITE("inference") {

TEST_CASE("subsampling sizes and determinism") {
    CHECK(subsample_context(10, 1.0, 3).size() == 10);
    CHECK(subsample_context(10, 0.1, 3).size() == 1);
    CHECK(subsample_context(10, 0.15, 3).size() == 2);
    CHECK(subsample_context(1000, 0.3, 3).size() == 300);
    const auto a = subsample_context(500, 0.4, 9);
    CHECK(a == subsample_context(500, 0.4, 9));
    CHECK(a != subsample_context(500, 0.4, 10));
    CHECK(std::is_sorted(a.begin(), a.end()));
    CHECK(std::adjacent_find(a.begin(), a.end()) == a.end());
    CHECK(error_code_of([] { subsample_context(10, 0.0, 0); }) == Errc::RatioOutOfRange);
    CHECK(error_code_of([] { subsample_context(10, 1.5, 0); }) == Errc::RatioOutOfRange);
    CHECK(error_code_of([] { subsample_context(0, 0.5, 0); }) == Errc::EmptyContext);
}

TEST_CASE("scores are reproducible and probabilities") {
    std::mt19937_64 rng(1);
    const auto model = random_model(2);
    const Matrix ctx = testing::random_matrix(120, 3, rng);
    const Matrix test = testing::random_matrix(40, 3, rng);
    ScoreOptions opt;
    opt.keep_gates = true;
    const auto a = score_target(model, ctx, test, opt);
    opt.threads = 4;
    const auto b = score_target(model, ctx, test, opt);
    CHECK(a.scores == b.scores);
    CHECK(*a.per_row_gates == *b.per_row_gates);
    CHECK(a.n_ctx == 120);
    for (double s : a.scores) {
        CHECK(s > 0.0);
        CHECK(s < 1.0);
    }
    CHECK(a.gate_means.sum() == doctest::Approx(1.0).epsilon(1e-6));
    std::size_t pairs = 0;
    for (const auto& [k, count] : a.k_effective) {
        CHECK(k == 8);
        pairs += count;
    }
    CHECK(pairs == 40 * 4);
}

TEST_CASE("zero network scores one half everywhere") {
    std::mt19937_64 rng(2);
    TrainedModel zero{MoEParameters(small_network()), default_views(), kDefaultQuantileCap, {}};
    const auto scored = score_target(zero, testing::random_matrix(50, 4, rng), testing::random_matrix(20, 4, rng));
    for (double s : scored.scores) CHECK(s == 0.5);
    const auto row = export_gating(scored, "zero");
    CHECK(row == "zero,0.25,0.25,0.25,0.25");
}

TEST_CASE("parameters are untouched and scores follow row permutations") {
    std::mt19937_64 rng(3);
    const auto model = random_model(5);
    const auto before = serialize_params(model.params);
    const Matrix ctx = testing::random_matrix(80, 2, rng);
    const Matrix test = testing::random_matrix(30, 2, rng);
    const auto scored = score_target(model, ctx, test);
    CHECK(serialize_params(model.params) == before);

    std::vector<std::size_t> perm(30);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto permuted = score_target(model, ctx, select_rows(test, perm));
    for (std::size_t i = 0; i < perm.size(); ++i) CHECK(permuted.scores[i] == scored.scores[perm[i]]);
}

TEST_CASE("input errors") {
    std::mt19937_64 rng(4);
    const auto model = random_model(1);
    try {
        score_target(model, testing::random_matrix(10, 3, rng), testing::random_matrix(5, 4, rng));
        FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::DimensionMismatch);
        const std::string what = e.what();
        CHECK(what.find("d=3") != std::string::npos);
        CHECK(what.find("d=4") != std::string::npos);
    }
    CHECK(error_code_of([&] { score_target(model, Matrix(0, 3), testing::random_matrix(5, 3, rng)); }) ==
          Errc::EmptyContext);
}

TEST_CASE("sweep composition and counting") {
    std::mt19937_64 rng(5);
    const auto model = random_model(7);
    const Matrix ctx = testing::random_matrix(60, 2, rng);
    Matrix test = testing::random_matrix(30, 2, rng);
    Labels labels(30, 0);
    for (std::size_t i = 0; i < 5; ++i) {
        labels[i] = 1;
        test.row(static_cast<Eigen::Index>(i)) *= 4.0;
    }
    const std::vector<double> one{1.0};
    const std::vector<std::uint64_t> seed0{0};
    const auto single = context_sweep(model, ctx, test, labels, one, seed0);
    REQUIRE(single.size() == 1);
    const auto direct = score_target(model, ctx, test);
    CHECK(single[0].auroc == auroc(direct.scores, labels));
    CHECK(single[0].auprc == auprc(direct.scores, labels));

    const auto fractions = default_sweep_fractions();
    const std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    const auto rows = context_sweep(model, ctx, test, labels, fractions, seeds);
    REQUIRE(rows.size() == 50);
    CHECK(rows[0].fraction == 0.1);
    CHECK(rows[4].seed == 4);
    CHECK(rows[5].fraction == 0.2);
    CHECK(rows[49].fraction == 1.0);
    const std::vector<double> bad{0.0};
    CHECK(error_code_of([&] { context_sweep(model, ctx, test, labels, bad, seeds); }) == Errc::RatioOutOfRange);
}

TEST_CASE("csv exports") {
    std::mt19937_64 rng(6);
    const auto model = random_model(3);
    ScoreOptions opt;
    opt.keep_gates = true;
    const auto scored = score_target(model, testing::random_matrix(30, 2, rng), testing::random_matrix(3, 2, rng), opt);
    const auto csv = scores_to_csv(scored, true);
    CHECK(csv.rfind("row_id,score,g_1,g_2,g_3,g_4\n0,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
    CHECK(scores_to_csv(scored, false).rfind("row_id,score\n", 0) == 0);
    CHECK(gating_header(default_views()) == "dataset,g_Raw,g_Std,g_MinMax,g_Quantile");
    CHECK(export_gating(scored, "a,b").rfind("\"a,b\",", 0) == 0);
    const auto plain = score_target(model, testing::random_matrix(30, 2, rng), testing::random_matrix(3, 2, rng));
    CHECK(error_code_of([&] { scores_to_csv(plain, true); }) == Errc::InvalidArgument);
}

TEST_CASE("a far outlier scores at least the in-distribution median") {
    const auto& model = trained_model();
    std::mt19937_64 rng(7);
    for (int t = 0; t < 3; ++t) {
        const Matrix ctx = testing::random_matrix(300, 4, rng);
        Matrix test = testing::random_matrix(101, 4, rng);
        test.row(100).setConstant(25.0);
        const auto scored = score_target(model, ctx, test);
        std::vector<double> inlier(scored.scores.begin(), scored.scores.begin() + 100);
        std::nth_element(inlier.begin(), inlier.begin() + 50, inlier.end());
        CHECK(scored.scores[100] >= inlier[50]);
    }
}

}  // TEST_SUITE
