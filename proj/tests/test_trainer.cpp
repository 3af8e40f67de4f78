#include "helpers.hpp"

#include "ofatad/desk_suite.hpp"
#include "ofatad/error.hpp"
#include "ofatad/trainer.hpp"

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

SourcePool gaussian_pool(std::size_t rows_each, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    SourcePool pool;
    for (int s = 0; s < 3; ++s) {
        Matrix rows = testing::random_matrix(rows_each, 2, rng, 0.5 + s);
        rows.col(0).array() += 3.0 * s;
        pool.datasets.emplace_back("gauss" + std::to_string(s), rows);
    }
    return pool;
}

TrainConfig small_train_config(std::uint64_t seed) {
    TrainConfig cfg;
    cfg.seed = seed;
    cfg.epochs = 2;
    cfg.batch_size = 32;
    cfg.network.width = 16;
    cfg.network.att_width = 16;
    cfg.network.score_hidden = 16;
    cfg.network.gate_hidden = 16;
    cfg.network.neighbors = 8;
    return cfg;
}

std::vector<DistanceProfile> random_profiles(std::size_t n, std::size_t m, std::size_t k, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<DistanceProfile> out(n);
    for (auto& p : out) {
        p.values.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k));
        for (Eigen::Index i = 0; i < p.values.rows(); ++i) {
            for (Eigen::Index j = 0; j < p.values.cols(); ++j) p.values(i, j) = u(rng);
            std::sort(p.values.row(i).begin(), p.values.row(i).end());
        }
        p.k_effective.assign(m, k);
    }
    return out;
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("mse examples and oracle") {
    const std::vector<double> s{0.2, 0.9};
    const Labels y{0, 1};
    const std::vector<double> exact{0.0, 1.0};
    CHECK(mse_loss(exact, y).loss == 0.0);
    const std::vector<double> half{0.5};
    const Labels one{1};
    CHECK(mse_loss(half, one).loss == 0.25);
    CHECK(mse_loss(half, one).grad[0] == -1.0);

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> scores(257);
    Labels labels(257);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        scores[i] = u(rng);
        labels[i] = static_cast<std::uint8_t>(rng() % 2);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) sum += (scores[i] - labels[i]) * (scores[i] - labels[i]);
    const auto r = mse_loss(scores, labels);
    CHECK(std::abs(r.loss - sum / 257.0) <= 1e-15);
    CHECK(r.grad[5] == doctest::Approx(2.0 * (scores[5] - labels[5]) / 257.0));

    CHECK(error_code_of([&] { mse_loss(s, one); }) == Errc::LengthMismatch);
    CHECK(error_code_of([] { mse_loss({}, {}); }) == Errc::EmptyBatch);
}

TEST_CASE("entropy penalty bounds") {
    CHECK(entropy_penalty(Vector::Constant(4, 0.25)) == doctest::Approx(std::log(4.0)));
    Vector hot = Vector::Zero(4);
    hot(2) = 1.0;
    CHECK(std::abs(entropy_penalty(hot)) < 1e-11);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 50; ++t) {
        Vector g(4);
        for (auto& v : g) v = u(rng);
        g /= g.sum();
        const double h = entropy_penalty(g);
        CHECK(h >= 0.0);
        CHECK(h <= std::log(4.0) + 1e-12);
        // gradient against central differences along each coordinate
        const Vector grad = entropy_gradient(g);
        for (Eigen::Index m = 0; m < 4; ++m) {
            Vector a = g, b = g;
            a(m) += 1e-6;
            b(m) -= 1e-6;
            CHECK(grad(m) == doctest::Approx((entropy_penalty(a) - entropy_penalty(b)) / 2e-6).epsilon(1e-6));
        }
    }
}

TEST_CASE("adam first step moves by the learning rate") {
    NetworkConfig cfg;
    cfg.views = 1;
    cfg.neighbors = 1;
    cfg.width = 1;
    cfg.att_width = 1;
    cfg.score_hidden = 1;
    cfg.gate_hidden = 1;
    MoEParameters params(cfg);
    MoEGradients grads(cfg);
    grads.mutable_values()[0] = 1.0;
    grads.mutable_values()[1] = -3.0;
    AdamState state;
    AdamHyper hyper;
    adam_step(params, grads, state, hyper);
    CHECK(params.values()[0] == doctest::Approx(-1e-3).epsilon(1e-6));
    CHECK(params.values()[1] == doctest::Approx(1e-3).epsilon(1e-6));
    CHECK(params.values()[2] == 0.0);
    CHECK(state.step == 1);

    // same state and inputs give the same result
    MoEParameters p1(cfg), p2(cfg);
    AdamState s1, s2;
    adam_step(p1, grads, s1, hyper);
    adam_step(p2, grads, s2, hyper);
    CHECK(p1 == p2);

    MoEParameters untouched = init_params(cfg, 3);
    const auto before = untouched;
    MoEGradients zero(cfg);
    AdamState s3;
    for (int i = 0; i < 3; ++i) adam_step(untouched, zero, s3, hyper);
    CHECK(untouched == before);

    MoEGradients wrong(NetworkConfig{});
    CHECK(error_code_of([&] { adam_step(untouched, wrong, s3, hyper); }) == Errc::ShapeMismatch);
}

TEST_CASE("full objective gradient matches finite differences") {
    std::mt19937_64 rng(3);
    NetworkConfig cfg;
    cfg.views = 2;
    cfg.neighbors = 4;
    cfg.width = 5;
    cfg.att_width = 6;
    cfg.score_hidden = 6;
    cfg.gate_hidden = 6;
    cfg.activation = Activation::Tanh;
    auto params = init_params(cfg, 4);
    const auto profiles = random_profiles(6, 2, 4, rng);
    const Labels labels{0, 1, 0, 1, 1, 0};
    const double lambda = 0.3;

    MoEGradients grads(cfg);
    evaluate_objective(params, profiles, labels, lambda, &grads);
    double worst = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double base = params.values()[i];
        params.mutable_values()[i] = base + 1e-5;
        const double up = evaluate_objective(params, profiles, labels, lambda, nullptr).loss;
        params.mutable_values()[i] = base - 1e-5;
        const double down = evaluate_objective(params, profiles, labels, lambda, nullptr).loss;
        params.mutable_values()[i] = base;
        const double numeric = (up - down) / 2e-5;
        const double analytic = grads.values()[i];
        worst = std::max(worst, std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-6}));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("objective reduction does not depend on the thread count") {
    std::mt19937_64 rng(5);
    NetworkConfig cfg;
    cfg.width = 8;
    cfg.att_width = 8;
    cfg.score_hidden = 8;
    cfg.gate_hidden = 8;
    const auto params = init_params(cfg, 1);
    const auto profiles = random_profiles(77, 4, 16, rng);
    Labels labels(77);
    for (auto& l : labels) l = static_cast<std::uint8_t>(rng() % 2);
    MoEGradients a(cfg), b(cfg);
    const auto oa = evaluate_objective(params, profiles, labels, 0.1, &a, 1);
    const auto ob = evaluate_objective(params, profiles, labels, 0.1, &b, 4);
    CHECK(oa.loss == ob.loss);
    CHECK(a == b);

    MoEGradients plain(cfg);
    const auto o0 = evaluate_objective(params, profiles, labels, 0.0, &plain);
    CHECK(o0.loss == o0.mse);
}

TEST_CASE("zero learning rate leaves the initial parameters") {
    auto pool = gaussian_pool(40, 1);
    pool.datasets.resize(1);
    auto cfg = small_train_config(7);
    cfg.epochs = 1;
    cfg.batch_size = 40;
    cfg.adam.learning_rate = 0.0;
    const auto model = pretrain(pool, cfg);
    CHECK(model.params == init_params(cfg.network, 7));
    CHECK(model.manifest.epoch_loss.size() == 1);
}

TEST_CASE("pretraining is deterministic and the model file round-trips") {
    const auto pool = gaussian_pool(60, 2);
    auto cfg = small_train_config(11);
    std::vector<EpochStats> seen;
    const auto a = pretrain(pool, cfg, [&](const EpochStats& s) { seen.push_back(s); });
    cfg.threads = 3;
    const auto b = pretrain(pool, cfg);
    CHECK(a.params == b.params);
    CHECK(a.manifest.epoch_loss == b.manifest.epoch_loss);
    CHECK(serialize_model(a) == serialize_model(b));
    REQUIRE(seen.size() == 2);
    CHECK(seen[1].epoch == 2);
    CHECK(seen[1].mean_loss == a.manifest.final_loss);
    CHECK(format_epoch_line(seen[0]).rfind("epoch=1 loss=", 0) == 0);
    CHECK(a.manifest.sources == std::vector<std::string>{"gauss0", "gauss1", "gauss2"});

    testing::TempDir dir("trainer");
    save_model(dir / "m.ofat", a);
    const auto back = load_model(dir / "m.ofat");
    CHECK(back.params == a.params);
    CHECK(back.views == a.views);
    CHECK(back.manifest.epoch_loss == a.manifest.epoch_loss);
    CHECK(serialize_model(back) == serialize_model(a));

    const auto bytes = serialize_model(a);
    CHECK(error_code_of([&] { deserialize_model(bytes.substr(0, bytes.size() - 5)); }) == Errc::TruncatedFile);
}

TEST_CASE("invalid inputs") {
    auto cfg = small_train_config(0);
    CHECK(error_code_of([&] { pretrain(SourcePool{}, cfg); }) == Errc::EmptyPool);
    SourcePool tiny;
    tiny.datasets.emplace_back("one", Matrix::Ones(1, 2));
    CHECK(error_code_of([&] { pretrain(tiny, cfg); }) == Errc::TooFewRows);
    cfg.epochs = 0;
    CHECK(error_code_of([&] { pretrain(gaussian_pool(10, 0), cfg); }) == Errc::InvalidArgument);
}

TEST_CASE("a single batch can be overfit") {
    std::mt19937_64 rng(9);
    NetworkConfig net;
    net.width = 16;
    net.att_width = 16;
    net.score_hidden = 16;
    net.gate_hidden = 16;
    auto params = init_params(net, 9);
    const auto profiles = random_profiles(16, 4, 16, rng);
    Labels labels(16);
    for (std::size_t i = 0; i < 16; ++i) labels[i] = static_cast<std::uint8_t>(i % 2);
    AdamState state;
    AdamHyper hyper;
    double loss = 1.0;
    for (int step = 0; step < 500 && loss >= 0.01; ++step) {
        MoEGradients g(net);
        loss = evaluate_objective(params, profiles, labels, 0.0, &g).loss;
        adam_step(params, g, state, hyper);
    }
    CHECK(loss < 0.01);
}

TEST_CASE("training loss drops on mixture sources") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        SourcePool pool;
        for (std::size_t s = 0; s < 3; ++s) {
            MixtureSpec spec;
            spec.rows = 150;
            spec.dims = 2 + s;
            auto d = make_mixture_dataset("mix" + std::to_string(s), spec, 100 + 3 * seed + s);
            pool.datasets.emplace_back(d.name, d.features);
        }
        auto cfg = small_train_config(seed);
        cfg.epochs = 30;
        const auto model = pretrain(pool, cfg);
        const auto& loss = model.manifest.epoch_loss;
        CAPTURE(seed);
        CHECK(loss[29] <= 0.9 * loss[0]);
        const double head = std::accumulate(loss.begin(), loss.begin() + 5, 0.0);
        const double tail = std::accumulate(loss.end() - 5, loss.end(), 0.0);
        CHECK(tail < head);
    }
}

}  // TEST_SUITE
