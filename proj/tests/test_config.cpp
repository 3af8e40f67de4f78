#include "helpers.hpp"

#include "ofatad/config.hpp"
#include "ofatad/error.hpp"

#include <doctest.h>

using namespace ofatad;

namespace {

std::string config_error(std::string_view text) {
    try {
        parse_config(text);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ConfigError);
        return e.what();
    }
    FAIL("expected a ConfigError");
    return {};
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("defaults") {
    const auto cfg = parse_config("");
    CHECK(cfg.train.epochs == 50);
    CHECK(cfg.train.batch_size == 256);
    CHECK(cfg.train.adam.learning_rate == 1e-3);
    CHECK(cfg.train.network.neighbors == 16);
    CHECK(cfg.train.quantile_cap == 1000);
    CHECK(cfg.train_fraction == 0.5);
    CHECK(cfg.train.entropy_coeff == 0.0);
    CHECK(cfg.fractions.size() == 10);
    CHECK(cfg.seeds.size() == 5);
    CHECK(!cfg.f1_ratio);
    CHECK(!cfg.ablation.any());
}

TEST_CASE("values are read from every section") {
    const auto cfg = parse_config(R"(
[data]
sources = a.csv, sub/b.csv
targets = /abs/t.csv
label_column = y
train_fraction = 0.6
seed = 9
missing = impute_mean

[views]
kinds = Raw, Quantile
quantile_cap = 200

[neighbors]
k = 8

[network]
width = 32
activation = tanh

[synthesis]
weight_extrapolation = 0.5
weight_interpolation = 0.5
weight_noise = 0
weight_masking = 0

[train]
epochs = 3
learning_rate = 0.01
entropy_coeff = -0.05

[eval]
fractions = 0.5, 1
seeds = 7
f1_ratio = 0.1

[ablation]
attention_off = true
)",
                                  "/base");
    CHECK(cfg.sources == std::vector<std::filesystem::path>{"/base/a.csv", "/base/sub/b.csv"});
    CHECK(cfg.targets == std::vector<std::filesystem::path>{"/abs/t.csv"});
    CHECK(cfg.label_column == "y");
    CHECK(cfg.split_seed == 9);
    CHECK(cfg.missing == MissingPolicy::ImputeMean);
    CHECK(cfg.train.views == std::vector<ViewKind>{ViewKind::Raw, ViewKind::Quantile});
    CHECK(cfg.train.network.neighbors == 8);
    CHECK(cfg.train.network.activation == Activation::Tanh);
    CHECK(cfg.train.epochs == 3);
    CHECK(cfg.train.entropy_coeff == -0.05);
    CHECK(cfg.fractions == std::vector<double>{0.5, 1.0});
    CHECK(cfg.f1_ratio == 0.1);
    CHECK(cfg.ablation.attention_off);

    const auto eff = cfg.effective_train();
    CHECK(eff.network.views == 2);
    CHECK(eff.network.ablation.attention_off);
}

TEST_CASE("unknown keys and sections name the culprit") {
    CHECK(config_error("[train]\nlearningrate = 0.1\n").find("unknown key 'learningrate' in section [train]") !=
          std::string::npos);
    CHECK(config_error("[trian]\nepochs = 1\n").find("unknown section 'trian'") != std::string::npos);
    CHECK(config_error("epochs = 1\n").find("outside") != std::string::npos);
}

TEST_CASE("malformed values are rejected") {
    CHECK(config_error("[train]\nepochs = many\n").find("train.epochs") != std::string::npos);
    CHECK(config_error("[train]\nepochs = 0\n").find("epochs") != std::string::npos);
    config_error("[data]\ntrain_fraction = 1.0\n");
    config_error("[data]\nmissing = drop\n");
    config_error("[views]\nkinds = Raw, Log\n");
    config_error("[network]\nactivation = gelu\n");
    config_error("[synthesis]\nweight_noise = 0.9\n");
    config_error("[eval]\nfractions = 0.0\n");
    config_error("[eval]\nf1_ratio = 2\n");
    config_error("[ablation]\nattention_off = maybe\n");
    config_error("[train]\nlearning_rate = nan\n");
}

TEST_CASE("resolved text round-trips and drives the hash") {
    const auto cfg = parse_config("[train]\nepochs = 4\n[data]\nsources = /x/a.csv\n[ablation]\nnoise_off = true\n");
    const auto text = cfg.resolved_text();
    CHECK(text.rfind("[data]\nsources = /x/a.csv\n", 0) == 0);
    CHECK(text.find("epochs = 4\n") != std::string::npos);
    const auto back = parse_config(text);
    CHECK(back.resolved_text() == text);
    CHECK(back.hash() == cfg.hash());
    CHECK(cfg.hash().size() == 64);

    const auto other = parse_config("[train]\nepochs = 5\n[data]\nsources = /x/a.csv\n[ablation]\nnoise_off = true\n");
    CHECK(other.hash() != cfg.hash());
    // formatting differences do not change the hash
    const auto spaced = parse_config("[ablation]\nnoise_off=1\n\n[data]\nsources=/x/a.csv\n[train]\nepochs=4\n");
    CHECK(spaced.hash() == cfg.hash());
}

TEST_CASE("config files resolve paths next to themselves") {
    testing::TempDir dir("config");
    const auto p = dir.write("run.ini", "[data]\nsources = s.csv\n");
    const auto cfg = load_config(p);
    REQUIRE(cfg.sources.size() == 1);
    CHECK(cfg.sources[0] == (dir.path() / "s.csv").lexically_normal());
    try {
        load_config(dir / "missing.ini");
        FAIL("expected ConfigError");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ConfigError);
    }
}

TEST_CASE("ablation switches") {
    const auto s = parse_switches("attention_off, noise_off");
    CHECK(s.attention_off);
    CHECK(s.noise_off);
    CHECK(s.label() == "w/o Attention + Noise Inject");
    CHECK(parse_switches("none").label() == "Full");
    CHECK(!parse_switches("").any());
    CHECK_THROWS_AS(parse_switches("warp_off"), Error);
    const auto synth = s.apply(SynthesisConfig{});
    CHECK(synth.strategy_weights[2] == 0.0);
    CHECK(synth.strategy_weights[0] == doctest::Approx(1.0 / 3.0));
    CHECK(switch_names().size() == 8);
    CHECK(s.network().attention_off);
    CHECK(!s.network().gating_off);
}

}  // TEST_SUITE
