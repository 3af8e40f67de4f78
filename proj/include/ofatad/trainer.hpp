#pragma once

#include "ofatad/data.hpp"
#include "ofatad/network.hpp"
#include "ofatad/synthesis.hpp"

#include <filesystem>
#include <functional>
#include <string>

namespace ofatad {

struct MseResult {
    double loss = 0.0;
    std::vector<double> grad;  // dL/ds_i = 2 (s_i - y_i) / n
};

MseResult mse_loss(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// H(g) = -sum g_m log(g_m + 1e-12).
double entropy_penalty(const Vector& gates);
Vector entropy_gradient(const Vector& gates);

struct AdamHyper {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    std::vector<double> first;
    std::vector<double> second;
    std::uint64_t step = 0;
};

/// One bias-corrected adaptive-moment update. The state is sized lazily.
void adam_step(MoEParameters& params, const MoEGradients& grads, AdamState& state, const AdamHyper& hyper);

struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t batch_size = 256;
    AdamHyper adam;
    double entropy_coeff = 0.0;
    std::uint64_t seed = 0;
    SynthesisConfig synthesis;
    NetworkConfig network;
    std::vector<ViewKind> views = default_views();
    std::size_t quantile_cap = kDefaultQuantileCap;
    unsigned threads = 1;

    void validate() const;
};

struct TrainingManifest {
    std::vector<std::string> sources;
    std::uint64_t seed = 0;
    std::size_t epochs = 0;
    double final_loss = 0.0;
    std::vector<double> epoch_loss;
    std::vector<double> epoch_entropy;
    std::string config_hash;
    std::string resolved_config;
};

struct TrainedModel {
    MoEParameters params;
    std::vector<ViewKind> views;
    std::size_t quantile_cap = kDefaultQuantileCap;
    TrainingManifest manifest;

    std::size_t neighbors() const { return params.config().neighbors; }
};

struct EpochStats {
    std::size_t epoch = 0;  // 1-based
    double mean_loss = 0.0;
    double mean_entropy = 0.0;
};

using EpochCallback = std::function<void(const EpochStats&)>;

struct BatchObjective {
    double loss = 0.0;     // MSE + entropy_coeff * mean entropy
    double mse = 0.0;
    double mean_entropy = 0.0;
};

/// Forward/backward over a labeled set of profiles. Gradients are reduced over
/// fixed chunks in batch order, so the result does not depend on `threads`.
BatchObjective evaluate_objective(const MoEParameters& params, const std::vector<DistanceProfile>& profiles,
                                  std::span<const std::uint8_t> labels, double entropy_coeff,
                                  MoEGradients* grads, unsigned threads = 1);

/// Per-dataset contexts are fitted once; every epoch visits each source's rows
/// once, interleaving the sources batch by batch.
TrainedModel pretrain(const SourcePool& pool, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

std::string format_epoch_line(const EpochStats& stats);

/// Parameter block followed by a length-prefixed JSON manifest.
std::string serialize_model(const TrainedModel& model);
TrainedModel deserialize_model(std::string_view bytes);
void save_model(const std::filesystem::path& path, const TrainedModel& model);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace ofatad
