#include "ofatad/trainer.hpp"

#include "ofatad/error.hpp"
#include "ofatad/io.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

namespace ofatad {

namespace {

constexpr std::size_t kReduceChunk = 64;
constexpr double kEntropyFloor = 1e-12;

// Stream ids for derive_rng, kept distinct per purpose.
enum : std::uint64_t { kShuffleStream = 1, kClusterStream = 2, kSynthStream = 3 };

std::uint64_t stream_id(std::uint64_t purpose, std::uint64_t epoch, std::uint64_t source, std::uint64_t batch = 0) {
    return (purpose << 56) ^ (epoch << 36) ^ (source << 20) ^ batch;
}

}  // namespace

MseResult mse_loss(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) {
        fail(Errc::LengthMismatch,
             std::to_string(scores.size()) + " scores vs " + std::to_string(labels.size()) + " labels");
    }
    if (scores.empty()) fail(Errc::EmptyBatch, "mse over an empty batch");
    const double n = static_cast<double>(scores.size());
    MseResult out;
    out.grad.resize(scores.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double r = scores[i] - static_cast<double>(labels[i]);
        sum += r * r;
        out.grad[i] = 2.0 * r / n;
    }
    out.loss = sum / n;
    return out;
}

double entropy_penalty(const Vector& gates) {
    double h = 0.0;
    for (Eigen::Index m = 0; m < gates.size(); ++m) h -= gates(m) * std::log(gates(m) + kEntropyFloor);
    return h;
}

Vector entropy_gradient(const Vector& gates) {
    Vector g(gates.size());
    for (Eigen::Index m = 0; m < gates.size(); ++m) {
        const double p = gates(m);
        g(m) = -(std::log(p + kEntropyFloor) + p / (p + kEntropyFloor));
    }
    return g;
}

void adam_step(MoEParameters& params, const MoEGradients& grads, AdamState& state, const AdamHyper& hyper) {
    if (grads.size() != params.size()) fail(Errc::ShapeMismatch, "gradients do not match parameters");
    const std::size_t n = params.size();
    if (state.first.empty() && state.second.empty()) {
        state.first.assign(n, 0.0);
        state.second.assign(n, 0.0);
    }
    if (state.first.size() != n || state.second.size() != n) fail(Errc::ShapeMismatch, "optimizer state size mismatch");

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(hyper.beta1, t);
    const double correction2 = 1.0 - std::pow(hyper.beta2, t);
    auto values = params.mutable_values();
    const auto g = grads.values();
    for (std::size_t i = 0; i < n; ++i) {
        state.first[i] = hyper.beta1 * state.first[i] + (1.0 - hyper.beta1) * g[i];
        state.second[i] = hyper.beta2 * state.second[i] + (1.0 - hyper.beta2) * g[i] * g[i];
        const double m_hat = state.first[i] / correction1;
        const double v_hat = state.second[i] / correction2;
        values[i] -= hyper.learning_rate * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
    }
}

void TrainConfig::validate() const {
    if (epochs < 1) fail(Errc::InvalidArgument, "epochs must be at least 1");
    if (batch_size < 1) fail(Errc::InvalidArgument, "batch_size must be at least 1");
    if (!(adam.learning_rate >= 0.0)) fail(Errc::InvalidArgument, "learning_rate must be nonnegative");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
        fail(Errc::InvalidArgument, "adam betas must lie in [0, 1)");
    }
    if (!(adam.epsilon > 0.0)) fail(Errc::InvalidArgument, "adam epsilon must be positive");
    if (!std::isfinite(entropy_coeff)) fail(Errc::InvalidArgument, "entropy_coeff must be finite");
    synthesis.validate();
    network.validate();
    if (views.size() != network.views) {
        fail(Errc::InvalidArgument, std::to_string(views.size()) + " views configured but the network has " +
                                        std::to_string(network.views) + " experts");
    }
}

BatchObjective evaluate_objective(const MoEParameters& params, const std::vector<DistanceProfile>& profiles,
                                  std::span<const std::uint8_t> labels, double entropy_coeff, MoEGradients* grads,
                                  unsigned threads) {
    if (profiles.size() != labels.size()) fail(Errc::LengthMismatch, "profiles and labels differ in length");
    if (profiles.empty()) fail(Errc::EmptyBatch, "empty batch");
    const std::size_t n = profiles.size();
    const std::size_t chunks = (n + kReduceChunk - 1) / kReduceChunk;
    const double inv_n = 1.0 / static_cast<double>(n);
    const bool use_entropy = entropy_coeff != 0.0;

    std::vector<double> scores(n);
    std::vector<double> entropies(n);
    std::vector<MoEGradients> partial;
    if (grads) partial.assign(chunks, MoEGradients(params.config()));

    parallel_for(chunks, threads, [&](std::size_t c) {
        const std::size_t begin = c * kReduceChunk;
        const std::size_t end = std::min(n, begin + kReduceChunk);
        for (std::size_t i = begin; i < end; ++i) {
            const ForwardTrace tr = forward(params, profiles[i]);
            scores[i] = tr.score;
            entropies[i] = entropy_penalty(tr.gates);
            if (!grads) continue;
            const double upstream = 2.0 * (tr.score - static_cast<double>(labels[i])) * inv_n;
            if (use_entropy) {
                const Vector dg = entropy_gradient(tr.gates) * (entropy_coeff * inv_n);
                backward(params, tr, upstream, partial[c], {dg.data(), static_cast<std::size_t>(dg.size())});
            } else {
                backward(params, tr, upstream, partial[c]);
            }
        }
    });

    BatchObjective out;
    out.mse = mse_loss(scores, labels).loss;
    double h = 0.0;
    for (double e : entropies) h += e;
    out.mean_entropy = h * inv_n;
    out.loss = out.mse + entropy_coeff * out.mean_entropy;
    if (grads) {
        auto g = grads->mutable_values();
        for (const auto& part : partial) {
            const auto pv = part.values();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += pv[i];
        }
    }
    return out;
}

TrainedModel pretrain(const SourcePool& pool, const TrainConfig& cfg, const EpochCallback& on_epoch) {
    if (pool.datasets.empty()) fail(Errc::EmptyPool, "source pool is empty");
    cfg.validate();
    const std::size_t K = cfg.network.neighbors;

    std::vector<FittedContext> contexts;
    std::vector<FeatureMoments> moments;
    for (const auto& [name, rows] : pool.datasets) {
        if (rows.rows() < 2) fail(Errc::TooFewRows, "source '" + name + "' needs at least 2 rows");
        contexts.push_back(fit_context(rows, K, cfg.views, cfg.quantile_cap, name, cfg.threads));
        moments.push_back(feature_moments(rows));
    }

    TrainedModel model{init_params(cfg.network, cfg.seed), cfg.views, cfg.quantile_cap, {}};
    for (const auto& entry : pool.datasets) model.manifest.sources.push_back(entry.first);
    model.manifest.seed = cfg.seed;
    model.manifest.epochs = cfg.epochs;

    AdamState adam;
    MoEGradients grads(cfg.network);
    std::size_t batch_id = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const std::size_t S = pool.datasets.size();
        std::vector<std::vector<std::size_t>> order(S);
        std::vector<ClusterAssignment> clusters(S);
        std::size_t rounds = 0;
        for (std::size_t j = 0; j < S; ++j) {
            const auto& rows = pool.datasets[j].second;
            const auto n = static_cast<std::size_t>(rows.rows());
            order[j].resize(n);
            std::iota(order[j].begin(), order[j].end(), 0);
            auto rng = derive_rng(cfg.seed, stream_id(kShuffleStream, epoch, j));
            std::shuffle(order[j].begin(), order[j].end(), rng);
            const std::size_t k = std::min(cfg.synthesis.cluster_count, n);
            clusters[j] = cluster_normals(rows, k, derive_rng(cfg.seed, stream_id(kClusterStream, epoch, j))());
            rounds = std::max(rounds, (n + cfg.batch_size - 1) / cfg.batch_size);
        }

        double loss_sum = 0.0;
        double entropy_sum = 0.0;
        std::size_t sample_count = 0;
        for (std::size_t b = 0; b < rounds; ++b) {
            for (std::size_t j = 0; j < S; ++j) {
                const auto& rows = pool.datasets[j].second;
                const std::size_t begin = b * cfg.batch_size;
                if (begin >= order[j].size()) continue;
                const std::size_t end = std::min(order[j].size(), begin + cfg.batch_size);
                const std::span<const std::size_t> idx(order[j].data() + begin, end - begin);
                const Matrix batch = select_rows(rows, idx);

                const auto negatives =
                    generate_negatives(batch, clusters[j].subset(idx), cfg.synthesis, moments[j],
                                       derive_rng(cfg.seed, stream_id(kSynthStream, epoch, j, b))());

                const std::size_t n_real = idx.size();
                const auto n_neg = static_cast<std::size_t>(negatives.rows.rows());
                std::vector<DistanceProfile> profiles(n_real + n_neg);
                Labels labels(n_real + n_neg, 0);
                parallel_for(n_real + n_neg, cfg.threads, [&](std::size_t i) {
                    if (i < n_real) {
                        profiles[i] = encode_sample(contexts[j], row_span(rows, static_cast<Eigen::Index>(idx[i])), idx[i]);
                    } else {
                        profiles[i] = encode_sample(contexts[j],
                                                    row_span(negatives.rows, static_cast<Eigen::Index>(i - n_real)));
                    }
                });
                std::fill(labels.begin() + static_cast<std::ptrdiff_t>(n_real), labels.end(), std::uint8_t{1});

                grads.set_zero();
                const auto obj = evaluate_objective(model.params, profiles, labels, cfg.entropy_coeff, &grads, cfg.threads);
                const auto g = grads.values();
                if (!std::isfinite(obj.loss) ||
                    !std::all_of(g.begin(), g.end(), [](double v) { return std::isfinite(v); })) {
                    fail(Errc::NonFiniteLoss, "non-finite loss or gradient in batch " + std::to_string(batch_id) +
                                                  " (epoch " + std::to_string(epoch + 1) + ", source '" +
                                                  pool.datasets[j].first + "')");
                }
                adam_step(model.params, grads, adam, cfg.adam);
                const double count = static_cast<double>(profiles.size());
                loss_sum += obj.loss * count;
                entropy_sum += obj.mean_entropy * count;
                sample_count += profiles.size();
                ++batch_id;
            }
        }
        EpochStats stats{epoch + 1, loss_sum / static_cast<double>(sample_count),
                         entropy_sum / static_cast<double>(sample_count)};
        model.manifest.epoch_loss.push_back(stats.mean_loss);
        model.manifest.epoch_entropy.push_back(stats.mean_entropy);
        if (on_epoch) on_epoch(stats);
    }
    model.manifest.final_loss = model.manifest.epoch_loss.back();
    return model;
}

std::string format_epoch_line(const EpochStats& stats) {
    return "epoch=" + std::to_string(stats.epoch) + " loss=" + format_double(stats.mean_loss) +
           " gate_entropy=" + format_double(stats.mean_entropy);
}

std::string serialize_model(const TrainedModel& model) {
    std::string out = serialize_params(model.params);
    nlohmann::ordered_json manifest;
    std::vector<std::string> views;
    for (auto v : model.views) views.emplace_back(view_name(v));
    manifest["views"] = views;
    manifest["quantile_cap"] = model.quantile_cap;
    manifest["sources"] = model.manifest.sources;
    manifest["seed"] = model.manifest.seed;
    manifest["epochs"] = model.manifest.epochs;
    manifest["final_loss"] = model.manifest.final_loss;
    manifest["epoch_loss"] = model.manifest.epoch_loss;
    manifest["epoch_entropy"] = model.manifest.epoch_entropy;
    manifest["config_hash"] = model.manifest.config_hash;
    manifest["resolved_config"] = model.manifest.resolved_config;
    const std::string text = manifest.dump();
    const auto len = static_cast<std::uint64_t>(text.size());
    std::uint64_t le = len;
    if constexpr (std::endian::native == std::endian::big) le = __builtin_bswap64(le);
    out.append(reinterpret_cast<const char*>(&le), sizeof le);
    out += text;
    return out;
}

TrainedModel deserialize_model(std::string_view bytes) {
    std::size_t consumed = 0;
    MoEParameters params = deserialize_params(bytes, std::nullopt, &consumed);
    if (bytes.size() - consumed < 8) fail(Errc::TruncatedFile, "model file has no manifest block");
    std::uint64_t len = 0;
    std::memcpy(&len, bytes.data() + consumed, 8);
    if constexpr (std::endian::native == std::endian::big) len = __builtin_bswap64(len);
    consumed += 8;
    if (bytes.size() - consumed < len) fail(Errc::TruncatedFile, "model manifest is truncated");

    TrainedModel model{std::move(params), {}, kDefaultQuantileCap, {}};
    try {
        const auto manifest = nlohmann::json::parse(bytes.substr(consumed, static_cast<std::size_t>(len)));
        for (const auto& v : manifest.at("views")) model.views.push_back(parse_view(v.get<std::string>()));
        model.quantile_cap = manifest.at("quantile_cap").get<std::size_t>();
        model.manifest.sources = manifest.at("sources").get<std::vector<std::string>>();
        model.manifest.seed = manifest.at("seed").get<std::uint64_t>();
        model.manifest.epochs = manifest.at("epochs").get<std::size_t>();
        model.manifest.final_loss = manifest.at("final_loss").get<double>();
        model.manifest.epoch_loss = manifest.at("epoch_loss").get<std::vector<double>>();
        model.manifest.epoch_entropy = manifest.at("epoch_entropy").get<std::vector<double>>();
        model.manifest.config_hash = manifest.at("config_hash").get<std::string>();
        model.manifest.resolved_config = manifest.at("resolved_config").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        fail(Errc::VersionMismatch, std::string("unreadable model manifest: ") + e.what());
    }
    if (model.views.size() != model.params.config().views) {
        fail(Errc::ShapeMismatch, "manifest lists " + std::to_string(model.views.size()) + " views, network has " +
                                      std::to_string(model.params.config().views));
    }
    return model;
}

void save_model(const std::filesystem::path& path, const TrainedModel& model) {
    write_file_atomic(path, serialize_model(model));
}

TrainedModel load_model(const std::filesystem::path& path) { return deserialize_model(read_file(path)); }

}  // namespace ofatad
