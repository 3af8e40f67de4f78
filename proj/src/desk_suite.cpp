#include "ofatad/desk_suite.hpp"

#include "ofatad/error.hpp"
#include "ofatad/synthesis.hpp"

#include <cmath>
#include <numeric>

namespace ofatad {

namespace {

enum : std::uint64_t { kNormalStream = 11, kAnomalyStream = 12, kLayoutStream = 13, kShuffleRows = 14 };

std::size_t anomaly_count(std::size_t rows, double ratio) {
    if (!(ratio >= 0.0 && ratio < 1.0)) fail(Errc::RatioOutOfRange, "anomaly ratio must lie in [0, 1)");
    return static_cast<std::size_t>(std::llround(ratio * static_cast<double>(rows)));
}

// Interleave normals and anomalies so files do not look sorted by label.
Dataset shuffled(std::string name, const Matrix& features, const Labels& labels, std::uint64_t seed) {
    std::vector<std::size_t> order(labels.size());
    std::iota(order.begin(), order.end(), 0);
    auto rng = derive_rng(seed, kShuffleRows);
    std::shuffle(order.begin(), order.end(), rng);
    Dataset out;
    out.name = std::move(name);
    out.features = select_rows(features, order);
    out.labels.resize(labels.size());
    for (std::size_t i = 0; i < order.size(); ++i) out.labels[i] = labels[order[i]];
    out.category = "synthetic";
    return out;
}

}  // namespace

Dataset make_mixture_dataset(const std::string& name, const MixtureSpec& spec, std::uint64_t seed) {
    if (spec.dims < 1 || spec.components < 1) fail(Errc::InvalidArgument, "mixture needs dims and components");
    const std::size_t n_anom = anomaly_count(spec.rows, spec.anomaly_ratio);
    const std::size_t n_norm = spec.rows - n_anom;
    if (n_norm < 2) fail(Errc::TooFewNormals, "mixture needs at least 2 normal rows");
    const auto d = static_cast<Eigen::Index>(spec.dims);

    auto layout = derive_rng(seed, kLayoutStream);
    std::uniform_real_distribution<double> center_dist(-4.0, 4.0);
    std::uniform_real_distribution<double> log_scale(std::log(0.05), std::log(50.0));
    std::uniform_real_distribution<double> spread_dist(0.4, 1.2);
    Vector scale(d);
    for (Eigen::Index j = 0; j < d; ++j) scale(j) = std::exp(log_scale(layout));
    Matrix centers(static_cast<Eigen::Index>(spec.components), d);
    std::vector<double> spreads(spec.components);
    for (std::size_t c = 0; c < spec.components; ++c) {
        for (Eigen::Index j = 0; j < d; ++j) centers(static_cast<Eigen::Index>(c), j) = center_dist(layout);
        spreads[c] = spread_dist(layout);
    }

    Matrix x(static_cast<Eigen::Index>(spec.rows), d);
    Labels labels(spec.rows, 0);
    auto rng = derive_rng(seed, kNormalStream);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, spec.components - 1);
    for (std::size_t i = 0; i < n_norm; ++i) {
        const std::size_t c = pick(rng);
        for (Eigen::Index j = 0; j < d; ++j) {
            x(static_cast<Eigen::Index>(i), j) =
                scale(j) * (centers(static_cast<Eigen::Index>(c), j) + spreads[c] * gauss(rng));
        }
    }
    if (n_anom > 0) {
        const auto normals = x.topRows(static_cast<Eigen::Index>(n_norm));
        const Eigen::RowVectorXd lo = normals.colwise().minCoeff();
        const Eigen::RowVectorXd hi = normals.colwise().maxCoeff();
        auto arng = derive_rng(seed, kAnomalyStream);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (std::size_t i = n_norm; i < spec.rows; ++i) {
            for (Eigen::Index j = 0; j < d; ++j) {
                const double range = hi(j) - lo(j);
                const double a = lo(j) - spec.box_margin * range;
                const double b = hi(j) + spec.box_margin * range;
                x(static_cast<Eigen::Index>(i), j) = a + (b - a) * unit(arng);
            }
            labels[i] = 1;
        }
    }
    return shuffled(name, x, labels, seed);
}

Dataset make_std_favoring_dataset(const std::string& name, std::size_t rows, double anomaly_ratio,
                                  std::uint64_t seed) {
    constexpr Eigen::Index kNoise = 2;
    constexpr Eigen::Index kModal = 3;
    const std::size_t n_anom = anomaly_count(rows, anomaly_ratio);
    const std::size_t n_norm = rows - n_anom;
    if (n_norm < 2) fail(Errc::TooFewNormals, "dataset needs at least 2 normal rows");

    Matrix x(static_cast<Eigen::Index>(rows), kNoise + kModal);
    Labels labels(rows, 0);
    auto rng = derive_rng(seed, kNormalStream);
    std::normal_distribution<double> noise(0.0, 1000.0);
    std::normal_distribution<double> jitter(0.0, 0.05);
    std::discrete_distribution<int> mode({0.25, 0.5, 0.25});
    std::uniform_real_distribution<double> far(4.0, 6.0);
    std::uniform_int_distribution<Eigen::Index> which(kNoise, kNoise + kModal - 1);
    std::bernoulli_distribution sign(0.5);
    for (std::size_t i = 0; i < rows; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        for (Eigen::Index j = 0; j < kNoise; ++j) x(r, j) = noise(rng);
        for (Eigen::Index j = kNoise; j < kNoise + kModal; ++j) x(r, j) = (mode(rng) - 1) + jitter(rng);
        if (i >= n_norm) {
            x(r, which(rng)) = (sign(rng) ? 1.0 : -1.0) * far(rng);
            labels[i] = 1;
        }
    }
    return shuffled(name, x, labels, seed);
}

SourcePool DeskSuite::pool(double train_fraction, std::uint64_t seed) const {
    std::vector<std::pair<std::string, OneClassSplit>> splits;
    for (std::size_t i = 0; i < sources.size(); ++i) {
        splits.emplace_back(sources[i].name, split_one_class(sources[i], train_fraction, seed + i));
    }
    return pool_sources(splits);
}

std::vector<DeskTarget> DeskSuite::target_splits(double train_fraction, std::uint64_t seed) const {
    std::vector<DeskTarget> out;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        out.push_back({targets[i].name, split_one_class(targets[i], train_fraction, seed + i)});
    }
    return out;
}

DeskSuite make_desk_suite(std::uint64_t seed) {
    DeskSuite suite;
    const std::size_t source_dims[] = {2, 3, 5};
    for (std::size_t i = 0; i < 3; ++i) {
        MixtureSpec spec;
        spec.rows = 1000;
        spec.dims = source_dims[i];
        spec.components = 2 + i;
        suite.sources.push_back(make_mixture_dataset("source_" + std::to_string(spec.dims) + "d", spec,
                                                     derive_rng(seed, 1000 + i)()));
    }
    const std::size_t target_dims[] = {4, 6};
    for (std::size_t i = 0; i < 2; ++i) {
        MixtureSpec spec;
        spec.rows = 1000;
        spec.dims = target_dims[i];
        spec.components = 3;
        spec.anomaly_ratio = 0.05;
        suite.targets.push_back(make_mixture_dataset("target_" + std::to_string(spec.dims) + "d", spec,
                                                     derive_rng(seed, 2000 + i)()));
    }
    return suite;
}

}  // namespace ofatad
