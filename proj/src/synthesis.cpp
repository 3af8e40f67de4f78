#include "ofatad/synthesis.hpp"

#include "ofatad/error.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace ofatad {

namespace {

std::size_t nearest_center(const Matrix& centers, const Matrix& rows, Eigen::Index r, double* best_out = nullptr) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_c = 0;
    for (Eigen::Index c = 0; c < centers.rows(); ++c) {
        const double d2 = (rows.row(r) - centers.row(c)).squaredNorm();
        if (d2 < best) {
            best = d2;
            best_c = static_cast<std::size_t>(c);
        }
    }
    if (best_out) *best_out = best;
    return best_c;
}

void check_same_dims(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) {
        fail(Errc::DimensionMismatch,
             "vectors have " + std::to_string(a.size()) + " and " + std::to_string(b.size()) + " features");
    }
}

}  // namespace

double Range::draw(std::mt19937_64& rng) const {
    if (hi <= lo) return lo;
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

void SynthesisConfig::validate() const {
    double sum = 0.0;
    for (double w : strategy_weights) {
        if (!(w >= 0.0)) fail(Errc::InvalidArgument, "strategy weights must be nonnegative");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) fail(Errc::InvalidArgument, "strategy weights must sum to 1");
    auto ordered = [](const Range& r) { return r.lo <= r.hi; };
    if (!ordered(alpha_range) || alpha_range.lo < 0.0) fail(Errc::InvalidArgument, "alpha range must be within [0, inf)");
    if (!ordered(beta_range) || beta_range.lo < 0.0 || beta_range.hi > 1.0) {
        fail(Errc::InvalidArgument, "beta range must be within [0, 1]");
    }
    if (!ordered(noise_scale_range) || noise_scale_range.lo <= 0.0) {
        fail(Errc::InvalidArgument, "noise scale range must be positive");
    }
    if (!ordered(mask_ratio_range) || mask_ratio_range.lo <= 0.0 || mask_ratio_range.hi >= 1.0) {
        fail(Errc::InvalidArgument, "mask ratio range must be within (0, 1)");
    }
    if (negatives_per_positive < 1) fail(Errc::InvalidArgument, "negatives_per_positive must be at least 1");
    if (cluster_count < 2) fail(Errc::InvalidArgument, "cluster_count must be at least 2");
}

SynthesisConfig SynthesisConfig::without(Strategy s) const {
    SynthesisConfig out = *this;
    out.strategy_weights[static_cast<std::size_t>(s)] = 0.0;
    const double sum = std::accumulate(out.strategy_weights.begin(), out.strategy_weights.end(), 0.0);
    if (sum <= 0.0) fail(Errc::InvalidArgument, "cannot disable every synthesis strategy");
    for (double& w : out.strategy_weights) w /= sum;
    return out;
}

std::size_t ClusterAssignment::non_empty() const {
    return static_cast<std::size_t>(std::count_if(sizes.begin(), sizes.end(), [](std::size_t s) { return s > 0; }));
}

ClusterAssignment ClusterAssignment::subset(std::span<const std::size_t> rows) const {
    ClusterAssignment out;
    out.centers = centers;
    out.sizes = sizes;
    out.labels.reserve(rows.size());
    for (auto r : rows) out.labels.push_back(labels.at(r));
    return out;
}

Vector extrapolate(const Vector& x_b, const Vector& x_a, double alpha) {
    check_same_dims(x_b, x_a);
    if (!(alpha >= 0.0)) fail(Errc::NegativeAlpha, "alpha must be nonnegative");
    return x_b + alpha * (x_b - x_a);
}

Vector interpolate(const Vector& x_a, const Vector& x_b, double beta) {
    check_same_dims(x_a, x_b);
    if (!(beta >= 0.0 && beta <= 1.0)) fail(Errc::BetaOutOfRange, "beta must lie in [0, 1]");
    return beta * x_a + (1.0 - beta) * x_b;
}

ClusterAssignment cluster_normals(const Matrix& rows, std::size_t k, std::uint64_t seed) {
    const auto n = static_cast<std::size_t>(rows.rows());
    if (k < 2 || n < k) {
        fail(Errc::TooFewRows, "k-means needs n >= k >= 2 (n=" + std::to_string(n) + ", k=" + std::to_string(k) + ")");
    }
    std::mt19937_64 rng(seed);
    const auto kk = static_cast<Eigen::Index>(k);
    Matrix centers(kk, rows.cols());
    std::vector<bool> chosen(n, false);

    std::size_t first = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    centers.row(0) = rows.row(static_cast<Eigen::Index>(first));
    chosen[first] = true;
    std::vector<double> d2(n);
    for (Eigen::Index c = 1; c < kk; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (Eigen::Index j = 0; j < c; ++j) {
                best = std::min(best, (rows.row(static_cast<Eigen::Index>(i)) - centers.row(j)).squaredNorm());
            }
            d2[i] = chosen[i] ? 0.0 : best;
            total += d2[i];
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            double u = std::uniform_real_distribution<double>(0.0, total)(rng);
            pick = n;
            for (std::size_t i = 0; i < n; ++i) {
                if (d2[i] <= 0.0) continue;
                pick = i;
                if (u < d2[i]) break;
                u -= d2[i];
            }
        } else {
            // every remaining row duplicates a chosen center
            std::vector<std::size_t> rest;
            for (std::size_t i = 0; i < n; ++i) {
                if (!chosen[i]) rest.push_back(i);
            }
            pick = rest[std::uniform_int_distribution<std::size_t>(0, rest.size() - 1)(rng)];
        }
        chosen[pick] = true;
        centers.row(c) = rows.row(static_cast<Eigen::Index>(pick));
    }

    ClusterAssignment out;
    out.labels.assign(n, 0);
    for (int iter = 0; iter < 100; ++iter) {
        for (std::size_t i = 0; i < n; ++i) out.labels[i] = nearest_center(centers, rows, static_cast<Eigen::Index>(i));
        Matrix next = Matrix::Zero(kk, rows.cols());
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            next.row(static_cast<Eigen::Index>(out.labels[i])) += rows.row(static_cast<Eigen::Index>(i));
            ++counts[out.labels[i]];
        }
        double moved = 0.0;
        for (Eigen::Index c = 0; c < kk; ++c) {
            if (counts[static_cast<std::size_t>(c)] == 0) {
                next.row(c) = centers.row(c);
                continue;
            }
            next.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
            moved = std::max(moved, (next.row(c) - centers.row(c)).norm());
        }
        centers = std::move(next);
        if (moved < 1e-6) break;
    }
    out.sizes.assign(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
        out.labels[i] = nearest_center(centers, rows, static_cast<Eigen::Index>(i));
        ++out.sizes[out.labels[i]];
    }
    out.centers = std::move(centers);
    return out;
}

Vector inject_noise(const Vector& x, NoiseKind kind, double scale, const Vector& feature_stds, std::mt19937_64& rng) {
    check_same_dims(x, feature_stds);
    if (!(scale > 0.0)) fail(Errc::NonpositiveScale, "noise scale must be positive");
    Vector out = x;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double s = scale * (feature_stds(j) > 0.0 ? feature_stds(j) : 1.0);
        if (kind == NoiseKind::Gaussian) {
            out(j) += std::normal_distribution<double>(0.0, s)(rng);
        } else {
            out(j) += std::uniform_real_distribution<double>(-s, s)(rng);
        }
    }
    return out;
}

std::size_t masked_count(double ratio, std::size_t dims) {
    const auto count = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(dims) - 1e-9));
    return std::clamp<std::size_t>(count, 1, dims);
}

Vector mask_features(const Vector& x, double ratio, const Vector& fill, std::mt19937_64& rng) {
    check_same_dims(x, fill);
    if (!(ratio > 0.0 && ratio < 1.0)) fail(Errc::RatioOutOfRange, "mask ratio must lie in (0, 1)");
    const auto d = static_cast<std::size_t>(x.size());
    std::vector<std::size_t> all(d);
    std::iota(all.begin(), all.end(), 0);
    std::vector<std::size_t> picked;
    std::sample(all.begin(), all.end(), std::back_inserter(picked), masked_count(ratio, d), rng);
    Vector out = x;
    for (auto j : picked) out(static_cast<Eigen::Index>(j)) = fill(static_cast<Eigen::Index>(j));
    return out;
}

std::mt19937_64 derive_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x0fa7u};
    return std::mt19937_64(seq);
}

NegativeBatch generate_negatives(const Matrix& batch, const ClusterAssignment& assignment, const SynthesisConfig& cfg,
                                 const FeatureMoments& stats, std::uint64_t seed) {
    cfg.validate();
    const auto n = static_cast<std::size_t>(batch.rows());
    if (n == 0) fail(Errc::EmptyBatch, "cannot synthesize from an empty batch");
    if (assignment.labels.size() != n) {
        fail(Errc::LengthMismatch, "cluster labels must be aligned with the batch rows");
    }
    const bool interpolation_on = cfg.strategy_weights[1] > 0.0;
    if (interpolation_on && assignment.non_empty() < 2) {
        fail(Errc::SingleClusterInterpolation, "interpolation needs at least two non-empty clusters");
    }

    const std::size_t total = n * cfg.negatives_per_positive;
    NegativeBatch out;
    out.rows.resize(static_cast<Eigen::Index>(total), batch.cols());
    out.strategies.resize(total);
    out.anchors.resize(total);
    out.partners.resize(total);

    std::discrete_distribution<int> pick_strategy(cfg.strategy_weights.begin(), cfg.strategy_weights.end());
    for (std::size_t r = 0; r < total; ++r) {
        auto rng = derive_rng(seed, r);
        const std::size_t anchor = r % n;
        const Vector x = batch.row(static_cast<Eigen::Index>(anchor)).transpose();
        const auto strategy = static_cast<Strategy>(pick_strategy(rng));
        std::int64_t partner = -1;
        Vector neg;
        switch (strategy) {
        case Strategy::Extrapolation: {
            std::size_t p = anchor;
            if (n > 1) {
                p = std::uniform_int_distribution<std::size_t>(0, n - 2)(rng);
                if (p >= anchor) ++p;
            }
            partner = static_cast<std::int64_t>(p);
            neg = extrapolate(x, batch.row(static_cast<Eigen::Index>(p)).transpose(), cfg.alpha_range.draw(rng));
            break;
        }
        case Strategy::Interpolation: {
            const std::size_t own = assignment.labels[anchor];
            std::vector<std::size_t> others;
            for (std::size_t i = 0; i < n; ++i) {
                if (assignment.labels[i] != own) others.push_back(i);
            }
            Vector other;
            if (!others.empty()) {
                const auto p = others[std::uniform_int_distribution<std::size_t>(0, others.size() - 1)(rng)];
                partner = static_cast<std::int64_t>(p);
                other = batch.row(static_cast<Eigen::Index>(p)).transpose();
            } else {
                // batch drawn from one cluster only: pair with the closest other non-empty center
                double best = std::numeric_limits<double>::infinity();
                for (std::size_t c = 0; c < assignment.clusters(); ++c) {
                    if (c == own || assignment.sizes[c] == 0) continue;
                    const double d2 = (assignment.centers.row(static_cast<Eigen::Index>(c)).transpose() - x).squaredNorm();
                    if (d2 < best) {
                        best = d2;
                        other = assignment.centers.row(static_cast<Eigen::Index>(c)).transpose();
                    }
                }
            }
            neg = interpolate(x, other, cfg.beta_range.draw(rng));
            break;
        }
        case Strategy::Noise: {
            const auto kind = std::bernoulli_distribution(0.5)(rng) ? NoiseKind::Gaussian : NoiseKind::Uniform;
            neg = inject_noise(x, kind, cfg.noise_scale_range.draw(rng), stats.std, rng);
            break;
        }
        case Strategy::Masking:
            neg = mask_features(x, cfg.mask_ratio_range.draw(rng), stats.mean, rng);
            break;
        }
        out.rows.row(static_cast<Eigen::Index>(r)) = neg.transpose();
        out.strategies[r] = strategy;
        out.anchors[r] = anchor;
        out.partners[r] = partner;
    }
    return out;
}

}  // namespace ofatad
