#pragma once

#include "ofatad/common.hpp"
#include "ofatad/transforms.hpp"

#include <array>
#include <random>

namespace ofatad {

enum class Strategy : std::uint8_t { Extrapolation = 0, Interpolation = 1, Noise = 2, Masking = 3 };
enum class NoiseKind : std::uint8_t { Gaussian, Uniform };

struct Range {
    double lo = 0.0;
    double hi = 0.0;

    double draw(std::mt19937_64& rng) const;
    bool operator==(const Range&) const = default;
};

struct SynthesisConfig {
    std::array<double, 4> strategy_weights{0.25, 0.25, 0.25, 0.25};
    Range alpha_range{0.5, 2.0};
    Range beta_range{0.3, 0.7};
    Range noise_scale_range{0.5, 2.0};
    Range mask_ratio_range{0.1, 0.5};
    std::size_t negatives_per_positive = 1;
    std::size_t cluster_count = 4;

    void validate() const;
    /// Zeroes one strategy and renormalizes the rest.
    SynthesisConfig without(Strategy s) const;
    bool operator==(const SynthesisConfig&) const = default;
};

struct ClusterAssignment {
    std::vector<std::size_t> labels;
    Matrix centers;
    std::vector<std::size_t> sizes;

    std::size_t clusters() const { return static_cast<std::size_t>(centers.rows()); }
    std::size_t non_empty() const;
    /// Labels restricted to `rows`, sharing the same centers and sizes.
    ClusterAssignment subset(std::span<const std::size_t> rows) const;
};

Vector extrapolate(const Vector& x_b, const Vector& x_a, double alpha);
Vector interpolate(const Vector& x_a, const Vector& x_b, double beta);

/// Seeded k-means++ initialization followed by Lloyd iterations (stop when no
/// center moves by 1e-6 or after 100 iterations).
ClusterAssignment cluster_normals(const Matrix& rows, std::size_t k, std::uint64_t seed);

Vector inject_noise(const Vector& x, NoiseKind kind, double scale, const Vector& feature_stds, std::mt19937_64& rng);
Vector mask_features(const Vector& x, double ratio, const Vector& fill, std::mt19937_64& rng);

/// Number of masked features for a given ratio, ceil(ratio * d).
std::size_t masked_count(double ratio, std::size_t dims);

struct NegativeBatch {
    Matrix rows;
    std::vector<Strategy> strategies;
    // Batch rows used to generate each output; partner is -1 when the partner
    // was a cluster center or the strategy has no partner.
    std::vector<std::size_t> anchors;
    std::vector<std::int64_t> partners;
};

/// Output row r uses batch row (r mod |batch|) as its anchor and draws from a
/// generator seeded by (seed, r), so results do not depend on evaluation order.
/// `assignment.labels` must be aligned with the batch rows.
NegativeBatch generate_negatives(const Matrix& batch, const ClusterAssignment& assignment,
                                 const SynthesisConfig& cfg, const FeatureMoments& stats, std::uint64_t seed);

/// Per-row generator derived from a base seed and a stream index.
std::mt19937_64 derive_rng(std::uint64_t seed, std::uint64_t stream);

}  // namespace ofatad
