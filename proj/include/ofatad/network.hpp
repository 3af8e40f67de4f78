#pragma once

#include "ofatad/common.hpp"
#include "ofatad/profile.hpp"

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace ofatad {

enum class Activation : std::uint8_t { Relu = 0, Tanh = 1 };

std::string_view activation_name(Activation a);
Activation parse_activation(std::string_view name);

/// Architecture variants used for ablations. None of them changes the
/// parameter layout; disabled parts simply receive no gradient.
struct Ablation {
    bool gating_off = false;     // uniform fusion, g = 1/M
    bool moe_off = false;        // mean of the view profiles through expert 0, no gate
    bool attention_off = false;  // mean pooling over ranks
    bool position_off = false;   // positional table fixed at zero

    std::uint32_t bits() const;
    static Ablation from_bits(std::uint32_t bits);
    bool any() const { return gating_off || moe_off || attention_off || position_off; }
    bool operator==(const Ablation&) const = default;
};

struct NetworkConfig {
    std::size_t views = 4;         // M
    std::size_t neighbors = 16;    // K
    std::size_t width = 64;        // D, token width
    std::size_t att_width = 64;    // D_att
    std::size_t score_hidden = 64;
    std::size_t gate_hidden = 64;
    Activation activation = Activation::Relu;
    double ln_epsilon = 1e-5;
    Ablation ablation;

    void validate() const;
    bool operator==(const NetworkConfig&) const = default;
};

enum class Tensor : std::uint8_t {
    EncW1, EncB1, EncW2, EncB2, LnGain, LnBias,  // per view
    Pos,                                         // shared K x D
    AttW, AttV,                                  // per view
    ScoreW1, ScoreB1, ScoreW2, ScoreB2,          // per view
    GateW1, GateB1, GateW2, GateB2,              // shared
};
inline constexpr std::size_t kTensorCount = 17;

/// Flat storage order: tensors in enum order; a per-view tensor is stored as
/// M consecutive copies; each matrix is row-major.
class ParameterLayout {
public:
    struct Entry {
        std::size_t offset = 0;
        std::size_t rows = 0;
        std::size_t cols = 0;
        std::size_t copies = 1;
        std::size_t fan_in = 0;
        std::size_t fan_out = 0;
        bool weight = false;  // Xavier-initialized
    };

    explicit ParameterLayout(const NetworkConfig& cfg);

    const Entry& entry(Tensor t) const { return entries_[static_cast<std::size_t>(t)]; }
    std::size_t offset(Tensor t, std::size_t view = 0) const;
    std::size_t size(Tensor t) const { return entry(t).rows * entry(t).cols; }
    std::size_t total() const { return total_; }

private:
    std::array<Entry, kTensorCount> entries_{};
    std::size_t total_ = 0;
};

std::size_t parameter_count(const NetworkConfig& cfg);

class MoEParameters {
public:
    using ConstMatrixMap = Eigen::Map<const Matrix>;
    using MatrixMap = Eigen::Map<Matrix>;
    using ConstVectorMap = Eigen::Map<const Vector>;
    using VectorMap = Eigen::Map<Vector>;

    /// All-zero parameters for `cfg`.
    explicit MoEParameters(const NetworkConfig& cfg);

    const NetworkConfig& config() const { return config_; }
    const ParameterLayout& layout() const { return layout_; }
    std::size_t size() const { return values_.size(); }

    std::span<const double> values() const { return values_; }
    /// Any mutable access assigns a new version id; traces taken before it become stale.
    std::span<double> mutable_values();
    std::uint64_t version() const { return version_; }

    ConstMatrixMap mat(Tensor t, std::size_t view = 0) const;
    MatrixMap mat_mut(Tensor t, std::size_t view = 0);
    ConstVectorMap vec(Tensor t, std::size_t view = 0) const;
    VectorMap vec_mut(Tensor t, std::size_t view = 0);

    void set_zero();
    bool operator==(const MoEParameters& other) const {
        return config_ == other.config_ && values_ == other.values_;
    }

private:
    void bump();

    NetworkConfig config_;
    ParameterLayout layout_;
    // Aligned so Eigen reductions over the maps sum in a fixed order.
    std::vector<double, Eigen::aligned_allocator<double>> values_;
    std::uint64_t version_ = 0;
};

/// Gradients share the parameter layout.
using MoEGradients = MoEParameters;

/// Xavier-uniform weights, a = sqrt(6 / (fan_in + fan_out)); biases and the
/// positional table zero; layer-norm gain one.
MoEParameters init_params(const NetworkConfig& cfg, std::uint64_t seed);

struct ViewTrace {
    Vector input;        // K normalized distances
    Matrix enc_pre;      // K x D, first encoder layer before activation
    Matrix enc_hidden;   // K x D
    Matrix normalized;   // K x D, layer-norm output before gain/bias
    Vector inv_std;      // K
    Matrix tokens;       // K x D, H
    Matrix att_hidden;   // K x D_att, tanh(W_att H_k)
    Vector attention;    // K
    Vector embedding;    // D
    Vector score_pre;    // H_score
    Vector score_hidden; // H_score
    double score = 0.0;
};

struct ForwardTrace {
    std::vector<ViewTrace> views;  // one per expert actually evaluated
    Vector gate_input;
    Vector gate_pre;
    Vector gate_hidden;
    Vector gate_logits;
    Vector gates;          // M, on the simplex
    Vector expert_scores;  // one per evaluated expert
    double logit = 0.0;
    double score = 0.5;
    std::uint64_t params_version = 0;
};

Matrix encode_view(const MoEParameters& params, std::size_t view, const Vector& distances);

struct AttentionPool {
    Vector embedding;
    Vector weights;
};
AttentionPool attention_pool(const MoEParameters& params, std::size_t view, const Matrix& tokens);

double expert_score(const MoEParameters& params, std::size_t view, const Vector& embedding);

Vector gate(const MoEParameters& params, const std::vector<Vector>& embeddings);

ForwardTrace forward(const MoEParameters& params, const Matrix& profile);
inline ForwardTrace forward(const MoEParameters& params, const DistanceProfile& profile) {
    return forward(params, profile.values);
}

/// Accumulates upstream * ds/dtheta (plus the optional gate-weight upstream
/// dL/dg) into `grads`.
void backward(const MoEParameters& params, const ForwardTrace& trace, double upstream, MoEGradients& grads,
              std::span<const double> gate_upstream = {});

double sigmoid(double z);
Vector softmax(const Vector& logits);

inline constexpr std::array<char, 4> kParamMagic{'O', 'F', 'A', 'T'};
inline constexpr std::uint32_t kParamFormatVersion = 1;

std::string serialize_params(const MoEParameters& params);

/// Parses a parameter block from the start of `bytes`. `consumed`, when given,
/// receives the number of bytes read.
MoEParameters deserialize_params(std::string_view bytes, const std::optional<NetworkConfig>& expected = std::nullopt,
                                 std::size_t* consumed = nullptr);

}  // namespace ofatad
