#include "ofatad/network.hpp"

#include "ofatad/error.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <random>

namespace ofatad {

namespace {

std::atomic<std::uint64_t> g_next_version{1};

// tanh through one vectorized exp; libm's scalar tanh dominated the profile.
template <typename Derived>
typename Derived::PlainObject fast_tanh(const Eigen::MatrixBase<Derived>& expr) {
    const typename Derived::PlainObject x = expr;
    const auto t = (-2.0 * x.array().abs()).exp().eval();
    const auto r = ((1.0 - t) / (1.0 + t)).eval();
    return (x.array() < 0.0).select(-r, r).matrix();
}

template <typename Derived>
auto activate(const Eigen::MatrixBase<Derived>& x, Activation a) {
    using Plain = typename Derived::PlainObject;
    if (a == Activation::Tanh) return fast_tanh(x);
    return Plain(x.cwiseMax(0.0));
}

// Derivative expressed through the pre-activation (relu) or the output (tanh).
template <typename Pre, typename Out>
auto activation_grad(const Eigen::MatrixBase<Pre>& pre, const Eigen::MatrixBase<Out>& out, Activation a) {
    using Plain = typename Pre::PlainObject;
    if (a == Activation::Relu) {
        return Plain(pre.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
    }
    return Plain(out.unaryExpr([](double y) { return 1.0 - y * y; }));
}

void put_u32(std::string& out, std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap32(v);
    out.append(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_u64(std::string& out, std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap64(v);
    out.append(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) fail(Errc::TruncatedFile, "parameter block ends early");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v;
        std::memcpy(&v, bytes_.data() + pos_, 4);
        pos_ += 4;
        if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap32(v);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v;
        std::memcpy(&v, bytes_.data() + pos_, 8);
        pos_ += 8;
        if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap64(v);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string_view take(std::size_t n) {
        need(n);
        auto s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::size_t position() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string_view activation_name(Activation a) { return a == Activation::Relu ? "relu" : "tanh"; }

Activation parse_activation(std::string_view name) {
    if (name == "relu") return Activation::Relu;
    if (name == "tanh") return Activation::Tanh;
    fail(Errc::InvalidArgument, "unknown activation '" + std::string(name) + "'");
}

std::uint32_t Ablation::bits() const {
    return (gating_off ? 1u : 0u) | (moe_off ? 2u : 0u) | (attention_off ? 4u : 0u) | (position_off ? 8u : 0u);
}

Ablation Ablation::from_bits(std::uint32_t bits) {
    if (bits & ~0xFu) fail(Errc::VersionMismatch, "unknown ablation flags");
    return {(bits & 1u) != 0, (bits & 2u) != 0, (bits & 4u) != 0, (bits & 8u) != 0};
}

void NetworkConfig::validate() const {
    if (views < 1 || neighbors < 1 || width < 1 || att_width < 1 || score_hidden < 1 || gate_hidden < 1) {
        fail(Errc::InvalidArgument, "network dimensions must all be at least 1");
    }
    if (!(ln_epsilon > 0.0)) fail(Errc::InvalidArgument, "ln_epsilon must be positive");
}

ParameterLayout::ParameterLayout(const NetworkConfig& cfg) {
    cfg.validate();
    const std::size_t M = cfg.views, K = cfg.neighbors, D = cfg.width, A = cfg.att_width;
    const std::size_t S = cfg.score_hidden, G = cfg.gate_hidden;
    auto set = [&](Tensor t, std::size_t rows, std::size_t cols, std::size_t copies, bool weight) {
        auto& e = entries_[static_cast<std::size_t>(t)];
        e.rows = rows;
        e.cols = cols;
        e.copies = copies;
        e.weight = weight;
        e.fan_in = cols;
        e.fan_out = rows;
    };
    set(Tensor::EncW1, D, 1, M, true);
    set(Tensor::EncB1, D, 1, M, false);
    set(Tensor::EncW2, D, D, M, true);
    set(Tensor::EncB2, D, 1, M, false);
    set(Tensor::LnGain, D, 1, M, false);
    set(Tensor::LnBias, D, 1, M, false);
    set(Tensor::Pos, K, D, 1, false);
    set(Tensor::AttW, A, D, M, true);
    set(Tensor::AttV, A, 1, M, true);
    set(Tensor::ScoreW1, S, D, M, true);
    set(Tensor::ScoreB1, S, 1, M, false);
    set(Tensor::ScoreW2, S, 1, M, true);
    set(Tensor::ScoreB2, 1, 1, M, false);
    set(Tensor::GateW1, G, M * D, 1, true);
    set(Tensor::GateB1, G, 1, 1, false);
    set(Tensor::GateW2, M, G, 1, true);
    set(Tensor::GateB2, M, 1, 1, false);
    // vectors used as row vectors in a dot product: fan_in is their length
    for (Tensor t : {Tensor::AttV, Tensor::ScoreW2}) {
        auto& e = entries_[static_cast<std::size_t>(t)];
        e.fan_in = e.rows;
        e.fan_out = 1;
    }
    std::size_t offset = 0;
    for (auto& e : entries_) {
        e.offset = offset;
        offset += e.rows * e.cols * e.copies;
    }
    total_ = offset;
}

std::size_t ParameterLayout::offset(Tensor t, std::size_t view) const {
    const auto& e = entry(t);
    if (view >= e.copies) fail(Errc::ViewIndexOutOfRange, "view " + std::to_string(view) + " out of range");
    return e.offset + view * e.rows * e.cols;
}

std::size_t parameter_count(const NetworkConfig& cfg) { return ParameterLayout(cfg).total(); }

MoEParameters::MoEParameters(const NetworkConfig& cfg)
    : config_(cfg), layout_(cfg), values_(layout_.total(), 0.0), version_(g_next_version.fetch_add(1)) {}

void MoEParameters::bump() { version_ = g_next_version.fetch_add(1); }

std::span<double> MoEParameters::mutable_values() {
    bump();
    return values_;
}

MoEParameters::ConstMatrixMap MoEParameters::mat(Tensor t, std::size_t view) const {
    const auto& e = layout_.entry(t);
    return ConstMatrixMap(values_.data() + layout_.offset(t, view), static_cast<Eigen::Index>(e.rows),
                          static_cast<Eigen::Index>(e.cols));
}

MoEParameters::MatrixMap MoEParameters::mat_mut(Tensor t, std::size_t view) {
    bump();
    const auto& e = layout_.entry(t);
    return MatrixMap(values_.data() + layout_.offset(t, view), static_cast<Eigen::Index>(e.rows),
                     static_cast<Eigen::Index>(e.cols));
}

MoEParameters::ConstVectorMap MoEParameters::vec(Tensor t, std::size_t view) const {
    return ConstVectorMap(values_.data() + layout_.offset(t, view), static_cast<Eigen::Index>(layout_.size(t)));
}

MoEParameters::VectorMap MoEParameters::vec_mut(Tensor t, std::size_t view) {
    bump();
    return VectorMap(values_.data() + layout_.offset(t, view), static_cast<Eigen::Index>(layout_.size(t)));
}

void MoEParameters::set_zero() {
    bump();
    std::fill(values_.begin(), values_.end(), 0.0);
}

MoEParameters init_params(const NetworkConfig& cfg, std::uint64_t seed) {
    MoEParameters params(cfg);
    std::mt19937_64 rng(seed);
    auto values = params.mutable_values();
    for (std::size_t t = 0; t < kTensorCount; ++t) {
        const auto tensor = static_cast<Tensor>(t);
        const auto& e = params.layout().entry(tensor);
        const std::size_t count = e.rows * e.cols * e.copies;
        if (e.weight) {
            const double a = std::sqrt(6.0 / static_cast<double>(e.fan_in + e.fan_out));
            std::uniform_real_distribution<double> dist(-a, a);
            for (std::size_t i = 0; i < count; ++i) values[e.offset + i] = dist(rng);
        } else if (tensor == Tensor::LnGain) {
            std::fill_n(values.begin() + static_cast<std::ptrdiff_t>(e.offset), count, 1.0);
        }
    }
    return params;
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

Vector softmax(const Vector& logits) {
    const double peak = logits.maxCoeff();
    Vector out = (logits.array() - peak).exp();
    out /= out.sum();
    return out;
}

namespace {

void encode_view_into(const MoEParameters& p, std::size_t m, const Vector& d, ViewTrace& vt) {
    const auto& cfg = p.config();
    vt.input = d;
    vt.enc_pre = d * p.vec(Tensor::EncW1, m).transpose();
    vt.enc_pre.rowwise() += p.vec(Tensor::EncB1, m).transpose();
    vt.enc_hidden = activate(vt.enc_pre, cfg.activation);
    Matrix a2 = vt.enc_hidden * p.mat(Tensor::EncW2, m).transpose();
    a2.rowwise() += p.vec(Tensor::EncB2, m).transpose();

    const double width = static_cast<double>(cfg.width);
    const Vector mean = a2.rowwise().sum() / width;
    a2.colwise() -= mean;
    const Vector var = a2.array().square().rowwise().sum() / width;
    vt.inv_std = (var.array() + cfg.ln_epsilon).rsqrt();
    vt.normalized = a2.array().colwise() * vt.inv_std.array();

    vt.tokens = vt.normalized.array().rowwise() * p.vec(Tensor::LnGain, m).transpose().array();
    vt.tokens.rowwise() += p.vec(Tensor::LnBias, m).transpose();
    if (!cfg.ablation.position_off) vt.tokens += p.mat(Tensor::Pos);
}

void pool_into(const MoEParameters& p, std::size_t m, ViewTrace& vt) {
    const auto K = vt.tokens.rows();
    if (p.config().ablation.attention_off) {
        vt.attention = Vector::Constant(K, 1.0 / static_cast<double>(K));
        vt.att_hidden.resize(0, 0);
    } else {
        vt.att_hidden = fast_tanh(vt.tokens * p.mat(Tensor::AttW, m).transpose());
        vt.attention = softmax(vt.att_hidden * p.vec(Tensor::AttV, m));
    }
    vt.embedding = vt.tokens.transpose() * vt.attention;
}

void score_into(const MoEParameters& p, std::size_t m, ViewTrace& vt) {
    vt.score_pre = p.mat(Tensor::ScoreW1, m) * vt.embedding + p.vec(Tensor::ScoreB1, m);
    vt.score_hidden = activate(vt.score_pre, p.config().activation);
    vt.score = p.vec(Tensor::ScoreW2, m).dot(vt.score_hidden) + p.vec(Tensor::ScoreB2, m)(0);
}

}  // namespace

Matrix encode_view(const MoEParameters& params, std::size_t view, const Vector& distances) {
    if (static_cast<std::size_t>(distances.size()) != params.config().neighbors) {
        fail(Errc::ProfileShapeMismatch, "expected " + std::to_string(params.config().neighbors) + " distances");
    }
    ViewTrace vt;
    encode_view_into(params, view, distances, vt);
    return vt.tokens;
}

AttentionPool attention_pool(const MoEParameters& params, std::size_t view, const Matrix& tokens) {
    ViewTrace vt;
    vt.tokens = tokens;
    pool_into(params, view, vt);
    return {vt.embedding, vt.attention};
}

double expert_score(const MoEParameters& params, std::size_t view, const Vector& embedding) {
    ViewTrace vt;
    vt.embedding = embedding;
    score_into(params, view, vt);
    return vt.score;
}

Vector gate(const MoEParameters& params, const std::vector<Vector>& embeddings) {
    const auto& cfg = params.config();
    if (embeddings.size() != cfg.views) fail(Errc::ProfileShapeMismatch, "gate expects one embedding per view");
    if (cfg.ablation.gating_off || cfg.ablation.moe_off) {
        return Vector::Constant(static_cast<Eigen::Index>(cfg.views), 1.0 / static_cast<double>(cfg.views));
    }
    Vector input(static_cast<Eigen::Index>(cfg.views * cfg.width));
    for (std::size_t m = 0; m < cfg.views; ++m) {
        input.segment(static_cast<Eigen::Index>(m * cfg.width), static_cast<Eigen::Index>(cfg.width)) = embeddings[m];
    }
    const Vector hidden = activate(params.mat(Tensor::GateW1) * input + params.vec(Tensor::GateB1), cfg.activation);
    return softmax(params.mat(Tensor::GateW2) * hidden + params.vec(Tensor::GateB2));
}

ForwardTrace forward(const MoEParameters& params, const Matrix& profile) {
    const auto& cfg = params.config();
    if (static_cast<std::size_t>(profile.rows()) != cfg.views ||
        static_cast<std::size_t>(profile.cols()) != cfg.neighbors) {
        fail(Errc::ProfileShapeMismatch, "profile is " + std::to_string(profile.rows()) + "x" +
                                             std::to_string(profile.cols()) + ", network expects " +
                                             std::to_string(cfg.views) + "x" + std::to_string(cfg.neighbors));
    }
    const Eigen::Index M = static_cast<Eigen::Index>(cfg.views);
    ForwardTrace tr;
    tr.params_version = params.version();

    if (cfg.ablation.moe_off) {
        tr.views.resize(1);
        const Vector pooled = profile.colwise().mean().transpose();
        encode_view_into(params, 0, pooled, tr.views[0]);
        pool_into(params, 0, tr.views[0]);
        score_into(params, 0, tr.views[0]);
        tr.expert_scores = Vector::Constant(1, tr.views[0].score);
        tr.gates = Vector::Constant(M, 1.0 / static_cast<double>(M));
        tr.logit = tr.views[0].score;
        tr.score = sigmoid(tr.logit);
        return tr;
    }

    tr.views.resize(cfg.views);
    tr.expert_scores.resize(M);
    for (std::size_t m = 0; m < cfg.views; ++m) {
        auto& vt = tr.views[m];
        encode_view_into(params, m, profile.row(static_cast<Eigen::Index>(m)).transpose(), vt);
        pool_into(params, m, vt);
        score_into(params, m, vt);
        tr.expert_scores(static_cast<Eigen::Index>(m)) = vt.score;
    }

    if (cfg.ablation.gating_off) {
        tr.gates = Vector::Constant(M, 1.0 / static_cast<double>(M));
    } else {
        tr.gate_input.resize(M * static_cast<Eigen::Index>(cfg.width));
        for (std::size_t m = 0; m < cfg.views; ++m) {
            tr.gate_input.segment(static_cast<Eigen::Index>(m * cfg.width), static_cast<Eigen::Index>(cfg.width)) =
                tr.views[m].embedding;
        }
        tr.gate_pre = params.mat(Tensor::GateW1) * tr.gate_input + params.vec(Tensor::GateB1);
        tr.gate_hidden = activate(tr.gate_pre, cfg.activation);
        tr.gate_logits = params.mat(Tensor::GateW2) * tr.gate_hidden + params.vec(Tensor::GateB2);
        tr.gates = softmax(tr.gate_logits);
    }
    tr.logit = tr.gates.dot(tr.expert_scores);
    tr.score = sigmoid(tr.logit);
    return tr;
}

void backward(const MoEParameters& params, const ForwardTrace& trace, double upstream, MoEGradients& grads,
              std::span<const double> gate_upstream) {
    const auto& cfg = params.config();
    if (trace.params_version != params.version()) {
        fail(Errc::StaleTrace, "trace was produced by a different parameter version");
    }
    if (grads.size() != params.size() || !(grads.config() == cfg)) {
        fail(Errc::ShapeMismatch, "gradient container does not match the parameters");
    }
    const bool gate_active = !cfg.ablation.gating_off && !cfg.ablation.moe_off;
    if (!gate_upstream.empty() && gate_upstream.size() != cfg.views) {
        fail(Errc::ShapeMismatch, "gate upstream must have one entry per view");
    }

    const double dlogit = upstream * trace.score * (1.0 - trace.score);
    const std::size_t experts = trace.views.size();
    std::vector<Vector> d_embedding(experts, Vector::Zero(static_cast<Eigen::Index>(cfg.width)));
    Vector d_score(static_cast<Eigen::Index>(experts));

    if (cfg.ablation.moe_off) {
        d_score(0) = dlogit;
    } else {
        d_score = dlogit * trace.gates;
    }

    if (gate_active) {
        Vector d_gates = dlogit * trace.expert_scores;
        if (!gate_upstream.empty()) {
            d_gates += Eigen::Map<const Vector>(gate_upstream.data(), static_cast<Eigen::Index>(cfg.views));
        }
        const Vector d_gl = trace.gates.cwiseProduct(d_gates.array().matrix() -
                                                     Vector::Constant(d_gates.size(), trace.gates.dot(d_gates)));
        grads.mat_mut(Tensor::GateW2).noalias() += d_gl * trace.gate_hidden.transpose();
        grads.vec_mut(Tensor::GateB2) += d_gl;
        const Vector d_gh = params.mat(Tensor::GateW2).transpose() * d_gl;
        const Vector d_gp = d_gh.cwiseProduct(activation_grad(trace.gate_pre, trace.gate_hidden, cfg.activation));
        grads.mat_mut(Tensor::GateW1).noalias() += d_gp * trace.gate_input.transpose();
        grads.vec_mut(Tensor::GateB1) += d_gp;
        const Vector d_in = params.mat(Tensor::GateW1).transpose() * d_gp;
        for (std::size_t m = 0; m < experts; ++m) {
            d_embedding[m] += d_in.segment(static_cast<Eigen::Index>(m * cfg.width), static_cast<Eigen::Index>(cfg.width));
        }
    }

    const double width = static_cast<double>(cfg.width);
    for (std::size_t m = 0; m < experts; ++m) {
        const ViewTrace& vt = trace.views[m];
        const double ds = d_score(static_cast<Eigen::Index>(m));

        // expert scorer
        grads.vec_mut(Tensor::ScoreW2, m) += ds * vt.score_hidden;
        grads.vec_mut(Tensor::ScoreB2, m)(0) += ds;
        const Vector d_sp = (ds * params.vec(Tensor::ScoreW2, m))
                                .cwiseProduct(activation_grad(vt.score_pre, vt.score_hidden, cfg.activation));
        grads.mat_mut(Tensor::ScoreW1, m).noalias() += d_sp * vt.embedding.transpose();
        grads.vec_mut(Tensor::ScoreB1, m) += d_sp;
        Vector& dh = d_embedding[m];
        dh.noalias() += params.mat(Tensor::ScoreW1, m).transpose() * d_sp;

        // pooling: h = H^T alpha
        Matrix d_tokens = vt.attention * dh.transpose();
        if (!cfg.ablation.attention_off) {
            const Vector d_alpha = vt.tokens * dh;
            const Vector d_att_logit =
                vt.attention.cwiseProduct(d_alpha - Vector::Constant(d_alpha.size(), vt.attention.dot(d_alpha)));
            grads.vec_mut(Tensor::AttV, m).noalias() += vt.att_hidden.transpose() * d_att_logit;
            const Matrix d_att_pre = (d_att_logit * params.vec(Tensor::AttV, m).transpose())
                                         .cwiseProduct((1.0 - vt.att_hidden.array().square()).matrix());
            grads.mat_mut(Tensor::AttW, m).noalias() += d_att_pre.transpose() * vt.tokens;
            d_tokens.noalias() += d_att_pre * params.mat(Tensor::AttW, m);
        }

        if (!cfg.ablation.position_off) grads.mat_mut(Tensor::Pos) += d_tokens;

        // layer norm
        grads.vec_mut(Tensor::LnGain, m) += d_tokens.cwiseProduct(vt.normalized).colwise().sum().transpose();
        grads.vec_mut(Tensor::LnBias, m) += d_tokens.colwise().sum().transpose();
        const Matrix d_xhat = d_tokens.array().rowwise() * params.vec(Tensor::LnGain, m).transpose().array();
        const Vector mean_dx = d_xhat.rowwise().sum() / width;
        const Vector mean_dx_x = d_xhat.cwiseProduct(vt.normalized).rowwise().sum() / width;
        Matrix d_a2 = d_xhat;
        d_a2.colwise() -= mean_dx;
        d_a2 -= (vt.normalized.array().colwise() * mean_dx_x.array()).matrix();
        d_a2 = d_a2.array().colwise() * vt.inv_std.array();

        // encoder
        grads.mat_mut(Tensor::EncW2, m).noalias() += d_a2.transpose() * vt.enc_hidden;
        grads.vec_mut(Tensor::EncB2, m) += d_a2.colwise().sum().transpose();
        const Matrix d_pre1 = (d_a2 * params.mat(Tensor::EncW2, m))
                                  .cwiseProduct(activation_grad(vt.enc_pre, vt.enc_hidden, cfg.activation));
        grads.vec_mut(Tensor::EncW1, m).noalias() += d_pre1.transpose() * vt.input;
        grads.vec_mut(Tensor::EncB1, m) += d_pre1.colwise().sum().transpose();
    }
}

std::string serialize_params(const MoEParameters& params) {
    const auto& cfg = params.config();
    std::string out;
    out.reserve(64 + params.size() * 8);
    out.append(kParamMagic.data(), kParamMagic.size());
    put_u32(out, kParamFormatVersion);
    for (std::size_t v : {cfg.views, cfg.neighbors, cfg.width, cfg.att_width, cfg.score_hidden, cfg.gate_hidden}) {
        put_u32(out, static_cast<std::uint32_t>(v));
    }
    put_u32(out, static_cast<std::uint32_t>(cfg.activation));
    put_f64(out, cfg.ln_epsilon);
    put_u32(out, cfg.ablation.bits());
    put_u64(out, params.size());
    for (double v : params.values()) put_f64(out, v);
    return out;
}

MoEParameters deserialize_params(std::string_view bytes, const std::optional<NetworkConfig>& expected,
                                 std::size_t* consumed) {
    Reader in(bytes);
    auto magic = in.take(4);
    if (magic != std::string_view(kParamMagic.data(), kParamMagic.size())) {
        fail(Errc::VersionMismatch, "not a parameter file (bad magic)");
    }
    const auto version = in.u32();
    if (version != kParamFormatVersion) {
        fail(Errc::VersionMismatch, "format version " + std::to_string(version) + ", expected " +
                                        std::to_string(kParamFormatVersion));
    }
    NetworkConfig cfg;
    cfg.views = in.u32();
    cfg.neighbors = in.u32();
    cfg.width = in.u32();
    cfg.att_width = in.u32();
    cfg.score_hidden = in.u32();
    cfg.gate_hidden = in.u32();
    const auto act = in.u32();
    if (act > 1) fail(Errc::VersionMismatch, "unknown activation id " + std::to_string(act));
    cfg.activation = static_cast<Activation>(act);
    cfg.ln_epsilon = in.f64();
    cfg.ablation = Ablation::from_bits(in.u32());
    try {
        cfg.validate();
    } catch (const Error& e) {
        fail(Errc::ShapeMismatch, e.what());
    }
    const auto count = in.u64();
    if (count > in.remaining() / 8) fail(Errc::TruncatedFile, "length field exceeds the available data");
    if (count != parameter_count(cfg)) {
        fail(Errc::ShapeMismatch, "file stores " + std::to_string(count) + " values, config implies " +
                                      std::to_string(parameter_count(cfg)));
    }
    if (expected) {
        const auto& e = *expected;
        if (e.views != cfg.views || e.neighbors != cfg.neighbors || e.width != cfg.width ||
            e.att_width != cfg.att_width || e.score_hidden != cfg.score_hidden || e.gate_hidden != cfg.gate_hidden) {
            fail(Errc::ShapeMismatch, "file config (M=" + std::to_string(cfg.views) + ", K=" +
                                          std::to_string(cfg.neighbors) + ", D=" + std::to_string(cfg.width) +
                                          ") differs from the expected one (M=" + std::to_string(e.views) +
                                          ", K=" + std::to_string(e.neighbors) + ", D=" + std::to_string(e.width) + ")");
        }
    }
    MoEParameters params(cfg);
    auto values = params.mutable_values();
    for (std::size_t i = 0; i < count; ++i) values[i] = in.f64();
    if (!std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); })) {
        fail(Errc::ShapeMismatch, "parameter file contains non-finite values");
    }
    if (consumed) *consumed = in.position();
    return params;
}

}  // namespace ofatad
