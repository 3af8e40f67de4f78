#include "ofatad/transforms.hpp"

#include "ofatad/error.hpp"

#include <cmath>

namespace ofatad {

std::string_view view_name(ViewKind kind) {
    switch (kind) {
    case ViewKind::Raw: return "Raw";
    case ViewKind::Standardize: return "Std";
    case ViewKind::MinMax: return "MinMax";
    case ViewKind::Quantile: return "Quantile";
    }
    return "?";
}

ViewKind parse_view(std::string_view name) {
    std::string lower(name);
    for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lower == "raw") return ViewKind::Raw;
    if (lower == "std" || lower == "standardize") return ViewKind::Standardize;
    if (lower == "minmax") return ViewKind::MinMax;
    if (lower == "quantile") return ViewKind::Quantile;
    fail(Errc::InvalidArgument, "unknown view '" + std::string(name) + "'");
}

std::vector<ViewKind> default_views() {
    return {ViewKind::Raw, ViewKind::Standardize, ViewKind::MinMax, ViewKind::Quantile};
}

std::vector<double> subsample_sorted(const std::vector<double>& sorted, std::size_t cap) {
    if (cap == 0) fail(Errc::InvalidArgument, "quantile cap must be positive");
    if (sorted.size() <= cap) return sorted;
    std::vector<double> out(cap);
    if (cap == 1) {
        out[0] = sorted[(sorted.size() - 1) / 2];
        return out;
    }
    const double step = static_cast<double>(sorted.size() - 1) / static_cast<double>(cap - 1);
    for (std::size_t i = 0; i < cap; ++i) {
        out[i] = sorted[static_cast<std::size_t>(std::llround(static_cast<double>(i) * step))];
    }
    return out;
}

EmpiricalQuantileMap EmpiricalQuantileMap::fit(std::vector<double> values, std::size_t cap) {
    if (values.empty()) fail(Errc::EmptyDistanceSet, "cannot fit a quantile map on no values");
    std::sort(values.begin(), values.end());
    return from_sorted(subsample_sorted(values, cap));
}

EmpiricalQuantileMap EmpiricalQuantileMap::from_sorted(std::vector<double> sorted_reference) {
    if (sorted_reference.empty()) fail(Errc::EmptyDistanceSet, "empty quantile reference");
    if (!std::is_sorted(sorted_reference.begin(), sorted_reference.end())) {
        fail(Errc::InvalidArgument, "quantile reference must be sorted ascending");
    }
    EmpiricalQuantileMap map;
    map.reference_ = std::move(sorted_reference);
    return map;
}

double EmpiricalQuantileMap::cdf(double value) const {
    const auto& r = reference_;
    if (r.front() == r.back()) return 0.5;
    if (value < r.front()) return 0.0;
    if (value > r.back()) return 1.0;
    const double last = static_cast<double>(r.size() - 1);
    auto lo = std::lower_bound(r.begin(), r.end(), value);
    auto hi = std::upper_bound(lo, r.end(), value);
    if (lo != hi) {
        const double first_pos = static_cast<double>(lo - r.begin());
        const double last_pos = static_cast<double>(hi - r.begin() - 1);
        return 0.5 * (first_pos + last_pos) / last;
    }
    // r[i-1] < value < r[i]
    const auto i = static_cast<std::size_t>(lo - r.begin());
    const double left = r[i - 1];
    const double right = r[i];
    const double pos = static_cast<double>(i - 1) + (value - left) / (right - left);
    return std::clamp(pos / last, 0.0, 1.0);
}

bool FittedView::operator==(const FittedView& other) const {
    return kind == other.kind && shift.size() == other.shift.size() && shift == other.shift &&
           scale.size() == other.scale.size() && scale == other.scale && feature_maps == other.feature_maps;
}

FeatureMoments feature_moments(const Matrix& rows) {
    if (rows.rows() == 0) fail(Errc::EmptyTrainingSet, "no rows");
    FeatureMoments m;
    const double n = static_cast<double>(rows.rows());
    m.mean = rows.colwise().sum().transpose() / n;
    m.std = Vector::Zero(rows.cols());
    for (Eigen::Index c = 0; c < rows.cols(); ++c) {
        double acc = 0.0;
        for (Eigen::Index r = 0; r < rows.rows(); ++r) {
            const double dev = rows(r, c) - m.mean(c);
            acc += dev * dev;
        }
        m.std(c) = std::sqrt(acc / n);
    }
    return m;
}

ViewTransformSet ViewTransformSet::fit(const Matrix& train, const std::vector<ViewKind>& views,
                                       std::size_t quantile_cap) {
    if (train.rows() == 0 || train.cols() == 0) fail(Errc::EmptyTrainingSet, "cannot fit transforms on empty data");
    if (views.empty()) fail(Errc::InvalidArgument, "at least one view is required");
    if (!train.allFinite()) fail(Errc::InvalidArgument, "training data contains non-finite values");

    ViewTransformSet set;
    set.dims_ = static_cast<std::size_t>(train.cols());
    for (ViewKind kind : views) {
        FittedView fv;
        fv.kind = kind;
        switch (kind) {
        case ViewKind::Raw:
            break;
        case ViewKind::Standardize: {
            auto moments = feature_moments(train);
            fv.shift = moments.mean;
            fv.scale = moments.std.unaryExpr([](double s) { return s > 0.0 ? s : 1.0; });
            break;
        }
        case ViewKind::MinMax:
            fv.shift = train.colwise().minCoeff().transpose();
            fv.scale = train.colwise().maxCoeff().transpose() - fv.shift;
            break;
        case ViewKind::Quantile:
            for (Eigen::Index c = 0; c < train.cols(); ++c) {
                std::vector<double> column(train.col(c).begin(), train.col(c).end());
                fv.feature_maps.push_back(EmpiricalQuantileMap::fit(std::move(column), quantile_cap));
            }
            break;
        }
        set.views_.push_back(std::move(fv));
    }
    return set;
}

ViewKind ViewTransformSet::kind(std::size_t view) const { return this->view(view).kind; }

const FittedView& ViewTransformSet::view(std::size_t view) const {
    if (view >= views_.size()) {
        fail(Errc::ViewIndexOutOfRange,
             "view " + std::to_string(view) + " requested, set has " + std::to_string(views_.size()));
    }
    return views_[view];
}

std::vector<ViewKind> ViewTransformSet::kinds() const {
    std::vector<ViewKind> out;
    for (const auto& v : views_) out.push_back(v.kind);
    return out;
}

Vector ViewTransformSet::apply(std::size_t view, std::span<const double> x) const {
    const FittedView& fv = this->view(view);
    if (x.size() != dims_) {
        fail(Errc::DimensionMismatch, "vector has " + std::to_string(x.size()) + " features, transforms expect " +
                                          std::to_string(dims_));
    }
    Vector out(static_cast<Eigen::Index>(dims_));
    for (std::size_t j = 0; j < dims_; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        switch (fv.kind) {
        case ViewKind::Raw:
            out(jj) = x[j];
            break;
        case ViewKind::Standardize:
            out(jj) = (x[j] - fv.shift(jj)) / fv.scale(jj);
            break;
        case ViewKind::MinMax:
            out(jj) = fv.scale(jj) > 0.0 ? std::clamp((x[j] - fv.shift(jj)) / fv.scale(jj), 0.0, 1.0) : 0.5;
            break;
        case ViewKind::Quantile:
            out(jj) = fv.feature_maps[j].cdf(x[j]);
            break;
        }
    }
    return out;
}

Matrix ViewTransformSet::apply_rows(std::size_t view, const Matrix& rows) const {
    Matrix out(rows.rows(), rows.cols());
    for (Eigen::Index r = 0; r < rows.rows(); ++r) out.row(r) = apply(view, row_span(rows, r)).transpose();
    return out;
}

DistanceNormalizer DistanceNormalizer::fit(std::vector<std::vector<double>> per_view_distances, std::size_t cap) {
    if (per_view_distances.empty()) fail(Errc::EmptyDistanceSet, "no views given");
    DistanceNormalizer norm;
    for (std::size_t m = 0; m < per_view_distances.size(); ++m) {
        if (per_view_distances[m].empty()) {
            fail(Errc::EmptyDistanceSet, "view " + std::to_string(m) + " has no distances");
        }
        norm.per_view_.push_back(EmpiricalQuantileMap::fit(std::move(per_view_distances[m]), cap));
    }
    return norm;
}

double DistanceNormalizer::normalize(std::size_t view, double distance) const {
    if (view >= per_view_.size()) {
        fail(Errc::ViewIndexOutOfRange, "view " + std::to_string(view) + " out of range");
    }
    if (!(distance >= 0.0)) fail(Errc::NegativeDistance, "distance must be nonnegative");
    return per_view_[view].cdf(distance);
}

}  // namespace ofatad
