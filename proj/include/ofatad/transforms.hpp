#pragma once

#include "ofatad/common.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ofatad {

enum class ViewKind : std::uint8_t { Raw = 0, Standardize = 1, MinMax = 2, Quantile = 3 };

std::string_view view_name(ViewKind kind);
ViewKind parse_view(std::string_view name);

/// Raw, Std, MinMax, Quantile.
std::vector<ViewKind> default_views();

inline constexpr std::size_t kDefaultQuantileCap = 1000;

/// Empirical CDF over a sorted reference sample. Reference point i sits at
/// plotting position i/(L-1); values in between interpolate linearly, exact
/// hits on tied reference values take the mid position of the tie block.
class EmpiricalQuantileMap {
public:
    EmpiricalQuantileMap() = default;

    /// Sorts `values` and keeps at most `cap` of them at evenly spaced ranks.
    static EmpiricalQuantileMap fit(std::vector<double> values, std::size_t cap = kDefaultQuantileCap);
    static EmpiricalQuantileMap from_sorted(std::vector<double> sorted_reference);

    double cdf(double value) const;

    const std::vector<double>& reference() const { return reference_; }
    std::size_t length() const { return reference_.size(); }

    bool operator==(const EmpiricalQuantileMap&) const = default;

private:
    std::vector<double> reference_;
};

/// Evenly spaced rank subsample of a sorted sequence (keeps both extremes).
std::vector<double> subsample_sorted(const std::vector<double>& sorted, std::size_t cap);

struct FittedView {
    ViewKind kind = ViewKind::Raw;
    // Standardize: shift = mean, scale = population std (1 for constant features).
    // MinMax: shift = min, scale = max - min (0 for constant features).
    Vector shift;
    Vector scale;
    std::vector<EmpiricalQuantileMap> feature_maps;  // Quantile only

    bool operator==(const FittedView& other) const;
};

class ViewTransformSet {
public:
    ViewTransformSet() = default;

    static ViewTransformSet fit(const Matrix& train, const std::vector<ViewKind>& views,
                                std::size_t quantile_cap = kDefaultQuantileCap);

    std::size_t size() const { return views_.size(); }
    std::size_t dims() const { return dims_; }
    ViewKind kind(std::size_t view) const;
    const FittedView& view(std::size_t view) const;
    std::vector<ViewKind> kinds() const;

    /// Zero-based view index.
    Vector apply(std::size_t view, std::span<const double> x) const;
    Matrix apply_rows(std::size_t view, const Matrix& rows) const;

    bool operator==(const ViewTransformSet&) const = default;

private:
    std::vector<FittedView> views_;
    std::size_t dims_ = 0;
};

/// One quantile map per view, pooled over all neighbor ranks.
class DistanceNormalizer {
public:
    DistanceNormalizer() = default;

    static DistanceNormalizer fit(std::vector<std::vector<double>> per_view_distances,
                                  std::size_t cap = kDefaultQuantileCap);

    double normalize(std::size_t view, double distance) const;

    std::size_t size() const { return per_view_.size(); }
    const EmpiricalQuantileMap& map(std::size_t view) const { return per_view_.at(view); }

    bool operator==(const DistanceNormalizer&) const = default;

private:
    std::vector<EmpiricalQuantileMap> per_view_;
};

struct FeatureMoments {
    Vector mean;
    Vector std;  // population, zero for constant features
};

FeatureMoments feature_moments(const Matrix& rows);

}  // namespace ofatad
