#pragma once

#include "ofatad/data.hpp"

#include <string>

namespace ofatad {

struct MixtureSpec {
    std::size_t rows = 1000;
    std::size_t dims = 2;
    std::size_t components = 3;
    double anomaly_ratio = 0.0;  // uniform-box anomalies
    double box_margin = 0.1;     // box = normal range widened by this fraction per side
};

/// Gaussian-mixture normals with heterogeneous per-feature scales; anomalies
/// are drawn uniformly from the widened bounding box of the normals.
Dataset make_mixture_dataset(const std::string& name, const MixtureSpec& spec, std::uint64_t seed);

/// Two heavy-scale noise features followed by three features living on the
/// modes {-1, 0, 1}. Anomalies push one mode feature to +-U(4, 6), which is
/// only visible once every feature is standardized.
Dataset make_std_favoring_dataset(const std::string& name, std::size_t rows, double anomaly_ratio,
                                  std::uint64_t seed);

struct DeskTarget {
    std::string name;
    OneClassSplit split;
};

struct DeskSuite {
    std::vector<Dataset> sources;
    std::vector<Dataset> targets;

    SourcePool pool(double train_fraction, std::uint64_t seed) const;
    std::vector<DeskTarget> target_splits(double train_fraction, std::uint64_t seed) const;
};

/// Sources: 2-D, 3-D and 5-D mixtures whose 0.5 one-class split leaves 500
/// training normals each. Targets: 4-D and 6-D mixtures with 5% anomalies.
DeskSuite make_desk_suite(std::uint64_t seed);

}  // namespace ofatad
