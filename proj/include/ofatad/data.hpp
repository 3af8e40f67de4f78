#pragma once

#include "ofatad/common.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ofatad {

enum class MissingPolicy { Reject, ImputeMean };

/// A labeled feature table. Labels use 1 for anomalies.
struct Dataset {
    std::string name;
    Matrix features;
    Labels labels;
    std::optional<std::string> category;

    std::size_t rows() const { return static_cast<std::size_t>(features.rows()); }
    std::size_t dims() const { return static_cast<std::size_t>(features.cols()); }
    std::size_t count_anomalies() const;
};

struct OneClassSplit {
    Matrix train_normals;
    Matrix test_features;
    Labels test_labels;
    // Row indices into the source dataset, kept for auditing.
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
};

struct SourcePool {
    std::vector<std::pair<std::string, Matrix>> datasets;

    std::size_t size() const { return datasets.size(); }
};

/// Reads a CSV with a header row. Every column other than `label_column` must
/// be numeric. Empty cells and NA/NaN tokens count as missing.
Dataset load_csv(const std::filesystem::path& path, const std::string& label_column,
                 MissingPolicy missing = MissingPolicy::Reject);

/// Same parser without a label requirement: columns named in `drop_columns`
/// are ignored when present. Used for unlabeled context/test files.
Matrix load_feature_csv(const std::filesystem::path& path,
                        const std::vector<std::string>& drop_columns,
                        MissingPolicy missing = MissingPolicy::Reject);

/// Writes features plus a trailing `label` column (x0..x{d-1},label).
void write_dataset_csv(const std::filesystem::path& path, const Dataset& dataset);

/// Normals are shuffled with a seeded generator; ceil(train_fraction * #normals)
/// go to training (at most #normals - 1), everything else forms the test split.
OneClassSplit split_one_class(const Dataset& dataset, double train_fraction, std::uint64_t seed);

SourcePool pool_sources(const std::vector<std::pair<std::string, OneClassSplit>>& splits);

}  // namespace ofatad
