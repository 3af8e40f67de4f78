#pragma once

#include "ofatad/common.hpp"

#include <optional>
#include <string>

namespace ofatad {

/// Mann-Whitney form: P(score_anomaly > score_normal) + P(tie) / 2.
double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Average precision over the descending score sweep; tied scores enter as one block.
double auprc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct F1Result {
    double f1 = 0.0;
    double threshold = 0.0;
};

/// Threshold at the (1 - ratio) linear-interpolated empirical quantile of the
/// scores; rows strictly above it are flagged.
F1Result f1_at_percentile(std::span<const double> scores, std::span<const std::uint8_t> labels, double ratio);

/// Linear-interpolation quantile of unsorted values, q in [0, 1].
double empirical_quantile(std::vector<double> values, double q);

/// table[method][dataset], higher is better. Ties share the mean rank.
std::vector<double> average_rank(const std::vector<std::vector<double>>& table);

struct ReportRow {
    std::string name;
    double auroc = 0.0;
    double auprc = 0.0;
    double f1 = 0.0;
    double threshold = 0.0;
    std::size_t n_test = 0;
    double anomaly_ratio = 0.0;
};

struct EvaluationReport {
    std::vector<ReportRow> rows;
    std::vector<std::string> skipped;  // single-class datasets

    ReportRow mean_row() const;
    std::string to_csv() const;
    std::string to_table() const;
};

/// `f1_ratio` defaults to the true anomaly ratio of `labels`.
ReportRow evaluate_scores(const std::string& name, std::span<const double> scores,
                          std::span<const std::uint8_t> labels, std::optional<double> f1_ratio = std::nullopt);

/// Ordinary least squares y = a + b x; slope absent for fewer than two distinct x.
struct LineFit {
    std::optional<double> slope;
    std::optional<double> intercept;
    std::vector<double> residuals;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace ofatad
