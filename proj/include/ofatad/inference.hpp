#pragma once

#include "ofatad/profile.hpp"
#include "ofatad/trainer.hpp"

#include <map>
#include <optional>
#include <string>

namespace ofatad {

struct ScoredDataset {
    std::vector<double> scores;
    Vector gate_means;
    std::optional<Matrix> per_row_gates;  // n_test x M
    std::size_t n_ctx = 0;
    std::map<std::size_t, std::size_t> k_effective;  // value -> number of (row, view) pairs
};

struct ScoreOptions {
    double context_fraction = 1.0;
    std::uint64_t seed = 0;
    bool keep_gates = false;
    unsigned threads = 1;
};

/// Indices of ceil(fraction * n) rows drawn uniformly without replacement, sorted.
std::vector<std::size_t> subsample_context(std::size_t n, double fraction, std::uint64_t seed);

/// Fits a context on (a subsample of) `context_rows` and scores every test row
/// with the frozen network. Test rows never enter the context.
ScoredDataset score_target(const TrainedModel& model, const Matrix& context_rows, const Matrix& test_rows,
                           const ScoreOptions& options = {});

/// Scores rows against an already fitted context.
ScoredDataset score_with_context(const TrainedModel& model, const FittedContext& ctx, const Matrix& test_rows,
                                 bool keep_gates = false, unsigned threads = 1);

struct SweepRow {
    double fraction = 1.0;
    std::uint64_t seed = 0;
    double auroc = 0.0;
    double auprc = 0.0;
};

/// Cross product of fractions and seeds, emitted in (fraction, seed) order.
std::vector<SweepRow> context_sweep(const TrainedModel& model, const Matrix& context_rows, const Matrix& test_rows,
                                    std::span<const std::uint8_t> test_labels, std::span<const double> fractions,
                                    std::span<const std::uint64_t> seeds, unsigned threads = 1);

std::vector<double> default_sweep_fractions();

/// "name,g1,..,gM" with the mean gate weight of every view, in view order.
std::string export_gating(const ScoredDataset& scored, const std::string& dataset_name);
std::string gating_header(const std::vector<ViewKind>& views);

/// row_id,score[,g_1..g_M]
std::string scores_to_csv(const ScoredDataset& scored, bool with_gates);

}  // namespace ofatad
