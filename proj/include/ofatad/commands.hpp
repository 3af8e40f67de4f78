#pragma once

#include "ofatad/config.hpp"
#include "ofatad/error.hpp"
#include "ofatad/inference.hpp"
#include "ofatad/metrics.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace ofatad {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitData = 2, kExitNumeric = 3 };

/// Maps an error to the process exit code.
int exit_code_for(const Error& error);

struct CommandOptions {
    std::filesystem::path config;
    std::filesystem::path model;
    std::filesystem::path context;
    std::filesystem::path test;
    std::filesystem::path out;
    std::vector<std::filesystem::path> inputs;
    std::string label_column = "label";
    bool gates = false;
    double context_fraction = 1.0;
    std::uint64_t context_seed = 0;
    std::optional<std::vector<double>> fractions;
    std::optional<std::vector<std::uint64_t>> seeds;
    std::vector<AblationSwitches> variants;
    std::string mode = "context";
    unsigned threads = 1;
    bool quiet = false;
};

/// Every command returns an exit code and reports errors on `err`.
int cmd_train(const CommandOptions& opt, std::ostream& log, std::ostream& err);
int cmd_score(const CommandOptions& opt, std::ostream& log, std::ostream& err);
int cmd_eval(const CommandOptions& opt, std::ostream& log, std::ostream& err);
int cmd_sweep(const CommandOptions& opt, std::ostream& log, std::ostream& err);
int cmd_ablate(const CommandOptions& opt, std::ostream& log, std::ostream& err);
int cmd_report(const CommandOptions& opt, std::ostream& log, std::ostream& err);
int cmd_make_suite(const CommandOptions& opt, std::ostream& log, std::ostream& err);

/// Library entry points behind the commands.
struct TargetData {
    std::string name;
    OneClassSplit split;
};

SourcePool load_source_pool(const RunConfig& cfg, std::size_t limit = SIZE_MAX);
std::vector<TargetData> load_targets(const RunConfig& cfg);

struct TargetEvaluation {
    EvaluationReport report;
    std::vector<std::string> gating_rows;
    std::vector<std::pair<std::string, ScoredDataset>> scored;
};

TargetEvaluation evaluate_targets(const TrainedModel& model, const std::vector<TargetData>& targets,
                                  std::optional<double> f1_ratio, unsigned threads, bool keep_gates = false);

TrainedModel train_from_config(const RunConfig& cfg, const SourcePool& pool, unsigned threads,
                               std::ostream* epoch_log = nullptr);

}  // namespace ofatad
