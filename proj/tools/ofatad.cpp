// Command-line front end: train, score, eval, sweep, ablate, report, make-suite.

#include "ofatad/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

std::vector<double> parse_doubles(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stod(item));
    }
    return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stoull(item));
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace ofatad;
    CLI::App app{"ofatad: pretrain once on source tables, score unseen tables without retraining"};
    app.require_subcommand(1);

    CommandOptions opt;
    std::string fractions, seeds, switches;
    std::vector<std::string> variant_specs;

    auto threads = [&](CLI::App* sub) {
        sub->add_option("--threads", opt.threads, "worker threads (outputs do not depend on it)")
            ->check(CLI::Range(1u, 256u));
        sub->add_flag("--quiet", opt.quiet, "suppress progress output");
    };

    auto* train = app.add_subcommand("train", "pretrain a model on the configured source datasets");
    train->add_option("--config", opt.config, "run configuration (INI)")->required();
    train->add_option("--out,--model", opt.out, "model file to write")->required();
    threads(train);

    auto* score = app.add_subcommand("score", "score test rows against a context with a frozen model");
    score->add_option("--model", opt.model)->required();
    score->add_option("--context", opt.context, "CSV of normal context rows")->required();
    score->add_option("--test", opt.test, "CSV of rows to score")->required();
    score->add_option("--out", opt.out, "score CSV to write")->required();
    score->add_option("--label", opt.label_column, "column ignored when present");
    score->add_flag("--gates", opt.gates, "append per-view gate weights");
    score->add_option("--fraction", opt.context_fraction, "share of context rows to use")
        ->check(CLI::Range(0.0, 1.0));
    score->add_option("--context-seed", opt.context_seed);
    threads(score);

    auto* eval = app.add_subcommand("eval", "evaluate a model on the configured target datasets");
    eval->add_option("--model", opt.model)->required();
    eval->add_option("--config", opt.config)->required();
    eval->add_option("--out", opt.out, "output directory")->required();
    eval->add_flag("--gates", opt.gates, "also write per-row scores with gates");
    threads(eval);

    auto* sweep = app.add_subcommand("sweep", "context-size or source-count sweep");
    sweep->add_option("--mode", opt.mode)->check(CLI::IsMember({"context", "sources"}));
    sweep->add_option("--model", opt.model, "model (context mode)");
    sweep->add_option("--config", opt.config)->required();
    sweep->add_option("--out", opt.out, "output directory")->required();
    sweep->add_option("--fractions", fractions, "comma-separated context fractions");
    sweep->add_option("--seeds", seeds, "comma-separated seeds");
    threads(sweep);

    auto* ablate = app.add_subcommand("ablate", "train and compare architecture or synthesis variants");
    ablate->add_option("--config", opt.config)->required();
    ablate->add_option("--out", opt.out, "output directory")->required();
    ablate->add_option("--switches", variant_specs,
                       "one variant per value; combine switches with '+', e.g. gating_off attention_off+position_off")
        ->expected(0, -1);
    threads(ablate);

    auto* report = app.add_subcommand("report", "average ranks from ablation tables");
    report->add_option("--input", opt.inputs, "ablation.csv files")->required();
    report->add_option("--out", opt.out, "output directory")->required();
    report->add_flag("--quiet", opt.quiet);

    auto* suite = app.add_subcommand("make-suite", "write the synthetic desk suite and a matching config");
    suite->add_option("--out", opt.out, "output directory")->required();
    suite->add_option("--seeds", seeds, "generator seed");
    suite->add_flag("--quiet", opt.quiet);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (!fractions.empty()) opt.fractions = parse_doubles(fractions);
        if (!seeds.empty()) opt.seeds = parse_seeds(seeds);
        for (auto spec : variant_specs) {
            std::replace(spec.begin(), spec.end(), '+', ',');
            opt.variants.push_back(parse_switches(spec));
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: cannot parse list option: " << e.what() << '\n';
        return kExitConfig;
    }

    if (*train) return cmd_train(opt, std::cout, std::cerr);
    if (*score) return cmd_score(opt, std::cout, std::cerr);
    if (*eval) return cmd_eval(opt, std::cout, std::cerr);
    if (*sweep) return cmd_sweep(opt, std::cout, std::cerr);
    if (*ablate) return cmd_ablate(opt, std::cout, std::cerr);
    if (*report) return cmd_report(opt, std::cout, std::cerr);
    return cmd_make_suite(opt, std::cout, std::cerr);
}
