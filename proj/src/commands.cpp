#include "ofatad/commands.hpp"

#include "ofatad/desk_suite.hpp"
#include "ofatad/error.hpp"
#include "ofatad/io.hpp"

#include <nlohmann/json.hpp>

#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace ofatad {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

int exit_code_for(const Error& error) {
    switch (error.code()) {
        case Errc::ConfigError:
        case Errc::InvalidArgument:
            return kExitConfig;
        case Errc::NonFiniteLoss:
            return kExitNumeric;
        default:
            return kExitData;
    }
}

namespace {

template <typename Body>
int guarded(std::ostream& err, Body&& body) {
    try {
        body();
        return kExitOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
}

void require(const fs::path& p, const char* flag) {
    if (p.empty()) fail(Errc::InvalidArgument, std::string("missing required option ") + flag);
}

/// Sidecar manifest that ties an output to the settings that produced it.
void write_manifest(const fs::path& path, const std::string& command, const std::string& hash,
                    const std::string& resolved, Json extra = Json::object()) {
    Json j;
    j["command"] = command;
    j["config_hash"] = hash;
    j["resolved_config"] = resolved;
    for (auto& [k, v] : extra.items()) j[k] = v;
    write_file_atomic(path, j.dump(2) + "\n");
}

fs::path with_suffix(const fs::path& p, const std::string& suffix) {
    fs::path out = p;
    out += suffix;
    return out;
}

std::string model_source_list(const TrainedModel& model) {
    std::string out;
    for (std::size_t i = 0; i < model.manifest.sources.size(); ++i) {
        if (i) out += ",";
        out += model.manifest.sources[i];
    }
    return out;
}

std::string dataset_name(const fs::path& p) { return p.stem().string(); }

}  // namespace

SourcePool load_source_pool(const RunConfig& cfg, std::size_t limit) {
    if (cfg.sources.empty()) fail(Errc::ConfigError, "data.sources lists no files");
    std::vector<std::pair<std::string, OneClassSplit>> splits;
    for (std::size_t i = 0; i < cfg.sources.size() && i < limit; ++i) {
        const auto ds = load_csv(cfg.sources[i], cfg.label_column, cfg.missing);
        splits.emplace_back(dataset_name(cfg.sources[i]), split_one_class(ds, cfg.train_fraction, cfg.split_seed + i));
    }
    return pool_sources(splits);
}

std::vector<TargetData> load_targets(const RunConfig& cfg) {
    if (cfg.targets.empty()) fail(Errc::ConfigError, "data.targets lists no files");
    std::vector<TargetData> out;
    for (std::size_t i = 0; i < cfg.targets.size(); ++i) {
        const auto ds = load_csv(cfg.targets[i], cfg.label_column, cfg.missing);
        out.push_back({dataset_name(cfg.targets[i]), split_one_class(ds, cfg.train_fraction, cfg.split_seed + i)});
    }
    return out;
}

TrainedModel train_from_config(const RunConfig& cfg, const SourcePool& pool, unsigned threads,
                               std::ostream* epoch_log) {
    TrainConfig tc = cfg.effective_train();
    tc.threads = threads;
    auto model = pretrain(pool, tc, [&](const EpochStats& s) {
        if (epoch_log) *epoch_log << format_epoch_line(s) << '\n';
    });
    model.manifest.config_hash = cfg.hash();
    model.manifest.resolved_config = cfg.resolved_text();
    return model;
}

TargetEvaluation evaluate_targets(const TrainedModel& model, const std::vector<TargetData>& targets,
                                  std::optional<double> f1_ratio, unsigned threads, bool keep_gates) {
    TargetEvaluation out;
    for (const auto& t : targets) {
        ScoreOptions opt;
        opt.threads = threads;
        opt.keep_gates = keep_gates;
        auto scored = score_target(model, t.split.train_normals, t.split.test_features, opt);
        try {
            out.report.rows.push_back(evaluate_scores(t.name, scored.scores, t.split.test_labels, f1_ratio));
        } catch (const Error& e) {
            if (e.code() != Errc::SingleClass) throw;
            out.report.skipped.push_back(t.name);
        }
        out.gating_rows.push_back(export_gating(scored, t.name));
        out.scored.emplace_back(t.name, std::move(scored));
    }
    return out;
}

int cmd_train(const CommandOptions& opt, std::ostream& log, std::ostream& err) {
    return guarded(err, [&] {
        require(opt.config, "--config");
        const fs::path model_path = !opt.out.empty() ? opt.out : opt.model;
        require(model_path, "--out");
        const auto cfg = load_config(opt.config);
        const auto pool = load_source_pool(cfg);
        std::ostringstream epochs;
        const auto model = train_from_config(cfg, pool, opt.threads, &epochs);
        save_model(model_path, model);
        write_file_atomic(with_suffix(model_path, ".log"), epochs.str());
        Json extra;
        extra["sources"] = model.manifest.sources;
        extra["final_loss"] = model.manifest.final_loss;
        extra["parameters"] = model.params.size();
        write_manifest(with_suffix(model_path, ".json"), "train", cfg.hash(), cfg.resolved_text(), extra);
        if (!opt.quiet) {
            log << epochs.str();
            log << "model written to " << model_path.string() << " (config " << cfg.hash().substr(0, 12) << ")\n";
        }
    });
}

int cmd_score(const CommandOptions& opt, std::ostream& log, std::ostream& err) {
    return guarded(err, [&] {
        require(opt.model, "--model");
        require(opt.context, "--context");
        require(opt.test, "--test");
        require(opt.out, "--out");
        const auto model = load_model(opt.model);
        const Matrix ctx = load_feature_csv(opt.context, {opt.label_column});
        const Matrix test = load_feature_csv(opt.test, {opt.label_column});
        ScoreOptions so;
        so.context_fraction = opt.context_fraction;
        so.seed = opt.context_seed;
        so.keep_gates = opt.gates;
        so.threads = opt.threads;
        const auto scored = score_target(model, ctx, test, so);
        write_file_atomic(opt.out, scores_to_csv(scored, opt.gates));
        Json extra;
        extra["model_sources"] = model_source_list(model);
        extra["context_rows"] = scored.n_ctx;
        extra["test_rows"] = scored.scores.size();
        extra["context_fraction"] = opt.context_fraction;
        extra["context_seed"] = opt.context_seed;
        write_manifest(with_suffix(opt.out, ".json"), "score", model.manifest.config_hash,
                       model.manifest.resolved_config, extra);
        if (!opt.quiet) log << "scored " << scored.scores.size() << " rows -> " << opt.out.string() << '\n';
    });
}

int cmd_eval(const CommandOptions& opt, std::ostream& log, std::ostream& err) {
    return guarded(err, [&] {
        require(opt.model, "--model");
        require(opt.config, "--config");
        require(opt.out, "--out");
        const auto cfg = load_config(opt.config);
        const auto model = load_model(opt.model);
        const auto targets = load_targets(cfg);
        const auto ev = evaluate_targets(model, targets, cfg.f1_ratio, opt.threads, opt.gates);

        write_file_atomic(opt.out / "report.csv", ev.report.to_csv());
        write_file_atomic(opt.out / "report.txt", ev.report.to_table());
        std::string gating = gating_header(model.views) + "\n";
        for (const auto& row : ev.gating_rows) gating += row + "\n";
        write_file_atomic(opt.out / "gating.csv", gating);
        if (opt.gates) {
            for (const auto& [name, scored] : ev.scored) {
                write_file_atomic(opt.out / (name + "_scores.csv"), scores_to_csv(scored, true));
            }
        }
        Json extra;
        extra["model_config_hash"] = model.manifest.config_hash;
        extra["skipped"] = ev.report.skipped;
        write_manifest(opt.out / "manifest.json", "eval", cfg.hash(), cfg.resolved_text(), extra);
        if (!opt.quiet) log << ev.report.to_table();
    });
}

int cmd_sweep(const CommandOptions& opt, std::ostream& log, std::ostream& err) {
    return guarded(err, [&] {
        require(opt.config, "--config");
        require(opt.out, "--out");
        auto cfg = load_config(opt.config);
        const auto fractions = opt.fractions.value_or(cfg.fractions);
        const auto seeds = opt.seeds.value_or(cfg.seeds);
        if (seeds.empty()) fail(Errc::InvalidArgument, "no seeds given");
        const auto targets = load_targets(cfg);

        if (opt.mode == "context") {
            require(opt.model, "--model");
            const auto model = load_model(opt.model);
            std::string csv = "dataset,fraction,seed,auroc,auprc\n";
            std::map<double, std::pair<double, std::size_t>> mean_by_fraction;
            for (const auto& t : targets) {
                const auto rows = context_sweep(model, t.split.train_normals, t.split.test_features,
                                                t.split.test_labels, fractions, seeds, opt.threads);
                for (const auto& r : rows) {
                    csv += csv_field(t.name) + "," + format_double(r.fraction) + "," + std::to_string(r.seed) + "," +
                           format_double(r.auroc) + "," + format_double(r.auprc) + "\n";
                    auto& acc = mean_by_fraction[r.fraction];
                    acc.first += r.auroc;
                    ++acc.second;
                }
            }
            write_file_atomic(opt.out / "sweep_context.csv", csv);
            Json extra;
            extra["mode"] = "context";
            extra["model_config_hash"] = model.manifest.config_hash;
            write_manifest(opt.out / "manifest.json", "sweep", cfg.hash(), cfg.resolved_text(), extra);
            if (!opt.quiet) {
                log << "fraction  mean_auroc\n" << std::fixed << std::setprecision(4);
                for (const auto& [f, acc] : mean_by_fraction) {
                    log << std::setw(8) << f << "  " << acc.first / static_cast<double>(acc.second) << '\n';
                }
            }
        } else if (opt.mode == "sources") {
            std::string csv = "k,seed,mean_auroc,mean_auprc\n";
            std::vector<double> ks, aurocs, auprcs;
            for (std::size_t k = 1; k <= cfg.sources.size(); ++k) {
                const auto pool = load_source_pool(cfg, k);
                for (auto seed : seeds) {
                    RunConfig run = cfg;
                    run.train.seed = seed;
                    const auto model = train_from_config(run, pool, opt.threads);
                    const auto ev = evaluate_targets(model, targets, cfg.f1_ratio, opt.threads);
                    if (ev.report.rows.empty()) fail(Errc::SingleClass, "every target is single-class");
                    const auto mean = ev.report.mean_row();
                    csv += std::to_string(k) + "," + std::to_string(seed) + "," + format_double(mean.auroc) + "," +
                           format_double(mean.auprc) + "\n";
                    ks.push_back(static_cast<double>(k));
                    aurocs.push_back(mean.auroc);
                    auprcs.push_back(mean.auprc);
                    if (!opt.quiet) log << "k=" << k << " seed=" << seed << " auroc=" << mean.auroc << '\n';
                }
            }
            write_file_atomic(opt.out / "sweep_sources.csv", csv);
            std::string fit_csv = "metric,slope,intercept,residuals\n";
            for (const auto& [metric, ys] : {std::pair{"auroc", &aurocs}, std::pair{"auprc", &auprcs}}) {
                const auto fit = fit_line(ks, *ys);
                std::string res;
                for (std::size_t i = 0; i < fit.residuals.size(); ++i) {
                    if (i) res += ";";
                    res += format_double(fit.residuals[i]);
                }
                fit_csv += std::string(metric) + "," + (fit.slope ? format_double(*fit.slope) : "") + "," +
                           (fit.intercept ? format_double(*fit.intercept) : "") + "," + res + "\n";
                if (!opt.quiet) {
                    log << metric << " slope: " << (fit.slope ? format_double(*fit.slope) : "absent") << '\n';
                }
            }
            write_file_atomic(opt.out / "sweep_sources_fit.csv", fit_csv);
            Json extra;
            extra["mode"] = "sources";
            write_manifest(opt.out / "manifest.json", "sweep", cfg.hash(), cfg.resolved_text(), extra);
        } else {
            fail(Errc::InvalidArgument, "unknown sweep mode '" + opt.mode + "' (expected context or sources)");
        }
    });
}

int cmd_ablate(const CommandOptions& opt, std::ostream& log, std::ostream& err) {
    return guarded(err, [&] {
        require(opt.config, "--config");
        require(opt.out, "--out");
        const auto base = load_config(opt.config);
        const auto pool = load_source_pool(base);
        const auto targets = load_targets(base);

        std::vector<AblationSwitches> variants{AblationSwitches{}};
        for (const auto& v : opt.variants) {
            if (std::find(variants.begin(), variants.end(), v) == variants.end()) variants.push_back(v);
        }

        std::string csv = "variant,dataset,auroc,auprc,f1\n";
        std::vector<std::string> labels;
        std::vector<EvaluationReport> reports;
        Json hashes = Json::object();
        for (const auto& v : variants) {
            RunConfig cfg = base;
            cfg.ablation = v;
            const auto model = train_from_config(cfg, pool, opt.threads);
            const auto ev = evaluate_targets(model, targets, cfg.f1_ratio, opt.threads, true);
            const std::string label = v.label();
            const std::string dir = v.any() ? label.substr(4) : label;
            for (const auto& r : ev.report.rows) {
                csv += csv_field(label) + "," + csv_field(r.name) + "," + format_double(r.auroc) + "," +
                       format_double(r.auprc) + "," + format_double(r.f1) + "\n";
            }
            for (const auto& [name, scored] : ev.scored) {
                std::string slug = dir;
                std::replace(slug.begin(), slug.end(), ' ', '_');
                std::replace(slug.begin(), slug.end(), '+', '_');
                write_file_atomic(opt.out / slug / (name + "_scores.csv"), scores_to_csv(scored, true));
            }
            hashes[label] = cfg.hash();
            labels.push_back(label);
            reports.push_back(ev.report);
            if (!opt.quiet) log << label << ": mean AUROC " << format_double(ev.report.mean_row().auroc) << '\n';
        }
        write_file_atomic(opt.out / "ablation.csv", csv);

        // Datasets as rows, variants as columns, mean row last.
        std::ostringstream table;
        table << std::left << std::setw(16) << "Dataset";
        for (const auto& l : labels) table << std::right << std::setw(18) << l;
        table << '\n' << std::fixed << std::setprecision(4);
        const auto& names = reports.front().rows;
        for (std::size_t d = 0; d < names.size(); ++d) {
            table << std::left << std::setw(16) << names[d].name;
            for (const auto& rep : reports) table << std::right << std::setw(18) << rep.rows[d].auroc;
            table << '\n';
        }
        table << std::left << std::setw(16) << "Average";
        for (const auto& rep : reports) table << std::right << std::setw(18) << rep.mean_row().auroc;
        table << '\n';
        write_file_atomic(opt.out / "ablation.txt", table.str());

        Json extra;
        extra["variant_config_hashes"] = hashes;
        extra["moe_off_reading"] = "mean of the view profiles scored by one shared expert, no gate";
        write_manifest(opt.out / "manifest.json", "ablate", base.hash(), base.resolved_text(), extra);
        if (!opt.quiet) log << table.str();
    });
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

}  // namespace

int cmd_report(const CommandOptions& opt, std::ostream& log, std::ostream& err) {
    return guarded(err, [&] {
        if (opt.inputs.empty()) fail(Errc::InvalidArgument, "report needs at least one --input ablation.csv");
        require(opt.out, "--out");
        // method -> dataset -> (auroc, auprc)
        std::vector<std::string> methods;
        std::vector<std::string> datasets;
        std::map<std::pair<std::string, std::string>, std::pair<double, double>> cells;
        for (const auto& path : opt.inputs) {
            std::istringstream in(read_file(path));
            std::string line;
            if (!std::getline(in, line)) fail(Errc::MalformedCsv, path.string() + " is empty");
            const auto header = split_csv_line(line);
            auto col = [&](const std::string& name) {
                const auto it = std::find(header.begin(), header.end(), name);
                if (it == header.end()) fail(Errc::MalformedCsv, path.string() + " has no column '" + name + "'");
                return static_cast<std::size_t>(it - header.begin());
            };
            const auto cv = col("variant"), cd = col("dataset"), ca = col("auroc"), cp = col("auprc");
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                const auto f = split_csv_line(line);
                if (f.size() != header.size()) fail(Errc::MalformedCsv, path.string() + ": ragged row");
                if (std::find(methods.begin(), methods.end(), f[cv]) == methods.end()) methods.push_back(f[cv]);
                if (std::find(datasets.begin(), datasets.end(), f[cd]) == datasets.end()) datasets.push_back(f[cd]);
                try {
                    cells[{f[cv], f[cd]}] = {std::stod(f[ca]), std::stod(f[cp])};
                } catch (const std::exception&) {
                    fail(Errc::MalformedCsv, path.string() + ": non-numeric metric");
                }
            }
        }
        std::vector<std::vector<double>> auroc_table, auprc_table;
        for (const auto& m : methods) {
            std::vector<double> a, p;
            for (const auto& d : datasets) {
                const auto it = cells.find({m, d});
                if (it == cells.end()) fail(Errc::IncompleteTable, "no value for " + m + " on " + d);
                a.push_back(it->second.first);
                p.push_back(it->second.second);
            }
            auroc_table.push_back(std::move(a));
            auprc_table.push_back(std::move(p));
        }
        const auto rank_a = average_rank(auroc_table);
        const auto rank_p = average_rank(auprc_table);
        std::string csv = "method,mean_auroc,mean_auprc,rank_auroc,rank_auprc\n";
        std::ostringstream table;
        table << std::left << std::setw(28) << "Method" << std::right << std::setw(10) << "AUROC" << std::setw(10)
              << "AUPRC" << std::setw(10) << "Rank" << '\n'
              << std::fixed << std::setprecision(4);
        for (std::size_t i = 0; i < methods.size(); ++i) {
            double ma = 0.0, mp = 0.0;
            for (std::size_t d = 0; d < datasets.size(); ++d) {
                ma += auroc_table[i][d];
                mp += auprc_table[i][d];
            }
            ma /= static_cast<double>(datasets.size());
            mp /= static_cast<double>(datasets.size());
            csv += csv_field(methods[i]) + "," + format_double(ma) + "," + format_double(mp) + "," +
                   format_double(rank_a[i]) + "," + format_double(rank_p[i]) + "\n";
            table << std::left << std::setw(28) << methods[i] << std::right << std::setw(10) << ma << std::setw(10)
                  << mp << std::setw(10) << rank_a[i] << '\n';
        }
        write_file_atomic(opt.out / "ranks.csv", csv);
        write_file_atomic(opt.out / "ranks.txt", table.str());
        if (!opt.quiet) log << table.str();
    });
}

int cmd_make_suite(const CommandOptions& opt, std::ostream& log, std::ostream& err) {
    return guarded(err, [&] {
        require(opt.out, "--out");
        const std::uint64_t seed = opt.seeds && !opt.seeds->empty() ? opt.seeds->front() : 0;
        const auto suite = make_desk_suite(seed);
        std::vector<std::string> sources, targets;
        for (const auto& ds : suite.sources) {
            write_dataset_csv(opt.out / (ds.name + ".csv"), ds);
            sources.push_back(ds.name + ".csv");
        }
        for (const auto& ds : suite.targets) {
            write_dataset_csv(opt.out / (ds.name + ".csv"), ds);
            targets.push_back(ds.name + ".csv");
        }
        const auto std_fav = make_std_favoring_dataset("target_stdfav", 1000, 0.05, seed);
        write_dataset_csv(opt.out / "target_stdfav.csv", std_fav);

        auto join = [](const std::vector<std::string>& v) {
            std::string out;
            for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + v[i];
            return out;
        };
        std::string ini = "[data]\nsources = " + join(sources) + "\ntargets = " + join(targets) +
                          "\nlabel_column = label\ntrain_fraction = 0.5\nseed = " + std::to_string(seed) +
                          "\n\n[train]\nseed = " + std::to_string(seed) + "\n";
        write_file_atomic(opt.out / "suite.ini", ini);
        if (!opt.quiet) log << "desk suite written to " << opt.out.string() << '\n';
    });
}

}  // namespace ofatad
