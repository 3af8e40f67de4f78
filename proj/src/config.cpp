#include "ofatad/config.hpp"

#include "ofatad/error.hpp"
#include "ofatad/io.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <functional>
#include <sstream>

namespace ofatad {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto end = comma == std::string_view::npos ? text.size() : comma;
        auto item = trim(text.substr(start, end - start));
        if (!item.empty()) out.push_back(std::move(item));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expected) {
    fail(Errc::ConfigError, "key '" + key + "': cannot read '" + value + "' as " + expected);
}

double to_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size() || !std::isfinite(out)) bad_value(key, v, "a finite number");
    return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) bad_value(key, v, "a nonnegative integer");
    return out;
}

std::size_t to_size(const std::string& key, const std::string& v) { return static_cast<std::size_t>(to_u64(key, v)); }

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    bad_value(key, v, "a boolean");
}

std::string join_paths(const std::vector<std::filesystem::path>& paths) {
    std::string out;
    for (std::size_t i = 0; i < paths.size(); ++i) {
        if (i) out += ", ";
        out += paths[i].generic_string();
    }
    return out;
}

struct Key {
    std::string section;
    std::string name;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&, const std::filesystem::path&)> set;
};

Key range_key(std::string section, std::string name, Range SynthesisConfig::*range, bool upper) {
    return {section, name,
            [=](const RunConfig& c) {
                const Range& r = c.train.synthesis.*range;
                return format_double(upper ? r.hi : r.lo);
            },
            [=](RunConfig& c, const std::string& v, const std::filesystem::path&) {
                Range& r = c.train.synthesis.*range;
                (upper ? r.hi : r.lo) = to_double(section + "." + name, v);
            }};
}

Key weight_key(std::string name, Strategy s) {
    const auto i = static_cast<std::size_t>(s);
    return {"synthesis", name,
            [=](const RunConfig& c) { return format_double(c.train.synthesis.strategy_weights[i]); },
            [=](RunConfig& c, const std::string& v, const std::filesystem::path&) {
                c.train.synthesis.strategy_weights[i] = to_double("synthesis." + name, v);
            }};
}

bool get_switch(const AblationSwitches& s, std::string_view name) {
    if (name == "gating_off") return s.gating_off;
    if (name == "moe_off") return s.moe_off;
    if (name == "attention_off") return s.attention_off;
    if (name == "position_off") return s.position_off;
    if (name == "noise_off") return s.noise_off;
    if (name == "extrapolation_off") return s.extrapolation_off;
    if (name == "interpolation_off") return s.interpolation_off;
    return s.masking_off;
}

Key switch_key(const std::string& name) {
    return {"ablation", name,
            [=](const RunConfig& c) { return std::string(get_switch(c.ablation, name) ? "true" : "false"); },
            [=](RunConfig& c, const std::string& v, const std::filesystem::path&) {
                set_switch(c.ablation, name, to_bool("ablation." + name, v));
            }};
}

const std::vector<Key>& keys() {
    static const std::vector<Key> table = [] {
        std::vector<Key> k;
        auto paths = [](std::vector<std::filesystem::path> RunConfig::*member) {
            return std::make_pair(
                [=](const RunConfig& c) { return join_paths(c.*member); },
                [=](RunConfig& c, const std::string& v, const std::filesystem::path& base) {
                    (c.*member).clear();
                    for (const auto& item : split_list(v)) {
                        std::filesystem::path p(item);
                        if (p.is_relative() && !base.empty()) p = base / p;
                        (c.*member).push_back(p.lexically_normal());
                    }
                });
        };
        auto [sg, ss] = paths(&RunConfig::sources);
        k.push_back({"data", "sources", sg, ss});
        auto [tg, ts] = paths(&RunConfig::targets);
        k.push_back({"data", "targets", tg, ts});
        k.push_back({"data", "label_column", [](const RunConfig& c) { return c.label_column; },
                     [](RunConfig& c, const std::string& v, const auto&) {
                         if (v.empty()) fail(Errc::ConfigError, "key 'data.label_column' must not be empty");
                         c.label_column = v;
                     }});
        k.push_back({"data", "train_fraction", [](const RunConfig& c) { return format_double(c.train_fraction); },
                     [](RunConfig& c, const std::string& v, const auto&) {
                         c.train_fraction = to_double("data.train_fraction", v);
                     }});
        k.push_back({"data", "seed", [](const RunConfig& c) { return std::to_string(c.split_seed); },
                     [](RunConfig& c, const std::string& v, const auto&) { c.split_seed = to_u64("data.seed", v); }});
        k.push_back({"data", "missing",
                     [](const RunConfig& c) {
                         return std::string(c.missing == MissingPolicy::Reject ? "reject" : "impute_mean");
                     },
                     [](RunConfig& c, const std::string& v, const auto&) {
                         if (v == "reject") c.missing = MissingPolicy::Reject;
                         else if (v == "impute_mean") c.missing = MissingPolicy::ImputeMean;
                         else bad_value("data.missing", v, "reject or impute_mean");
                     }});

        k.push_back({"views", "kinds",
                     [](const RunConfig& c) {
                         std::string out;
                         for (std::size_t i = 0; i < c.train.views.size(); ++i) {
                             if (i) out += ", ";
                             out += view_name(c.train.views[i]);
                         }
                         return out;
                     },
                     [](RunConfig& c, const std::string& v, const auto&) {
                         c.train.views.clear();
                         for (const auto& item : split_list(v)) {
                             try {
                                 c.train.views.push_back(parse_view(item));
                             } catch (const Error&) {
                                 bad_value("views.kinds", item, "Raw, Std, MinMax or Quantile");
                             }
                         }
                         c.train.network.views = c.train.views.size();
                     }});
        k.push_back({"views", "quantile_cap", [](const RunConfig& c) { return std::to_string(c.train.quantile_cap); },
                     [](RunConfig& c, const std::string& v, const auto&) {
                         c.train.quantile_cap = to_size("views.quantile_cap", v);
                     }});

        k.push_back({"neighbors", "k", [](const RunConfig& c) { return std::to_string(c.train.network.neighbors); },
                     [](RunConfig& c, const std::string& v, const auto&) {
                         c.train.network.neighbors = to_size("neighbors.k", v);
                     }});

        auto size_key = [](std::string section, std::string name, auto getter) {
            return Key{section, name, [=](const RunConfig& c) { return std::to_string(getter(const_cast<RunConfig&>(c))); },
                       [=](RunConfig& c, const std::string& v, const std::filesystem::path&) {
                           getter(c) = to_size(section + "." + name, v);
                       }};
        };
        k.push_back(size_key("network", "width", [](RunConfig& c) -> std::size_t& { return c.train.network.width; }));
        k.push_back(size_key("network", "att_width", [](RunConfig& c) -> std::size_t& { return c.train.network.att_width; }));
        k.push_back(size_key("network", "score_hidden",
                             [](RunConfig& c) -> std::size_t& { return c.train.network.score_hidden; }));
        k.push_back(size_key("network", "gate_hidden",
                             [](RunConfig& c) -> std::size_t& { return c.train.network.gate_hidden; }));
        k.push_back({"network", "activation",
                     [](const RunConfig& c) { return std::string(activation_name(c.train.network.activation)); },
                     [](RunConfig& c, const std::string& v, const auto&) {
                         try {
                             c.train.network.activation = parse_activation(v);
                         } catch (const Error&) {
                             bad_value("network.activation", v, "relu or tanh");
                         }
                     }});
        k.push_back({"network", "ln_epsilon", [](const RunConfig& c) { return format_double(c.train.network.ln_epsilon); },
                     [](RunConfig& c, const std::string& v, const auto&) {
                         c.train.network.ln_epsilon = to_double("network.ln_epsilon", v);
                     }});

        k.push_back(weight_key("weight_extrapolation", Strategy::Extrapolation));
        k.push_back(weight_key("weight_interpolation", Strategy::Interpolation));
        k.push_back(weight_key("weight_noise", Strategy::Noise));
        k.push_back(weight_key("weight_masking", Strategy::Masking));
        k.push_back(range_key("synthesis", "alpha_min", &SynthesisConfig::alpha_range, false));
        k.push_back(range_key("synthesis", "alpha_max", &SynthesisConfig::alpha_range, true));
        k.push_back(range_key("synthesis", "beta_min", &SynthesisConfig::beta_range, false));
        k.push_back(range_key("synthesis", "beta_max", &SynthesisConfig::beta_range, true));
        k.push_back(range_key("synthesis", "noise_scale_min", &SynthesisConfig::noise_scale_range, false));
        k.push_back(range_key("synthesis", "noise_scale_max", &SynthesisConfig::noise_scale_range, true));
        k.push_back(range_key("synthesis", "mask_ratio_min", &SynthesisConfig::mask_ratio_range, false));
        k.push_back(range_key("synthesis", "mask_ratio_max", &SynthesisConfig::mask_ratio_range, true));
        k.push_back(size_key("synthesis", "negatives_per_positive",
                             [](RunConfig& c) -> std::size_t& { return c.train.synthesis.negatives_per_positive; }));
        k.push_back(size_key("synthesis", "cluster_count",
                             [](RunConfig& c) -> std::size_t& { return c.train.synthesis.cluster_count; }));

        k.push_back(size_key("train", "epochs", [](RunConfig& c) -> std::size_t& { return c.train.epochs; }));
        k.push_back(size_key("train", "batch_size", [](RunConfig& c) -> std::size_t& { return c.train.batch_size; }));
        auto double_key = [](std::string section, std::string name, auto getter) {
            return Key{section, name, [=](const RunConfig& c) { return format_double(getter(const_cast<RunConfig&>(c))); },
                       [=](RunConfig& c, const std::string& v, const std::filesystem::path&) {
                           getter(c) = to_double(section + "." + name, v);
                       }};
        };
        k.push_back(double_key("train", "learning_rate", [](RunConfig& c) -> double& { return c.train.adam.learning_rate; }));
        k.push_back(double_key("train", "beta1", [](RunConfig& c) -> double& { return c.train.adam.beta1; }));
        k.push_back(double_key("train", "beta2", [](RunConfig& c) -> double& { return c.train.adam.beta2; }));
        k.push_back(double_key("train", "epsilon", [](RunConfig& c) -> double& { return c.train.adam.epsilon; }));
        k.push_back(double_key("train", "entropy_coeff", [](RunConfig& c) -> double& { return c.train.entropy_coeff; }));
        k.push_back({"train", "seed", [](const RunConfig& c) { return std::to_string(c.train.seed); },
                     [](RunConfig& c, const std::string& v, const auto&) { c.train.seed = to_u64("train.seed", v); }});

        k.push_back({"eval", "fractions",
                     [](const RunConfig& c) {
                         std::string out;
                         for (std::size_t i = 0; i < c.fractions.size(); ++i) {
                             if (i) out += ", ";
                             out += format_double(c.fractions[i]);
                         }
                         return out;
                     },
                     [](RunConfig& c, const std::string& v, const auto&) {
                         c.fractions.clear();
                         for (const auto& item : split_list(v)) c.fractions.push_back(to_double("eval.fractions", item));
                     }});
        k.push_back({"eval", "seeds",
                     [](const RunConfig& c) {
                         std::string out;
                         for (std::size_t i = 0; i < c.seeds.size(); ++i) {
                             if (i) out += ", ";
                             out += std::to_string(c.seeds[i]);
                         }
                         return out;
                     },
                     [](RunConfig& c, const std::string& v, const auto&) {
                         c.seeds.clear();
                         for (const auto& item : split_list(v)) c.seeds.push_back(to_u64("eval.seeds", item));
                     }});
        k.push_back({"eval", "f1_ratio",
                     [](const RunConfig& c) { return c.f1_ratio ? format_double(*c.f1_ratio) : std::string("true"); },
                     [](RunConfig& c, const std::string& v, const auto&) {
                         if (v == "true") c.f1_ratio.reset();
                         else c.f1_ratio = to_double("eval.f1_ratio", v);
                     }});

        for (const auto& name : switch_names()) k.push_back(switch_key(name));
        return k;
    }();
    return table;
}

void validate(const RunConfig& c) {
    if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0)) {
        fail(Errc::ConfigError, "data.train_fraction must lie in (0, 1)");
    }
    if (c.train.views.empty()) fail(Errc::ConfigError, "views.kinds must list at least one view");
    for (double f : c.fractions) {
        if (!(f > 0.0 && f <= 1.0)) fail(Errc::ConfigError, "eval.fractions entries must lie in (0, 1]");
    }
    if (c.f1_ratio && !(*c.f1_ratio > 0.0 && *c.f1_ratio < 1.0)) {
        fail(Errc::ConfigError, "eval.f1_ratio must be 'true' or lie in (0, 1)");
    }
    if (c.train.quantile_cap < 2) fail(Errc::ConfigError, "views.quantile_cap must be at least 2");
    try {
        c.effective_train().validate();
    } catch (const Error& e) {
        fail(Errc::ConfigError, e.what());
    }
}

}  // namespace

bool AblationSwitches::any() const {
    return gating_off || moe_off || attention_off || position_off || noise_off || extrapolation_off ||
           interpolation_off || masking_off;
}

Ablation AblationSwitches::network() const {
    Ablation a;
    a.gating_off = gating_off;
    a.moe_off = moe_off;
    a.attention_off = attention_off;
    a.position_off = position_off;
    return a;
}

SynthesisConfig AblationSwitches::apply(SynthesisConfig cfg) const {
    if (extrapolation_off) cfg = cfg.without(Strategy::Extrapolation);
    if (interpolation_off) cfg = cfg.without(Strategy::Interpolation);
    if (noise_off) cfg = cfg.without(Strategy::Noise);
    if (masking_off) cfg = cfg.without(Strategy::Masking);
    return cfg;
}

std::string AblationSwitches::label() const {
    std::vector<std::string> parts;
    if (gating_off) parts.emplace_back("Gating");
    if (moe_off) parts.emplace_back("MoE");
    if (attention_off) parts.emplace_back("Attention");
    if (position_off) parts.emplace_back("Position");
    if (noise_off) parts.emplace_back("Noise Inject");
    if (extrapolation_off) parts.emplace_back("Extrapolation");
    if (interpolation_off) parts.emplace_back("Interpolation");
    if (masking_off) parts.emplace_back("Masking");
    if (parts.empty()) return "Full";
    std::string out = "w/o ";
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += " + ";
        out += parts[i];
    }
    return out;
}

const std::vector<std::string>& switch_names() {
    static const std::vector<std::string> names = {"gating_off",        "moe_off",           "attention_off",
                                                   "position_off",      "noise_off",         "extrapolation_off",
                                                   "interpolation_off", "masking_off"};
    return names;
}

void set_switch(AblationSwitches& s, std::string_view name, bool value) {
    if (name == "gating_off") s.gating_off = value;
    else if (name == "moe_off") s.moe_off = value;
    else if (name == "attention_off") s.attention_off = value;
    else if (name == "position_off") s.position_off = value;
    else if (name == "noise_off") s.noise_off = value;
    else if (name == "extrapolation_off") s.extrapolation_off = value;
    else if (name == "interpolation_off") s.interpolation_off = value;
    else if (name == "masking_off") s.masking_off = value;
    else fail(Errc::ConfigError, "unknown ablation switch '" + std::string(name) + "'");
}

AblationSwitches parse_switches(std::string_view text) {
    AblationSwitches s;
    for (const auto& item : split_list(text)) {
        if (item == "none") continue;
        set_switch(s, item, true);
    }
    return s;
}

TrainConfig RunConfig::effective_train() const {
    TrainConfig cfg = train;
    cfg.network.views = cfg.views.size();
    cfg.network.ablation = ablation.network();
    cfg.synthesis = ablation.apply(cfg.synthesis);
    return cfg;
}

std::string RunConfig::resolved_text() const {
    std::string out;
    std::string section;
    for (const auto& key : keys()) {
        if (key.section != section) {
            if (!section.empty()) out += '\n';
            section = key.section;
            out += "[" + section + "]\n";
        }
        out += key.name + " = " + key.get(*this) + "\n";
    }
    return out;
}

std::string RunConfig::hash() const { return sha256_hex(resolved_text()); }

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        std::istringstream in{std::string(text)};
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        fail(Errc::ConfigError, std::string("unreadable config: ") + e.message() + " (line " +
                                    std::to_string(e.line()) + ")");
    }

    RunConfig cfg;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) {
            fail(Errc::ConfigError, "key '" + section + "' appears outside of any section");
        }
        if (std::none_of(keys().begin(), keys().end(), [&](const Key& k) { return k.section == section; })) {
            fail(Errc::ConfigError, "unknown section '" + section + "'");
        }
        for (const auto& [name, value] : body) {
            const auto it = std::find_if(keys().begin(), keys().end(),
                                         [&](const Key& k) { return k.section == section && k.name == name; });
            if (it == keys().end()) {
                fail(Errc::ConfigError, "unknown key '" + name + "' in section [" + section + "]");
            }
            it->set(cfg, trim(value.data()), base_dir);
        }
    }
    validate(cfg);
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error& e) {
        fail(Errc::ConfigError, e.what());
    }
    return parse_config(text, std::filesystem::absolute(path).lexically_normal().parent_path());
}

}  // namespace ofatad
