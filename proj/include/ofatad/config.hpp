#pragma once

#include "ofatad/data.hpp"
#include "ofatad/trainer.hpp"

#include <filesystem>
#include <string>

namespace ofatad {

struct AblationSwitches {
    bool gating_off = false;
    bool moe_off = false;
    bool attention_off = false;
    bool position_off = false;
    bool noise_off = false;
    bool extrapolation_off = false;
    bool interpolation_off = false;
    bool masking_off = false;

    bool any() const;
    Ablation network() const;
    /// Synthesis weights with the disabled strategies removed.
    SynthesisConfig apply(SynthesisConfig cfg) const;
    /// Short label such as "w/o Attention"; "Full" when nothing is switched off.
    std::string label() const;
    bool operator==(const AblationSwitches&) const = default;
};

/// Names accepted by --switches and the [ablation] section.
const std::vector<std::string>& switch_names();
/// Comma-separated switch names; "none" or an empty string yields no switches.
AblationSwitches parse_switches(std::string_view text);
void set_switch(AblationSwitches& s, std::string_view name, bool value);

struct RunConfig {
    // [data]
    std::vector<std::filesystem::path> sources;
    std::vector<std::filesystem::path> targets;
    std::string label_column = "label";
    double train_fraction = 0.5;
    std::uint64_t split_seed = 0;
    MissingPolicy missing = MissingPolicy::Reject;

    // [views] [neighbors] [network] [synthesis] [train]
    TrainConfig train;

    // [eval]
    std::vector<double> fractions = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
    std::optional<double> f1_ratio;  // absent: the true anomaly ratio of each test split

    // [ablation]
    AblationSwitches ablation;

    /// Network and synthesis settings with the ablation switches applied.
    TrainConfig effective_train() const;
    /// Every key in a fixed order, one "key = value" per line under its section.
    std::string resolved_text() const;
    std::string hash() const;
};

/// Parses an INI-style document. Unknown sections or keys are errors, as are
/// malformed values. Relative data paths resolve against `base_dir`.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

}  // namespace ofatad
