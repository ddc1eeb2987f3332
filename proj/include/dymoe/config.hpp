#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dymoe/graph.hpp"
#include "dymoe/theorem.hpp"
#include "dymoe/trainer.hpp"

namespace dymoe {

// Line-oriented `key = value` text grouped under bracketed [section]
// headers. Blank lines and `#` comments are skipped; keys seen before any
// header live in the unnamed section. A repeated key keeps its last value.
class ConfigFile {
public:
    static ConfigFile parse_text(const std::string& text);
    static ConfigFile parse_file(const std::string& path);

    bool has(const std::string& section, const std::string& key) const;

    // Keys of one section in first-appearance order.
    std::vector<std::string> keys(const std::string& section) const;

    // Typed lookups returning the fallback when the key is absent. A value
    // that fails to parse throws config_error naming the key.
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    std::size_t get_size(const std::string& section, const std::string& key,
                         std::size_t fallback) const;
    std::uint64_t get_u64(const std::string& section, const std::string& key,
                          std::uint64_t fallback) const;

private:
    const std::string* find(const std::string& section, const std::string& key) const;

    struct Section {
        std::string name;
        std::vector<std::pair<std::string, std::string>> entries;
    };
    std::vector<Section> sections_;
};

// Builders for the typed configs. Every key under the relevant section must
// be recognized; an unknown key throws config_error naming it.
SynthConfig synth_config_from(const ConfigFile& cfg);

// balancing_epochs falls back to 10 for class-incremental data and 5 for
// instance-incremental data when the key is absent.
TrainConfig train_config_from(const ConfigFile& cfg, TaskKind kind);

struct TheoremConfig {
    MixtureSpec spec;
    TheoremTrainSettings train;
    std::size_t n_eval = 10000;
    std::vector<double> sweep_sigmas;  // empty disables the sweep
    std::uint64_t seed = 1;
};

TheoremConfig theorem_config_from(const ConfigFile& cfg);

}  // namespace dymoe
