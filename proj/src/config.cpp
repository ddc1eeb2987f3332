#include "dymoe/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "dymoe/errors.hpp"

namespace dymoe {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& section, const std::string& key, const std::string& raw) {
    T value{};
    const char* begin = raw.data();
    const char* end = begin + raw.size();
    auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc{} || res.ptr != end)
        throw config_error("config key '" + section + "." + key + "' has a malformed value '" +
                           raw + "'");
    return value;
}

// Negative counts should name the key rather than wrap around.
std::size_t parse_count(const std::string& section, const std::string& key,
                        const std::string& raw) {
    if (!raw.empty() && raw[0] == '-')
        throw config_error("config key '" + section + "." + key + "' must be nonnegative, got '" +
                           raw + "'");
    return parse_number<std::size_t>(section, key, raw);
}

void reject_unknown(const ConfigFile& cfg, const std::string& section,
                    std::initializer_list<const char*> known) {
    for (const auto& key : cfg.keys(section)) {
        bool ok = false;
        for (const char* k : known)
            if (key == k) {
                ok = true;
                break;
            }
        if (!ok) throw config_error("unknown config key '" + key + "' in section [" + section + "]");
    }
}

std::vector<double> parse_double_list(const std::string& section, const std::string& key,
                                      const std::string& raw) {
    std::vector<double> out;
    std::stringstream ss(raw);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty())
            throw config_error("config key '" + section + "." + key + "' has an empty list entry");
        out.push_back(parse_number<double>(section, key, item));
    }
    return out;
}

}  // namespace

ConfigFile ConfigFile::parse_text(const std::string& text) {
    ConfigFile cfg;
    cfg.sections_.push_back({"", {}});
    std::size_t current = 0;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        if (stripped.front() == '[') {
            if (stripped.back() != ']' || stripped.size() < 3)
                throw config_error("malformed section header on line " + std::to_string(lineno) +
                                   ": '" + stripped + "'");
            const std::string name = trim(stripped.substr(1, stripped.size() - 2));
            current = cfg.sections_.size();
            for (std::size_t i = 0; i < cfg.sections_.size(); ++i)
                if (cfg.sections_[i].name == name) current = i;
            if (current == cfg.sections_.size()) cfg.sections_.push_back({name, {}});
            continue;
        }
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw config_error("expected 'key = value' on line " + std::to_string(lineno) + ": '" +
                               stripped + "'");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty())
            throw config_error("empty key on line " + std::to_string(lineno));
        auto& entries = cfg.sections_[current].entries;
        bool replaced = false;
        for (auto& kv : entries)
            if (kv.first == key) {
                kv.second = value;
                replaced = true;
                break;
            }
        if (!replaced) entries.emplace_back(key, value);
    }
    return cfg;
}

ConfigFile ConfigFile::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str());
}

const std::string* ConfigFile::find(const std::string& section, const std::string& key) const {
    for (const auto& sec : sections_) {
        if (sec.name != section) continue;
        for (const auto& kv : sec.entries)
            if (kv.first == key) return &kv.second;
    }
    return nullptr;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
    return find(section, key) != nullptr;
}

std::vector<std::string> ConfigFile::keys(const std::string& section) const {
    std::vector<std::string> out;
    for (const auto& sec : sections_) {
        if (sec.name != section) continue;
        for (const auto& kv : sec.entries) out.push_back(kv.first);
    }
    return out;
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key,
                                   const std::string& fallback) const {
    const std::string* v = find(section, key);
    return v ? *v : fallback;
}

double ConfigFile::get_double(const std::string& section, const std::string& key,
                              double fallback) const {
    const std::string* v = find(section, key);
    return v ? parse_number<double>(section, key, *v) : fallback;
}

std::size_t ConfigFile::get_size(const std::string& section, const std::string& key,
                                 std::size_t fallback) const {
    const std::string* v = find(section, key);
    return v ? parse_count(section, key, *v) : fallback;
}

std::uint64_t ConfigFile::get_u64(const std::string& section, const std::string& key,
                                  std::uint64_t fallback) const {
    const std::string* v = find(section, key);
    return v ? parse_number<std::uint64_t>(section, key, *v) : fallback;
}

SynthConfig synth_config_from(const ConfigFile& cfg) {
    reject_unknown(cfg, "synth",
                   {"blocks", "classes_per_block", "nodes_per_block", "feature_dim", "mean_scale",
                    "sigma", "p_intra", "p_inter", "train_frac", "valid_frac", "task", "seed"});
    SynthConfig out;
    out.blocks = cfg.get_size("synth", "blocks", out.blocks);
    out.classes_per_block = cfg.get_size("synth", "classes_per_block", out.classes_per_block);
    out.nodes_per_block = cfg.get_size("synth", "nodes_per_block", out.nodes_per_block);
    out.feature_dim = cfg.get_size("synth", "feature_dim", out.feature_dim);
    out.mean_scale = cfg.get_double("synth", "mean_scale", out.mean_scale);
    out.sigma = cfg.get_double("synth", "sigma", out.sigma);
    out.p_intra = cfg.get_double("synth", "p_intra", out.p_intra);
    out.p_inter = cfg.get_double("synth", "p_inter", out.p_inter);
    out.train_frac = cfg.get_double("synth", "train_frac", out.train_frac);
    out.valid_frac = cfg.get_double("synth", "valid_frac", out.valid_frac);
    const std::string task = cfg.get_string("synth", "task", "class_incremental");
    if (task == "class_incremental")
        out.task_kind = TaskKind::class_incremental;
    else if (task == "instance_incremental")
        out.task_kind = TaskKind::instance_incremental;
    else
        throw config_error("config key 'synth.task' must be class_incremental or "
                           "instance_incremental, got '" +
                           task + "'");
    out.seed = cfg.get_u64("synth", "seed", out.seed);
    return out;
}

TrainConfig train_config_from(const ConfigFile& cfg, TaskKind kind) {
    reject_unknown(cfg, "train",
                   {"learning_rate", "weight_decay", "epochs", "balancing_epochs", "batch_size",
                    "embedding_dim", "layers", "fanout", "gamma", "delta", "memory_fraction", "k",
                    "mode", "seed"});
    TrainConfig out;
    out.lr = cfg.get_double("train", "learning_rate", out.lr);
    out.weight_decay = cfg.get_double("train", "weight_decay", out.weight_decay);
    out.epochs = cfg.get_size("train", "epochs", out.epochs);
    const std::size_t default_balancing = kind == TaskKind::class_incremental ? 10 : 5;
    out.balancing_epochs = cfg.get_size("train", "balancing_epochs", default_balancing);
    out.batch_size = cfg.get_size("train", "batch_size", out.batch_size);
    out.embedding_dim = cfg.get_size("train", "embedding_dim", out.embedding_dim);
    out.num_layers = cfg.get_size("train", "layers", out.num_layers);
    out.fanout = cfg.get_size("train", "fanout", out.fanout);
    out.gamma = cfg.get_double("train", "gamma", out.gamma);
    out.delta = cfg.get_double("train", "delta", out.delta);
    out.memory_fraction = cfg.get_double("train", "memory_fraction", out.memory_fraction);
    out.k = cfg.get_size("train", "k", out.k);
    const std::string mode = cfg.get_string("train", "mode", "sparse");
    if (mode == "sparse")
        out.mode = GateMode::sparse;
    else if (mode == "dense")
        out.mode = GateMode::dense;
    else
        throw config_error("config key 'train.mode' must be dense or sparse, got '" + mode + "'");
    out.seed = cfg.get_u64("train", "seed", out.seed);
    return out;
}

TheoremConfig theorem_config_from(const ConfigFile& cfg) {
    reject_unknown(cfg, "theorem",
                   {"dims", "separation", "sigma", "radius", "n_eval", "samples_per_expert",
                    "epochs", "lr", "hidden", "batch_size", "sweep", "seed"});
    TheoremConfig out;
    out.spec.dims = cfg.get_size("theorem", "dims", out.spec.dims);
    out.spec.separation = cfg.get_double("theorem", "separation", out.spec.separation);
    out.spec.sigma = cfg.get_double("theorem", "sigma", out.spec.sigma);
    out.spec.radius = cfg.get_double("theorem", "radius", out.spec.radius);
    out.n_eval = cfg.get_size("theorem", "n_eval", out.n_eval);
    out.train.samples_per_expert =
        cfg.get_size("theorem", "samples_per_expert", out.train.samples_per_expert);
    out.train.epochs = cfg.get_size("theorem", "epochs", out.train.epochs);
    out.train.lr = cfg.get_double("theorem", "lr", out.train.lr);
    out.train.hidden = cfg.get_size("theorem", "hidden", out.train.hidden);
    out.train.batch_size = cfg.get_size("theorem", "batch_size", out.train.batch_size);
    out.seed = cfg.get_u64("theorem", "seed", out.seed);
    if (cfg.has("theorem", "sweep"))
        out.sweep_sigmas =
            parse_double_list("theorem", "sweep", cfg.get_string("theorem", "sweep", ""));
    return out;
}

}  // namespace dymoe
