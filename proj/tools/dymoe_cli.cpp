// Command-line front end: synthesize datasets, run incremental training with
// any of the four methods, reproduce the mixture loss comparison, and fold
// finished runs into one CSV.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dymoe/baselines.hpp"
#include "dymoe/config.hpp"
#include "dymoe/errors.hpp"
#include "dymoe/graph.hpp"
#include "dymoe/report.hpp"
#include "dymoe/theorem.hpp"
#include "dymoe/trainer.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct SeedOverride {
    bool set = false;
    std::uint64_t value = 0;
};

void run_synth(const std::string& config_path, const std::string& out_dir,
               const SeedOverride& seed) {
    auto cfg = dymoe::ConfigFile::parse_file(config_path);
    auto synth = dymoe::synth_config_from(cfg);
    if (seed.set) synth.seed = seed.value;

    auto seq = dymoe::synth_gaussian_sequence(synth);
    fs::create_directories(out_dir);
    dymoe::save_sequence(seq, out_dir + "/nodes.tsv", out_dir + "/edges.tsv");

    json manifest;
    manifest["seed"] = synth.seed;
    manifest["blocks"] = synth.blocks;
    manifest["classes_per_block"] = synth.classes_per_block;
    manifest["nodes_per_block"] = synth.nodes_per_block;
    manifest["feature_dim"] = synth.feature_dim;
    manifest["task"] = synth.task_kind == dymoe::TaskKind::class_incremental
                           ? "class_incremental"
                           : "instance_incremental";
    manifest["nodes"] = seq.nodes.size();
    manifest["edges"] = seq.edges.size();
    std::ofstream out(out_dir + "/manifest.json", std::ios::trunc);
    if (!out) throw dymoe::data_error("cannot open '" + out_dir + "/manifest.json' for writing");
    out << manifest.dump(2) << "\n";
}

void run_method(const std::string& data_dir, const std::string& config_path,
                const std::string& method, const std::string& out_dir, const SeedOverride& seed,
                const std::string& k_flag, const std::string& p_flag,
                const std::string& mode_flag) {
    auto seq = dymoe::load_sequence(data_dir + "/nodes.tsv", data_dir + "/edges.tsv");
    dymoe::ConfigFile cfg = config_path.empty() ? dymoe::ConfigFile::parse_text("")
                                                : dymoe::ConfigFile::parse_file(config_path);
    auto train = dymoe::train_config_from(cfg, seq.task_kind);
    if (seed.set) train.seed = seed.value;
    if (!k_flag.empty()) {
        auto patch = dymoe::ConfigFile::parse_text("[train]\nk = " + k_flag + "\n");
        train.k = patch.get_size("train", "k", train.k);
    }
    if (!p_flag.empty()) {
        auto patch = dymoe::ConfigFile::parse_text("[train]\nmemory_fraction = " + p_flag + "\n");
        train.memory_fraction = patch.get_double("train", "memory_fraction", train.memory_fraction);
    }
    if (!mode_flag.empty()) {
        if (mode_flag == "sparse")
            train.mode = dymoe::GateMode::sparse;
        else if (mode_flag == "dense")
            train.mode = dymoe::GateMode::dense;
        else
            throw dymoe::config_error("--mode must be dense or sparse, got '" + mode_flag + "'");
    }

    fs::create_directories(out_dir);
    dymoe::RunResult res = [&] {
        if (method == "dymoe") return dymoe::run_incremental(seq, train, out_dir);
        if (method == "pretrain") return dymoe::pretrain_run(seq, train, out_dir);
        if (method == "online") return dymoe::online_run(seq, train, out_dir);
        if (method == "retrain") return dymoe::retrain_run(seq, train, out_dir);
        throw dymoe::config_error("--method must be dymoe, pretrain, online, or retrain, got '" +
                                  method + "'");
    }();
    dymoe::write_metrics_json(out_dir + "/metrics.json",
                              dymoe::make_run_report(method, train, res));
}

void run_theorem(const std::string& config_path, const std::string& out_dir,
                 const SeedOverride& seed, const std::string& sweep_flag) {
    dymoe::ConfigFile cfg = config_path.empty() ? dymoe::ConfigFile::parse_text("")
                                                : dymoe::ConfigFile::parse_file(config_path);
    auto theorem = dymoe::theorem_config_from(cfg);
    if (seed.set) theorem.seed = seed.value;
    if (!sweep_flag.empty()) {
        auto patch = dymoe::ConfigFile::parse_text("[theorem]\nsweep = " + sweep_flag + "\n");
        theorem = [&] {
            auto merged = theorem;
            merged.sweep_sigmas = dymoe::theorem_config_from(patch).sweep_sigmas;
            return merged;
        }();
    }

    dymoe::validate_spec(theorem.spec);
    auto experts = dymoe::train_theorem_experts(theorem.spec, theorem.train, theorem.seed);
    auto result = dymoe::compare_losses(theorem.spec, experts, theorem.n_eval, theorem.seed);
    std::vector<dymoe::SweepPoint> sweep;
    if (!theorem.sweep_sigmas.empty())
        sweep = dymoe::theorem_sweep(theorem.spec, theorem.sweep_sigmas, theorem.train,
                                     theorem.n_eval, theorem.seed);

    fs::create_directories(out_dir);
    dymoe::write_theorem_report(out_dir + "/theorem_report.json", theorem.spec, result, sweep);

    std::printf("delta = %.6f  (std error %.6f)  verdict: %s\n", result.delta, result.std_error,
                result.delta > 0.0 ? "holds" : "fails");
    for (const auto& pt : sweep)
        std::printf("sweep sigma=%.6g  ratio=%.6g  delta=%.6f  (std error %.6f)\n", pt.spec.sigma,
                    pt.spec.radius / pt.spec.sigma, pt.result.delta, pt.result.std_error);
}

void run_report(const std::vector<std::string>& run_dirs, const std::string& out_path) {
    std::vector<dymoe::RunReport> rows;
    rows.reserve(run_dirs.size());
    for (const auto& dir : run_dirs)
        rows.push_back(dymoe::read_metrics_json(dir + "/metrics.json"));
    dymoe::write_report_csv(out_path, std::move(rows));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dynamic mixture-of-experts graph learning toolkit"};
    app.require_subcommand(1);

    std::string config_path, data_dir, method, out_path, k_flag, p_flag, mode_flag, sweep_flag;
    std::vector<std::string> run_dirs;
    SeedOverride seed;
    auto add_seed = [&](CLI::App* cmd) {
        cmd->add_option_function<std::uint64_t>(
            "--seed",
            [&](const std::uint64_t& v) {
                seed.set = true;
                seed.value = v;
            },
            "Override the config seed");
    };

    auto* synth = app.add_subcommand("synth", "Generate a synthetic block sequence");
    synth->add_option("--config", config_path, "Config file with a [synth] section")->required();
    synth->add_option("--out", out_path, "Output dataset directory")->required();
    add_seed(synth);

    auto* run = app.add_subcommand("run", "Train one method over a block sequence");
    run->add_option("--data", data_dir, "Dataset directory with nodes.tsv/edges.tsv")->required();
    run->add_option("--config", config_path, "Config file with a [train] section");
    run->add_option("--method", method, "dymoe, pretrain, online, or retrain")->required();
    run->add_option("--out", out_path, "Run output directory")->required();
    run->add_option("--k", k_flag, "Override the active expert count");
    run->add_option("--p", p_flag, "Override the memory fraction");
    run->add_option("--mode", mode_flag, "Override the gate mode (dense|sparse)");
    add_seed(run);

    auto* theorem = app.add_subcommand("theorem", "Compare the two loss combination rules");
    theorem->add_option("--config", config_path, "Config file with a [theorem] section");
    theorem->add_option("--out", out_path, "Report output directory")->required();
    theorem->add_option("--sweep", sweep_flag, "Comma-separated sigma grid");
    add_seed(theorem);

    auto* report = app.add_subcommand("report", "Combine finished runs into one CSV");
    report->add_option("dirs", run_dirs, "Run directories holding metrics.json")->required();
    report->add_option("--out", out_path, "CSV output path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (synth->parsed()) run_synth(config_path, out_path, seed);
        if (run->parsed())
            run_method(data_dir, config_path, method, out_path, seed, k_flag, p_flag, mode_flag);
        if (theorem->parsed()) run_theorem(config_path, out_path, seed, sweep_flag);
        if (report->parsed()) run_report(run_dirs, out_path);
    } catch (const dymoe::config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const dymoe::data_error& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const dymoe::error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "unexpected error: %s\n", e.what());
        return 1;
    }
    return 0;
}
