#include "dymoe/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>

#include "dymoe/rng.hpp"

namespace dymoe {

namespace {

// Every baseline forward routes through the lone expert with the arrival
// gates held fully open; the trained model and the scored model see the
// exact same computation.
constexpr GateOverride kBypass{0, false, true};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

ModelState single_expert_model(std::size_t feature_dim, const TrainConfig& cfg,
                               std::size_t num_classes) {
    auto model = ModelState::create(feature_dim, cfg.embedding_dim, cfg.num_layers, cfg.k,
                                    num_classes, cfg.seed);
    grow_model(model, {}, stream_key(cfg.seed, "model.grow", 1));
    return model;
}

std::vector<std::size_t> block_train_ids(const GraphBlockSequence& seq, std::size_t t) {
    std::vector<std::size_t> out;
    for (std::size_t id : seq.nodes_in_block(t))
        if (seq.nodes[id].split == Split::train) out.push_back(id);
    if (out.empty()) throw data_error("block " + std::to_string(t) + " has no training nodes");
    return out;
}

// One plain cross-entropy epoch over ids; the gating losses have nothing to
// supervise here. Batch streams match the incremental trainer's stage-1
// stamps so a one-block run reproduces it exactly.
TrainLogRow ce_epoch(ModelState& model, const SnapshotView& view,
                     const std::vector<std::size_t>& ids, const TrainConfig& cfg, Adam& opt,
                     std::size_t t, std::size_t epoch) {
    const std::uint64_t stamp = 1000000ULL + epoch;
    auto order = ids;
    auto gen = rng_stream(cfg.seed, "train.shuffle", t, stamp);
    std::shuffle(order.begin(), order.end(), gen);

    const auto sample_seed = stream_key(cfg.seed, "train.sample", t, stamp);
    auto trainable = model.trainable();

    double cls_sum = 0.0;
    std::size_t n_nodes = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
        const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
        std::vector<std::size_t> targets(order.begin() + start, order.begin() + stop);
        auto batch = build_ego_batch(view, targets, cfg.num_layers, cfg.fanout, sample_seed);

        Tape tape;
        ModelForwardArgs args;
        args.mode = cfg.mode;
        args.training = true;
        args.force = &kBypass;
        auto fwd = model_forward(tape, model, view, batch, args);

        std::vector<int> labels;
        labels.reserve(targets.size());
        for (std::size_t id : targets) labels.push_back(view.label(id));
        auto cls = tape.cross_entropy(fwd.logits, labels);

        zero_all(trainable);
        tape.backward(cls);
        opt.step(trainable);

        cls_sum += cls->scalar() * static_cast<double>(targets.size());
        n_nodes += targets.size();
    }

    TrainLogRow row;
    row.block = t;
    row.stage = 1;
    row.epoch = epoch;
    row.cls = n_nodes ? cls_sum / static_cast<double>(n_nodes) : 0.0;
    row.total = row.cls;
    return row;
}

Adam fresh_optimizer(const TrainConfig& cfg) {
    AdamConfig acfg;
    acfg.lr = cfg.lr;
    acfg.weight_decay = cfg.weight_decay;
    return Adam(acfg);
}

void start_run(const GraphBlockSequence& seq, const TrainConfig& cfg) {
    validate_train_config(cfg);
    if (seq.num_blocks == 0) throw data_error("graph sequence has no blocks");
}

void finish_run(const RunResult& res, const std::string& out_dir) {
    if (out_dir.empty()) return;
    std::filesystem::create_directories(out_dir);
    write_train_log(out_dir + "/train_log.csv", res.log);
}

}  // namespace

RunResult pretrain_run(const GraphBlockSequence& seq, const TrainConfig& cfg,
                       const std::string& out_dir) {
    start_run(seq, cfg);
    RunResult res{MetricsMatrix(seq.num_blocks), {}, {}};

    auto model = single_expert_model(seq.feature_dim, cfg, classes_through(seq, 1));
    std::vector<EvalResult> first_score(seq.num_blocks + 1);

    for (std::size_t t = 1; t <= seq.num_blocks; ++t) {
        access_audit().arm(t);
        const auto start_time = std::chrono::steady_clock::now();
        auto view = snapshot(seq, t);
        if (t == 1) {
            auto ids = block_train_ids(seq, 1);
            auto opt = fresh_optimizer(cfg);
            for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch)
                res.log.push_back(ce_epoch(model, view, ids, cfg, opt, 1, epoch));
        }
        res.train_seconds.push_back(seconds_since(start_time));

        auto ev = evaluate(model, view, split_ids_through(seq, t, Split::test), cfg.mode,
                           cfg.fanout, stream_key(cfg.seed, "eval.sample", t, t), &kBypass);
        first_score[t] = ev;
        res.matrix.record(t, t, ev.correct, ev.total);
        // The model never changes after block 1, so each earlier test set
        // keeps the exact counts from its first appearance.
        for (std::size_t i = 1; i < t; ++i)
            res.matrix.record(i, t, first_score[i].correct, first_score[i].total);
        access_audit().disarm();
    }

    finish_run(res, out_dir);
    return res;
}

RunResult online_run(const GraphBlockSequence& seq, const TrainConfig& cfg,
                     const std::string& out_dir) {
    start_run(seq, cfg);
    RunResult res{MetricsMatrix(seq.num_blocks), {}, {}};

    auto model = single_expert_model(seq.feature_dim, cfg, classes_through(seq, 1));
    for (std::size_t t = 1; t <= seq.num_blocks; ++t) {
        access_audit().arm(t);
        const auto start_time = std::chrono::steady_clock::now();
        auto view = snapshot(seq, t);
        widen_readout(model, classes_through(seq, t), stream_key(cfg.seed, "baseline.widen", t));

        auto ids = block_train_ids(seq, t);
        auto opt = fresh_optimizer(cfg);
        for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch)
            res.log.push_back(ce_epoch(model, view, ids, cfg, opt, t, epoch));
        res.train_seconds.push_back(seconds_since(start_time));

        for (std::size_t i = 1; i <= t; ++i) {
            auto ev = evaluate(model, view, split_ids_through(seq, i, Split::test), cfg.mode,
                               cfg.fanout, stream_key(cfg.seed, "eval.sample", t, i), &kBypass);
            res.matrix.record(i, t, ev.correct, ev.total);
        }
        access_audit().disarm();
    }

    finish_run(res, out_dir);
    return res;
}

RunResult retrain_run(const GraphBlockSequence& seq, const TrainConfig& cfg,
                      const std::string& out_dir) {
    start_run(seq, cfg);
    RunResult res{MetricsMatrix(seq.num_blocks), {}, {}};

    for (std::size_t t = 1; t <= seq.num_blocks; ++t) {
        access_audit().arm(t);
        const auto start_time = std::chrono::steady_clock::now();
        auto view = snapshot(seq, t);
        auto model = single_expert_model(seq.feature_dim, cfg, classes_through(seq, t));

        auto ids = split_ids_through(seq, t, Split::train);
        auto opt = fresh_optimizer(cfg);
        for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch)
            res.log.push_back(ce_epoch(model, view, ids, cfg, opt, t, epoch));
        res.train_seconds.push_back(seconds_since(start_time));

        for (std::size_t i = 1; i <= t; ++i) {
            auto ev = evaluate(model, view, split_ids_through(seq, i, Split::test), cfg.mode,
                               cfg.fanout, stream_key(cfg.seed, "eval.sample", t, i), &kBypass);
            res.matrix.record(i, t, ev.correct, ev.total);
        }
        access_audit().disarm();
    }

    finish_run(res, out_dir);
    return res;
}

std::vector<double> pi_combine(const std::vector<double>& f1, const std::vector<double>& f2) {
    if (f1.size() != f2.size())
        throw shape_error("logit lengths disagree: " + std::to_string(f1.size()) + " vs " +
                          std::to_string(f2.size()));
    if (f1.empty()) throw shape_error("logit vectors are empty");
    std::vector<double> out(f1.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f1[i] + f2[i];
    const double top = *std::max_element(out.begin(), out.end());
    double norm = 0.0;
    for (double v : out) norm += std::exp(v - top);
    for (double& v : out) v = std::exp(v - top) / norm;
    return out;
}

}  // namespace dymoe
