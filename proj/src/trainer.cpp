#include "dymoe/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "dymoe/checkpoint.hpp"
#include "dymoe/losses.hpp"
#include "dymoe/rng.hpp"

namespace dymoe {

void validate_train_config(const TrainConfig& cfg) {
    if (cfg.lr <= 0.0) throw config_error("learning rate must be positive");
    if (cfg.weight_decay < 0.0) throw config_error("weight decay must be nonnegative");
    if (cfg.epochs == 0) throw config_error("epochs must be positive");
    if (cfg.batch_size == 0) throw config_error("batch size must be positive");
    if (cfg.embedding_dim == 0) throw config_error("embedding dim must be positive");
    if (cfg.num_layers == 0) throw config_error("layer count must be positive");
    if (cfg.gamma < 0.0 || cfg.delta < 0.0) throw config_error("loss weights must be nonnegative");
    if (cfg.memory_fraction <= 0.0 || cfg.memory_fraction > 1.0)
        throw config_error("memory fraction must be in (0, 1]");
    if (cfg.k == 0) throw config_error("k must be positive");
}

namespace {

std::vector<std::size_t> merge_ids(std::vector<std::size_t> a,
                                   const std::vector<std::size_t>& b) {
    a.insert(a.end(), b.begin(), b.end());
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    return a;
}

// Row index of target i's own representation at the input level of layer l
// (1-based), found by walking the self links down from the target level.
std::size_t self_row_at_level(const EgoBatch& batch, std::size_t target, std::size_t l) {
    std::size_t row = target;
    for (std::size_t ll = batch.depth; ll >= l; --ll) row = batch.self_idx[ll][row];
    return row;
}

}  // namespace

std::size_t classes_through(const GraphBlockSequence& seq, std::size_t t) {
    int top = -1;
    for (const auto& node : seq.nodes)
        if (node.block <= t) top = std::max(top, node.label);
    if (top < 0) throw invariant_error("no nodes in blocks 1.." + std::to_string(t));
    return static_cast<std::size_t>(top) + 1;
}

std::vector<std::size_t> split_ids_through(const GraphBlockSequence& seq, std::size_t t,
                                           Split split) {
    std::vector<std::size_t> out;
    for (const auto& node : seq.nodes)
        if (node.block <= t && node.split == split) out.push_back(node.id);
    return out;
}

Trainer::Trainer(const GraphBlockSequence& seq, const TrainConfig& cfg) : seq_(seq), cfg_(cfg) {
    validate_train_config(cfg);
    if (seq.num_blocks == 0) throw data_error("graph sequence has no blocks");
    model_ = ModelState::create(seq.feature_dim, cfg.embedding_dim, cfg.num_layers, cfg.k,
                                classes_through(seq, 1), cfg.seed);
}

std::vector<std::vector<double>> Trainer::gate_init_means(
    const SnapshotView& view, const std::vector<std::size_t>& train_ids, std::size_t t) const {
    const std::size_t n = cfg_.embedding_dim;
    std::vector<std::vector<double>> means(cfg_.num_layers, std::vector<double>(n, 0.0));
    if (train_ids.empty()) return {};

    if (model_.blocks_seen == 0) {
        // No experts exist yet, so deeper representations are undefined; the
        // projected feature mean stands in at every depth.
        Tape tape(false);
        std::vector<double> feats(train_ids.size() * model_.feature_dim);
        for (std::size_t i = 0; i < train_ids.size(); ++i) {
            const auto& f = view.features(train_ids[i]);
            std::copy(f.begin(), f.end(), feats.begin() + i * model_.feature_dim);
        }
        auto h0 = tape.matmul_nt(
            make_const(train_ids.size(), model_.feature_dim, std::move(feats)), model_.w_in);
        std::vector<double> mean(n, 0.0);
        for (std::size_t r = 0; r < h0->rows; ++r)
            for (std::size_t c = 0; c < n; ++c) mean[c] += h0->at(r, c);
        for (auto& v : mean) v /= static_cast<double>(h0->rows);
        for (auto& m : means) m = mean;
        return means;
    }

    constexpr std::size_t kChunk = 256;
    for (std::size_t start = 0; start < train_ids.size(); start += kChunk) {
        const std::size_t stop = std::min(train_ids.size(), start + kChunk);
        std::vector<std::size_t> chunk(train_ids.begin() + start, train_ids.begin() + stop);
        auto batch = build_ego_batch(view, chunk, cfg_.num_layers, cfg_.fanout,
                                     stream_key(cfg_.seed, "gate.init.sample", t));
        Tape tape(false);
        ModelForwardArgs args;
        args.mode = cfg_.mode;
        auto fwd = model_forward(tape, model_, view, batch, args);
        for (std::size_t l = 1; l <= cfg_.num_layers; ++l) {
            const auto& h = fwd.level_inputs[l - 1];
            for (std::size_t i = 0; i < chunk.size(); ++i) {
                const std::size_t row = self_row_at_level(batch, i, l);
                for (std::size_t c = 0; c < n; ++c) means[l - 1][c] += h->at(row, c);
            }
        }
    }
    for (auto& m : means)
        for (auto& v : m) v /= static_cast<double>(train_ids.size());
    return means;
}

TrainLogRow Trainer::run_epoch(const SnapshotView& view, const std::vector<std::size_t>& ids,
                               Adam& opt, std::size_t t, std::size_t stage, std::size_t epoch) {
    const std::uint64_t stamp = stage * 1000000ULL + epoch;
    auto order = ids;
    auto gen = rng_stream(cfg_.seed, "train.shuffle", t, stamp);
    std::shuffle(order.begin(), order.end(), gen);

    const auto sample_seed = stream_key(cfg_.seed, "train.sample", t, stamp);
    const auto noise_seed = stream_key(cfg_.seed, "train.noise", t, stamp);
    auto trainable = model_.trainable();

    double cls_sum = 0.0, total_sum = 0.0, bl_sum = 0.0, gbl_sum = 0.0;
    std::size_t n_nodes = 0, n_bl = 0, n_gbl = 0;

    for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
        const std::size_t stop = std::min(order.size(), start + cfg_.batch_size);
        std::vector<std::size_t> targets(order.begin() + start, order.begin() + stop);
        auto batch = build_ego_batch(view, targets, cfg_.num_layers, cfg_.fanout, sample_seed);

        Tape tape;
        ModelForwardArgs args;
        args.mode = cfg_.mode;
        args.training = true;
        args.noise_seed = noise_seed;
        auto fwd = model_forward(tape, model_, view, batch, args);

        std::vector<int> labels;
        labels.reserve(targets.size());
        for (std::size_t id : targets) labels.push_back(view.label(id));
        auto cls = tape.cross_entropy(fwd.logits, labels);

        std::vector<WeightedTerm> bl, gbl;
        for (const auto& trace : fwd.traces) {
            std::vector<std::size_t> out_blocks, in_blocks;
            out_blocks.reserve(trace.out_ids.size());
            in_blocks.reserve(trace.in_ids.size());
            for (std::size_t id : trace.out_ids) out_blocks.push_back(view.block(id));
            for (std::size_t id : trace.in_ids) in_blocks.push_back(view.block(id));
            bl.push_back(WeightedTerm{block_guided_loss(tape, trace.raw_logits, out_blocks),
                                      trace.out_ids.size()});
            gbl.push_back(WeightedTerm{graph_block_guided_loss(tape, trace.betas, in_blocks),
                                       trace.in_ids.size()});
        }
        LossConfig lcfg;
        lcfg.gamma = cfg_.gamma;
        lcfg.delta = cfg_.delta;
        auto total = total_loss(tape, cls, bl, gbl, lcfg);

        zero_all(trainable);
        tape.backward(total);
        opt.step(trainable);

        const auto batch_n = targets.size();
        cls_sum += cls->scalar() * static_cast<double>(batch_n);
        total_sum += total->scalar() * static_cast<double>(batch_n);
        n_nodes += batch_n;
        for (const auto& term : bl) {
            bl_sum += term.value->scalar() * static_cast<double>(term.count);
            n_bl += term.count;
        }
        for (const auto& term : gbl) {
            gbl_sum += term.value->scalar() * static_cast<double>(term.count);
            n_gbl += term.count;
        }
    }

    TrainLogRow row;
    row.block = t;
    row.stage = stage;
    row.epoch = epoch;
    row.cls = n_nodes ? cls_sum / static_cast<double>(n_nodes) : 0.0;
    row.bl = n_bl ? bl_sum / static_cast<double>(n_bl) : 0.0;
    row.gbl = n_gbl ? gbl_sum / static_cast<double>(n_gbl) : 0.0;
    row.total = n_nodes ? total_sum / static_cast<double>(n_nodes) : 0.0;
    return row;
}

BlockStats Trainer::train_block(std::size_t t) {
    if (t != blocks_done_ + 1)
        throw invariant_error("blocks must be trained in order: expected " +
                              std::to_string(blocks_done_ + 1) + ", got " + std::to_string(t));
    if (t > seq_.num_blocks)
        throw range_error("block " + std::to_string(t) + " of " +
                          std::to_string(seq_.num_blocks));

    const auto start_time = std::chrono::steady_clock::now();
    auto view = snapshot(seq_, t);

    std::vector<std::size_t> fresh;
    for (std::size_t id : seq_.nodes_in_block(t))
        if (seq_.nodes[id].split == Split::train) fresh.push_back(id);
    if (fresh.empty()) throw data_error("block " + std::to_string(t) + " has no training nodes");

    auto inits = gate_init_means(view, fresh, t);
    grow_model(model_, inits, stream_key(cfg_.seed, "model.grow", t));
    widen_readout(model_, classes_through(seq_, t), cfg_.seed);

    AdamConfig acfg;
    acfg.lr = cfg_.lr;
    acfg.weight_decay = cfg_.weight_decay;
    Adam opt(acfg);

    BlockStats stats;
    auto joint = merge_ids(bank_.union_through(t - 1), fresh);
    for (std::size_t epoch = 1; epoch <= cfg_.epochs; ++epoch)
        stats.log.push_back(run_epoch(view, joint, opt, t, 1, epoch));

    bank_.add_block(select_memory(model_, view, fresh, cfg_.memory_fraction, cfg_.fanout,
                                  stream_key(cfg_.seed, "memory.embed", t)));

    auto replay = bank_.union_through(t);
    for (std::size_t epoch = 1; epoch <= cfg_.balancing_epochs; ++epoch)
        stats.log.push_back(run_epoch(view, replay, opt, t, 2, epoch));

    blocks_done_ = t;
    stats.train_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
    return stats;
}

std::size_t eval_threads() {
    const char* env = std::getenv("DYMOE_THREADS");
    if (!env) return 1;
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end == env || *end != '\0' || v == 0) return 1;
    return static_cast<std::size_t>(v);
}

EvalResult evaluate(const ModelState& model, const SnapshotView& view,
                    const std::vector<std::size_t>& ids, GateMode mode, std::size_t fanout,
                    std::uint64_t seed, const GateOverride* force) {
    EvalResult res;
    res.total = ids.size();
    if (ids.empty()) return res;

    constexpr std::size_t kChunk = 256;
    const std::size_t chunks = (ids.size() + kChunk - 1) / kChunk;

    auto score_chunk = [&](std::size_t ci) {
        const std::size_t start = ci * kChunk;
        const std::size_t stop = std::min(ids.size(), start + kChunk);
        std::vector<std::size_t> targets(ids.begin() + start, ids.begin() + stop);
        auto batch = build_ego_batch(view, targets, model.num_layers, fanout, seed);
        Tape tape(false);
        ModelForwardArgs args;
        args.mode = mode;
        args.force = force;
        auto fwd = model_forward(tape, model, view, batch, args);
        std::size_t correct = 0;
        for (std::size_t i = 0; i < targets.size(); ++i) {
            std::size_t best = 0;
            for (std::size_t c = 1; c < fwd.logits->cols; ++c)
                if (fwd.logits->at(i, c) > fwd.logits->at(i, best)) best = c;
            if (static_cast<int>(best) == view.label(targets[i])) ++correct;
        }
        return correct;
    };

    const std::size_t workers = std::min(eval_threads(), chunks);
    if (workers <= 1) {
        for (std::size_t ci = 0; ci < chunks; ++ci) res.correct += score_chunk(ci);
        return res;
    }

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> correct{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t ci = next.fetch_add(1); ci < chunks; ci = next.fetch_add(1))
                correct.fetch_add(score_chunk(ci));
        });
    for (auto& th : pool) th.join();
    res.correct = correct.load();
    return res;
}

RunResult run_incremental(const GraphBlockSequence& seq, const TrainConfig& cfg,
                          const std::string& out_dir) {
    Trainer trainer(seq, cfg);
    RunResult res{MetricsMatrix(seq.num_blocks), {}, {}};
    if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

    for (std::size_t t = 1; t <= seq.num_blocks; ++t) {
        access_audit().arm(t);
        auto stats = trainer.train_block(t);
        res.train_seconds.push_back(stats.train_seconds);
        res.log.insert(res.log.end(), stats.log.begin(), stats.log.end());

        auto view = snapshot(seq, t);
        for (std::size_t i = 1; i <= t; ++i) {
            auto test_ids = split_ids_through(seq, i, Split::test);
            auto ev = evaluate(trainer.model(), view, test_ids, cfg.mode, cfg.fanout,
                               stream_key(cfg.seed, "eval.sample", t, i));
            res.matrix.record(i, t, ev.correct, ev.total);
        }
        access_audit().disarm();

        if (!out_dir.empty())
            save_model(trainer.model(),
                       out_dir + "/model_block_" + std::to_string(t) + ".ckpt");
    }

    if (!out_dir.empty()) {
        save_memory_manifest(trainer.bank(), out_dir + "/memory.tsv");
        write_train_log(out_dir + "/train_log.csv", res.log);
    }
    return res;
}

void write_train_log(const std::string& path, const std::vector<TrainLogRow>& log) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw data_error(path + ": cannot open for writing");
    out << "block,stage,epoch,loss_cls,loss_bl,loss_gbl,loss_total\n";
    char buf[256];
    for (const auto& row : log) {
        std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%.17g,%.17g,%.17g,%.17g\n", row.block,
                      row.stage, row.epoch, row.cls, row.bl, row.gbl, row.total);
        out << buf;
    }
}

}  // namespace dymoe
