#include "dymoe/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "dymoe/rng.hpp"

namespace dymoe {

namespace {

DiffValue uniform_param(std::size_t rows, std::size_t cols, double bound, std::mt19937_64& gen) {
    std::uniform_real_distribution<double> u(-bound, bound);
    std::vector<double> v(rows * cols);
    for (auto& x : v) x = u(gen);
    return make_param(rows, cols, std::move(v));
}

}  // namespace

ModelState ModelState::create(std::size_t feature_dim, std::size_t width, std::size_t num_layers,
                              std::size_t k, std::size_t num_classes, std::uint64_t seed) {
    if (feature_dim == 0 || width == 0 || num_layers == 0 || num_classes == 0)
        throw range_error("model dimensions must be positive");
    ModelState m;
    m.feature_dim = feature_dim;
    m.width = width;
    m.num_layers = num_layers;

    auto gen = rng_stream(seed, "model.win");
    m.w_in = uniform_param(width, feature_dim, 1.0 / std::sqrt(static_cast<double>(feature_dim)),
                           gen);
    m.layers.reserve(num_layers);
    for (std::size_t l = 0; l < num_layers; ++l)
        m.layers.push_back(DyMoELayerState::create(
            width, k, stream_key(seed, "model.layer." + std::to_string(l + 1))));

    auto rgen = rng_stream(seed, "model.readout");
    const double bound = 1.0 / std::sqrt(static_cast<double>(width));
    m.readout_w = uniform_param(num_classes, width, bound, rgen);
    m.readout_b = uniform_param(1, num_classes, bound, rgen);
    return m;
}

std::vector<DiffValue> ModelState::all_params() const {
    std::vector<DiffValue> out = {w_in};
    for (const auto& layer : layers) {
        for (const auto& e : layer.experts)
            for (const auto& p : e.params()) out.push_back(p);
        for (const auto& g : layer.gate_vectors) out.push_back(g);
        for (const auto& q : layer.noise_vectors) out.push_back(q);
        for (const auto& p : layer.arrival_vectors) out.push_back(p);
        out.push_back(layer.shared_projection);
    }
    out.push_back(readout_w);
    out.push_back(readout_b);
    return out;
}

std::vector<DiffValue> ModelState::trainable() const {
    if (blocks_seen == 0) throw invariant_error("model has no experts yet");
    std::vector<DiffValue> out;
    if (w_in->requires_grad) out.push_back(w_in);
    for (const auto& layer : layers)
        for (const auto& p : trainable_params(layer)) out.push_back(p);
    out.push_back(readout_w);
    out.push_back(readout_b);
    return out;
}

void grow_model(ModelState& model, const std::vector<std::vector<double>>& gate_inits,
                std::uint64_t seed) {
    if (!gate_inits.empty() && gate_inits.size() != model.num_layers)
        throw shape_error(std::to_string(gate_inits.size()) + " gate inits for " +
                          std::to_string(model.num_layers) + " layers");
    for (std::size_t l = 0; l < model.num_layers; ++l) {
        const auto& init = gate_inits.empty() ? std::vector<double>() : gate_inits[l];
        add_expert(model.layers[l], init,
                   stream_key(seed, "model.expert." + std::to_string(l + 1)));
    }
    model.blocks_seen += 1;
    if (model.blocks_seen >= 2) model.w_in->requires_grad = false;
}

void widen_readout(ModelState& model, std::size_t new_classes, std::uint64_t seed) {
    const std::size_t old = model.num_classes();
    if (new_classes < old)
        throw invariant_error("readout cannot shrink from " + std::to_string(old) + " to " +
                              std::to_string(new_classes) + " classes");
    if (new_classes == old) return;

    auto gen = rng_stream(seed, "model.readout.grow", model.blocks_seen);
    std::uniform_real_distribution<double> u(-1.0 / std::sqrt(static_cast<double>(model.width)),
                                             1.0 / std::sqrt(static_cast<double>(model.width)));
    std::vector<double> w(new_classes * model.width), b(new_classes);
    std::copy(model.readout_w->data.begin(), model.readout_w->data.end(), w.begin());
    std::copy(model.readout_b->data.begin(), model.readout_b->data.end(), b.begin());
    for (std::size_t i = old * model.width; i < w.size(); ++i) w[i] = u(gen);
    for (std::size_t i = old; i < b.size(); ++i) b[i] = u(gen);
    model.readout_w = make_param(new_classes, model.width, std::move(w));
    model.readout_b = make_param(1, new_classes, std::move(b));
}

ModelForward model_forward(Tape& tape, const ModelState& model, const SnapshotView& view,
                           const EgoBatch& batch, const ModelForwardArgs& args) {
    if (model.blocks_seen == 0) throw invariant_error("model has no experts yet");
    if (batch.depth != model.num_layers)
        throw shape_error("batch depth " + std::to_string(batch.depth) + " vs " +
                          std::to_string(model.num_layers) + " model layers");

    const auto& base = batch.level_ids[0];
    std::vector<double> feats(base.size() * model.feature_dim);
    for (std::size_t i = 0; i < base.size(); ++i) {
        const auto& f = view.features(base[i]);
        if (f.size() != model.feature_dim)
            throw shape_error("node " + std::to_string(base[i]) + " has " +
                              std::to_string(f.size()) + " features, model wants " +
                              std::to_string(model.feature_dim));
        std::copy(f.begin(), f.end(), feats.begin() + i * model.feature_dim);
    }
    DiffValue h = tape.matmul_nt(make_const(base.size(), model.feature_dim, std::move(feats)),
                                 model.w_in);

    ModelForward out;
    out.traces.reserve(model.num_layers);
    out.level_inputs.reserve(model.num_layers);
    for (std::size_t l = 1; l <= model.num_layers; ++l) {
        out.level_inputs.push_back(h);
        LayerForwardArgs largs;
        largs.mode = args.mode;
        largs.training = args.training;
        largs.noise_seed = stream_key(args.noise_seed, "noise.layer." + std::to_string(l));
        largs.force = args.force;
        std::vector<std::size_t> in_blocks;
        if (args.force && args.force->force_beta) {
            in_blocks.reserve(batch.level_ids[l - 1].size());
            for (std::size_t id : batch.level_ids[l - 1]) in_blocks.push_back(view.block(id));
            largs.input_blocks = &in_blocks;
        }
        auto fwd = layer_forward(tape, model.layers[l - 1], h, batch.self_idx[l],
                                 batch.neighbor_idx[l], batch.level_ids[l], largs);
        LayerTrace trace;
        trace.raw_logits = fwd.raw_logits;
        trace.betas = fwd.betas;
        trace.out_ids = batch.level_ids[l];
        trace.in_ids = batch.level_ids[l - 1];
        trace.selected = std::move(fwd.selected);
        out.traces.push_back(std::move(trace));
        h = fwd.outputs;
    }

    out.embeddings = h;
    out.logits = tape.add_rowvec(tape.matmul_nt(h, model.readout_w), model.readout_b);
    return out;
}

}  // namespace dymoe
