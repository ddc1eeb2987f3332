#include "dymoe/moe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "dymoe/rng.hpp"

namespace dymoe {

namespace {

void check_width(std::size_t got, std::size_t want, const char* what) {
    if (got != want)
        throw shape_error(std::string(what) + " width " + std::to_string(got) +
                          " vs layer width " + std::to_string(want));
}

DiffValue stack_rows(Tape& tape, const std::vector<DiffValue>& rows) {
    return tape.concat_rows(rows);
}

// Shared no-grad evaluation used by the per-node gate helpers so they agree
// bit for bit with the batched path.
struct GateEval {
    std::vector<double> raw;     // similarities
    std::vector<double> logits;  // possibly noised
};

GateEval eval_logits(const std::vector<double>& x, const DyMoELayerState& layer, bool noise,
                     std::uint64_t rng_seed) {
    check_width(x.size(), layer.width, "gate input");
    if (layer.expert_count() == 0) throw invariant_error("gating over zero experts");
    Tape t(false);
    auto xv = make_const(1, layer.width, x);
    auto s = t.matmul_nt(xv, stack_rows(t, layer.gate_vectors));
    GateEval out;
    out.raw = s->data;
    out.logits = s->data;
    if (noise) {
        auto mag = t.softplus(t.matmul_nt(xv, stack_rows(t, layer.noise_vectors)));
        auto gen = rng_stream(rng_seed, "gate.noise");
        std::normal_distribution<double> z(0.0, 1.0);
        for (std::size_t i = 0; i < out.logits.size(); ++i) out.logits[i] += z(gen) * mag->data[i];
    }
    return out;
}

GateDecision finish_decision(const GateEval& ev, const std::vector<std::size_t>& selected) {
    const std::size_t t = ev.raw.size();
    GateDecision d;
    d.raw_logits = ev.raw;
    d.selected = selected;
    std::vector<std::uint8_t> mask(t, 0);
    for (std::size_t i : selected) mask[i] = 1;
    Tape tp(false);
    auto a = tp.masked_row_softmax(make_const(1, t, ev.logits), mask);
    d.alphas = a->data;
    return d;
}

}  // namespace

DyMoELayerState DyMoELayerState::create(std::size_t width, std::size_t k, std::uint64_t seed) {
    if (width == 0) throw range_error("layer width must be positive");
    if (k == 0) throw range_error("active-expert budget k must be positive");
    DyMoELayerState layer;
    layer.width = width;
    layer.k = k;
    auto gen = rng_stream(seed, "layer.proj");
    std::uniform_real_distribution<double> u(-1.0 / std::sqrt(static_cast<double>(width)),
                                             1.0 / std::sqrt(static_cast<double>(width)));
    std::vector<double> w(width * width);
    for (auto& v : w) v = u(gen);
    layer.shared_projection = make_param(width, width, std::move(w));
    return layer;
}

double similarity(const std::vector<double>& x, const std::vector<double>& g) {
    if (x.size() != g.size())
        throw shape_error("similarity widths " + std::to_string(x.size()) + " vs " +
                          std::to_string(g.size()));
    return std::inner_product(x.begin(), x.end(), g.begin(), 0.0);
}

double similarity_gaussian(const std::vector<double>& x, const std::vector<double>& g,
                           double sigma) {
    if (x.size() != g.size())
        throw shape_error("similarity widths " + std::to_string(x.size()) + " vs " +
                          std::to_string(g.size()));
    double d2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) d2 += (x[i] - g[i]) * (x[i] - g[i]);
    return -d2 / (2.0 * sigma * sigma);
}

std::vector<std::size_t> top_k_indices(const double* h, std::size_t t, std::size_t k) {
    std::vector<std::size_t> idx(t);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (h[a] != h[b]) return h[a] > h[b];
        return a < b;
    });
    idx.resize(std::min(k, t));
    std::sort(idx.begin(), idx.end());
    return idx;
}

GateDecision gate_dense(const std::vector<double>& x, const DyMoELayerState& layer) {
    auto ev = eval_logits(x, layer, false, 0);
    std::vector<std::size_t> all(layer.expert_count());
    std::iota(all.begin(), all.end(), 0);
    return finish_decision(ev, all);
}

GateDecision gate_sparse(const std::vector<double>& x, const DyMoELayerState& layer, bool training,
                         std::uint64_t rng_seed) {
    auto ev = eval_logits(x, layer, training, rng_seed);
    return finish_decision(
        ev, top_k_indices(ev.logits.data(), layer.expert_count(), layer.effective_k()));
}

double arrival_gate(const std::vector<double>& h_u, std::size_t j, const DyMoELayerState& layer) {
    if (j < 1 || j > layer.expert_count())
        throw range_error("expert index " + std::to_string(j) + " outside [1, " +
                          std::to_string(layer.expert_count()) + "]");
    check_width(h_u.size(), layer.width, "arrival input");
    Tape t(false);
    auto u = make_const(1, layer.width, h_u);
    auto proj = t.matmul_nt(u, layer.shared_projection);
    auto logit = t.matmul_nt(proj, layer.arrival_vectors[j - 1]);
    return t.clamp(t.sigmoid(logit), Tape::kProbEps, 1.0 - Tape::kProbEps)->scalar();
}

void add_expert(DyMoELayerState& layer, const std::vector<double>& init_gate,
                std::uint64_t seed) {
    const std::size_t n = layer.width;
    if (!init_gate.empty()) check_width(init_gate.size(), n, "gate init");
    for (auto& e : layer.experts) e.set_trainable(false);

    layer.experts.push_back(ExpertParams::init(n, seed));

    std::vector<double> gate = init_gate;
    auto gen = rng_stream(seed, "gate.aux");
    if (gate.empty()) {
        std::uniform_real_distribution<double> u(-1.0 / std::sqrt(static_cast<double>(n)),
                                                 1.0 / std::sqrt(static_cast<double>(n)));
        gate.resize(n);
        for (auto& v : gate) v = u(gen);
    }
    layer.gate_vectors.push_back(make_param(1, n, std::move(gate)));

    std::uniform_real_distribution<double> small(-0.1 / std::sqrt(static_cast<double>(n)),
                                                 0.1 / std::sqrt(static_cast<double>(n)));
    std::vector<double> q(n), p(n);
    for (auto& v : q) v = small(gen);
    for (auto& v : p) v = small(gen);
    layer.noise_vectors.push_back(make_param(1, n, std::move(q)));
    layer.arrival_vectors.push_back(make_param(1, n, std::move(p)));

    layer.frozen_below = layer.expert_count() - 1;
}

std::vector<DiffValue> trainable_params(const DyMoELayerState& layer) {
    if (layer.expert_count() == 0) throw invariant_error("layer has no experts");
    std::vector<DiffValue> out = layer.experts.back().params();
    for (const auto& g : layer.gate_vectors) out.push_back(g);
    for (const auto& q : layer.noise_vectors) out.push_back(q);
    for (const auto& p : layer.arrival_vectors) out.push_back(p);
    out.push_back(layer.shared_projection);
    return out;
}

LayerForward layer_forward(Tape& tape, const DyMoELayerState& layer, const DiffValue& h_prev,
                           const std::vector<std::size_t>& self_idx,
                           const std::vector<std::vector<std::size_t>>& neighbor_idx,
                           const std::vector<std::size_t>& node_ids,
                           const LayerForwardArgs& args) {
    const std::size_t n = layer.width;
    const std::size_t t = layer.expert_count();
    const std::size_t rows = self_idx.size();
    if (t == 0) throw invariant_error("layer has no experts");
    check_width(h_prev->cols, n, "input");
    if (neighbor_idx.size() != rows || node_ids.size() != rows)
        throw shape_error("self/neighbor/id lists disagree: " + std::to_string(rows) + "/" +
                          std::to_string(neighbor_idx.size()) + "/" +
                          std::to_string(node_ids.size()));
    if (args.force && args.force->expert >= t)
        throw range_error("forced expert " + std::to_string(args.force->expert) +
                          " outside [0, " + std::to_string(t) + ")");

    LayerForward out;
    auto hx = tape.gather_rows(h_prev, self_idx);
    out.raw_logits = tape.matmul_nt(hx, stack_rows(tape, layer.gate_vectors));

    // Routing: pick logits, then per-row top-k mask (or forced one-hot).
    DiffValue route_logits = out.raw_logits;
    if (!args.force && args.mode == GateMode::sparse && args.training) {
        auto mag = tape.softplus(tape.matmul_nt(hx, stack_rows(tape, layer.noise_vectors)));
        std::vector<double> nu(rows * t);
        for (std::size_t i = 0; i < rows; ++i) {
            auto gen = rng_stream(args.noise_seed, "gate.noise", node_ids[i]);
            std::normal_distribution<double> z(0.0, 1.0);
            for (std::size_t j = 0; j < t; ++j) nu[i * t + j] = z(gen);
        }
        route_logits = tape.add(out.raw_logits, tape.mul_const(mag, nu));
    }

    out.selected.resize(rows);
    if (args.force) {
        std::vector<double> one_hot(rows * t, 0.0);
        for (std::size_t i = 0; i < rows; ++i) {
            out.selected[i] = {args.force->expert};
            one_hot[i * t + args.force->expert] = 1.0;
        }
        out.alphas = make_const(rows, t, std::move(one_hot));
    } else if (args.mode == GateMode::dense) {
        std::vector<std::size_t> all(t);
        std::iota(all.begin(), all.end(), 0);
        for (std::size_t i = 0; i < rows; ++i) out.selected[i] = all;
        out.alphas = tape.row_softmax(route_logits);
    } else {
        const std::size_t kk = layer.effective_k();
        std::vector<std::uint8_t> mask(rows * t, 0);
        for (std::size_t i = 0; i < rows; ++i) {
            out.selected[i] = top_k_indices(route_logits->data.data() + i * t, t, kk);
            for (std::size_t j : out.selected[i]) mask[i * t + j] = 1;
        }
        out.alphas = tape.masked_row_softmax(route_logits, mask);
    }

    // Arrival gates for every input-level row against every expert.
    if (args.force && args.force->force_beta) {
        if (!args.input_blocks || args.input_blocks->size() != h_prev->rows)
            throw shape_error("forced beta needs one arrival block per input row");
        std::vector<double> b(h_prev->rows * t);
        for (std::size_t r = 0; r < h_prev->rows; ++r)
            for (std::size_t j = 0; j < t; ++j)
                b[r * t + j] = (*args.input_blocks)[r] <= j + 1 ? 1.0 : Tape::kProbEps;
        out.betas = make_const(h_prev->rows, t, std::move(b));
    } else if (args.force && args.force->unit_beta) {
        // log(1) = 0, so the attention logits pass through undamped and the
        // arrival parameters stay out of the graph entirely.
        out.betas = make_const(h_prev->rows, t, std::vector<double>(h_prev->rows * t, 1.0));
    } else {
        auto proj = tape.matmul_nt(h_prev, layer.shared_projection);
        auto logits = tape.matmul_nt(proj, stack_rows(tape, layer.arrival_vectors));
        out.betas = tape.clamp(tape.sigmoid(logits), Tape::kProbEps, 1.0 - Tape::kProbEps);
    }

    // Expert bodies, shared projections computed once per expert in use.
    std::vector<DiffValue> keys(t), vals(t), queries(t);
    std::vector<std::vector<std::size_t>> expert_rows(t);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j : out.selected[i]) expert_rows[j].push_back(i);
    for (std::size_t j = 0; j < t; ++j) {
        if (expert_rows[j].empty()) continue;
        keys[j] = tape.matmul_nt(h_prev, layer.experts[j].wk);
        vals[j] = tape.matmul_nt(h_prev, layer.experts[j].wv);
        queries[j] = tape.matmul_nt(hx, layer.experts[j].wq);
    }

    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(n));
    DiffValue combined;
    for (std::size_t j = 0; j < t; ++j) {
        if (expert_rows[j].empty()) continue;
        std::vector<DiffValue> inputs;
        inputs.reserve(expert_rows[j].size());
        for (std::size_t i : expert_rows[j]) {
            const auto& nb = neighbor_idx[i];
            auto self = tape.gather_rows(hx, {i});
            if (nb.empty()) {
                inputs.push_back(self);
                continue;
            }
            auto logit = tape.scale_const(
                tape.matmul_nt(tape.gather_rows(queries[j], {i}), tape.gather_rows(keys[j], nb)),
                inv_sqrt);
            auto beta_row = tape.transpose(tape.gather_cols(tape.gather_rows(out.betas, nb), {j}));
            auto weights = tape.row_softmax(tape.add(logit, tape.log(beta_row)));
            inputs.push_back(tape.add(self, tape.matmul(weights, tape.gather_rows(vals[j], nb))));
        }
        auto body = expert_mlp(tape, layer.experts[j], tape.concat_rows(inputs));
        auto alpha_col = tape.gather_rows(tape.gather_cols(out.alphas, {j}), expert_rows[j]);
        auto scaled = tape.mul_colvec(body, alpha_col);
        auto placed = tape.expand_rows(scaled, expert_rows[j], rows);
        combined = combined ? tape.add(combined, placed) : placed;
    }
    out.outputs = combined;
    return out;
}

}  // namespace dymoe
