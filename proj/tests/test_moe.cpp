#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "dymoe/moe.hpp"
#include "dymoe/rng.hpp"
#include "gradcheck.hpp"

using namespace dymoe;
using testutil::check_gradients;

namespace {

DyMoELayerState make_layer(std::size_t width, std::size_t k, std::size_t experts,
                           std::uint64_t seed) {
    auto layer = DyMoELayerState::create(width, k, seed);
    for (std::size_t i = 0; i < experts; ++i) add_expert(layer, {}, seed + 100 + i);
    return layer;
}

void set_data(const DiffValue& v, std::vector<double> values) {
    REQUIRE(v->size() == values.size());
    v->data = std::move(values);
}

std::vector<double> random_values(std::mt19937_64& gen, std::size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = d(gen);
    return v;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("layer construction and growth") {
    CHECK_THROWS_AS(DyMoELayerState::create(0, 1, 1), range_error);
    CHECK_THROWS_AS(DyMoELayerState::create(4, 0, 1), range_error);

    auto layer = DyMoELayerState::create(4, 2, 7);
    CHECK(layer.expert_count() == 0);
    CHECK(layer.shared_projection->rows == 4);
    CHECK(layer.shared_projection->cols == 4);

    add_expert(layer, {}, 1);
    CHECK(layer.expert_count() == 1);
    CHECK(layer.frozen_below == 0);
    CHECK(layer.gate_vectors.size() == 1);
    CHECK(layer.noise_vectors.size() == 1);
    CHECK(layer.arrival_vectors.size() == 1);
    CHECK(layer.experts[0].wq->requires_grad);

    // Growth freezes every prior expert in place, bit for bit.
    auto frozen_snapshot = layer.experts[0].wq->data;
    add_expert(layer, {0.1, 0.2, 0.3, 0.4}, 2);
    CHECK(layer.expert_count() == 2);
    CHECK(layer.frozen_below == 1);
    CHECK_FALSE(layer.experts[0].wq->requires_grad);
    CHECK(layer.experts[1].wq->requires_grad);
    CHECK(layer.experts[0].wq->data == frozen_snapshot);
    CHECK(layer.gate_vectors[1]->data == std::vector<double>{0.1, 0.2, 0.3, 0.4});

    CHECK_THROWS_AS(add_expert(layer, {1.0, 2.0}, 3), shape_error);

    CHECK(layer.effective_k() == 2);
    layer.k = 5;
    CHECK(layer.effective_k() == 2);
}

TEST_CASE("trainable parameter set tracks the newest expert only") {
    auto layer = make_layer(4, 2, 3, 11);
    auto ps = trainable_params(layer);
    // 7 expert tensors + 3 gate + 3 noise + 3 arrival + shared projection.
    CHECK(ps.size() == 7 + 3 + 3 + 3 + 1);
    for (const auto& p : ps) CHECK(p->requires_grad);

    for (std::size_t j = 0; j + 1 < layer.expert_count(); ++j)
        for (const auto& frozen : layer.experts[j].params())
            for (const auto& p : ps) CHECK(p.get() != frozen.get());

    for (const auto& newest : layer.experts.back().params()) {
        bool found = false;
        for (const auto& p : ps) found = found || p.get() == newest.get();
        CHECK(found);
    }

    CHECK_THROWS_AS(trainable_params(DyMoELayerState::create(4, 1, 0)), invariant_error);
}

TEST_CASE("similarity measures") {
    CHECK(similarity({1.0, 0.0}, {1.0, 0.0}) == 1.0);
    CHECK(similarity({1.0, 0.0}, {0.0, 1.0}) == 0.0);
    CHECK(similarity({1.0, 2.0, 3.0}, {4.0, 5.0, 6.0}) == doctest::Approx(32.0));
    CHECK_THROWS_AS(similarity({1.0}, {1.0, 2.0}), shape_error);

    CHECK(similarity_gaussian({1.0, 1.0}, {1.0, 1.0}, 1.0) == 0.0);
    CHECK(similarity_gaussian({2.0, 0.0}, {0.0, 0.0}, 1.0) == doctest::Approx(-2.0));
    CHECK(similarity_gaussian({2.0, 0.0}, {0.0, 0.0}, 2.0) == doctest::Approx(-0.5));
    CHECK_THROWS_AS(similarity_gaussian({1.0}, {1.0, 2.0}, 1.0), shape_error);
}

TEST_CASE("top-k selection with deterministic ties") {
    const double a[4] = {0.5, 0.5, 0.1, 0.9};
    CHECK(top_k_indices(a, 4, 1) == std::vector<std::size_t>{3});
    CHECK(top_k_indices(a, 4, 2) == std::vector<std::size_t>{0, 3});
    CHECK(top_k_indices(a, 4, 3) == std::vector<std::size_t>{0, 1, 3});
    CHECK(top_k_indices(a, 4, 9) == std::vector<std::size_t>{0, 1, 2, 3});

    const double ties[3] = {0.5, 0.5, 0.5};
    CHECK(top_k_indices(ties, 3, 1) == std::vector<std::size_t>{0});
    CHECK(top_k_indices(ties, 3, 2) == std::vector<std::size_t>{0, 1});
}

TEST_CASE("dense gate hand values") {
    auto layer = make_layer(2, 1, 2, 13);
    set_data(layer.gate_vectors[0], {std::log(3.0), 0.0});
    set_data(layer.gate_vectors[1], {0.0, 0.0});

    auto d = gate_dense({1.0, 0.0}, layer);
    CHECK(d.raw_logits[0] == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(d.raw_logits[1] == 0.0);
    CHECK(d.alphas[0] == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(d.alphas[1] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(d.selected == std::vector<std::size_t>{0, 1});

    // Equal logits split evenly; the zero direction of x sees only zeros.
    auto even = gate_dense({0.0, 1.0}, layer);
    CHECK(even.alphas[0] == 0.5);
    CHECK(even.alphas[1] == 0.5);

    auto solo = gate_dense({1.0, 0.0}, make_layer(2, 1, 1, 17));
    CHECK(solo.alphas == std::vector<double>{1.0});
    CHECK(solo.selected == std::vector<std::size_t>{0});

    CHECK_THROWS_AS(gate_dense({1.0}, layer), shape_error);
    CHECK_THROWS_AS(gate_dense({1.0, 0.0}, DyMoELayerState::create(2, 1, 19)), invariant_error);
}

TEST_CASE("sparse gate keeps top-k and renormalizes over the survivors") {
    auto layer = make_layer(3, 2, 3, 23);
    set_data(layer.gate_vectors[0], {0.9, 0.0, 0.0});
    set_data(layer.gate_vectors[1], {0.1, 0.0, 0.0});
    set_data(layer.gate_vectors[2], {0.5, 0.0, 0.0});

    // Logits (0.9, 0.1, 0.5): the top two are experts 0 and 2, and their
    // renormalized weights are sigmoid(+-0.4).
    auto g = gate_sparse({1.0, 0.0, 0.0}, layer, false, 0);
    CHECK(g.selected == std::vector<std::size_t>{0, 2});
    CHECK(g.alphas[0] == doctest::Approx(sigmoid(0.4)).epsilon(1e-12));
    CHECK(g.alphas[1] == 0.0);
    CHECK(g.alphas[2] == doctest::Approx(sigmoid(-0.4)).epsilon(1e-12));
    CHECK(g.alphas[0] + g.alphas[2] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(g.raw_logits[0] == doctest::Approx(0.9).epsilon(1e-12));

    layer.k = 1;
    auto one = gate_sparse({1.0, 0.0, 0.0}, layer, false, 0);
    CHECK(one.selected == std::vector<std::size_t>{0});
    CHECK(one.alphas == std::vector<double>{1.0, 0.0, 0.0});

    // Budget at or above the expert count reproduces the dense gate exactly.
    layer.k = 3;
    auto full = gate_sparse({1.0, 0.0, 0.0}, layer, false, 0);
    auto dense = gate_dense({1.0, 0.0, 0.0}, layer);
    CHECK(full.alphas == dense.alphas);
    CHECK(full.selected == dense.selected);

    // Ties resolve toward the lower expert index.
    set_data(layer.gate_vectors[2], {0.9, 0.0, 0.0});
    layer.k = 1;
    auto tie = gate_sparse({1.0, 0.0, 0.0}, layer, false, 0);
    CHECK(tie.selected == std::vector<std::size_t>{0});
}

TEST_CASE("training noise is seeded and scales with the softplus magnitude") {
    auto layer = make_layer(3, 2, 3, 29);
    std::vector<double> x = {0.4, -0.2, 0.7};

    auto a = gate_sparse(x, layer, true, 42);
    auto b = gate_sparse(x, layer, true, 42);
    CHECK(a.alphas == b.alphas);
    CHECK(a.selected == b.selected);

    // Raw logits stay noise-free.
    auto quiet = gate_sparse(x, layer, false, 0);
    CHECK(a.raw_logits == quiet.raw_logits);

    bool any_diff = false;
    for (std::uint64_t s = 0; s < 5 && !any_diff; ++s) {
        auto c = gate_sparse(x, layer, true, 1000 + s);
        any_diff = c.alphas != a.alphas;
    }
    CHECK(any_diff);

    // Driving the noise magnitudes toward zero recovers the noise-free gate.
    for (auto& q : layer.noise_vectors) set_data(q, {-40.0, -40.0, -40.0});
    auto damped = gate_sparse(x, layer, true, 42);
    CHECK(damped.selected == quiet.selected);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(damped.alphas[i] == doctest::Approx(quiet.alphas[i]).epsilon(1e-9));
}

TEST_CASE("arrival gate hand values and clamping") {
    auto layer = make_layer(4, 1, 2, 31);
    std::vector<double> id(16, 0.0);
    for (int i = 0; i < 4; ++i) id[i * 4 + i] = 1.0;
    set_data(layer.shared_projection, id);

    set_data(layer.arrival_vectors[0], {0.0, 0.0, 0.0, 0.0});
    CHECK(arrival_gate({1.0, 0.0, 0.0, 0.0}, 1, layer) == 0.5);

    set_data(layer.arrival_vectors[1], {std::log(3.0), 0.0, 0.0, 0.0});
    CHECK(arrival_gate({1.0, 0.0, 0.0, 0.0}, 2, layer) ==
          doctest::Approx(0.75).epsilon(1e-12));

    // Saturated logits clamp away from 0 and 1 so log(beta) stays finite.
    set_data(layer.arrival_vectors[0], {100.0, 0.0, 0.0, 0.0});
    CHECK(arrival_gate({-1.0, 0.0, 0.0, 0.0}, 1, layer) == Tape::kProbEps);
    CHECK(arrival_gate({1.0, 0.0, 0.0, 0.0}, 1, layer) == 1.0 - Tape::kProbEps);

    CHECK_THROWS_AS(arrival_gate({1.0, 0.0, 0.0, 0.0}, 0, layer), range_error);
    CHECK_THROWS_AS(arrival_gate({1.0, 0.0, 0.0, 0.0}, 3, layer), range_error);
    CHECK_THROWS_AS(arrival_gate({1.0, 0.0}, 1, layer), shape_error);
}

TEST_CASE("batched forward agrees with the per-node gate helpers") {
    auto gen = rng_stream(5, "test.batch");
    auto layer = make_layer(4, 2, 3, 37);
    auto h_prev = make_const(5, 4, random_values(gen, 20, -1.0, 1.0));
    std::vector<std::size_t> self = {0, 2, 4};
    std::vector<std::vector<std::size_t>> nbrs = {{1, 2}, {3}, {}};
    std::vector<std::size_t> ids = {10, 11, 12};

    Tape tape(false);
    LayerForwardArgs args;
    args.mode = GateMode::sparse;
    args.training = false;
    auto fwd = layer_forward(tape, layer, h_prev, self, nbrs, ids, args);

    REQUIRE(fwd.outputs->rows == 3);
    REQUIRE(fwd.raw_logits->rows == 3);
    REQUIRE(fwd.raw_logits->cols == 3);
    REQUIRE(fwd.alphas->rows == 3);
    REQUIRE(fwd.betas->rows == 5);
    REQUIRE(fwd.betas->cols == 3);

    for (std::size_t i = 0; i < self.size(); ++i) {
        std::vector<double> x(h_prev->data.begin() + self[i] * 4,
                              h_prev->data.begin() + self[i] * 4 + 4);
        auto solo = gate_sparse(x, layer, false, 0);
        CHECK(fwd.selected[i] == solo.selected);
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(fwd.raw_logits->at(i, j) == solo.raw_logits[j]);
            CHECK(fwd.alphas->at(i, j) == solo.alphas[j]);
        }
    }

    // Arrival gates match the scalar helper across every input row.
    for (std::size_t r = 0; r < 5; ++r) {
        std::vector<double> h(h_prev->data.begin() + r * 4, h_prev->data.begin() + r * 4 + 4);
        for (std::size_t j = 1; j <= 3; ++j)
            CHECK(fwd.betas->at(r, j - 1) == doctest::Approx(arrival_gate(h, j, layer)).epsilon(1e-15));
    }
}

TEST_CASE("single-expert layer reproduces the standalone expert") {
    auto gen = rng_stream(9, "test.solo");
    auto layer = make_layer(4, 1, 1, 41);
    auto h_prev = make_const(3, 4, random_values(gen, 12, -1.0, 1.0));

    Tape tape(false);
    LayerForwardArgs args;
    args.mode = GateMode::sparse;
    auto fwd = layer_forward(tape, layer, h_prev, {0}, {{1, 2}}, {7}, args);

    std::vector<double> beta_vals;
    for (std::size_t r : {std::size_t(1), std::size_t(2)}) {
        std::vector<double> h(h_prev->data.begin() + r * 4, h_prev->data.begin() + r * 4 + 4);
        beta_vals.push_back(arrival_gate(h, 1, layer));
    }
    auto h_v = make_const(1, 4, std::vector<double>(h_prev->data.begin(), h_prev->data.begin() + 4));
    auto h_n = make_const(2, 4, std::vector<double>(h_prev->data.begin() + 4, h_prev->data.begin() + 12));
    auto solo = expert_forward(tape, layer.experts[0], h_v, h_n, make_const(1, 2, beta_vals));

    for (std::size_t c = 0; c < 4; ++c)
        CHECK(fwd.outputs->at(0, c) == doctest::Approx(solo->at(0, c)).epsilon(1e-12));
}

TEST_CASE("forced routing pins one expert with unit weight") {
    auto gen = rng_stream(15, "test.force");
    auto layer = make_layer(4, 1, 3, 43);
    auto h_prev = make_const(4, 4, random_values(gen, 16, -1.0, 1.0));

    Tape tape(false);
    GateOverride force;
    force.expert = 1;
    LayerForwardArgs args;
    args.force = &force;
    auto fwd = layer_forward(tape, layer, h_prev, {0, 3}, {{1}, {1, 2}}, {1, 2}, args);

    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(fwd.selected[i] == std::vector<std::size_t>{1});
        CHECK(fwd.alphas->at(i, 0) == 0.0);
        CHECK(fwd.alphas->at(i, 1) == 1.0);
        CHECK(fwd.alphas->at(i, 2) == 0.0);
    }

    // Row 0 equals the standalone expert 1 under its learned arrival gates.
    std::vector<double> h1(h_prev->data.begin() + 4, h_prev->data.begin() + 8);
    auto h_v = make_const(1, 4, std::vector<double>(h_prev->data.begin(), h_prev->data.begin() + 4));
    auto h_n = make_const(1, 4, h1);
    auto beta = make_const(1, 1, {arrival_gate(h1, 2, layer)});
    auto solo = expert_forward(tape, layer.experts[1], h_v, h_n, beta);
    for (std::size_t c = 0; c < 4; ++c)
        CHECK(fwd.outputs->at(0, c) == doctest::Approx(solo->at(0, c)).epsilon(1e-12));

    GateOverride out_of_range;
    out_of_range.expert = 3;
    LayerForwardArgs bad;
    bad.force = &out_of_range;
    CHECK_THROWS_AS(layer_forward(tape, layer, h_prev, {0}, {{}}, {1}, bad), range_error);
}

TEST_CASE("forced arrival gates follow the block pattern exactly") {
    auto gen = rng_stream(19, "test.fbeta");
    auto layer = make_layer(3, 1, 2, 47);
    auto h_prev = make_const(3, 3, random_values(gen, 9, -1.0, 1.0));
    std::vector<std::size_t> blocks = {1, 1, 2};

    Tape tape(false);
    GateOverride force;
    force.expert = 0;
    force.force_beta = true;
    LayerForwardArgs args;
    args.force = &force;
    args.input_blocks = &blocks;
    auto fwd = layer_forward(tape, layer, h_prev, {0}, {{1, 2}}, {5}, args);

    CHECK(fwd.betas->at(0, 0) == 1.0);
    CHECK(fwd.betas->at(0, 1) == 1.0);
    CHECK(fwd.betas->at(2, 0) == Tape::kProbEps);
    CHECK(fwd.betas->at(2, 1) == 1.0);

    LayerForwardArgs missing;
    missing.force = &force;
    CHECK_THROWS_AS(layer_forward(tape, layer, h_prev, {0}, {{1}}, {5}, missing), shape_error);
}

TEST_CASE("held-open arrival gates reduce to plain attention") {
    auto gen = rng_stream(23, "test.ubeta");
    auto layer = make_layer(4, 1, 1, 53);
    auto h_prev = make_const(3, 4, random_values(gen, 12, -1.0, 1.0));

    GateOverride force;
    force.unit_beta = true;
    LayerForwardArgs args;
    args.force = &force;

    Tape tape(false);
    auto fwd = layer_forward(tape, layer, h_prev, {0}, {{1, 2}}, {7}, args);
    for (std::size_t r = 0; r < 3; ++r) CHECK(fwd.betas->at(r, 0) == 1.0);

    auto h_v =
        make_const(1, 4, std::vector<double>(h_prev->data.begin(), h_prev->data.begin() + 4));
    auto h_n =
        make_const(2, 4, std::vector<double>(h_prev->data.begin() + 4, h_prev->data.begin() + 12));
    auto solo = expert_forward(tape, layer.experts[0], h_v, h_n, {});
    for (std::size_t c = 0; c < 4; ++c)
        CHECK(fwd.outputs->at(0, c) == doctest::Approx(solo->at(0, c)).epsilon(1e-12));

    // With the gates pinned open, the arrival machinery is out of the graph.
    Tape rec;
    auto fwd2 = layer_forward(rec, layer, h_prev, {0}, {{1, 2}}, {7}, args);
    rec.backward(rec.sum(fwd2.outputs));
    for (double g : layer.arrival_vectors[0]->grad) CHECK(g == 0.0);
    for (double g : layer.shared_projection->grad) CHECK(g == 0.0);
    double wq_mag = 0.0;
    for (double g : layer.experts[0].wq->grad) wq_mag += std::abs(g);
    CHECK(wq_mag > 0.0);
}

TEST_CASE("identical twin experts mix back to either one") {
    auto gen = rng_stream(25, "test.twin");
    auto layer = make_layer(3, 2, 2, 53);
    // Clone expert 0 into expert 1, including its gating apparatus, so both
    // routes compute the same function and the mixture must reproduce it.
    auto src = layer.experts[0].params();
    auto dst = layer.experts[1].params();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i]->data = src[i]->data;
    layer.gate_vectors[1]->data = layer.gate_vectors[0]->data;
    layer.arrival_vectors[1]->data = layer.arrival_vectors[0]->data;

    auto h_prev = make_const(3, 3, random_values(gen, 9, -1.0, 1.0));
    Tape tape(false);
    LayerForwardArgs dense;
    dense.mode = GateMode::dense;
    auto mixed = layer_forward(tape, layer, h_prev, {0}, {{1, 2}}, {3}, dense);

    CHECK(mixed.alphas->at(0, 0) == 0.5);
    CHECK(mixed.alphas->at(0, 1) == 0.5);

    GateOverride force;
    force.expert = 0;
    LayerForwardArgs forced;
    forced.force = &force;
    auto single = layer_forward(tape, layer, h_prev, {0}, {{1, 2}}, {3}, forced);
    for (std::size_t c = 0; c < 3; ++c)
        CHECK(mixed.outputs->at(0, c) == doctest::Approx(single.outputs->at(0, c)).epsilon(1e-12));
}

TEST_CASE("dense forward equals sparse forward when the budget covers all experts") {
    auto gen = rng_stream(33, "test.kfull");
    auto layer = make_layer(4, 3, 3, 59);
    auto h_prev = make_const(4, 4, random_values(gen, 16, -1.0, 1.0));

    Tape tape(false);
    LayerForwardArgs dense;
    dense.mode = GateMode::dense;
    LayerForwardArgs sparse;
    sparse.mode = GateMode::sparse;
    auto a = layer_forward(tape, layer, h_prev, {0, 1}, {{2}, {2, 3}}, {1, 2}, dense);
    auto b = layer_forward(tape, layer, h_prev, {0, 1}, {{2}, {2, 3}}, {1, 2}, sparse);
    CHECK(a.outputs->data == b.outputs->data);
    CHECK(a.alphas->data == b.alphas->data);
}

TEST_CASE("noise streams are keyed by node id, not batch position") {
    auto gen = rng_stream(35, "test.nseed");
    auto layer = make_layer(3, 2, 3, 61);
    auto h_prev = make_const(3, 3, random_values(gen, 9, -1.0, 1.0));

    Tape tape(false);
    LayerForwardArgs args;
    args.mode = GateMode::sparse;
    args.training = true;
    args.noise_seed = 7;
    auto alone = layer_forward(tape, layer, h_prev, {0}, {{1}}, {42}, args);
    auto paired = layer_forward(tape, layer, h_prev, {2, 0}, {{}, {1}}, {9, 42}, args);

    for (std::size_t c = 0; c < 3; ++c)
        CHECK(alone.outputs->at(0, c) == paired.outputs->at(1, c));
    for (std::size_t j = 0; j < 3; ++j)
        CHECK(alone.alphas->at(0, j) == paired.alphas->at(1, j));

    // A different epoch seed reroutes at least some nodes eventually.
    bool differs = false;
    for (std::uint64_t s = 0; s < 8 && !differs; ++s) {
        LayerForwardArgs other = args;
        other.noise_seed = 100 + s;
        auto c = layer_forward(tape, layer, h_prev, {0}, {{1}}, {42}, other);
        differs = c.alphas->data != alone.alphas->data;
    }
    CHECK(differs);
}

TEST_CASE("gradients stay out of frozen and unselected experts") {
    auto gen = rng_stream(45, "test.gradflow");
    auto layer = make_layer(3, 2, 2, 67);
    auto h_prev = make_param(3, 3, random_values(gen, 9, -1.0, 1.0));

    Tape tape;
    LayerForwardArgs dense;
    dense.mode = GateMode::dense;
    auto fwd = layer_forward(tape, layer, h_prev, {0, 1}, {{1, 2}, {2}}, {1, 2}, dense);
    auto loss = tape.mean(fwd.outputs);
    tape.backward(loss);

    // Expert 0 is frozen: gradient flows through it but never into it.
    for (const auto& p : layer.experts[0].params())
        for (double g : p->grad) CHECK(g == 0.0);

    double newest = 0.0;
    for (const auto& p : layer.experts[1].params())
        for (double g : p->grad) newest += std::abs(g);
    CHECK(newest > 0.0);

    double gate_total = 0.0;
    for (const auto& g : layer.gate_vectors)
        for (double v : g->grad) gate_total += std::abs(v);
    CHECK(gate_total > 0.0);

    double proj_total = 0.0;
    for (double v : layer.shared_projection->grad) proj_total += std::abs(v);
    CHECK(proj_total > 0.0);

    double input_total = 0.0;
    for (double v : h_prev->grad) input_total += std::abs(v);
    CHECK(input_total > 0.0);
}

TEST_CASE("a never-selected expert receives no gradient") {
    auto layer = make_layer(2, 1, 2, 71);
    // Steer every node to expert 0 by a wide logit margin.
    set_data(layer.gate_vectors[0], {5.0, 5.0});
    set_data(layer.gate_vectors[1], {-5.0, -5.0});
    auto h_prev = make_const(2, 2, {0.5, 0.4, 0.3, 0.2});

    Tape tape;
    LayerForwardArgs args;
    args.mode = GateMode::sparse;
    auto fwd = layer_forward(tape, layer, h_prev, {0, 1}, {{1}, {0}}, {1, 2}, args);
    tape.backward(tape.mean(fwd.outputs));

    CHECK(fwd.selected[0] == std::vector<std::size_t>{0});
    CHECK(fwd.selected[1] == std::vector<std::size_t>{0});
    for (const auto& p : layer.experts[1].params())
        for (double g : p->grad) CHECK(g == 0.0);
}

TEST_CASE("layer gradients match finite differences") {
    auto gen = rng_stream(55, "test.layerfd");
    auto layer = make_layer(3, 2, 2, 73);
    auto h_prev = make_param(4, 3, random_values(gen, 12, -1.0, 1.0));
    std::vector<std::size_t> self = {0, 1, 3};
    std::vector<std::vector<std::size_t>> nbrs = {{1, 2}, {0, 3}, {}};
    std::vector<std::size_t> ids = {1, 2, 3};

    std::vector<DiffValue> leaves = trainable_params(layer);
    leaves.push_back(h_prev);

    SUBCASE("dense routing") {
        check_gradients(leaves, [&](Tape& t) {
            LayerForwardArgs args;
            args.mode = GateMode::dense;
            auto fwd = layer_forward(t, layer, h_prev, self, nbrs, ids, args);
            return t.add(t.add(t.mean(fwd.outputs), t.mean(fwd.betas)),
                         t.mean(fwd.raw_logits));
        });
    }

    SUBCASE("sparse routing with a fixed selection") {
        // A three-expert layer with budget two, gate vectors far apart so the
        // top-k choice is stable under the finite-difference probes and the
        // loss is smooth at this point.
        auto wide = make_layer(3, 2, 3, 79);
        set_data(wide.gate_vectors[0], {2.0, 0.0, -1.0});
        set_data(wide.gate_vectors[1], {-2.0, 1.0, 0.5});
        set_data(wide.gate_vectors[2], {0.5, -2.0, 1.5});
        std::vector<DiffValue> wide_leaves = trainable_params(wide);
        wide_leaves.push_back(h_prev);
        check_gradients(wide_leaves, [&](Tape& t) {
            LayerForwardArgs args;
            args.mode = GateMode::sparse;
            auto fwd = layer_forward(t, wide, h_prev, self, nbrs, ids, args);
            return t.add(t.mean(fwd.outputs), t.mean(fwd.betas));
        });
    }
}
