#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "dymoe/losses.hpp"
#include "dymoe/moe.hpp"
#include "dymoe/rng.hpp"
#include "gradcheck.hpp"

using namespace dymoe;
using testutil::check_gradients;

namespace {

DiffValue scalar_const(double v) { return make_const(1, 1, {v}); }

DyMoELayerState make_layer_for_margin_test() {
    auto layer = DyMoELayerState::create(3, 2, 91);
    add_expert(layer, {}, 191);
    add_expert(layer, {}, 192);
    add_expert(layer, {}, 193);
    return layer;
}

}  // namespace

TEST_CASE("target encodings") {
    CHECK(one_hot(2, 4) == std::vector<double>{0.0, 1.0, 0.0, 0.0});
    CHECK(one_hot(1, 1) == std::vector<double>{1.0});
    CHECK(one_hot(4, 4) == std::vector<double>{0.0, 0.0, 0.0, 1.0});
    CHECK_THROWS_AS(one_hot(0, 4), range_error);
    CHECK_THROWS_AS(one_hot(5, 4), range_error);

    CHECK(multi_hot_arrival(2, 4) == std::vector<double>{0.0, 1.0, 1.0, 1.0});
    CHECK(multi_hot_arrival(1, 3) == std::vector<double>{1.0, 1.0, 1.0});
    CHECK(multi_hot_arrival(4, 4) == std::vector<double>{0.0, 0.0, 0.0, 1.0});
    CHECK_THROWS_AS(multi_hot_arrival(0, 4), range_error);
    CHECK_THROWS_AS(multi_hot_arrival(5, 4), range_error);
}

TEST_CASE("block-guided loss hand values") {
    Tape tape(false);

    // Uniform logits over two experts: cross-entropy is log 2 whichever
    // block the node arrived in.
    auto flat = make_const(1, 2, {0.0, 0.0});
    CHECK(block_guided_loss(tape, flat, {1})->scalar() ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(block_guided_loss(tape, flat, {2})->scalar() ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));

    // A strongly peaked gate on the right expert costs almost nothing.
    auto peaked = make_const(1, 2, {30.0, 0.0});
    CHECK(block_guided_loss(tape, peaked, {1})->scalar() == doctest::Approx(0.0));
    CHECK(block_guided_loss(tape, peaked, {2})->scalar() == doctest::Approx(30.0));

    // One expert: the gate has no freedom and the loss is exactly zero.
    auto solo = make_const(1, 1, {3.7});
    CHECK(block_guided_loss(tape, solo, {1})->scalar() == 0.0);

    // Mean over nodes.
    auto two = make_const(2, 2, {0.0, 0.0, 30.0, 0.0});
    CHECK(block_guided_loss(tape, two, {1, 1})->scalar() ==
          doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-9));

    CHECK_THROWS_AS(block_guided_loss(tape, flat, {1, 2}), shape_error);
    CHECK_THROWS_AS(block_guided_loss(tape, flat, {3}), range_error);
    CHECK_THROWS_AS(block_guided_loss(tape, flat, {0}), range_error);
}

TEST_CASE("graph block-guided loss hand values") {
    Tape tape(false);

    // A block-2 node wants beta = (0, 1); beta = (1/2, 1/2) costs log 2 in
    // both coordinates.
    auto half = make_const(1, 2, {0.5, 0.5});
    CHECK(graph_block_guided_loss(tape, half, {2})->scalar() ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));

    // Gates matching the arrival pattern at the clamp bounds cost ~nothing.
    auto exact = make_const(1, 2, {Tape::kProbEps, 1.0 - Tape::kProbEps});
    CHECK(graph_block_guided_loss(tape, exact, {2})->scalar() ==
          doctest::Approx(0.0).epsilon(1e-9));

    // A block-1 node wants every expert open.
    auto open = make_const(1, 2, {1.0 - Tape::kProbEps, 1.0 - Tape::kProbEps});
    CHECK(graph_block_guided_loss(tape, open, {1})->scalar() ==
          doctest::Approx(0.0).epsilon(1e-9));

    // Mean over every (row, expert) entry.
    auto mixed = make_const(2, 2, {0.5, 0.5, 1.0 - Tape::kProbEps, 1.0 - Tape::kProbEps});
    CHECK(graph_block_guided_loss(tape, mixed, {2, 1})->scalar() ==
          doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-9));

    // Moving toward the target monotonically lowers the loss.
    auto far = make_const(1, 2, {0.3, 0.6});
    auto near = make_const(1, 2, {0.2, 0.7});
    CHECK(graph_block_guided_loss(tape, near, {2})->scalar() <
          graph_block_guided_loss(tape, far, {2})->scalar());

    CHECK_THROWS_AS(graph_block_guided_loss(tape, half, {1, 2}), shape_error);
    CHECK_THROWS_AS(graph_block_guided_loss(tape, half, {3}), range_error);
}

TEST_CASE("total loss blends components with exact weights") {
    Tape tape(false);
    LossConfig cfg;  // gamma 1, delta 5

    std::vector<WeightedTerm> bl = {{scalar_const(0.5), 4}};
    std::vector<WeightedTerm> gbl = {{scalar_const(0.2), 4}};
    auto total = total_loss(tape, scalar_const(1.0), bl, gbl, cfg);
    CHECK(total->scalar() == doctest::Approx(1.0 + 0.5 + 5.0 * 0.2).epsilon(1e-12));

    LossConfig off;
    off.gamma = 0.0;
    off.delta = 0.0;
    auto bare = total_loss(tape, scalar_const(1.25), bl, gbl, off);
    CHECK(bare->scalar() == doctest::Approx(1.25).epsilon(1e-12));

    // Empty collections contribute nothing.
    auto lone = total_loss(tape, scalar_const(0.75), {}, {}, cfg);
    CHECK(lone->scalar() == doctest::Approx(0.75).epsilon(1e-12));

    LossConfig bad;
    bad.gamma = -1.0;
    CHECK_THROWS_AS(total_loss(tape, scalar_const(1.0), bl, gbl, bad), range_error);
}

TEST_CASE("per-layer terms recombine into one global mean") {
    Tape tape(false);
    LossConfig cfg;
    cfg.gamma = 1.0;
    cfg.delta = 0.0;

    // Layer means 0.4 over 3 nodes and 0.8 over 1 node pool to
    // (3*0.4 + 1*0.8) / 4 = 0.5.
    std::vector<WeightedTerm> bl = {{scalar_const(0.4), 3}, {scalar_const(0.8), 1}};
    auto total = total_loss(tape, scalar_const(0.0), bl, {}, cfg);
    CHECK(total->scalar() == doctest::Approx(0.5).epsilon(1e-12));

    // The same pooling drives the arrival terms through delta.
    LossConfig arr;
    arr.gamma = 0.0;
    arr.delta = 2.0;
    std::vector<WeightedTerm> gbl = {{scalar_const(0.1), 2}, {scalar_const(0.7), 2}};
    auto t2 = total_loss(tape, scalar_const(1.0), {}, gbl, arr);
    CHECK(t2->scalar() == doctest::Approx(1.0 + 2.0 * 0.4).epsilon(1e-12));
}

TEST_CASE("uniform gate loss equals log t and decays as experts grow confident") {
    Tape tape(false);
    for (std::size_t t = 1; t <= 5; ++t) {
        auto flat = make_const(1, t, std::vector<double>(t, 1.3));
        CHECK(block_guided_loss(tape, flat, {1})->scalar() ==
              doctest::Approx(std::log(static_cast<double>(t))).epsilon(1e-9));
    }
}

TEST_CASE("one supervision step sharpens the gate margin") {
    // A single gradient step on the block-guided loss alone must increase the
    // raw-logit margin of the node's own expert.
    auto layer = make_layer_for_margin_test();
    auto h_prev = make_const(1, 3, {0.6, -0.2, 0.4});

    auto margin = [&]() {
        auto g = gate_dense({0.6, -0.2, 0.4}, layer);
        return g.raw_logits[1] - std::max(g.raw_logits[0], g.raw_logits[2]);
    };
    const double before = margin();

    Tape tape;
    LayerForwardArgs args;
    args.mode = GateMode::dense;
    auto fwd = layer_forward(tape, layer, h_prev, {0}, {{}}, {4}, args);
    auto loss = block_guided_loss(tape, fwd.raw_logits, {2});
    tape.backward(loss);
    for (const auto& g : layer.gate_vectors)
        for (std::size_t i = 0; i < g->size(); ++i) g->data[i] -= 1e-3 * g->grad[i];

    CHECK(margin() > before);
}

TEST_CASE("loss gradients match finite differences") {
    auto gen = rng_stream(3, "test.lossfd");
    std::uniform_real_distribution<double> logit_d(-1.0, 1.0);
    std::uniform_real_distribution<double> prob_d(0.1, 0.9);

    std::vector<double> logits(4 * 3), probs(5 * 3);
    for (auto& v : logits) v = logit_d(gen);
    for (auto& v : probs) v = prob_d(gen);
    auto raw = make_param(4, 3, logits);
    auto betas = make_param(5, 3, probs);
    std::vector<std::size_t> node_blocks = {1, 3, 2, 1};
    std::vector<std::size_t> beta_blocks = {1, 2, 3, 2, 1};

    check_gradients({raw}, [&](Tape& t) {
        return block_guided_loss(t, raw, node_blocks);
    });
    check_gradients({betas}, [&](Tape& t) {
        return graph_block_guided_loss(t, betas, beta_blocks);
    });
    check_gradients({raw, betas}, [&](Tape& t) {
        LossConfig cfg;
        cfg.gamma = 1.5;
        cfg.delta = 3.0;
        std::vector<WeightedTerm> bl = {{block_guided_loss(t, raw, node_blocks), 4}};
        std::vector<WeightedTerm> gbl = {{graph_block_guided_loss(t, betas, beta_blocks), 5}};
        return total_loss(t, t.mean(raw), bl, gbl, cfg);
    });
}
