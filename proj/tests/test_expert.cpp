#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "dymoe/expert.hpp"
#include "dymoe/rng.hpp"
#include "gradcheck.hpp"

using namespace dymoe;
using testutil::check_gradients;

namespace {

DiffValue identity_matrix(std::size_t n) {
    std::vector<double> v(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
    return make_param(n, n, std::move(v));
}

DiffValue zeros_matrix(std::size_t rows, std::size_t cols) {
    return make_param(rows, cols, std::vector<double>(rows * cols, 0.0));
}

// Pass-through expert: W^V = I, flat keys, identity MLP. relu is transparent
// as long as intermediate values stay nonnegative.
ExpertParams passthrough_expert(std::size_t n) {
    ExpertParams e;
    e.wq = identity_matrix(n);
    e.wk = zeros_matrix(n, n);
    e.wv = identity_matrix(n);
    e.mlp_w1 = identity_matrix(n);
    e.mlp_b1 = zeros_matrix(1, n);
    e.mlp_w2 = identity_matrix(n);
    e.mlp_b2 = zeros_matrix(1, n);
    return e;
}

std::vector<double> random_values(std::mt19937_64& gen, std::size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = d(gen);
    return v;
}

}  // namespace

TEST_CASE("initialization shape and bounds") {
    auto e = ExpertParams::init(6, 11);
    CHECK(e.width() == 6);
    auto ps = e.params();
    CHECK(ps.size() == 7);
    const double bound = 1.0 / std::sqrt(6.0);
    for (const auto& p : ps) {
        CHECK(p->requires_grad);
        for (double v : p->data) {
            CHECK(v >= -bound);
            CHECK(v <= bound);
        }
    }
    CHECK(e.mlp_b1->rows == 1);
    CHECK(e.mlp_b1->cols == 6);

    // Same seed rebuilds the same expert; a different seed does not.
    auto e2 = ExpertParams::init(6, 11);
    CHECK(e2.wq->data == e.wq->data);
    auto e3 = ExpertParams::init(6, 12);
    CHECK(e3.wq->data != e.wq->data);
}

TEST_CASE("single neighbor gets full attention weight") {
    // One neighbor means the softmax is a singleton regardless of the logit,
    // so the output is exactly W^V h_u.
    auto gen = rng_stream(3, "test.single");
    auto e = ExpertParams::init(4, 21);
    auto h_v = make_const(1, 4, random_values(gen, 4, -1.0, 1.0));
    auto h_n = make_const(1, 4, random_values(gen, 4, -1.0, 1.0));
    Tape tape(false);
    auto att = attention(tape, e, h_v, h_n);
    auto want = tape.matmul_nt(h_n, e.wv);
    REQUIRE(att->size() == 4);
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(att->data[i] == doctest::Approx(want->data[i]).epsilon(1e-12));
}

TEST_CASE("no neighbors leaves the target unchanged through a pass-through expert") {
    auto e = passthrough_expert(3);
    auto h_v = make_const(1, 3, {0.4, 0.0, 1.2});
    Tape tape(false);
    auto out = expert_forward(tape, e, h_v, make_const(0, 3, {}), DiffValue());
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(out->data[i] == doctest::Approx(h_v->data[i]).epsilon(1e-12));

    auto att = attention(tape, e, h_v, make_const(0, 3, {}));
    for (double v : att->data) CHECK(v == 0.0);
}

TEST_CASE("target plus neighbor through the pass-through expert") {
    // h_v = (1, 0), single neighbor h_u = (0, 1): attention returns h_u, the
    // residual sum is (1, 1), and the identity MLP keeps it.
    auto e = passthrough_expert(2);
    auto h_v = make_const(1, 2, {1.0, 0.0});
    auto h_n = make_const(1, 2, {0.0, 1.0});
    Tape tape(false);
    auto out = expert_forward(tape, e, h_v, h_n, DiffValue());
    CHECK(out->data[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(out->data[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("arrival mask reweights equal-logit neighbors") {
    // Flat keys make every raw logit zero, so the weights come entirely from
    // the mask: beta = (1, 1/2) gives softmax(log 1, log 1/2) = (2/3, 1/3).
    auto e = passthrough_expert(2);
    auto h_v = make_const(1, 2, {0.3, 0.3});
    auto h_n = make_const(2, 2, {1.0, 0.0, 0.0, 1.0});

    Tape tape(false);
    auto half = masked_attention(tape, e, h_v, h_n, make_const(1, 2, {1.0, 0.5}));
    CHECK(half->data[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(half->data[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    // beta at the clamp floor silences the second neighbor.
    auto muted = masked_attention(tape, e, h_v, h_n, make_const(1, 2, {1.0, 1e-12}));
    CHECK(muted->data[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(muted->data[1]) < 1e-9);

    // All-ones beta is plain attention.
    auto plain = attention(tape, e, h_v, h_n);
    auto ones = masked_attention(tape, e, h_v, h_n, make_const(1, 2, {1.0, 1.0}));
    CHECK(plain->data[0] == ones->data[0]);
    CHECK(plain->data[1] == ones->data[1]);
}

TEST_CASE("attention weights sum to one") {
    auto gen = rng_stream(7, "test.sum");
    auto e = ExpertParams::init(5, 31);
    e.wv = identity_matrix(5);  // output = convex combination of neighbor rows
    auto h_v = make_const(1, 5, random_values(gen, 5, -1.0, 1.0));
    auto h_n = make_const(4, 5, std::vector<double>(20, 1.0));
    Tape tape(false);
    // With identical all-ones neighbors the convex combination is the row itself.
    auto att = attention(tape, e, h_v, h_n);
    for (double v : att->data) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("neighbor permutation invariance") {
    auto gen = rng_stream(13, "test.perm");
    auto e = ExpertParams::init(6, 41);
    auto h_v = make_const(1, 6, random_values(gen, 6, -1.0, 1.0));
    std::vector<double> rows = random_values(gen, 24, -1.0, 1.0);
    std::vector<double> beta = random_values(gen, 4, 0.1, 0.9);

    std::vector<double> rows_perm(24), beta_perm(4);
    const std::size_t perm[4] = {2, 0, 3, 1};
    for (std::size_t i = 0; i < 4; ++i) {
        beta_perm[i] = beta[perm[i]];
        for (std::size_t c = 0; c < 6; ++c) rows_perm[i * 6 + c] = rows[perm[i] * 6 + c];
    }

    Tape tape(false);
    auto a = expert_forward(tape, e, h_v, make_const(4, 6, rows), make_const(1, 4, beta));
    auto b = expert_forward(tape, e, h_v, make_const(4, 6, rows_perm), make_const(1, 4, beta_perm));
    for (std::size_t i = 0; i < 6; ++i)
        CHECK(std::abs(a->data[i] - b->data[i]) <= 1e-12);
}

TEST_CASE("a floor-beta neighbor is numerically invisible") {
    auto gen = rng_stream(17, "test.ghost");
    auto e = ExpertParams::init(4, 51);
    auto h_v = make_const(1, 4, random_values(gen, 4, -1.0, 1.0));
    std::vector<double> two = random_values(gen, 8, -1.0, 1.0);
    std::vector<double> three = two;
    auto extra = random_values(gen, 4, -1.0, 1.0);
    three.insert(three.end(), extra.begin(), extra.end());

    Tape tape(false);
    auto base = expert_forward(tape, e, h_v, make_const(2, 4, two), make_const(1, 2, {0.8, 0.6}));
    auto with_ghost =
        expert_forward(tape, e, h_v, make_const(3, 4, three), make_const(1, 3, {0.8, 0.6, 1e-12}));
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(std::abs(base->data[i] - with_ghost->data[i]) < 1e-6);
}

TEST_CASE("shape validation") {
    auto e = ExpertParams::init(4, 61);
    Tape tape(false);
    auto bad_target = make_const(1, 3, {1.0, 2.0, 3.0});
    auto good_target = make_const(1, 4, {1.0, 2.0, 3.0, 4.0});
    auto bad_nbrs = make_const(2, 3, std::vector<double>(6, 0.0));
    auto good_nbrs = make_const(2, 4, std::vector<double>(8, 0.0));
    CHECK_THROWS_AS(attention(tape, e, bad_target, good_nbrs), shape_error);
    CHECK_THROWS_AS(attention(tape, e, good_target, bad_nbrs), shape_error);
    CHECK_THROWS_AS(
        masked_attention(tape, e, good_target, good_nbrs, make_const(1, 3, {1.0, 1.0, 1.0})),
        shape_error);
}

TEST_CASE("gradients match finite differences") {
    auto gen = rng_stream(23, "test.grad");
    auto e = ExpertParams::init(8, 71);
    auto h_v = make_param(1, 8, random_values(gen, 8, -1.0, 1.0));
    auto h_n = make_param(5, 8, random_values(gen, 40, -1.0, 1.0));
    auto beta = make_param(1, 5, random_values(gen, 5, 0.2, 0.9));

    std::vector<DiffValue> leaves = e.params();
    leaves.push_back(h_v);
    leaves.push_back(h_n);
    leaves.push_back(beta);
    check_gradients(leaves, [&](Tape& t) {
        return t.mean(expert_forward(t, e, h_v, h_n, beta));
    });
}

TEST_CASE("freezing clears the trainable flag both ways") {
    auto e = ExpertParams::init(3, 81);
    e.set_trainable(false);
    for (const auto& p : e.params()) CHECK_FALSE(p->requires_grad);
    e.set_trainable(true);
    for (const auto& p : e.params()) CHECK(p->requires_grad);
}

TEST_CASE("frozen parameters pass gradient through without accumulating") {
    auto gen = rng_stream(29, "test.freeze");
    auto e = ExpertParams::init(4, 91);
    e.set_trainable(false);
    auto h_v = make_param(1, 4, random_values(gen, 4, -1.0, 1.0));
    auto h_n = make_param(3, 4, random_values(gen, 12, -1.0, 1.0));

    Tape tape;
    auto loss = tape.mean(expert_forward(tape, e, h_v, h_n, DiffValue()));
    tape.backward(loss);

    for (const auto& p : e.params())
        for (double g : p->grad) CHECK(g == 0.0);
    // The inputs still receive gradient through the frozen weights.
    double total = 0.0;
    for (double g : h_v->grad) total += std::abs(g);
    for (double g : h_n->grad) total += std::abs(g);
    CHECK(total > 0.0);
}
