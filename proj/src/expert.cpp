#include "dymoe/expert.hpp"

#include <cmath>
#include <random>

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

ExpertParams ExpertParams::init(std::size_t width, std::uint64_t seed) {
    auto gen = rng_stream(seed, "expert.init");
    const double bound = 1.0 / std::sqrt(static_cast<double>(width));
    ExpertParams e;
    e.wq = uniform_param(width, width, bound, gen);
    e.wk = uniform_param(width, width, bound, gen);
    e.wv = uniform_param(width, width, bound, gen);
    e.mlp_w1 = uniform_param(width, width, bound, gen);
    e.mlp_b1 = uniform_param(1, width, bound, gen);
    e.mlp_w2 = uniform_param(width, width, bound, gen);
    e.mlp_b2 = uniform_param(1, width, bound, gen);
    return e;
}

std::vector<DiffValue> ExpertParams::params() const {
    return {wq, wk, wv, mlp_w1, mlp_b1, mlp_w2, mlp_b2};
}

void ExpertParams::set_trainable(bool trainable) {
    for (auto& p : params()) p->requires_grad = trainable;
}

DiffValue attention(Tape& tape, const ExpertParams& e, const DiffValue& h_v,
                    const DiffValue& h_n) {
    return masked_attention(tape, e, h_v, h_n, DiffValue());
}

DiffValue masked_attention(Tape& tape, const ExpertParams& e, const DiffValue& h_v,
                           const DiffValue& h_n, const DiffValue& beta) {
    const std::size_t n = e.width();
    if (h_v->rows != 1 || h_v->cols != n)
        throw shape_error("attention target must be 1x" + std::to_string(n) + ", got " +
                          h_v->shape_str());
    if (h_n->rows == 0) return make_const(1, n, std::vector<double>(n, 0.0));
    if (h_n->cols != n)
        throw shape_error("neighbor width " + std::to_string(h_n->cols) + " vs layer width " +
                          std::to_string(n));
    if (beta && (beta->rows != 1 || beta->cols != h_n->rows))
        throw shape_error("beta shape " + beta->shape_str() + " for " +
                          std::to_string(h_n->rows) + " neighbors");

    auto q = tape.matmul_nt(h_v, e.wq);
    auto keys = tape.matmul_nt(h_n, e.wk);
    auto values = tape.matmul_nt(h_n, e.wv);
    auto logits = tape.scale_const(tape.matmul_nt(q, keys), 1.0 / std::sqrt(static_cast<double>(n)));
    if (beta) logits = tape.add(logits, tape.log(beta));
    return tape.matmul(tape.row_softmax(logits), values);
}

DiffValue expert_mlp(Tape& tape, const ExpertParams& e, const DiffValue& x) {
    auto hidden = tape.relu(tape.add_rowvec(tape.matmul_nt(x, e.mlp_w1), e.mlp_b1));
    return tape.add_rowvec(tape.matmul_nt(hidden, e.mlp_w2), e.mlp_b2);
}

DiffValue expert_forward(Tape& tape, const ExpertParams& e, const DiffValue& h_v,
                         const DiffValue& h_n, const DiffValue& beta) {
    return expert_mlp(tape, e, tape.add(h_v, masked_attention(tape, e, h_v, h_n, beta)));
}

}  // namespace dymoe
