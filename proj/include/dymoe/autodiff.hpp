#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dymoe/errors.hpp"

namespace dymoe {

struct Node;
// A dense row-major matrix participating in reverse-mode differentiation.
// Scalars are 1x1, row vectors 1xn. Handles are shared: the tape and the
// model both point at the same storage.
using DiffValue = std::shared_ptr<Node>;

struct Node {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;
    std::vector<double> grad;
    bool requires_grad = false;
    std::uint64_t id = 0;  // creation order; parents always have smaller ids
    std::vector<DiffValue> parents;
    std::function<void()> backward;  // empty for leaves

    std::size_t size() const { return rows * cols; }
    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    double scalar() const;
    std::string shape_str() const;
};

// Leaves live outside any tape. Parameters survive across forward passes and
// accumulate gradients until explicitly reset.
DiffValue make_param(std::size_t rows, std::size_t cols, std::vector<double> values);
DiffValue make_const(std::size_t rows, std::size_t cols, std::vector<double> values);
DiffValue make_zeros(std::size_t rows, std::size_t cols, bool requires_grad);
DiffValue make_scalar(double v, bool requires_grad = false);

void zero_grad(const DiffValue& v);

// Records one forward pass. Rebuilt per pass: construct, run ops, call
// backward(), let it go out of scope. With recording off, ops only compute
// values (read-only inference; safe to run in parallel on disjoint tapes).
class Tape {
public:
    explicit Tape(bool recording = true) : recording_(recording) {}

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool recording() const { return recording_; }
    std::size_t recorded_ops() const { return record_.size(); }

    // Populates grad on every requires_grad ancestor of `loss`. Repeated
    // calls without a grad reset accumulate in the leaves.
    void backward(const DiffValue& loss);

    // --- core linear algebra ---
    DiffValue matmul(const DiffValue& a, const DiffValue& b);
    DiffValue matmul_nt(const DiffValue& a, const DiffValue& b);  // a * b^T
    DiffValue transpose(const DiffValue& a);
    DiffValue add(const DiffValue& a, const DiffValue& b);
    DiffValue sub(const DiffValue& a, const DiffValue& b);
    DiffValue mul(const DiffValue& a, const DiffValue& b);  // elementwise
    DiffValue add_rowvec(const DiffValue& a, const DiffValue& row);
    DiffValue scale_const(const DiffValue& a, double c);
    DiffValue mul_const(const DiffValue& a, const std::vector<double>& c);  // elementwise by fixed array
    DiffValue scale(const DiffValue& a, const DiffValue& scalar);
    DiffValue mul_colvec(const DiffValue& a, const DiffValue& col);  // row r scaled by col[r]

    // --- shape plumbing ---
    DiffValue concat_rows(const std::vector<DiffValue>& parts);
    DiffValue gather_rows(const DiffValue& a, const std::vector<std::size_t>& idx);
    DiffValue gather_cols(const DiffValue& a, const std::vector<std::size_t>& idx);
    // Inverse of gather_rows: row i of `a` lands at row idx[i] of an
    // otherwise-zero rows x a->cols result. Indices must not repeat.
    DiffValue expand_rows(const DiffValue& a, const std::vector<std::size_t>& idx,
                          std::size_t rows);

    // --- elementwise nonlinearities ---
    DiffValue relu(const DiffValue& a);
    DiffValue log(const DiffValue& a);
    DiffValue sigmoid(const DiffValue& a);
    DiffValue softplus(const DiffValue& a);
    DiffValue clamp(const DiffValue& a, double lo, double hi);

    // --- rows as distributions ---
    DiffValue row_softmax(const DiffValue& a);
    // Softmax restricted to mask!=0 entries per row; masked-out outputs are 0.
    DiffValue masked_row_softmax(const DiffValue& a, const std::vector<std::uint8_t>& mask);

    // --- losses / reductions ---
    // Mean over rows of -log softmax(logits)[target].
    DiffValue cross_entropy(const DiffValue& logits, const std::vector<int>& targets);
    // Mean over entries of -[t log p + (1-t) log(1-p)], p clamped to [eps, 1-eps].
    DiffValue binary_cross_entropy(const DiffValue& p, const std::vector<double>& targets);
    DiffValue sum(const DiffValue& a);
    DiffValue mean(const DiffValue& a);

    static constexpr double kProbEps = 1e-12;

private:
    DiffValue make_op(std::size_t rows, std::size_t cols, std::vector<DiffValue> parents);
    void finish(const DiffValue& n, std::function<void()> bw);

    bool recording_;
    std::vector<DiffValue> record_;
};

}  // namespace dymoe
