#include "dymoe/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>

namespace dymoe {

namespace {

std::atomic<std::uint64_t> g_next_id{1};

std::string shape_of(std::size_t r, std::size_t c) {
    std::ostringstream os;
    os << r << "x" << c;
    return os.str();
}

DiffValue make_node(std::size_t rows, std::size_t cols, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->rows = rows;
    n->cols = cols;
    n->data.assign(rows * cols, 0.0);
    n->grad.assign(rows * cols, 0.0);
    n->requires_grad = requires_grad;
    n->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
    return n;
}

// C += A(m x k) * B(k x n), optionally transposing either input in place.
void gemm_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
              std::size_t n, bool ta, bool tb) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ta ? a[p * m + i] : a[i * k + p];
            if (av == 0.0) continue;
            const double* brow = tb ? nullptr : b + p * n;
            double* crow = c + i * n;
            if (tb) {
                for (std::size_t j = 0; j < n; ++j) crow[j] += av * b[j * k + p];
            } else {
                for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
            }
        }
    }
}

double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

double Node::scalar() const {
    if (size() != 1) throw shape_error("scalar() on non-scalar value of shape " + shape_str());
    return data[0];
}

std::string Node::shape_str() const { return shape_of(rows, cols); }

DiffValue make_param(std::size_t rows, std::size_t cols, std::vector<double> values) {
    if (values.size() != rows * cols)
        throw shape_error("param data length " + std::to_string(values.size()) +
                          " does not fill shape " + shape_of(rows, cols));
    auto n = make_node(rows, cols, true);
    n->data = std::move(values);
    return n;
}

DiffValue make_const(std::size_t rows, std::size_t cols, std::vector<double> values) {
    if (values.size() != rows * cols)
        throw shape_error("const data length " + std::to_string(values.size()) +
                          " does not fill shape " + shape_of(rows, cols));
    auto n = make_node(rows, cols, false);
    n->data = std::move(values);
    return n;
}

DiffValue make_zeros(std::size_t rows, std::size_t cols, bool requires_grad) {
    return make_node(rows, cols, requires_grad);
}

DiffValue make_scalar(double v, bool requires_grad) {
    auto n = make_node(1, 1, requires_grad);
    n->data[0] = v;
    return n;
}

void zero_grad(const DiffValue& v) { std::fill(v->grad.begin(), v->grad.end(), 0.0); }

DiffValue Tape::make_op(std::size_t rows, std::size_t cols, std::vector<DiffValue> parents) {
    bool rg = false;
    if (recording_) {
        for (const auto& p : parents)
            if (p->requires_grad) { rg = true; break; }
    }
    auto n = make_node(rows, cols, rg);
    if (rg) n->parents = std::move(parents);
    return n;
}

void Tape::finish(const DiffValue& n, std::function<void()> bw) {
    if (!n->requires_grad) return;
    n->backward = std::move(bw);
    record_.push_back(n);
}

void Tape::backward(const DiffValue& loss) {
    if (loss->size() != 1)
        throw shape_error("backward expects a scalar loss, got " + loss->shape_str());
    // Fresh pass through the record: op grads restart at zero, leaf grads keep
    // accumulating across calls.
    for (const auto& n : record_) std::fill(n->grad.begin(), n->grad.end(), 0.0);
    loss->grad[0] += 1.0;
    for (auto it = record_.rbegin(); it != record_.rend(); ++it) {
        if ((*it)->backward) (*it)->backward();
    }
}

DiffValue Tape::matmul(const DiffValue& a, const DiffValue& b) {
    if (a->cols != b->rows)
        throw shape_error("matmul mismatch: " + a->shape_str() + " * " + b->shape_str());
    auto out = make_op(a->rows, b->cols, {a, b});
    gemm_acc(a->data.data(), b->data.data(), out->data.data(), a->rows, a->cols, b->cols, false,
             false);
    finish(out, [self = out.get()] {
        Node* a = self->parents[0].get();
        Node* b = self->parents[1].get();
        if (a->requires_grad)
            gemm_acc(self->grad.data(), b->data.data(), a->grad.data(), a->rows, b->cols, a->cols,
                     false, true);
        if (b->requires_grad)
            gemm_acc(a->data.data(), self->grad.data(), b->grad.data(), a->cols, a->rows, b->cols,
                     true, false);
    });
    return out;
}

DiffValue Tape::matmul_nt(const DiffValue& a, const DiffValue& b) {
    if (a->cols != b->cols)
        throw shape_error("matmul_nt mismatch: " + a->shape_str() + " * (" + b->shape_str() +
                          ")^T");
    auto out = make_op(a->rows, b->rows, {a, b});
    gemm_acc(a->data.data(), b->data.data(), out->data.data(), a->rows, a->cols, b->rows, false,
             true);
    finish(out, [self = out.get()] {
        Node* a = self->parents[0].get();
        Node* b = self->parents[1].get();
        // c = a b^T: da += g b ; db += g^T a
        if (a->requires_grad)
            gemm_acc(self->grad.data(), b->data.data(), a->grad.data(), a->rows, b->rows, a->cols,
                     false, false);
        if (b->requires_grad)
            gemm_acc(self->grad.data(), a->data.data(), b->grad.data(), b->rows, a->rows, b->cols,
                     true, false);
    });
    return out;
}

DiffValue Tape::transpose(const DiffValue& a) {
    auto out = make_op(a->cols, a->rows, {a});
    for (std::size_t r = 0; r < a->rows; ++r)
        for (std::size_t c = 0; c < a->cols; ++c) out->data[c * a->rows + r] = a->data[r * a->cols + c];
    finish(out, [self = out.get()] {
        Node* a = self->parents[0].get();
        for (std::size_t r = 0; r < a->rows; ++r)
            for (std::size_t c = 0; c < a->cols; ++c)
                a->grad[r * a->cols + c] += self->grad[c * a->rows + r];
    });
    return out;
}

DiffValue Tape::add(const DiffValue& a, const DiffValue& b) {
    if (a->rows != b->rows || a->cols != b->cols)
        throw shape_error("add mismatch: " + a->shape_str() + " vs " + b->shape_str());
    auto out = make_op(a->rows, a->cols, {a, b});
    for (std::size_t i = 0; i < out->size(); ++i) out->data[i] = a->data[i] + b->data[i];
    finish(out, [self = out.get()] {
        for (int s = 0; s < 2; ++s) {
            Node* p = self->parents[s].get();
            if (!p->requires_grad) continue;
            for (std::size_t i = 0; i < self->size(); ++i) p->grad[i] += self->grad[i];
        }
    });
    return out;
}

DiffValue Tape::sub(const DiffValue& a, const DiffValue& b) {
    if (a->rows != b->rows || a->cols != b->cols)
        throw shape_error("sub mismatch: " + a->shape_str() + " vs " + b->shape_str());
    auto out = make_op(a->rows, a->cols, {a, b});
    for (std::size_t i = 0; i < out->size(); ++i) out->data[i] = a->data[i] - b->data[i];
    finish(out, [self = out.get()] {
        Node* a = self->parents[0].get();
        Node* b = self->parents[1].get();
        if (a->requires_grad)
            for (std::size_t i = 0; i < self->size(); ++i) a->grad[i] += self->grad[i];
        if (b->requires_grad)
            for (std::size_t i = 0; i < self->size(); ++i) b->grad[i] -= self->grad[i];
    });
    return out;
}

DiffValue Tape::mul(const DiffValue& a, const DiffValue& b) {
    if (a->rows != b->rows || a->cols != b->cols)
        throw shape_error("mul mismatch: " + a->shape_str() + " vs " + b->shape_str());
    auto out = make_op(a->rows, a->cols, {a, b});
    for (std::size_t i = 0; i < out->size(); ++i) out->data[i] = a->data[i] * b->data[i];
    finish(out, [self = out.get()] {
        Node* a = self->parents[0].get();
        Node* b = self->parents[1].get();
        if (a->requires_grad)
            for (std::size_t i = 0; i < self->size(); ++i) a->grad[i] += self->grad[i] * b->data[i];
        if (b->requires_grad)
            for (std::size_t i = 0; i < self->size(); ++i) b->grad[i] += self->grad[i] * a->data[i];
    });
    return out;
}

DiffValue Tape::add_rowvec(const DiffValue& a, const DiffValue& row) {
    if (row->rows != 1 || row->cols != a->cols)
        throw shape_error("add_rowvec mismatch: " + a->shape_str() + " vs " + row->shape_str());
    auto out = make_op(a->rows, a->cols, {a, row});
    for (std::size_t r = 0; r < a->rows; ++r)
        for (std::size_t c = 0; c < a->cols; ++c)
            out->data[r * a->cols + c] = a->data[r * a->cols + c] + row->data[c];
    finish(out, [self = out.get()] {
        Node* a = self->parents[0].get();
        Node* row = self->parents[1].get();
        if (a->requires_grad)
            for (std::size_t i = 0; i < self->size(); ++i) a->grad[i] += self->grad[i];
        if (row->requires_grad)
            for (std::size_t r = 0; r < self->rows; ++r)
                for (std::size_t c = 0; c < self->cols; ++c)
                    row->grad[c] += self->grad[r * self->cols + c];
    });
    return out;
}

DiffValue Tape::scale_const(const DiffValue& a, double c) {
    auto out = make_op(a->rows, a->cols, {a});
    for (std::size_t i = 0; i < out->size(); ++i) out->data[i] = a->data[i] * c;
    finish(out, [self = out.get(), c] {
        Node* a = self->parents[0].get();
        for (std::size_t i = 0; i < self->size(); ++i) a->grad[i] += self->grad[i] * c;
    });
    return out;
}

DiffValue Tape::mul_const(const DiffValue& a, const std::vector<double>& c) {
    if (c.size() != a->size())
        throw shape_error("mul_const array length " + std::to_string(c.size()) +
                          " vs value shape " + a->shape_str());
    auto out = make_op(a->rows, a->cols, {a});
    for (std::size_t i = 0; i < out->size(); ++i) out->data[i] = a->data[i] * c[i];
    finish(out, [self = out.get(), c] {
        Node* a = self->parents[0].get();
        for (std::size_t i = 0; i < self->size(); ++i) a->grad[i] += self->grad[i] * c[i];
    });
    return out;
}

DiffValue Tape::scale(const DiffValue& a, const DiffValue& s) {
    if (s->size() != 1) throw shape_error("scale factor must be 1x1, got " + s->shape_str());
    auto out = make_op(a->rows, a->cols, {a, s});
    const double sv = s->data[0];
    for (std::size_t i = 0; i < out->size(); ++i) out->data[i] = a->data[i] * sv;
    finish(out, [self = out.get()] {
        Node* a = self->parents[0].get();
        Node* s = self->parents[1].get();
        if (a->requires_grad)
            for (std::size_t i = 0; i < self->size(); ++i) a->grad[i] += self->grad[i] * s->data[0];
        if (s->requires_grad) {
            double acc = 0.0;
            for (std::size_t i = 0; i < self->size(); ++i) acc += self->grad[i] * a->data[i];
            s->grad[0] += acc;
        }
    });
    return out;
}

DiffValue Tape::mul_colvec(const DiffValue& a, const DiffValue& col) {
    if (col->cols != 1 || col->rows != a->rows)
        throw shape_error("mul_colvec mismatch: " + a->shape_str() + " vs " + col->shape_str());
    auto out = make_op(a->rows, a->cols, {a, col});
    for (std::size_t r = 0; r < a->rows; ++r)
        for (std::size_t c = 0; c < a->cols; ++c)
            out->data[r * a->cols + c] = a->data[r * a->cols + c] * col->data[r];
    finish(out, [self = out.get()] {
        Node* a = self->parents[0].get();
        Node* col = self->parents[1].get();
        for (std::size_t r = 0; r < self->rows; ++r) {
            const double cv = col->data[r];
            double acc = 0.0;
            for (std::size_t c = 0; c < self->cols; ++c) {
                const std::size_t i = r * self->cols + c;
                if (a->requires_grad) a->grad[i] += self->grad[i] * cv;
                acc += self->grad[i] * a->data[i];
            }
            if (col->requires_grad) col->grad[r] += acc;
        }
    });
    return out;
}

DiffValue Tape::expand_rows(const DiffValue& a, const std::vector<std::size_t>& idx,
                            std::size_t rows) {
    if (idx.size() != a->rows)
        throw shape_error("expand_rows: " + std::to_string(idx.size()) + " slots for " +
                          a->shape_str());
    std::vector<std::uint8_t> used(rows, 0);
    for (std::size_t i : idx) {
        if (i >= rows)
            throw range_error("expand_rows index " + std::to_string(i) + " out of " +
                              std::to_string(rows));
        if (used[i]++) throw range_error("expand_rows index " + std::to_string(i) + " repeated");
    }
    auto out = make_op(rows, a->cols, {a});
    for (std::size_t r = 0; r < idx.size(); ++r)
        std::copy(a->data.begin() + r * a->cols, a->data.begin() + (r + 1) * a->cols,
                  out->data.begin() + idx[r] * a->cols);
    finish(out, [self = out.get(), idx] {
        Node* a = self->parents[0].get();
        for (std::size_t r = 0; r < idx.size(); ++r)
            for (std::size_t c = 0; c < self->cols; ++c)
                a->grad[r * self->cols + c] += self->grad[idx[r] * self->cols + c];
    });
    return out;
}

DiffValue Tape::concat_rows(const std::vector<DiffValue>& parts) {
    if (parts.empty()) throw shape_error("concat_rows of zero parts");
    const std::size_t cols = parts[0]->cols;
    std::size_t rows = 0;
    for (const auto& p : parts) {
        if (p->cols != cols)
            throw shape_error("concat_rows width mismatch: " + p->shape_str() + " vs 1x" +
                              std::to_string(cols));
        rows += p->rows;
    }
    auto out = make_op(rows, cols, std::vector<DiffValue>(parts.begin(), parts.end()));
    std::size_t r = 0;
    for (const auto& p : parts) {
        std::copy(p->data.begin(), p->data.end(), out->data.begin() + r * cols);
        r += p->rows;
    }
    finish(out, [self = out.get()] {
        std::size_t r = 0;
        for (const auto& pp : self->parents) {
            Node* p = pp.get();
            if (p->requires_grad)
                for (std::size_t i = 0; i < p->size(); ++i)
                    p->grad[i] += self->grad[r * self->cols + i];
            r += p->rows;
        }
    });
    return out;
}

DiffValue Tape::gather_rows(const DiffValue& a, const std::vector<std::size_t>& idx) {
    for (std::size_t i : idx)
        if (i >= a->rows)
            throw range_error("gather_rows index " + std::to_string(i) + " out of " +
                              std::to_string(a->rows));
    auto out = make_op(idx.size(), a->cols, {a});
    for (std::size_t r = 0; r < idx.size(); ++r)
        std::copy(a->data.begin() + idx[r] * a->cols, a->data.begin() + (idx[r] + 1) * a->cols,
                  out->data.begin() + r * a->cols);
    finish(out, [self = out.get(), idx] {
        Node* a = self->parents[0].get();
        for (std::size_t r = 0; r < idx.size(); ++r)
            for (std::size_t c = 0; c < self->cols; ++c)
                a->grad[idx[r] * self->cols + c] += self->grad[r * self->cols + c];
    });
    return out;
}

DiffValue Tape::gather_cols(const DiffValue& a, const std::vector<std::size_t>& idx) {
    for (std::size_t i : idx)
        if (i >= a->cols)
            throw range_error("gather_cols index " + std::to_string(i) + " out of " +
                              std::to_string(a->cols));
    auto out = make_op(a->rows, idx.size(), {a});
    for (std::size_t r = 0; r < a->rows; ++r)
        for (std::size_t c = 0; c < idx.size(); ++c)
            out->data[r * idx.size() + c] = a->data[r * a->cols + idx[c]];
    finish(out, [self = out.get(), idx] {
        Node* a = self->parents[0].get();
        for (std::size_t r = 0; r < self->rows; ++r)
            for (std::size_t c = 0; c < idx.size(); ++c)
                a->grad[r * a->cols + idx[c]] += self->grad[r * idx.size() + c];
    });
    return out;
}

DiffValue Tape::relu(const DiffValue& a) {
    auto out = make_op(a->rows, a->cols, {a});
    for (std::size_t i = 0; i < out->size(); ++i) out->data[i] = a->data[i] > 0.0 ? a->data[i] : 0.0;
    finish(out, [self = out.get()] {
        Node* a = self->parents[0].get();
        for (std::size_t i = 0; i < self->size(); ++i)
            if (a->data[i] > 0.0) a->grad[i] += self->grad[i];
    });
    return out;
}

DiffValue Tape::log(const DiffValue& a) {
    auto out = make_op(a->rows, a->cols, {a});
    for (std::size_t i = 0; i < out->size(); ++i) {
        if (!(a->data[i] > 0.0))
            throw error("log of non-positive value " + std::to_string(a->data[i]));
        out->data[i] = std::log(a->data[i]);
    }
    finish(out, [self = out.get()] {
        Node* a = self->parents[0].get();
        for (std::size_t i = 0; i < self->size(); ++i) a->grad[i] += self->grad[i] / a->data[i];
    });
    return out;
}

DiffValue Tape::sigmoid(const DiffValue& a) {
    auto out = make_op(a->rows, a->cols, {a});
    for (std::size_t i = 0; i < out->size(); ++i) out->data[i] = stable_sigmoid(a->data[i]);
    finish(out, [self = out.get()] {
        Node* a = self->parents[0].get();
        for (std::size_t i = 0; i < self->size(); ++i) {
            const double s = self->data[i];
            a->grad[i] += self->grad[i] * s * (1.0 - s);
        }
    });
    return out;
}

DiffValue Tape::softplus(const DiffValue& a) {
    auto out = make_op(a->rows, a->cols, {a});
    for (std::size_t i = 0; i < out->size(); ++i) {
        const double x = a->data[i];
        out->data[i] = std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
    }
    finish(out, [self = out.get()] {
        Node* a = self->parents[0].get();
        for (std::size_t i = 0; i < self->size(); ++i)
            a->grad[i] += self->grad[i] * stable_sigmoid(a->data[i]);
    });
    return out;
}

DiffValue Tape::clamp(const DiffValue& a, double lo, double hi) {
    auto out = make_op(a->rows, a->cols, {a});
    for (std::size_t i = 0; i < out->size(); ++i)
        out->data[i] = std::min(std::max(a->data[i], lo), hi);
    finish(out, [self = out.get(), lo, hi] {
        Node* a = self->parents[0].get();
        for (std::size_t i = 0; i < self->size(); ++i)
            if (a->data[i] >= lo && a->data[i] <= hi) a->grad[i] += self->grad[i];
    });
    return out;
}

DiffValue Tape::row_softmax(const DiffValue& a) {
    return masked_row_softmax(a, std::vector<std::uint8_t>(a->size(), 1));
}

DiffValue Tape::masked_row_softmax(const DiffValue& a, const std::vector<std::uint8_t>& mask) {
    if (mask.size() != a->size())
        throw shape_error("softmax mask length " + std::to_string(mask.size()) +
                          " vs value shape " + a->shape_str());
    auto out = make_op(a->rows, a->cols, {a});
    for (std::size_t r = 0; r < a->rows; ++r) {
        const double* x = a->data.data() + r * a->cols;
        const std::uint8_t* m = mask.data() + r * a->cols;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < a->cols; ++c)
            if (m[c] && x[c] > mx) mx = x[c];
        if (mx == -std::numeric_limits<double>::infinity())
            throw invariant_error("softmax row " + std::to_string(r) + " fully masked");
        double z = 0.0;
        double* y = out->data.data() + r * a->cols;
        for (std::size_t c = 0; c < a->cols; ++c) {
            y[c] = m[c] ? std::exp(x[c] - mx) : 0.0;
            z += y[c];
        }
        for (std::size_t c = 0; c < a->cols; ++c) y[c] /= z;
    }
    finish(out, [self = out.get()] {
        Node* a = self->parents[0].get();
        for (std::size_t r = 0; r < self->rows; ++r) {
            const double* p = self->data.data() + r * self->cols;
            const double* g = self->grad.data() + r * self->cols;
            double dot = 0.0;
            for (std::size_t c = 0; c < self->cols; ++c) dot += p[c] * g[c];
            for (std::size_t c = 0; c < self->cols; ++c)
                a->grad[r * self->cols + c] += p[c] * (g[c] - dot);
        }
    });
    return out;
}

DiffValue Tape::cross_entropy(const DiffValue& logits, const std::vector<int>& targets) {
    if (targets.size() != logits->rows)
        throw shape_error("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                          logits->shape_str() + " logits");
    const std::size_t m = logits->rows, c = logits->cols;
    for (int t : targets)
        if (t < 0 || static_cast<std::size_t>(t) >= c)
            throw range_error("cross_entropy target " + std::to_string(t) + " outside [0, " +
                              std::to_string(c) + ")");
    auto out = make_op(1, 1, {logits});
    std::vector<double> probs(m * c);
    double total = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
        const double* x = logits->data.data() + r * c;
        double mx = *std::max_element(x, x + c);
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            probs[r * c + j] = std::exp(x[j] - mx);
            z += probs[r * c + j];
        }
        for (std::size_t j = 0; j < c; ++j) probs[r * c + j] /= z;
        total += mx + std::log(z) - x[targets[r]];
    }
    out->data[0] = total / static_cast<double>(m);
    finish(out, [self = out.get(), targets, probs = std::move(probs)] {
        Node* logits = self->parents[0].get();
        const std::size_t m = logits->rows, c = logits->cols;
        const double g = self->grad[0] / static_cast<double>(m);
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t j = 0; j < c; ++j)
                logits->grad[r * c + j] +=
                    g * (probs[r * c + j] - (static_cast<std::size_t>(targets[r]) == j ? 1.0 : 0.0));
    });
    return out;
}

DiffValue Tape::binary_cross_entropy(const DiffValue& p, const std::vector<double>& targets) {
    if (targets.size() != p->size())
        throw shape_error("binary_cross_entropy: " + std::to_string(targets.size()) +
                          " targets for " + p->shape_str() + " probabilities");
    const std::size_t n = p->size();
    auto out = make_op(1, 1, {p});
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double q = std::min(std::max(p->data[i], kProbEps), 1.0 - kProbEps);
        total -= targets[i] * std::log(q) + (1.0 - targets[i]) * std::log(1.0 - q);
    }
    out->data[0] = total / static_cast<double>(n);
    finish(out, [self = out.get(), targets] {
        Node* p = self->parents[0].get();
        const std::size_t n = p->size();
        const double g = self->grad[0] / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double raw = p->data[i];
            if (raw < kProbEps || raw > 1.0 - kProbEps) continue;  // clamped: flat
            p->grad[i] += g * (raw - targets[i]) / (raw * (1.0 - raw));
        }
    });
    return out;
}

DiffValue Tape::sum(const DiffValue& a) {
    auto out = make_op(1, 1, {a});
    double t = 0.0;
    for (double v : a->data) t += v;
    out->data[0] = t;
    finish(out, [self = out.get()] {
        Node* a = self->parents[0].get();
        for (std::size_t i = 0; i < a->size(); ++i) a->grad[i] += self->grad[0];
    });
    return out;
}

DiffValue Tape::mean(const DiffValue& a) {
    auto out = make_op(1, 1, {a});
    double t = 0.0;
    for (double v : a->data) t += v;
    out->data[0] = t / static_cast<double>(a->size());
    finish(out, [self = out.get()] {
        Node* a = self->parents[0].get();
        const double g = self->grad[0] / static_cast<double>(a->size());
        for (std::size_t i = 0; i < a->size(); ++i) a->grad[i] += g;
    });
    return out;
}

}  // namespace dymoe
