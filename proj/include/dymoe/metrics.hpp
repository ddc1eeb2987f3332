#pragma once

#include <cstddef>
#include <vector>

#include "dymoe/errors.hpp"

namespace dymoe {

// Lower-triangular accuracy bookkeeping: a_{i,j} holds the score of block-i
// evaluation nodes measured after training block j, for 1 <= i <= j <= t.
// Cells are write-once so a protocol bug cannot silently overwrite history.
class MetricsMatrix {
public:
    explicit MetricsMatrix(std::size_t t);

    std::size_t blocks() const { return t_; }

    void record(std::size_t i, std::size_t j, std::size_t correct, std::size_t total);
    // Direct write used when a cell's value is copied rather than re-measured
    // (a frozen model cannot change its own past scores). Still write-once.
    void set(std::size_t i, std::size_t j, double value);

    bool defined(std::size_t i, std::size_t j) const;
    double at(std::size_t i, std::size_t j) const;

    // AA = (1/t) sum_i a_{i,i}; needs the full diagonal.
    double average_accuracy() const;
    // AF = (1/t) sum_j (1/j) sum_{i<=j} (a_{i,j} - a_{i,i}); needs the full
    // lower triangle.
    double average_forgetting() const;

    std::vector<double> diagonal() const;

private:
    std::size_t cell(std::size_t i, std::size_t j) const;
    std::size_t t_;
    std::vector<double> a_;
    std::vector<bool> set_;
};

}  // namespace dymoe
