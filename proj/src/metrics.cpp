#include "dymoe/metrics.hpp"

#include <string>

namespace dymoe {

MetricsMatrix::MetricsMatrix(std::size_t t) : t_(t), a_(t * t, 0.0), set_(t * t, false) {
    if (t == 0) throw range_error("metrics matrix needs at least one block");
}

std::size_t MetricsMatrix::cell(std::size_t i, std::size_t j) const {
    if (i < 1 || j < i || j > t_)
        throw range_error("cell (" + std::to_string(i) + ", " + std::to_string(j) +
                          ") outside the lower triangle of t=" + std::to_string(t_));
    return (i - 1) * t_ + (j - 1);
}

void MetricsMatrix::record(std::size_t i, std::size_t j, std::size_t correct, std::size_t total) {
    if (total == 0)
        throw data_error("cell (" + std::to_string(i) + ", " + std::to_string(j) +
                         ") scored over an empty evaluation split");
    if (correct > total)
        throw range_error(std::to_string(correct) + " correct out of " + std::to_string(total));
    set(i, j, static_cast<double>(correct) / static_cast<double>(total));
}

void MetricsMatrix::set(std::size_t i, std::size_t j, double value) {
    const std::size_t c = cell(i, j);
    if (set_[c])
        throw invariant_error("cell (" + std::to_string(i) + ", " + std::to_string(j) +
                              ") recorded twice");
    if (value < 0.0 || value > 1.0)
        throw range_error("accuracy " + std::to_string(value) + " outside [0, 1]");
    a_[c] = value;
    set_[c] = true;
}

bool MetricsMatrix::defined(std::size_t i, std::size_t j) const { return set_[cell(i, j)]; }

double MetricsMatrix::at(std::size_t i, std::size_t j) const {
    const std::size_t c = cell(i, j);
    if (!set_[c])
        throw invariant_error("cell (" + std::to_string(i) + ", " + std::to_string(j) +
                              ") was never recorded");
    return a_[c];
}

double MetricsMatrix::average_accuracy() const {
    double s = 0.0;
    for (std::size_t i = 1; i <= t_; ++i) s += at(i, i);
    return s / static_cast<double>(t_);
}

double MetricsMatrix::average_forgetting() const {
    double outer = 0.0;
    for (std::size_t j = 1; j <= t_; ++j) {
        double inner = 0.0;
        for (std::size_t i = 1; i <= j; ++i) inner += at(i, j) - at(i, i);
        outer += inner / static_cast<double>(j);
    }
    return outer / static_cast<double>(t_);
}

std::vector<double> MetricsMatrix::diagonal() const {
    std::vector<double> d;
    d.reserve(t_);
    for (std::size_t i = 1; i <= t_; ++i) d.push_back(at(i, i));
    return d;
}

}  // namespace dymoe
