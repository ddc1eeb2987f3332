#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "dymoe/autodiff.hpp"

namespace testutil {

// Central-difference oracle shared by the numeric test suites. A gradient
// entry passes at 1e-4 relative error with a 1e-7 absolute floor. The builder
// must reconstruct the same scalar expression from the captured leaves on
// every call.
inline void check_gradients(const std::vector<dymoe::DiffValue>& leaves,
                            const std::function<dymoe::DiffValue(dymoe::Tape&)>& build,
                            double rel_tol = 1e-4) {
    constexpr double h = 1e-5;
    for (const auto& l : leaves) dymoe::zero_grad(l);
    dymoe::Tape tape;
    auto loss = build(tape);
    tape.backward(loss);
    std::vector<std::vector<double>> analytic;
    analytic.reserve(leaves.size());
    for (const auto& l : leaves) analytic.push_back(l->grad);

    for (std::size_t li = 0; li < leaves.size(); ++li) {
        const auto& l = leaves[li];
        for (std::size_t i = 0; i < l->size(); ++i) {
            const double orig = l->data[i];
            l->data[i] = orig + h;
            dymoe::Tape up_tape(false);
            const double up = build(up_tape)->scalar();
            l->data[i] = orig - h;
            dymoe::Tape dn_tape(false);
            const double dn = build(dn_tape)->scalar();
            l->data[i] = orig;
            const double fd = (up - dn) / (2.0 * h);
            const double got = analytic[li][i];
            const double err = std::abs(got - fd);
            const double mag = std::max(std::abs(got), std::abs(fd));
            INFO("leaf ", li, " entry ", i, ": analytic ", got, " vs finite diff ", fd);
            CHECK(err <= std::max(rel_tol * mag, 1e-7));
        }
    }
}

}  // namespace testutil
