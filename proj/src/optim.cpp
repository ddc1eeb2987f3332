#include "dymoe/optim.hpp"

#include <cmath>

namespace dymoe {

void Adam::step(const std::vector<DiffValue>& params) {
    step_ += 1;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (const auto& p : params) {
        if (!p->requires_grad)
            throw invariant_error("optimizer step over a frozen parameter");
        auto& slot = slots_[p->id];
        if (slot.m.empty()) {
            slot.m.assign(p->size(), 0.0);
            slot.v.assign(p->size(), 0.0);
        } else if (slot.m.size() != p->size()) {
            throw invariant_error("parameter " + std::to_string(p->id) + " changed size");
        }
        for (std::size_t i = 0; i < p->size(); ++i) {
            const double g = p->grad[i];
            slot.m[i] = cfg_.beta1 * slot.m[i] + (1.0 - cfg_.beta1) * g;
            slot.v[i] = cfg_.beta2 * slot.v[i] + (1.0 - cfg_.beta2) * g * g;
            const double m_hat = slot.m[i] / bc1;
            const double v_hat = slot.v[i] / bc2;
            p->data[i] -= cfg_.lr * (m_hat / (std::sqrt(v_hat) + cfg_.eps) +
                                     cfg_.weight_decay * p->data[i]);
        }
    }
}

void Adam::reset() {
    slots_.clear();
    step_ = 0;
}

void zero_all(const std::vector<DiffValue>& params) {
    for (const auto& p : params) zero_grad(p);
}

}  // namespace dymoe
