#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "dymoe/autodiff.hpp"

namespace dymoe {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-3;  // decoupled, applied directly to the data
};

// Adam with decoupled weight decay. Moment buffers are keyed by parameter
// node id, so a parameter keeps its history across steps even when the set
// passed to step() varies; a rebuilt parameter (new node) starts fresh.
class Adam {
public:
    explicit Adam(const AdamConfig& cfg) : cfg_(cfg) {}

    void step(const std::vector<DiffValue>& params);
    void reset();
    std::size_t steps() const { return step_; }

private:
    struct Moments {
        std::vector<double> m, v;
    };
    AdamConfig cfg_;
    std::unordered_map<std::uint64_t, Moments> slots_;
    std::size_t step_ = 0;
};

void zero_all(const std::vector<DiffValue>& params);

}  // namespace dymoe
