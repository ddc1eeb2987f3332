#include "dymoe/losses.hpp"

#include <algorithm>
#include <string>

namespace dymoe {

namespace {

void check_block(std::size_t j, std::size_t t, const char* what) {
    if (j < 1 || j > t)
        throw range_error(std::string(what) + " index " + std::to_string(j) + " outside [1, " +
                          std::to_string(t) + "]");
}

}  // namespace

std::vector<double> one_hot(std::size_t j, std::size_t t) {
    check_block(j, t, "one-hot");
    std::vector<double> v(t, 0.0);
    v[j - 1] = 1.0;
    return v;
}

std::vector<double> multi_hot_arrival(std::size_t b, std::size_t t) {
    check_block(b, t, "arrival");
    std::vector<double> v(t, 0.0);
    for (std::size_t j = b; j <= t; ++j) v[j - 1] = 1.0;
    return v;
}

DiffValue block_guided_loss(Tape& tape, const DiffValue& raw_logits,
                            const std::vector<std::size_t>& blocks) {
    const std::size_t t = raw_logits->cols;
    if (blocks.size() != raw_logits->rows)
        throw shape_error(std::to_string(blocks.size()) + " block targets for " +
                          raw_logits->shape_str() + " gate logits");
    std::vector<int> targets;
    targets.reserve(blocks.size());
    for (std::size_t b : blocks) {
        check_block(b, t, "block");
        targets.push_back(static_cast<int>(b - 1));
    }
    return tape.cross_entropy(raw_logits, targets);
}

DiffValue graph_block_guided_loss(Tape& tape, const DiffValue& betas,
                                  const std::vector<std::size_t>& blocks) {
    const std::size_t t = betas->cols;
    if (blocks.size() != betas->rows)
        throw shape_error(std::to_string(blocks.size()) + " block targets for " +
                          betas->shape_str() + " arrival gates");
    std::vector<double> targets(betas->size());
    for (std::size_t r = 0; r < blocks.size(); ++r) {
        auto row = multi_hot_arrival(blocks[r], t);
        std::copy(row.begin(), row.end(), targets.begin() + r * t);
    }
    return tape.binary_cross_entropy(betas, targets);
}

DiffValue total_loss(Tape& tape, const DiffValue& cls, const std::vector<WeightedTerm>& bl_terms,
                     const std::vector<WeightedTerm>& gbl_terms, const LossConfig& cfg) {
    if (cfg.gamma < 0.0 || cfg.delta < 0.0)
        throw range_error("loss weights must be nonnegative");
    auto blend = [&](const std::vector<WeightedTerm>& terms, double weight) -> DiffValue {
        if (terms.empty() || weight == 0.0) return DiffValue();
        std::size_t total = 0;
        for (const auto& tm : terms) total += tm.count;
        if (total == 0) return DiffValue();
        DiffValue acc;
        for (const auto& tm : terms) {
            if (tm.count == 0) continue;
            auto part = tape.scale_const(
                tm.value, weight * static_cast<double>(tm.count) / static_cast<double>(total));
            acc = acc ? tape.add(acc, part) : part;
        }
        return acc;
    };
    DiffValue out = cls;
    if (auto bl = blend(bl_terms, cfg.gamma)) out = tape.add(out, bl);
    if (auto gbl = blend(gbl_terms, cfg.delta)) out = tape.add(out, gbl);
    return out;
}

}  // namespace dymoe
