#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dymoe/autodiff.hpp"

namespace dymoe {

// Two spherical Gaussian components of shared deviation sigma, centered at
// -separation/2 and +separation/2 along the first axis. Component c labels
// its draws by the distance threshold radius: inside -> class 2c-2, outside
// -> class 2c-1, four classes total.
struct MixtureSpec {
    std::size_t dims = 8;
    double separation = 4.0;  // distance between the component means
    double sigma = 1.0;
    double radius = 1.0;      // label threshold, must satisfy 2*radius <= separation
};

// Throws config_error when the threshold geometry or the parameters are
// unusable.
void validate_spec(const MixtureSpec& spec);

// Mean vector of component 1 or 2.
std::vector<double> component_mean(const MixtureSpec& spec, int component);

struct LabeledSample {
    std::vector<double> x;
    int label = 0;
    int component = 1;
};

int label_by_distance(const std::vector<double>& x, const MixtureSpec& spec, int component);

// n draws, split evenly between the components (component 1 takes the odd
// remainder), labeled by distance.
std::vector<LabeledSample> sample_mixture(const MixtureSpec& spec, std::size_t n,
                                          std::uint64_t seed);

// Softmax over the distance-to-gate similarities -|x-g_i|^2 / (2 sigma^2),
// returned as (alpha_1, alpha_2). The spec overload gates against the true
// component means; the experiment passes the empirical ones.
std::pair<double, double> gaussian_gate(const std::vector<double>& x,
                                        const std::vector<double>& g1,
                                        const std::vector<double>& g2, double sigma);
std::pair<double, double> gaussian_gate(const std::vector<double>& x, const MixtureSpec& spec);

// A free-standing two-layer classifier: relu(x W1^T + b1) W2^T + b2. The
// mixture setting is plain i.i.d. vectors, so no graph machinery applies.
struct TheoremExpert {
    DiffValue w1;  // hidden x dims
    DiffValue b1;  // 1 x hidden
    DiffValue w2;  // classes x hidden
    DiffValue b2;  // 1 x classes
    bool trained = false;

    static TheoremExpert create(std::size_t dims, std::size_t hidden, std::size_t classes,
                                std::uint64_t seed);
    std::vector<DiffValue> params() const;
};

// Defaults are sized so each expert is near-converged and its logits are
// saturated outside its own component; the loss comparison then measures
// the combination rules rather than leftover optimization noise.
struct TheoremTrainSettings {
    std::size_t samples_per_expert = 2000;
    std::size_t epochs = 200;
    double lr = 1e-3;
    std::size_t hidden = 256;
    std::size_t batch_size = 64;
};

// Each expert fits its own component's samples; the gates are the empirical
// means of those training sets.
struct TrainedExperts {
    TheoremExpert e1, e2;
    std::vector<double> g1, g2;
};

TrainedExperts train_theorem_experts(const MixtureSpec& spec, const TheoremTrainSettings& ts,
                                     std::uint64_t seed);

// Batched no-grad logits, one row of four per sample.
std::vector<std::vector<double>> expert_logits(const TheoremExpert& e,
                                               const std::vector<LabeledSample>& samples);

// Per-sample cross-entropy under the two combination rules, index-aligned
// with samples. Both rules mix the experts' predictive distributions
// p_i = softmax(f_i): the isolation rule averages them with equal weight,
// the gated rule weights them by gaussian_gate. Parallel over chunks when
// DYMOE_THREADS allows; the merge is by index, so results never depend on
// the worker count.
struct PairedLosses {
    std::vector<double> pi;  // -log((p1[y] + p2[y]) / 2)
    std::vector<double> dy;  // -log(alpha_1 p1[y] + alpha_2 p2[y])
};

PairedLosses paired_losses(const TrainedExperts& ex, const MixtureSpec& spec,
                           const std::vector<LabeledSample>& samples);

struct TheoremResult {
    double loss_pi = 0.0;
    double loss_dy = 0.0;
    double delta = 0.0;      // loss_pi - loss_dy
    double std_error = 0.0;  // bootstrap standard error of delta
    std::size_t n = 0;
};

// Monte-Carlo comparison over n fresh draws with a 1000-resample paired
// bootstrap for the standard error.
TheoremResult compare_losses(const MixtureSpec& spec, const TrainedExperts& ex, std::size_t n,
                             std::uint64_t seed);

struct SweepPoint {
    MixtureSpec spec;
    TheoremResult result;
};

// Re-trains and re-evaluates the comparison at each sigma with everything
// else held at base.
std::vector<SweepPoint> theorem_sweep(const MixtureSpec& base, const std::vector<double>& sigmas,
                                      const TheoremTrainSettings& ts, std::size_t n_eval,
                                      std::uint64_t seed);

}  // namespace dymoe
