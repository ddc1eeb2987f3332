#include "dymoe/theorem.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <thread>

#include "dymoe/optim.hpp"
#include "dymoe/rng.hpp"
#include "dymoe/trainer.hpp"

namespace dymoe {

namespace {

constexpr std::size_t kClasses = 4;
constexpr std::size_t kBootstrapResamples = 1000;

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void check_component(int component) {
    if (component != 1 && component != 2)
        throw range_error("component " + std::to_string(component) + " outside {1, 2}");
}

DiffValue mlp_forward(Tape& tape, const TheoremExpert& e, const DiffValue& x) {
    auto hidden = tape.relu(tape.add_rowvec(tape.matmul_nt(x, e.w1), e.b1));
    return tape.add_rowvec(tape.matmul_nt(hidden, e.w2), e.b2);
}

DiffValue sample_matrix(const std::vector<LabeledSample>& samples, std::size_t start,
                        std::size_t stop, std::size_t dims) {
    std::vector<double> flat((stop - start) * dims);
    for (std::size_t i = start; i < stop; ++i) {
        if (samples[i].x.size() != dims)
            throw shape_error("sample " + std::to_string(i) + " has " +
                              std::to_string(samples[i].x.size()) + " coordinates, expected " +
                              std::to_string(dims));
        std::copy(samples[i].x.begin(), samples[i].x.end(), flat.begin() + (i - start) * dims);
    }
    return make_const(stop - start, dims, std::move(flat));
}

double log_sum_exp(const double* v, std::size_t n) {
    double top = v[0];
    for (std::size_t i = 1; i < n; ++i) top = std::max(top, v[i]);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::exp(v[i] - top);
    return top + std::log(s);
}

}  // namespace

void validate_spec(const MixtureSpec& spec) {
    if (spec.dims == 0) throw config_error("mixture needs at least one dimension");
    if (spec.sigma <= 0.0) throw config_error("sigma must be positive");
    if (spec.separation <= 0.0) throw config_error("mean separation must be positive");
    if (spec.radius < 0.0) throw config_error("label radius must be nonnegative");
    if (2.0 * spec.radius > spec.separation)
        throw config_error("label radius too large: need 2r <= separation, got 2*" +
                           std::to_string(spec.radius) + " > " + std::to_string(spec.separation));
}

std::vector<double> component_mean(const MixtureSpec& spec, int component) {
    check_component(component);
    std::vector<double> mu(spec.dims, 0.0);
    mu[0] = (component == 1 ? -0.5 : 0.5) * spec.separation;
    return mu;
}

int label_by_distance(const std::vector<double>& x, const MixtureSpec& spec, int component) {
    check_component(component);
    const auto mu = component_mean(spec, component);
    if (x.size() != mu.size())
        throw shape_error("point has " + std::to_string(x.size()) + " coordinates, expected " +
                          std::to_string(mu.size()));
    const bool inside = squared_distance(x, mu) <= spec.radius * spec.radius;
    if (component == 1) return inside ? 0 : 1;
    return inside ? 2 : 3;
}

std::vector<LabeledSample> sample_mixture(const MixtureSpec& spec, std::size_t n,
                                          std::uint64_t seed) {
    validate_spec(spec);
    std::vector<LabeledSample> out;
    out.reserve(n);
    for (int component : {1, 2}) {
        const std::size_t count = component == 1 ? n - n / 2 : n / 2;
        const auto mu = component_mean(spec, component);
        auto gen = rng_stream(seed, "mixture.sample", static_cast<std::uint64_t>(component));
        std::normal_distribution<double> z(0.0, 1.0);
        for (std::size_t i = 0; i < count; ++i) {
            LabeledSample s;
            s.component = component;
            s.x.resize(spec.dims);
            for (std::size_t c = 0; c < spec.dims; ++c) s.x[c] = mu[c] + spec.sigma * z(gen);
            s.label = label_by_distance(s.x, spec, component);
            out.push_back(std::move(s));
        }
    }
    return out;
}

std::pair<double, double> gaussian_gate(const std::vector<double>& x,
                                        const std::vector<double>& g1,
                                        const std::vector<double>& g2, double sigma) {
    if (sigma <= 0.0) throw config_error("sigma must be positive");
    if (x.size() != g1.size() || x.size() != g2.size())
        throw shape_error("gate vectors disagree with the point dimension");
    const double q = (squared_distance(x, g1) - squared_distance(x, g2)) / (2.0 * sigma * sigma);
    return {1.0 / (1.0 + std::exp(q)), 1.0 / (1.0 + std::exp(-q))};
}

std::pair<double, double> gaussian_gate(const std::vector<double>& x, const MixtureSpec& spec) {
    validate_spec(spec);
    return gaussian_gate(x, component_mean(spec, 1), component_mean(spec, 2), spec.sigma);
}

TheoremExpert TheoremExpert::create(std::size_t dims, std::size_t hidden, std::size_t classes,
                                    std::uint64_t seed) {
    if (dims == 0 || hidden == 0 || classes == 0)
        throw config_error("expert dimensions must be positive");
    auto gen = rng_stream(seed, "theorem.expert.init");
    auto draw = [&gen](std::size_t rows, std::size_t cols, std::size_t fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> u(-bound, bound);
        std::vector<double> v(rows * cols);
        for (auto& e : v) e = u(gen);
        return make_param(rows, cols, std::move(v));
    };
    TheoremExpert e;
    e.w1 = draw(hidden, dims, dims);
    e.b1 = draw(1, hidden, dims);
    e.w2 = draw(classes, hidden, hidden);
    e.b2 = draw(1, classes, hidden);
    return e;
}

std::vector<DiffValue> TheoremExpert::params() const { return {w1, b1, w2, b2}; }

TrainedExperts train_theorem_experts(const MixtureSpec& spec, const TheoremTrainSettings& ts,
                                     std::uint64_t seed) {
    validate_spec(spec);
    if (ts.samples_per_expert == 0) throw config_error("training sample count must be positive");
    if (ts.epochs == 0) throw config_error("epochs must be positive");
    if (ts.lr <= 0.0) throw config_error("learning rate must be positive");
    if (ts.hidden == 0) throw config_error("hidden width must be positive");
    if (ts.batch_size == 0) throw config_error("batch size must be positive");

    auto data = sample_mixture(spec, 2 * ts.samples_per_expert, stream_key(seed, "theorem.train"));
    std::vector<std::vector<LabeledSample>> split(2);
    for (auto& s : data) split[static_cast<std::size_t>(s.component) - 1].push_back(std::move(s));

    TrainedExperts out;
    for (int component : {1, 2}) {
        const auto& samples = split[static_cast<std::size_t>(component) - 1];

        std::vector<double> mean(spec.dims, 0.0);
        for (const auto& s : samples)
            for (std::size_t c = 0; c < spec.dims; ++c) mean[c] += s.x[c];
        for (auto& v : mean) v /= static_cast<double>(samples.size());

        auto expert = TheoremExpert::create(
            spec.dims, ts.hidden, kClasses,
            stream_key(seed, "theorem.expert", static_cast<std::uint64_t>(component)));
        auto params = expert.params();

        AdamConfig acfg;
        acfg.lr = ts.lr;
        acfg.weight_decay = 0.0;
        Adam opt(acfg);

        std::vector<std::size_t> order(samples.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t epoch = 0; epoch < ts.epochs; ++epoch) {
            auto gen = rng_stream(seed, "theorem.shuffle", static_cast<std::uint64_t>(component),
                                  epoch);
            std::shuffle(order.begin(), order.end(), gen);
            for (std::size_t lo = 0; lo < order.size(); lo += ts.batch_size) {
                const std::size_t hi = std::min(order.size(), lo + ts.batch_size);
                std::vector<double> buf((hi - lo) * spec.dims);
                std::vector<int> labels;
                labels.reserve(hi - lo);
                for (std::size_t i = lo; i < hi; ++i) {
                    const auto& s = samples[order[i]];
                    std::copy(s.x.begin(), s.x.end(), buf.begin() + (i - lo) * spec.dims);
                    labels.push_back(s.label);
                }
                Tape tape;
                auto x = make_const(hi - lo, spec.dims, buf);
                auto loss = tape.cross_entropy(mlp_forward(tape, expert, x), labels);
                zero_all(params);
                tape.backward(loss);
                opt.step(params);
            }
        }
        expert.trained = true;

        if (component == 1) {
            out.e1 = std::move(expert);
            out.g1 = std::move(mean);
        } else {
            out.e2 = std::move(expert);
            out.g2 = std::move(mean);
        }
    }
    return out;
}

std::vector<std::vector<double>> expert_logits(const TheoremExpert& e,
                                               const std::vector<LabeledSample>& samples) {
    std::vector<std::vector<double>> out;
    if (samples.empty()) return out;
    Tape tape(false);
    auto logits = mlp_forward(tape, e, sample_matrix(samples, 0, samples.size(), e.w1->cols));
    out.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        out.emplace_back(logits->data.begin() + i * kClasses,
                         logits->data.begin() + (i + 1) * kClasses);
    return out;
}

PairedLosses paired_losses(const TrainedExperts& ex, const MixtureSpec& spec,
                           const std::vector<LabeledSample>& samples) {
    if (!ex.e1.trained || !ex.e2.trained)
        throw invariant_error("theorem experts must be trained before comparison");
    if (ex.g1.size() != spec.dims || ex.g2.size() != spec.dims)
        throw shape_error("gate vectors disagree with the mixture dimension");

    PairedLosses out;
    out.pi.resize(samples.size());
    out.dy.resize(samples.size());
    if (samples.empty()) return out;

    constexpr std::size_t kChunk = 1024;
    const std::size_t chunks = (samples.size() + kChunk - 1) / kChunk;

    auto score_chunk = [&](std::size_t ci) {
        const std::size_t start = ci * kChunk;
        const std::size_t stop = std::min(samples.size(), start + kChunk);
        Tape tape(false);
        auto x = sample_matrix(samples, start, stop, spec.dims);
        auto f1 = mlp_forward(tape, ex.e1, x);
        auto f2 = mlp_forward(tape, ex.e2, x);
        for (std::size_t i = start; i < stop; ++i) {
            const std::size_t r = i - start;
            const int y = samples[i].label;
            double row1[kClasses], row2[kClasses];
            for (std::size_t c = 0; c < kClasses; ++c) {
                row1[c] = f1->at(r, c);
                row2[c] = f2->at(r, c);
            }
            // Log-probability of the true class under each expert, then the
            // two weightings combined in log space. A gate weight may round
            // to zero; log(0) = -inf drops that branch out of the pairwise
            // logsumexp cleanly.
            const double lp1 = row1[y] - log_sum_exp(row1, kClasses);
            const double lp2 = row2[y] - log_sum_exp(row2, kClasses);
            const auto alpha = gaussian_gate(samples[i].x, ex.g1, ex.g2, spec.sigma);
            const double even[2] = {lp1 + std::log(0.5), lp2 + std::log(0.5)};
            const double gated[2] = {lp1 + std::log(alpha.first), lp2 + std::log(alpha.second)};
            out.pi[i] = -log_sum_exp(even, 2);
            out.dy[i] = -log_sum_exp(gated, 2);
        }
    };

    const std::size_t workers = std::min(eval_threads(), chunks);
    if (workers <= 1) {
        for (std::size_t ci = 0; ci < chunks; ++ci) score_chunk(ci);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t ci = next.fetch_add(1); ci < chunks; ci = next.fetch_add(1))
                score_chunk(ci);
        });
    for (auto& th : pool) th.join();
    return out;
}

TheoremResult compare_losses(const MixtureSpec& spec, const TrainedExperts& ex, std::size_t n,
                             std::uint64_t seed) {
    validate_spec(spec);
    if (n == 0) throw config_error("evaluation sample count must be positive");

    auto samples = sample_mixture(spec, n, stream_key(seed, "theorem.eval"));
    auto losses = paired_losses(ex, spec, samples);

    TheoremResult res;
    res.n = n;
    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) {
        res.loss_pi += losses.pi[i];
        res.loss_dy += losses.dy[i];
        diff[i] = losses.pi[i] - losses.dy[i];
    }
    res.loss_pi /= static_cast<double>(n);
    res.loss_dy /= static_cast<double>(n);
    res.delta = res.loss_pi - res.loss_dy;

    // Paired bootstrap over the per-sample differences.
    auto gen = rng_stream(seed, "theorem.bootstrap");
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<double> means(kBootstrapResamples);
    for (auto& m : means) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += diff[pick(gen)];
        m = s / static_cast<double>(n);
    }
    double center = 0.0;
    for (double m : means) center += m;
    center /= static_cast<double>(kBootstrapResamples);
    double var = 0.0;
    for (double m : means) var += (m - center) * (m - center);
    res.std_error = std::sqrt(var / static_cast<double>(kBootstrapResamples - 1));
    return res;
}

std::vector<SweepPoint> theorem_sweep(const MixtureSpec& base, const std::vector<double>& sigmas,
                                      const TheoremTrainSettings& ts, std::size_t n_eval,
                                      std::uint64_t seed) {
    std::vector<SweepPoint> out;
    out.reserve(sigmas.size());
    for (std::size_t i = 0; i < sigmas.size(); ++i) {
        SweepPoint point;
        point.spec = base;
        point.spec.sigma = sigmas[i];
        auto experts =
            train_theorem_experts(point.spec, ts, stream_key(seed, "theorem.sweep", i));
        point.result =
            compare_losses(point.spec, experts, n_eval, stream_key(seed, "theorem.sweep.eval", i));
        out.push_back(std::move(point));
    }
    return out;
}

}  // namespace dymoe
