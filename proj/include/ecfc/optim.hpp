#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ecfc {

struct MaeLoss {
    double loss = 0.0;
    std::vector<double> grad;  // d loss / d prediction
};

// Mean absolute error over a batch with subgradient sign(p - y) / B, sign(0) = 0.
MaeLoss mae_loss(std::span<const double> predictions, std::span<const double> targets);

// Rescales in place to global L2 norm max_norm when the norm exceeds it.
// Returns the norm before clipping.
double clip_gradients(std::span<double> grads, double max_norm);

struct AdamConfig {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    AdamConfig config;
    std::uint64_t step = 0;
    std::vector<double> m;
    std::vector<double> v;

    AdamState() = default;
    AdamState(AdamConfig cfg, std::size_t parameter_count)
        : config(cfg), m(parameter_count, 0.0), v(parameter_count, 0.0) {}
};

// One Adam update with bias-corrected moments.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

}  // namespace ecfc
