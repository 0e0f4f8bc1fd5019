#include "ecfc/optim.hpp"

#include <cmath>
#include <string>

#include "ecfc/error.hpp"

namespace ecfc {

MaeLoss mae_loss(std::span<const double> predictions, std::span<const double> targets) {
    if (predictions.empty()) throw ContractError("mae_loss on an empty batch");
    if (predictions.size() != targets.size()) {
        throw ContractError("mae_loss: " + std::to_string(predictions.size()) + " predictions vs " +
                            std::to_string(targets.size()) + " targets");
    }
    const double scale = 1.0 / static_cast<double>(predictions.size());
    MaeLoss out;
    out.grad.resize(predictions.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double r = predictions[i] - targets[i];
        sum += std::abs(r);
        out.grad[i] = r > 0.0 ? scale : (r < 0.0 ? -scale : 0.0);
    }
    out.loss = sum * scale;
    return out;
}

double clip_gradients(std::span<double> grads, double max_norm) {
    if (!(max_norm > 0.0)) throw ContractError("clip norm must be positive");
    double sq = 0.0;
    for (double g : grads) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm > max_norm) {
        const double scale = max_norm / norm;
        for (double& g : grads) g *= scale;
    }
    return norm;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
    if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
        throw ContractError("adam_step: parameter, gradient and moment sizes differ");
    }
    const auto& cfg = state.config;
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(cfg.beta1, t);
    const double correction2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        const double g = grads[k];
        state.m[k] = cfg.beta1 * state.m[k] + (1.0 - cfg.beta1) * g;
        state.v[k] = cfg.beta2 * state.v[k] + (1.0 - cfg.beta2) * g * g;
        const double m_hat = state.m[k] / correction1;
        const double v_hat = state.v[k] / correction2;
        params[k] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
}

}  // namespace ecfc
