#include "saal/optim.hpp"

#include <cmath>

namespace saal {

void sgd_step(ParameterStore& params, const GradientMap& grads, double lr) {
    if (lr <= 0.0) throw contract_error("sgd_step requires lr > 0");
    for (const auto& [name, g] : grads) {
        Tensor& p = params.at(name);
        if (!p.same_shape(g)) {
            throw dimension_error("sgd_step shape mismatch for " + name);
        }
        for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
        p.ensure_finite("sgd_step");
    }
}

void adam_step(ParameterStore& params, const GradientMap& grads, AdamState& state,
               const AdamConfig& cfg) {
    if (cfg.lr <= 0.0) throw contract_error("adam_step requires lr > 0");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (const auto& [name, g] : grads) {
        Tensor& p = params.at(name);
        if (!p.same_shape(g)) {
            throw dimension_error("adam_step shape mismatch for " + name);
        }
        auto mit = state.m.find(name);
        if (mit == state.m.end()) {
            mit = state.m.emplace(name, Tensor::zeros(p.shape())).first;
            state.v.emplace(name, Tensor::zeros(p.shape()));
        }
        Tensor& m = mit->second;
        Tensor& v = state.v.at(name);
        if (!m.same_shape(g)) {
            throw dimension_error("adam_step state shape mismatch for " + name);
        }
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
        p.ensure_finite("adam_step");
    }
}

void adam_step_values(std::map<std::string, double>& values,
                      const std::map<std::string, double>& grads, AdamState& state,
                      const AdamConfig& cfg) {
    if (cfg.lr <= 0.0) throw contract_error("adam_step requires lr > 0");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (const auto& [name, g] : grads) {
        auto it = values.find(name);
        if (it == values.end()) throw contract_error("adam_step_values unknown key: " + name);
        auto mit = state.m.find(name);
        if (mit == state.m.end()) {
            mit = state.m.emplace(name, Tensor::scalar(0.0)).first;
            state.v.emplace(name, Tensor::scalar(0.0));
        }
        double& m = mit->second[0];
        double& v = state.v.at(name)[0];
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
        it->second -= cfg.lr * (m / bc1) / (std::sqrt(v / bc2) + cfg.eps);
        if (!std::isfinite(it->second)) throw numeric_error("non-finite value in adam_step");
    }
}

double cosine_lr(int epoch, int total_epochs, double lr0) {
    if (total_epochs == 0) throw config_error("cosine_lr requires total_epochs > 0");
    if (epoch < 0 || epoch > total_epochs) {
        throw contract_error("cosine_lr requires 0 <= epoch <= total_epochs");
    }
    const double pi = 3.14159265358979323846;
    return lr0 * 0.5 *
           (1.0 + std::cos(pi * static_cast<double>(epoch) / static_cast<double>(total_epochs)));
}

}  // namespace saal
