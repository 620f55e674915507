#pragma once

#include <map>
#include <string>

#include "saal/graph.hpp"

namespace saal {

// p <- p - lr * g for every entry present in grads; parameters absent from
// the gradient map are left bit-identical.
void sgd_step(ParameterStore& params, const GradientMap& grads, double lr);

// First/second moment state for Adam, keyed like the parameters it updates.
struct AdamState {
    std::map<std::string, Tensor> m;
    std::map<std::string, Tensor> v;
    long step = 0;
};

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Standard bias-corrected Adam update; advances state by one step. Only
// parameter ids present in grads are touched.
void adam_step(ParameterStore& params, const GradientMap& grads, AdamState& state,
               const AdamConfig& cfg);

// Scalar variant used for the task-coefficient optimiser.
void adam_step_values(std::map<std::string, double>& values,
                      const std::map<std::string, double>& grads, AdamState& state,
                      const AdamConfig& cfg);

// lr0 * 0.5 * (1 + cos(pi * epoch / total_epochs))
double cosine_lr(int epoch, int total_epochs, double lr0);

}  // namespace saal
