#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "saal/datasets.hpp"
#include "saal/model.hpp"
#include "saal/optim.hpp"
#include "saal/relmatrix.hpp"

namespace saal {

enum class StrategyKind { equal, uncertainty, dwa, pcgrad, saal_e, saal_w, saal_ew };

std::string to_string(StrategyKind k);
StrategyKind strategy_from_string(const std::string& s);
bool is_saal(StrategyKind k);

// Task coefficients: omega_primary per task and omega_aux per directed
// self-auxiliary (source, target). All values are >= 0; a route participates
// in training iff its coefficient is > 0.
struct CoefficientSet {
    std::map<int, double> primary;
    std::map<std::pair<int, int>, double> aux;

    double get(const Route& route) const;
    void set(const Route& route, double value);
    bool contains(const Route& route) const;
    std::vector<Route> routes() const;  // deterministic order
    bool operator==(const CoefficientSet&) const = default;
};

// Per-target-group rescaled coefficients: for every target t,
// omega_t + sum_{s != t} omega_{s->t} == 1.
struct NormalizedCoefficients {
    std::map<int, double> primary;
    std::map<std::pair<int, int>, double> aux;

    double get(const Route& route) const;
    std::vector<Route> routes() const;
};

// omega_bar = omega / group_sum per target group. Raises
// degenerate_group_error if any group sums to zero; negative coefficients
// are a contract violation.
NormalizedCoefficients normalize(const CoefficientSet& coeffs);

// sum_t ( omega_bar_t L_t + sum_{s != t} omega_bar_{s->t} L_{s->t} ).
// Routes with zero coefficient need no loss entry; a positive coefficient
// without one is an error.
double composite_train_loss(const std::map<Route, double>& per_route_losses,
                            const NormalizedCoefficients& coeffs);

// Unweighted sum of primary-task losses on a validation batch; excludes
// every self-auxiliary and ignores all coefficients.
double validation_loss(const MtlModel& model, const Batch& val_batch);

// omega_t = 1; omega_{s->t} = 1 iff A_t^{{s,t}} > A_t^{{t}} (strict).
CoefficientSet saal_enumeration(const RelationshipMatrix& rel);

// Elementwise product of enumeration and loss-weighting coefficients; the
// caller re-normalises the result before use.
CoefficientSet saal_combined(const CoefficientSet& omega_e,
                             const NormalizedCoefficients& omega_w_normalized);

// Unit primary coefficients, no self-auxiliaries.
CoefficientSet equal_weights(int num_tasks);

// Composite training-loss graph over the routes with positive coefficient,
// sum_r omega_bar_r * L_r. Inactive routes are skipped entirely (their
// forward passes never run). `loss_nodes` parallels `routes`; inactive
// entries are -1.
struct CompositeLossGraph {
    ComputationGraph graph;
    std::vector<Route> routes;
    std::vector<int> loss_nodes;
};

CompositeLossGraph build_composite_loss(const MtlModel& model,
                                        const NormalizedCoefficients& coeffs);

// Binds a batch to graph leaves: "x" plus one label leaf per task.
Inputs bind_batch(const Batch& batch);

// One finite-difference hypergradient step on the raw coefficients:
//   theta'  = theta - eta * grad_theta L_train(theta, omega)   (virtual step)
//   g_val   = grad L_val(theta')
//   theta+- = theta +- epsilon * g_val
//   d/domega_r = -eta * (d_omega L_train(theta+) - d_omega L_train(theta-)) / (2 epsilon)
// where d_omega is exact through the normalisation mapping. The raw omegas
// take one Adam step and are clamped at zero; model parameters come back
// bit-identical (the virtual step is never committed).
struct OmegaUpdateDiagnostics {
    std::map<std::string, double> hypergradient;  // keyed by route id
    bool primary_hit_zero = false;
};

CoefficientSet saal_weight_update(MtlModel& model, const CoefficientSet& coeffs,
                                  const Batch& train_batch, const Batch& val_batch, double eta,
                                  double epsilon, AdamState& omega_state,
                                  const AdamConfig& omega_adam,
                                  OmegaUpdateDiagnostics* diagnostics = nullptr);

// Uncertainty weighting (baseline): weighted loss
//   sum_t exp(-s_t) L_t / 2 + s_t / 2
// with per-task log-variances s_t trained jointly by the model optimiser.
double uncertainty_weighted_loss(const std::map<int, double>& per_task_losses,
                                 const std::map<int, double>& log_vars);
std::map<int, double> uncertainty_task_weights(const std::map<int, double>& log_vars);
std::map<int, double> uncertainty_log_var_gradient(const std::map<int, double>& per_task_losses,
                                                   const std::map<int, double>& log_vars);

// DWA (baseline): w_t = T exp(r_t / tau) / sum_k exp(r_k / tau) with
// r_t = L_t(e-1) / L_t(e-2); equal weights until two epochs of history exist.
std::map<int, double> dwa_weights(const std::vector<std::map<int, double>>& epoch_task_losses,
                                  double temperature);

// PCGrad (baseline): project each task's shared-partition gradient away from
// the tasks it conflicts with, in seeded random order, and sum the results.
GradientMap pcgrad(const std::vector<GradientMap>& per_task_grads, std::uint64_t seed);

}  // namespace saal
