#include "saal/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "saal/rng.hpp"

namespace saal {

std::string to_string(StrategyKind k) {
    switch (k) {
        case StrategyKind::equal:
            return "equal";
        case StrategyKind::uncertainty:
            return "uncertainty";
        case StrategyKind::dwa:
            return "dwa";
        case StrategyKind::pcgrad:
            return "pcgrad";
        case StrategyKind::saal_e:
            return "saal_e";
        case StrategyKind::saal_w:
            return "saal_w";
        case StrategyKind::saal_ew:
            return "saal_ew";
    }
    return "?";
}

StrategyKind strategy_from_string(const std::string& s) {
    for (StrategyKind k : {StrategyKind::equal, StrategyKind::uncertainty, StrategyKind::dwa,
                           StrategyKind::pcgrad, StrategyKind::saal_e, StrategyKind::saal_w,
                           StrategyKind::saal_ew}) {
        if (to_string(k) == s) return k;
    }
    throw parse_error("unknown strategy: " + s);
}

bool is_saal(StrategyKind k) {
    return k == StrategyKind::saal_e || k == StrategyKind::saal_w || k == StrategyKind::saal_ew;
}

double CoefficientSet::get(const Route& route) const {
    if (route.is_primary()) {
        auto it = primary.find(route.source);
        if (it == primary.end()) throw contract_error("no coefficient for route " + route.id());
        return it->second;
    }
    auto it = aux.find({route.source, route.target});
    if (it == aux.end()) throw contract_error("no coefficient for route " + route.id());
    return it->second;
}

void CoefficientSet::set(const Route& route, double value) {
    if (route.is_primary()) {
        primary[route.source] = value;
    } else {
        aux[{route.source, route.target}] = value;
    }
}

bool CoefficientSet::contains(const Route& route) const {
    return route.is_primary() ? primary.count(route.source) != 0
                              : aux.count({route.source, route.target}) != 0;
}

std::vector<Route> CoefficientSet::routes() const {
    std::vector<Route> out;
    for (const auto& [t, v] : primary) out.push_back(Route::primary(t));
    for (const auto& [st, v] : aux) out.push_back(Route::self_aux(st.first, st.second));
    return out;
}

double NormalizedCoefficients::get(const Route& route) const {
    if (route.is_primary()) {
        auto it = primary.find(route.source);
        if (it == primary.end()) throw contract_error("no coefficient for route " + route.id());
        return it->second;
    }
    auto it = aux.find({route.source, route.target});
    if (it == aux.end()) throw contract_error("no coefficient for route " + route.id());
    return it->second;
}

std::vector<Route> NormalizedCoefficients::routes() const {
    std::vector<Route> out;
    for (const auto& [t, v] : primary) out.push_back(Route::primary(t));
    for (const auto& [st, v] : aux) out.push_back(Route::self_aux(st.first, st.second));
    return out;
}

namespace {

// Raw per-target group sums omega_t + sum_s omega_{s->t}.
std::map<int, double> group_sums(const CoefficientSet& coeffs) {
    std::map<int, double> sums;
    for (const auto& [t, v] : coeffs.primary) {
        if (v < 0.0) throw contract_error("coefficients must be non-negative");
        sums[t] = v;
    }
    for (const auto& [st, v] : coeffs.aux) {
        if (v < 0.0) throw contract_error("coefficients must be non-negative");
        auto it = sums.find(st.second);
        if (it == sums.end()) {
            throw contract_error("aux route targets task " + std::to_string(st.second) +
                                 " without a primary coefficient");
        }
        it->second += v;
    }
    return sums;
}

}  // namespace

NormalizedCoefficients normalize(const CoefficientSet& coeffs) {
    const auto sums = group_sums(coeffs);
    for (const auto& [t, s] : sums) {
        if (s <= 0.0) {
            throw degenerate_group_error("coefficient group for task " + std::to_string(t) +
                                         " sums to zero");
        }
    }
    NormalizedCoefficients out;
    for (const auto& [t, v] : coeffs.primary) out.primary[t] = v / sums.at(t);
    for (const auto& [st, v] : coeffs.aux) out.aux[st] = v / sums.at(st.second);
    return out;
}

double composite_train_loss(const std::map<Route, double>& per_route_losses,
                            const NormalizedCoefficients& coeffs) {
    double total = 0.0;
    for (const Route& r : coeffs.routes()) {
        const double w = coeffs.get(r);
        if (w == 0.0) continue;
        auto it = per_route_losses.find(r);
        if (it == per_route_losses.end()) {
            throw contract_error("missing loss for active route " + r.id());
        }
        total += w * it->second;
    }
    return total;
}

double validation_loss(const MtlModel& model, const Batch& val_batch) {
    ComputationGraph g;
    const int x = g.input(MtlModel::input_leaf());
    int acc = -1;
    for (int t = 0; t < model.num_tasks(); ++t) {
        const int loss = model.append_loss(g, Route::primary(t), x);
        acc = acc < 0 ? loss : g.add(acc, loss);
    }
    g.set_output(acc);
    Inputs inputs;
    inputs.emplace(MtlModel::input_leaf(), val_batch.x);
    for (const auto& [t, y] : val_batch.labels) inputs.emplace(MtlModel::label_leaf(t), y);
    return evaluate(g, model.params(), inputs).scalar_value();
}

CoefficientSet saal_enumeration(const RelationshipMatrix& rel) {
    const int T = rel.num_tasks();
    CoefficientSet out;
    for (int t = 0; t < T; ++t) {
        if (!rel.baseline.count(t)) {
            throw contract_error("enumeration matrix missing baseline for task " +
                                 std::to_string(t));
        }
        out.primary[t] = 1.0;
    }
    for (int s = 0; s < T; ++s) {
        for (int t = 0; t < T; ++t) {
            if (s == t) continue;
            auto it = rel.pairwise.find({s, t});
            if (it == rel.pairwise.end()) {
                throw contract_error("enumeration matrix missing pair (" + std::to_string(s) +
                                     ", " + std::to_string(t) + ")");
            }
            out.aux[{s, t}] = it->second > rel.baseline.at(t) ? 1.0 : 0.0;
        }
    }
    return out;
}

CoefficientSet saal_combined(const CoefficientSet& omega_e,
                             const NormalizedCoefficients& omega_w_normalized) {
    CoefficientSet out;
    if (omega_e.primary.size() != omega_w_normalized.primary.size() ||
        omega_e.aux.size() != omega_w_normalized.aux.size()) {
        throw contract_error("combined strategy requires matching coefficient index sets");
    }
    for (const auto& [t, v] : omega_e.primary) {
        auto it = omega_w_normalized.primary.find(t);
        if (it == omega_w_normalized.primary.end()) {
            throw contract_error("combined strategy: primary index mismatch");
        }
        out.primary[t] = v * it->second;
    }
    for (const auto& [st, v] : omega_e.aux) {
        auto it = omega_w_normalized.aux.find(st);
        if (it == omega_w_normalized.aux.end()) {
            throw contract_error("combined strategy: aux index mismatch");
        }
        out.aux[st] = v * it->second;
    }
    return out;
}

CoefficientSet equal_weights(int num_tasks) {
    if (num_tasks < 1) throw config_error("equal_weights needs at least one task");
    CoefficientSet out;
    for (int t = 0; t < num_tasks; ++t) out.primary[t] = 1.0;
    return out;
}

CompositeLossGraph build_composite_loss(const MtlModel& model,
                                        const NormalizedCoefficients& coeffs) {
    CompositeLossGraph out;
    out.routes = coeffs.routes();
    const int x = out.graph.input(MtlModel::input_leaf());
    int acc = -1;
    for (const Route& r : out.routes) {
        const double w = coeffs.get(r);
        if (w == 0.0) {
            out.loss_nodes.push_back(-1);
            continue;
        }
        const int loss = model.append_loss(out.graph, r, x);
        out.loss_nodes.push_back(loss);
        const int weighted = out.graph.scale(loss, w);
        acc = acc < 0 ? weighted : out.graph.add(acc, weighted);
    }
    if (acc < 0) throw contract_error("no active routes");
    out.graph.set_output(acc);
    return out;
}

Inputs bind_batch(const Batch& batch) {
    Inputs inputs;
    inputs.emplace(MtlModel::input_leaf(), batch.x);
    for (const auto& [t, y] : batch.labels) inputs.emplace(MtlModel::label_leaf(t), y);
    return inputs;
}

namespace {

// Graph evaluating every route's loss; used for the theta+/- probes.
struct AllLossGraph {
    ComputationGraph graph;
    std::vector<int> loss_nodes;
};

AllLossGraph build_all_losses(const MtlModel& model, const std::vector<Route>& routes) {
    AllLossGraph out;
    const int x = out.graph.input(MtlModel::input_leaf());
    int acc = -1;
    for (const Route& r : routes) {
        const int loss = model.append_loss(out.graph, r, x);
        out.loss_nodes.push_back(loss);
        acc = acc < 0 ? loss : out.graph.add(acc, loss);
    }
    out.graph.set_output(acc);
    return out;
}

void apply_offset(ParameterStore& params, const GradientMap& direction, double factor) {
    for (const auto& [name, g] : direction) {
        Tensor& p = params.at(name);
        for (std::size_t i = 0; i < p.size(); ++i) p[i] += factor * g[i];
        p.ensure_finite("parameter offset");
    }
}

}  // namespace

CoefficientSet saal_weight_update(MtlModel& model, const CoefficientSet& coeffs,
                                  const Batch& train_batch, const Batch& val_batch, double eta,
                                  double epsilon, AdamState& omega_state,
                                  const AdamConfig& omega_adam,
                                  OmegaUpdateDiagnostics* diagnostics) {
    if (eta <= 0.0) throw contract_error("saal_weight_update requires eta > 0");
    if (epsilon <= 0.0) throw contract_error("saal_weight_update requires epsilon > 0");

    const NormalizedCoefficients normalized = normalize(coeffs);
    const std::vector<Route> routes = coeffs.routes();
    const Inputs train_inputs = bind_batch(train_batch);
    const Inputs val_inputs = bind_batch(val_batch);

    // Full snapshot: the virtual step must roll back bit-exactly.
    const ParameterStore snapshot = model.params();

    // theta' = theta - eta * grad L_train(theta, omega)
    const CompositeLossGraph composite = build_composite_loss(model, normalized);
    const GradientMap g_train = backward(composite.graph, model.params(), train_inputs);
    sgd_step(model.params(), g_train, eta);

    // g_val = grad L_val(theta') over the primary routes
    ComputationGraph val_graph;
    {
        const int x = val_graph.input(MtlModel::input_leaf());
        int acc = -1;
        for (int t = 0; t < model.num_tasks(); ++t) {
            const int loss = model.append_loss(val_graph, Route::primary(t), x);
            acc = acc < 0 ? loss : val_graph.add(acc, loss);
        }
        val_graph.set_output(acc);
    }
    const GradientMap g_val = backward(val_graph, model.params(), val_inputs);
    model.params() = snapshot;

    // Route losses at theta +- epsilon * g_val. Zero-coefficient routes are
    // included: their losses enter d_omega through the normalisation.
    const AllLossGraph probes = build_all_losses(model, routes);
    apply_offset(model.params(), g_val, epsilon);
    std::vector<Tensor> plus_t =
        evaluate_nodes(probes.graph, model.params(), train_inputs, probes.loss_nodes);
    model.params() = snapshot;
    apply_offset(model.params(), g_val, -epsilon);
    std::vector<Tensor> minus_t =
        evaluate_nodes(probes.graph, model.params(), train_inputs, probes.loss_nodes);
    model.params() = snapshot;

    std::vector<double> loss_plus, loss_minus;
    for (std::size_t i = 0; i < routes.size(); ++i) {
        loss_plus.push_back(plus_t[i].scalar_value());
        loss_minus.push_back(minus_t[i].scalar_value());
    }

    // d_omega_r L_train = (L_r - sum_{r' in group} omega_bar_{r'} L_{r'}) / S_t
    const auto sums = group_sums(coeffs);
    std::map<int, double> group_weighted_plus, group_weighted_minus;
    for (std::size_t i = 0; i < routes.size(); ++i) {
        const double w = normalized.get(routes[i]);
        group_weighted_plus[routes[i].target] += w * loss_plus[i];
        group_weighted_minus[routes[i].target] += w * loss_minus[i];
    }

    std::map<std::string, double> raw;
    std::map<std::string, double> hyper;
    for (std::size_t i = 0; i < routes.size(); ++i) {
        const Route& r = routes[i];
        const double s_t = sums.at(r.target);
        const double d_plus = (loss_plus[i] - group_weighted_plus.at(r.target)) / s_t;
        const double d_minus = (loss_minus[i] - group_weighted_minus.at(r.target)) / s_t;
        const double h = -eta * (d_plus - d_minus) / (2.0 * epsilon);
        if (!std::isfinite(h)) throw numeric_error("non-finite hypergradient for " + r.id());
        raw[r.id()] = coeffs.get(r);
        hyper[r.id()] = h;
    }

    adam_step_values(raw, hyper, omega_state, omega_adam);

    CoefficientSet updated;
    bool primary_zero = false;
    for (const Route& r : routes) {
        double v = raw.at(r.id());
        if (v < 0.0) v = 0.0;  // projection onto omega >= 0
        if (r.is_primary() && v == 0.0) primary_zero = true;
        updated.set(r, v);
    }
    if (diagnostics) {
        diagnostics->hypergradient = std::move(hyper);
        diagnostics->primary_hit_zero = primary_zero;
    }
    return updated;
}

double uncertainty_weighted_loss(const std::map<int, double>& per_task_losses,
                                 const std::map<int, double>& log_vars) {
    double total = 0.0;
    for (const auto& [t, loss] : per_task_losses) {
        const double s = log_vars.at(t);
        total += 0.5 * std::exp(-s) * loss + 0.5 * s;
    }
    return total;
}

std::map<int, double> uncertainty_task_weights(const std::map<int, double>& log_vars) {
    std::map<int, double> out;
    for (const auto& [t, s] : log_vars) out[t] = 0.5 * std::exp(-s);
    return out;
}

std::map<int, double> uncertainty_log_var_gradient(const std::map<int, double>& per_task_losses,
                                                   const std::map<int, double>& log_vars) {
    std::map<int, double> out;
    for (const auto& [t, loss] : per_task_losses) {
        const double s = log_vars.at(t);
        out[t] = -0.5 * std::exp(-s) * loss + 0.5;
    }
    return out;
}

std::map<int, double> dwa_weights(const std::vector<std::map<int, double>>& epoch_task_losses,
                                  double temperature) {
    if (temperature <= 0.0) throw config_error("dwa temperature must be > 0");
    if (epoch_task_losses.empty()) throw contract_error("dwa needs task ids from history");
    const auto& latest = epoch_task_losses.back();
    std::map<int, double> weights;
    const double T = static_cast<double>(latest.size());
    if (epoch_task_losses.size() < 2) {
        for (const auto& [t, v] : latest) weights[t] = 1.0;
        return weights;
    }
    const auto& prev = epoch_task_losses[epoch_task_losses.size() - 2];
    std::map<int, double> ratio;
    for (const auto& [t, v] : latest) {
        const double denom = prev.at(t);
        ratio[t] = denom == 0.0 ? 1.0 : v / denom;
    }
    double mx = -1e300;
    for (const auto& [t, r] : ratio) mx = std::max(mx, r / temperature);
    double denom = 0.0;
    for (const auto& [t, r] : ratio) denom += std::exp(r / temperature - mx);
    for (const auto& [t, r] : ratio) {
        weights[t] = T * std::exp(r / temperature - mx) / denom;
    }
    return weights;
}

GradientMap pcgrad(const std::vector<GradientMap>& per_task_grads, std::uint64_t seed) {
    if (per_task_grads.empty()) throw contract_error("pcgrad needs at least one gradient map");
    const GradientMap& first = per_task_grads.front();
    std::vector<std::string> keys;
    for (const auto& [name, g] : first) keys.push_back(name);
    std::vector<std::size_t> offsets;
    std::size_t total = 0;
    for (const auto& k : keys) {
        offsets.push_back(total);
        total += first.at(k).size();
    }

    const std::size_t T = per_task_grads.size();
    std::vector<std::vector<double>> flat(T, std::vector<double>(total, 0.0));
    for (std::size_t i = 0; i < T; ++i) {
        const GradientMap& gm = per_task_grads[i];
        if (gm.size() != keys.size()) {
            throw contract_error("pcgrad gradient maps must share one key set");
        }
        std::size_t off = 0;
        for (const auto& k : keys) {
            auto it = gm.find(k);
            if (it == gm.end() || !it->second.same_shape(first.at(k))) {
                throw contract_error("pcgrad gradient maps must share one key set");
            }
            std::copy(it->second.values().begin(), it->second.values().end(),
                      flat[i].begin() + off);
            off += it->second.size();
        }
    }

    auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
        double acc = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
        return acc;
    };

    Rng rng(seed);
    std::vector<std::size_t> order(T);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    std::vector<std::vector<double>> projected = flat;
    for (std::size_t i : order) {
        std::vector<std::size_t> others;
        for (std::size_t j = 0; j < T; ++j) {
            if (j != i) others.push_back(j);
        }
        rng.shuffle(others);
        for (std::size_t j : others) {
            const double norm_sq = dot(flat[j], flat[j]);
            if (norm_sq == 0.0) continue;
            const double d = dot(projected[i], flat[j]);
            if (d < 0.0) {
                const double c = d / norm_sq;
                for (std::size_t p = 0; p < total; ++p) projected[i][p] -= c * flat[j][p];
            }
        }
    }

    std::vector<double> merged(total, 0.0);
    for (std::size_t i = 0; i < T; ++i) {
        for (std::size_t p = 0; p < total; ++p) merged[p] += projected[i][p];
    }

    GradientMap out;
    for (std::size_t k = 0; k < keys.size(); ++k) {
        const Tensor& ref = first.at(keys[k]);
        Tensor g = Tensor::zeros(ref.shape());
        std::copy(merged.begin() + offsets[k], merged.begin() + offsets[k] + ref.size(),
                  g.values().begin());
        out.emplace(keys[k], std::move(g));
    }
    return out;
}

}  // namespace saal
