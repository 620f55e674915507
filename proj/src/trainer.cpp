#include "saal/trainer.hpp"

#include <chrono>
#include <cmath>
#include <iostream>

#include "saal/rng.hpp"

namespace saal {

void TrainerConfig::validate() const {
    if (eta0 <= 0.0) throw config_error("eta0 must be > 0");
    if (epochs < 1) throw config_error("epochs must be >= 1");
    if (batch_size < 1) throw config_error("batch_size must be >= 1");
    if (omega_lr <= 0.0) throw config_error("omega_lr must be > 0");
}

std::size_t select_checkpoint_index(const TrainingHistory& history) {
    if (history.empty()) throw contract_error("select_checkpoint on empty history");
    const bool by_delta = history.front().val_delta_mtl.has_value();
    std::size_t best = 0;
    for (std::size_t i = 1; i < history.size(); ++i) {
        if (by_delta) {
            if (*history[i].val_delta_mtl > *history[best].val_delta_mtl) best = i;
        } else {
            if (history[i].val_loss_total < history[best].val_loss_total) best = i;
        }
    }
    return best;
}

Checkpoint select_checkpoint(const TrainingHistory& history) {
    const std::size_t i = select_checkpoint_index(history);
    const EpochRecord& rec = history[i];
    if (!rec.params_snapshot) throw contract_error("history record lacks a parameter snapshot");
    return Checkpoint{rec.epoch, *rec.params_snapshot, rec.val_report};
}

TrainingRun::TrainingRun(const MultiTaskDataset& data, ArchitectureConfig arch,
                         const TrainerConfig& cfg, const TrainOptions& opts)
    : data_(data), cfg_(cfg), opts_(opts) {
    cfg_.validate();
    if (cfg_.shared_depth >= 0) arch.shared_depth = cfg_.shared_depth;
    arch.input_dim = data.input_dim();
    model_ = build_model(arch, data.tasks(), cfg_.seed);
    omega_adam_.lr = cfg_.omega_lr;

    const int T = model_.num_tasks();
    switch (cfg_.strategy) {
        case StrategyKind::equal:
        case StrategyKind::pcgrad:
        case StrategyKind::dwa:
            coeffs_ = equal_weights(T);
            break;
        case StrategyKind::uncertainty:
            coeffs_ = equal_weights(T);
            for (int t = 0; t < T; ++t) log_vars_[t] = 0.0;
            break;
        case StrategyKind::saal_e: {
            if (!opts_.enumeration_mask) {
                throw config_error("saal_e requires an enumeration coefficient set");
            }
            coeffs_ = *opts_.enumeration_mask;
            break;
        }
        case StrategyKind::saal_w: {
            coeffs_ = equal_weights(T);
            for (int s = 0; s < T; ++s) {
                for (int t = 0; t < T; ++t) {
                    if (s != t) coeffs_.aux[{s, t}] = 1.0;  // uniform initialisation
                }
            }
            break;
        }
        case StrategyKind::saal_ew: {
            if (!opts_.enumeration_mask) {
                throw config_error("saal_ew requires an enumeration coefficient set");
            }
            // Loss weighting restricted to the routes enumeration kept:
            // excluded self-auxiliaries never train, so they are dropped
            // from the coefficient set outright.
            coeffs_ = equal_weights(T);
            for (const auto& [st, v] : opts_.enumeration_mask->aux) {
                if (v > 0.0) coeffs_.aux[st] = 1.0;
            }
            break;
        }
    }
    if (data_.indices(Split::train).empty() || data_.indices(Split::val).empty()) {
        throw config_error("training requires non-empty train and val splits");
    }
}

double TrainingRun::epoch_eta(int epoch) const {
    return cosine_lr(epoch, cfg_.epochs, cfg_.eta0);
}

std::vector<std::vector<std::size_t>> TrainingRun::epoch_batch_indices(int epoch) const {
    std::vector<std::size_t> order = data_.indices(Split::train);
    Rng rng(derive_seed(derive_seed(cfg_.seed, "batches"), static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);
    std::vector<std::vector<std::size_t>> batches;
    const std::size_t bs = static_cast<std::size_t>(cfg_.batch_size);
    for (std::size_t i = 0; i < order.size(); i += bs) {
        const std::size_t end = std::min(order.size(), i + bs);
        batches.emplace_back(order.begin() + i, order.begin() + end);
    }
    return batches;
}

Batch TrainingRun::next_val_batch() {
    const auto& idx = data_.indices(Split::val);
    const std::size_t bs = std::min(idx.size(), static_cast<std::size_t>(cfg_.batch_size));
    std::vector<std::size_t> rows;
    rows.reserve(bs);
    for (std::size_t i = 0; i < bs; ++i) {
        rows.push_back(idx[(val_cursor_ + i) % idx.size()]);
    }
    val_cursor_ = (val_cursor_ + bs) % idx.size();
    return data_.gather(rows);
}

void TrainingRun::record_route_loss(const Route& route, double loss) {
    route_loss_sum_[route.id()] += loss;
    route_loss_count_[route.id()] += 1;
}

void TrainingRun::composite_step(const Batch& batch, double eta) {
    const NormalizedCoefficients normalized = normalize(coeffs_);
    const CompositeLossGraph cg = build_composite_loss(model_, normalized);
    std::vector<int> active_nodes;
    std::vector<Route> active_routes;
    for (std::size_t i = 0; i < cg.routes.size(); ++i) {
        if (cg.loss_nodes[i] >= 0) {
            active_nodes.push_back(cg.loss_nodes[i]);
            active_routes.push_back(cg.routes[i]);
        }
    }
    auto [grads, losses] =
        backward_with_nodes(cg.graph, model_.params(), bind_batch(batch), active_nodes);
    for (std::size_t i = 0; i < active_routes.size(); ++i) {
        record_route_loss(active_routes[i], losses[i].scalar_value());
    }
    sgd_step(model_.params(), grads, eta);
}

void TrainingRun::weighted_primary_step(const Batch& batch, const std::map<int, double>& weights,
                                        double eta) {
    ComputationGraph g;
    const int x = g.input(MtlModel::input_leaf());
    std::vector<int> loss_nodes;
    int acc = -1;
    for (int t = 0; t < model_.num_tasks(); ++t) {
        const int loss = model_.append_loss(g, Route::primary(t), x);
        loss_nodes.push_back(loss);
        const int weighted = g.scale(loss, weights.at(t));
        acc = acc < 0 ? weighted : g.add(acc, weighted);
    }
    g.set_output(acc);
    auto [grads, losses] = backward_with_nodes(g, model_.params(), bind_batch(batch), loss_nodes);
    std::map<int, double> task_losses;
    for (int t = 0; t < model_.num_tasks(); ++t) {
        task_losses[t] = losses[t].scalar_value();
        record_route_loss(Route::primary(t), task_losses[t]);
    }
    sgd_step(model_.params(), grads, eta);

    if (cfg_.strategy == StrategyKind::uncertainty) {
        // log-variances train jointly with the model, by the same optimiser
        const auto s_grad = uncertainty_log_var_gradient(task_losses, log_vars_);
        for (auto& [t, s] : log_vars_) s -= eta * s_grad.at(t);
    }
}

void TrainingRun::pcgrad_step(const Batch& batch, double eta) {
    const int T = model_.num_tasks();
    std::vector<GradientMap> task_grads(T);
    for (int t = 0; t < T; ++t) {
        const ComputationGraph g = model_.loss_graph(Route::primary(t));
        auto [grads, losses] =
            backward_with_nodes(g, model_.params(), bind_batch(batch), {g.output()});
        record_route_loss(Route::primary(t), losses[0].scalar_value());
        task_grads[t] = std::move(grads);
    }

    // Shared-partition gradients get the projection treatment; task-specific
    // partitions keep their own task's gradient.
    std::vector<GradientMap> shared_grads(T);
    GradientMap merged;
    bool any_shared = false;
    for (int t = 0; t < T; ++t) {
        for (const auto& [name, g] : task_grads[t]) {
            if (model_.params().partition(name).kind == Partition::Kind::shared) {
                shared_grads[t].emplace(name, g);
                any_shared = true;
            } else {
                auto [it, inserted] = merged.emplace(name, g);
                if (!inserted) {
                    Tensor& acc = it->second;
                    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
                }
            }
        }
    }
    if (any_shared) {
        // every task must present the same shared key set; fill gaps with zeros
        GradientMap& ref = shared_grads[0];
        for (int t = 1; t < T; ++t) {
            for (const auto& [name, g] : shared_grads[t]) {
                if (!ref.count(name)) ref.emplace(name, Tensor::zeros(g.shape()));
            }
        }
        for (int t = 0; t < T; ++t) {
            for (const auto& [name, g] : ref) {
                if (!shared_grads[t].count(name)) {
                    shared_grads[t].emplace(name, Tensor::zeros(g.shape()));
                }
            }
        }
        const std::uint64_t step_seed =
            derive_seed(derive_seed(cfg_.seed, "pcgrad"), static_cast<std::uint64_t>(global_step_));
        GradientMap projected = pcgrad(shared_grads, step_seed);
        for (auto& [name, g] : projected) merged.emplace(name, std::move(g));
    }
    sgd_step(model_.params(), merged, eta);
}

void TrainingRun::step_batch(const Batch& batch, double eta) {
    ++global_step_;
    switch (cfg_.strategy) {
        case StrategyKind::equal:
        case StrategyKind::saal_e:
            composite_step(batch, eta);
            break;
        case StrategyKind::saal_w:
        case StrategyKind::saal_ew: {
            const Batch vb = next_val_batch();
            OmegaUpdateDiagnostics diag;
            // epsilon tracks the current model learning rate
            coeffs_ = saal_weight_update(model_, coeffs_, batch, vb, eta, eta, omega_state_,
                                         omega_adam_, &diag);
            if (diag.primary_hit_zero && !warned_primary_zero_) {
                warned_primary_zero_ = true;
                std::cerr << "warning: a primary task coefficient reached zero\n";
            }
            composite_step(batch, eta);
            break;
        }
        case StrategyKind::uncertainty:
            weighted_primary_step(batch, uncertainty_task_weights(log_vars_), eta);
            break;
        case StrategyKind::dwa: {
            if (dwa_epoch_weights_.empty()) {
                if (epoch_primary_losses_.empty()) {
                    for (int t = 0; t < model_.num_tasks(); ++t) dwa_epoch_weights_[t] = 1.0;
                } else {
                    dwa_epoch_weights_ = dwa_weights(epoch_primary_losses_, 2.0);
                }
            }
            weighted_primary_step(batch, dwa_epoch_weights_, eta);
            break;
        }
        case StrategyKind::pcgrad:
            pcgrad_step(batch, eta);
            break;
    }
}

void TrainingRun::finish_epoch(int epoch, double mean_batch_ms) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.eta = epoch_eta(epoch);
    rec.mean_batch_ms = mean_batch_ms;

    for (const auto& [id, sum] : route_loss_sum_) {
        rec.train_loss[id] = sum / route_loss_count_.at(id);
    }

    // epoch-mean primary train losses feed DWA's ratio
    std::map<int, double> primary_means;
    for (int t = 0; t < model_.num_tasks(); ++t) {
        auto it = rec.train_loss.find(Route::primary(t).id());
        primary_means[t] = it == rec.train_loss.end() ? 0.0 : it->second;
    }
    epoch_primary_losses_.push_back(primary_means);
    dwa_epoch_weights_.clear();  // recomputed lazily next epoch

    const Batch val = data_.whole_split(Split::val);
    const Inputs val_inputs = bind_batch(val);
    double total = 0.0;
    for (int t = 0; t < model_.num_tasks(); ++t) {
        const ComputationGraph g = model_.loss_graph(Route::primary(t));
        const double loss = evaluate(g, model_.params(), val_inputs).scalar_value();
        rec.val_loss[t] = loss;
        total += loss;
    }
    rec.val_loss_total = total;

    if (!opts_.stl_val_metrics.empty()) {
        const auto val_metrics = evaluate_split_metrics(model_, data_, Split::val);
        rec.val_report = relative_improvement(val_metrics, opts_.stl_val_metrics,
                                              metric_specs_for_tasks(data_.tasks()));
        rec.val_delta_mtl = rec.val_report->delta_mtl;
    }

    rec.coefficients = coeffs_;
    if (cfg_.strategy == StrategyKind::uncertainty) {
        for (const auto& [t, w] : uncertainty_task_weights(log_vars_)) {
            rec.coefficients.primary[t] = w;
        }
    }
    rec.params_snapshot = std::make_shared<const ParameterStore>(model_.params());
    history_.push_back(std::move(rec));

    route_loss_sum_.clear();
    route_loss_count_.clear();
}

void TrainingRun::run_all() {
    for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
        const double eta = epoch_eta(epoch);
        const auto batches = epoch_batch_indices(epoch);
        double total_ms = 0.0;
        int steps = 0;
        try {
            for (const auto& rows : batches) {
                const Batch batch = data_.gather(rows);
                const auto start = std::chrono::steady_clock::now();
                step_batch(batch, eta);
                const auto stop = std::chrono::steady_clock::now();
                total_ms += std::chrono::duration<double, std::milli>(stop - start).count();
                ++steps;
            }
            finish_epoch(epoch, steps > 0 ? total_ms / steps : 0.0);
        } catch (const numeric_error& e) {
            throw numeric_error("epoch " + std::to_string(epoch) + ": " + e.what());
        }
    }
}

std::map<int, MetricValues> TrainingRun::evaluate_metrics(Split split) const {
    return evaluate_split_metrics(model_, data_, split);
}

TrainResult train_run(const MultiTaskDataset& data, ArchitectureConfig arch,
                      const TrainerConfig& cfg, const TrainOptions& opts) {
    TrainingRun run(data, arch, cfg, opts);
    run.run_all();
    TrainResult result{std::move(run.model()), run.history(), select_checkpoint(run.history())};
    return result;
}

double mean_batch_ms(StrategyKind strategy, const MultiTaskDataset& data, ArchitectureConfig arch,
                     TrainerConfig cfg, int warmup, int samples, const TrainOptions& opts) {
    if (warmup < 1) throw config_error("measure_batch_runtime requires warmup >= 1");
    if (samples < 1) throw config_error("measure_batch_runtime requires samples >= 1");
    cfg.strategy = strategy;
    TrainingRun run(data, arch, cfg, opts);
    const double eta = cfg.eta0;
    const auto batches = run.epoch_batch_indices(0);
    std::vector<Batch> materialized;
    for (const auto& rows : batches) materialized.push_back(run.make_batch(rows));

    for (int i = 0; i < warmup; ++i) {
        run.step_batch(materialized[static_cast<std::size_t>(i) % materialized.size()], eta);
    }
    double total_ms = 0.0;
    for (int i = 0; i < samples; ++i) {
        const Batch& b = materialized[static_cast<std::size_t>(warmup + i) % materialized.size()];
        const auto start = std::chrono::steady_clock::now();
        run.step_batch(b, eta);
        const auto stop = std::chrono::steady_clock::now();
        total_ms += std::chrono::duration<double, std::milli>(stop - start).count();
    }
    return total_ms / samples;
}

double measure_batch_runtime(StrategyKind strategy, const MultiTaskDataset& data,
                             ArchitectureConfig arch, TrainerConfig cfg, int warmup, int samples,
                             const TrainOptions& opts) {
    const double strategy_ms = mean_batch_ms(strategy, data, arch, cfg, warmup, samples, opts);
    const double equal_ms =
        mean_batch_ms(StrategyKind::equal, data, arch, cfg, warmup, samples, opts);
    return strategy_ms / equal_ms;
}

std::map<int, MetricValues> evaluate_split_metrics(const MtlModel& model,
                                                   const MultiTaskDataset& data, Split split) {
    const auto& idx = data.indices(split);
    if (idx.empty()) throw contract_error("empty split");
    std::map<int, MetricValues> out;
    // chunked to bound peak memory on larger CSV datasets
    const std::size_t chunk = 1024;
    std::map<int, Tensor> preds, labels;
    for (int t = 0; t < data.num_tasks(); ++t) {
        const std::size_t w = static_cast<std::size_t>(data.tasks()[t].output_dim);
        preds.emplace(t, Tensor::zeros({idx.size(), w}));
        labels.emplace(t, Tensor::zeros({idx.size(), w}));
    }
    for (std::size_t start = 0; start < idx.size(); start += chunk) {
        const std::size_t end = std::min(idx.size(), start + chunk);
        const std::vector<std::size_t> rows(idx.begin() + start, idx.begin() + end);
        const Batch b = data.gather(rows);
        for (int t = 0; t < data.num_tasks(); ++t) {
            const Tensor p = model.predict_primary(t, b.x);
            const std::size_t w = p.cols();
            std::copy(p.values().begin(), p.values().end(),
                      preds.at(t).values().begin() + start * w);
            const Tensor& y = b.labels.at(t);
            std::copy(y.values().begin(), y.values().end(),
                      labels.at(t).values().begin() + start * w);
        }
    }
    for (int t = 0; t < data.num_tasks(); ++t) {
        out[t] = task_metrics(preds.at(t), labels.at(t), data.tasks()[t]);
    }
    return out;
}

std::map<int, std::vector<MetricSpec>> metric_specs_for_tasks(const std::vector<TaskSpec>& tasks) {
    std::map<int, std::vector<MetricSpec>> out;
    for (const auto& t : tasks) out[t.task_id] = metric_specs_for(t);
    return out;
}

}  // namespace saal
