#include "saal/relationships.hpp"

#include <algorithm>
#include <cmath>

#include "saal/rng.hpp"

namespace saal {

StlBaselines train_stl_baselines(const MultiTaskDataset& data, ArchitectureConfig arch,
                                 TrainerConfig cfg) {
    // STL: same architecture, no sharing, a single task.
    arch.shared_depth = 0;
    cfg.shared_depth = 0;
    cfg.strategy = StrategyKind::equal;
    StlBaselines out;
    for (int t = 0; t < data.num_tasks(); ++t) {
        const MultiTaskDataset single = data.subset_tasks({t});
        const TrainResult res = train_run(single, arch, cfg);
        MtlModel best = build_model(res.model.arch(), single.tasks(), cfg.seed);
        best.params() = res.best.params;
        out.val_metrics[t] = evaluate_split_metrics(best, single, Split::val).at(0);
        out.test_metrics[t] = evaluate_split_metrics(best, single, Split::test).at(0);
    }
    return out;
}

RelationshipMatrix enumerate_pairwise(const MultiTaskDataset& data, ArchitectureConfig arch,
                                      const TrainerConfig& cfg) {
    return enumerate_pairwise(data, arch, cfg, train_stl_baselines(data, arch, cfg));
}

RelationshipMatrix enumerate_pairwise(const MultiTaskDataset& data, ArchitectureConfig arch,
                                      const TrainerConfig& cfg, const StlBaselines& stl) {
    const int T = data.num_tasks();
    if (T < 2) throw config_error("enumerate_pairwise needs at least two tasks");

    RelationshipMatrix rel(T, "enumeration");
    rel.seeds = {cfg.seed};
    // A is the relative-improvement functional, so each task's solo
    // performance is its own baseline: A_t^{{t}} = 0.
    for (int t = 0; t < T; ++t) rel.baseline[t] = 0.0;

    ArchitectureConfig pair_arch = arch;
    pair_arch.shared_depth = pair_arch.total_encoder_depth;  // shared bottom
    TrainerConfig pair_cfg = cfg;
    pair_cfg.strategy = StrategyKind::equal;
    pair_cfg.shared_depth = pair_arch.total_encoder_depth;

    for (int s = 0; s < T; ++s) {
        for (int t = s + 1; t < T; ++t) {
            const MultiTaskDataset pair_data = data.subset_tasks({s, t});
            TrainOptions opts;
            opts.stl_val_metrics[0] = stl.val_metrics.at(s);
            opts.stl_val_metrics[1] = stl.val_metrics.at(t);
            TrainResult res;
            try {
                res = train_run(pair_data, pair_arch, pair_cfg, opts);
            } catch (const error& e) {
                throw numeric_error("pair {" + std::to_string(s) + "," + std::to_string(t) +
                                    "}: " + e.what());
            }
            MtlModel best = build_model(res.model.arch(), pair_data.tasks(), pair_cfg.seed);
            best.params() = res.best.params;
            const auto test_metrics = evaluate_split_metrics(best, pair_data, Split::test);

            std::map<int, MetricValues> stl_pair;
            stl_pair[0] = stl.test_metrics.at(s);
            stl_pair[1] = stl.test_metrics.at(t);
            const ImprovementReport report = relative_improvement(
                test_metrics, stl_pair, metric_specs_for_tasks(pair_data.tasks()));

            // delta of task t when trained with s = effect of source s on t
            rel.set(s, t, report.delta_task.at(1));
            rel.set(t, s, report.delta_task.at(0));
            rel.pairwise[{s, t}] = report.delta_task.at(1);
            rel.pairwise[{t, s}] = report.delta_task.at(0);
        }
    }
    return rel;
}

LookaheadSample lookahead_loss(MtlModel& model, const Batch& train_batch, const Batch& val_batch,
                               double eta) {
    const int T = model.num_tasks();
    LookaheadSample out{RelationshipMatrix(T, "lookahead_train"),
                        RelationshipMatrix(T, "lookahead_val")};

    const Inputs train_inputs = bind_batch(train_batch);
    const Inputs val_inputs = bind_batch(val_batch);

    auto task_losses = [&](const Inputs& inputs) {
        std::vector<double> losses(T);
        for (int t = 0; t < T; ++t) {
            const ComputationGraph g = model.loss_graph(Route::primary(t));
            losses[t] = evaluate(g, model.params(), inputs).scalar_value();
        }
        return losses;
    };

    const std::vector<double> base_train = task_losses(train_inputs);
    const std::vector<double> base_val = task_losses(val_inputs);
    const ParameterStore snapshot = model.params();

    for (int s = 0; s < T; ++s) {
        const ComputationGraph g = model.loss_graph(Route::primary(s));
        const GradientMap grad = backward(g, model.params(), train_inputs);
        sgd_step(model.params(), grad, eta);
        const std::vector<double> stepped_train = task_losses(train_inputs);
        const std::vector<double> stepped_val = task_losses(val_inputs);
        model.params() = snapshot;
        for (int t = 0; t < T; ++t) {
            if (t == s) continue;
            // positive = the virtual step on s reduced t's loss
            out.train.set(s, t, base_train[t] - stepped_train[t]);
            out.val.set(s, t, base_val[t] - stepped_val[t]);
        }
    }
    return out;
}

RelationshipMatrix gradient_angle(const MtlModel& model, const Batch& batch) {
    const int T = model.num_tasks();
    RelationshipMatrix rel(T, "gradient_angle");
    const Inputs inputs = bind_batch(batch);

    std::vector<std::vector<double>> shared_flat(T);
    for (int t = 0; t < T; ++t) {
        const ComputationGraph g = model.loss_graph(Route::primary(t));
        const GradientMap grads = backward(g, model.params(), inputs);
        for (const auto& [name, g_t] : grads) {
            if (model.params().partition(name).kind == Partition::Kind::shared) {
                shared_flat[t].insert(shared_flat[t].end(), g_t.values().begin(),
                                      g_t.values().end());
            }
        }
    }
    if (!shared_flat.empty() && shared_flat[0].empty()) {
        throw contract_error("gradient_angle requires a non-empty shared partition");
    }

    for (int s = 0; s < T; ++s) {
        for (int t = s + 1; t < T; ++t) {
            double dot = 0.0, ns = 0.0, nt = 0.0;
            for (std::size_t i = 0; i < shared_flat[s].size(); ++i) {
                dot += shared_flat[s][i] * shared_flat[t][i];
                ns += shared_flat[s][i] * shared_flat[s][i];
                nt += shared_flat[t][i] * shared_flat[t][i];
            }
            if (ns == 0.0 || nt == 0.0) continue;  // undefined-angle marker: cell stays unset
            const double c = std::clamp(dot / std::sqrt(ns * nt), -1.0, 1.0);
            const double angle = std::acos(c);
            rel.set(s, t, angle);
            rel.set(t, s, angle);  // symmetric by construction
        }
    }
    return rel;
}

MedianMatrixAccumulator::MedianMatrixAccumulator(int num_tasks, std::string method)
    : num_tasks_(num_tasks), method_(std::move(method)) {}

void MedianMatrixAccumulator::add(const RelationshipMatrix& sample) {
    for (int s = 0; s < num_tasks_; ++s) {
        for (int t = 0; t < num_tasks_; ++t) {
            if (sample.defined(s, t)) samples_[{s, t}].push_back(sample.get(s, t));
        }
    }
}

RelationshipMatrix MedianMatrixAccumulator::median() const {
    RelationshipMatrix out(num_tasks_, method_);
    for (const auto& [cell, values] : samples_) {
        std::vector<double> sorted = values;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t n = sorted.size();
        const double med =
            n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
        out.set(cell.first, cell.second, med);
    }
    return out;
}

namespace {

// Shared-bottom equal-weighting run with a per-batch probe hook.
template <typename Probe>
void probe_training_run(const MultiTaskDataset& data, ArchitectureConfig arch, TrainerConfig cfg,
                        int probe_interval, Probe&& probe) {
    if (probe_interval < 1) throw config_error("probe interval must be >= 1");
    arch.shared_depth = arch.total_encoder_depth;
    cfg.shared_depth = arch.total_encoder_depth;
    cfg.strategy = StrategyKind::equal;
    TrainingRun run(data, arch, cfg);
    long step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double eta = run.epoch_eta(epoch);
        for (const auto& rows : run.epoch_batch_indices(epoch)) {
            const Batch batch = run.make_batch(rows);
            if (step % probe_interval == 0) probe(run, batch, eta);
            run.step_batch(batch, eta);
            ++step;
        }
        run.finish_epoch(epoch, 0.0);
    }
}

}  // namespace

LookaheadAnalysis run_lookahead_analysis(const MultiTaskDataset& data, ArchitectureConfig arch,
                                         TrainerConfig cfg, int probe_interval) {
    MedianMatrixAccumulator train_acc(data.num_tasks(), "lookahead_train");
    MedianMatrixAccumulator val_acc(data.num_tasks(), "lookahead_val");
    const Batch val_batch = data.whole_split(Split::val);
    probe_training_run(data, arch, cfg, probe_interval,
                       [&](TrainingRun& run, const Batch& batch, double eta) {
                           const LookaheadSample sample =
                               lookahead_loss(run.model(), batch, val_batch, eta);
                           train_acc.add(sample.train);
                           val_acc.add(sample.val);
                       });
    LookaheadAnalysis out{train_acc.median(), val_acc.median()};
    out.train.seeds = {cfg.seed};
    out.val.seeds = {cfg.seed};
    return out;
}

RelationshipMatrix run_gradient_angle_analysis(const MultiTaskDataset& data,
                                               ArchitectureConfig arch, TrainerConfig cfg,
                                               int probe_interval) {
    MedianMatrixAccumulator acc(data.num_tasks(), "gradient_angle");
    probe_training_run(data, arch, cfg, probe_interval,
                       [&](TrainingRun& run, const Batch& batch, double eta) {
                           (void)eta;
                           acc.add(gradient_angle(run.model(), batch));
                       });
    RelationshipMatrix out = acc.median();
    out.seeds = {cfg.seed};
    return out;
}

namespace {

// Frozen-encoder transfer model: source STL encoder (frozen), a fresh
// two-layer transfer head, and a fresh decoder for the target task.
struct TransferModel {
    ParameterStore params;
    std::vector<std::string> trainable;  // head + decoder parameter names
    ComputationGraph loss_graph;
    ComputationGraph pred_graph;
};

TransferModel build_transfer_model(const MtlModel& source_stl, const TaskSpec& target,
                                   const ArchitectureConfig& arch, std::uint64_t seed) {
    TransferModel tm;
    // copy the frozen encoder (task 0 of the STL model, shared_depth = 0)
    std::vector<std::string> encoder_names;
    for (const auto& [name, tens] : source_stl.params().tensors()) {
        if (name.rfind("enc.", 0) == 0) {
            tm.params.add(name, tens, Partition::shared_part());
            encoder_names.push_back(name);
        }
    }

    const int enc_out = arch.encoder_output_dim();
    auto glorot = [&](const std::string& name, int fan_in, int fan_out) {
        Rng rng(derive_seed(seed, name));
        const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Tensor w = Tensor::zeros(
            {static_cast<std::size_t>(fan_in), static_cast<std::size_t>(fan_out)});
        for (auto& v : w.values()) v = rng.uniform(-a, a);
        return w;
    };
    auto add_trainable = [&](const std::string& name, Tensor t) {
        tm.params.add(name, std::move(t), Partition::task_part(0));
        tm.trainable.push_back(name);
    };
    // transfer head: two dense layers of hidden width
    add_trainable("head.0.w", glorot("head.0.w", enc_out, arch.hidden_width));
    add_trainable("head.0.b", Tensor::zeros({1, static_cast<std::size_t>(arch.hidden_width)}));
    add_trainable("head.1.w", glorot("head.1.w", arch.hidden_width, arch.hidden_width));
    add_trainable("head.1.b", Tensor::zeros({1, static_cast<std::size_t>(arch.hidden_width)}));
    // fresh decoder shaped like the target task's
    int in_dim = arch.hidden_width;
    for (int j = 0; j < arch.decoder_depth; ++j) {
        const bool last = j + 1 == arch.decoder_depth;
        const int out = last ? target.output_dim : arch.hidden_width;
        const std::string prefix = "dec." + std::to_string(j);
        add_trainable(prefix + ".w", glorot(prefix + ".w", in_dim, out));
        add_trainable(prefix + ".b", Tensor::zeros({1, static_cast<std::size_t>(out)}));
        in_dim = out;
    }

    const bool use_relu = arch.activation == Activation::relu;
    auto build = [&](ComputationGraph& g, bool with_loss) {
        const int x = g.input("x");
        int h = x;
        auto dense = [&](const std::string& w, const std::string& b, bool activate) {
            h = g.add(g.matmul(h, g.param(w)), g.param(b));
            if (activate) h = use_relu ? g.relu(h) : g.tanh(h);
        };
        for (int i = 0; i < arch.total_encoder_depth; ++i) {
            const std::string prefix = "enc.task0." + std::to_string(i);
            dense(prefix + ".w", prefix + ".b", true);
        }
        dense("head.0.w", "head.0.b", true);
        dense("head.1.w", "head.1.b", true);
        for (int j = 0; j < arch.decoder_depth; ++j) {
            const std::string prefix = "dec." + std::to_string(j);
            dense(prefix + ".w", prefix + ".b", j + 1 < arch.decoder_depth);
        }
        if (with_loss) {
            const int y = g.input("y");
            h = target.kind == TaskKind::classification ? g.softmax_ce(h, y) : g.mse(h, y);
        }
        g.set_output(h);
    };
    build(tm.loss_graph, true);
    build(tm.pred_graph, false);
    return tm;
}

}  // namespace

RelationshipMatrix feature_transfer_similarity(const MultiTaskDataset& data,
                                               ArchitectureConfig arch, const TrainerConfig& cfg) {
    const int T = data.num_tasks();
    RelationshipMatrix rel(T, "feature_similarity");
    rel.seeds = {cfg.seed};

    ArchitectureConfig stl_arch = arch;
    stl_arch.shared_depth = 0;
    TrainerConfig stl_cfg = cfg;
    stl_cfg.strategy = StrategyKind::equal;
    stl_cfg.shared_depth = 0;

    for (int s = 0; s < T; ++s) {
        const MultiTaskDataset source_data = data.subset_tasks({s});
        const TrainResult source_res = train_run(source_data, stl_arch, stl_cfg);
        MtlModel source_best = build_model(source_res.model.arch(), source_data.tasks(),
                                           stl_cfg.seed);
        source_best.params() = source_res.best.params;

        for (int t = 0; t < T; ++t) {
            const TaskSpec target = data.tasks()[t];
            TransferModel tm = build_transfer_model(
                source_best, target, source_res.model.arch(),
                derive_seed(cfg.seed, "transfer:" + std::to_string(s) + ":" + std::to_string(t)));

            const MultiTaskDataset target_data = data.subset_tasks({t});
            // fine-tune head + decoder; the encoder stays frozen because its
            // gradients are dropped before each step
            Rng batch_rng(derive_seed(cfg.seed, "transfer_batches"));
            double best_val = 0.0;
            bool has_best = false;
            for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
                const double eta = cosine_lr(epoch, cfg.epochs, cfg.eta0);
                std::vector<std::size_t> order = target_data.indices(Split::train);
                batch_rng.shuffle(order);
                for (std::size_t i = 0; i < order.size();
                     i += static_cast<std::size_t>(cfg.batch_size)) {
                    const std::size_t end =
                        std::min(order.size(), i + static_cast<std::size_t>(cfg.batch_size));
                    const std::vector<std::size_t> rows(order.begin() + i, order.begin() + end);
                    const Batch b = target_data.gather(rows);
                    Inputs inputs{{"x", b.x}, {"y", b.labels.at(0)}};
                    GradientMap grads = backward(tm.loss_graph, tm.params, inputs);
                    GradientMap trainable_only;
                    for (const auto& name : tm.trainable) {
                        auto it = grads.find(name);
                        if (it != grads.end()) trainable_only.emplace(name, it->second);
                    }
                    sgd_step(tm.params, trainable_only, eta);
                }
                // validation performance of this epoch; keep the best
                const Batch vb = target_data.whole_split(Split::val);
                const Tensor preds = evaluate(tm.pred_graph, tm.params, {{"x", vb.x}});
                const MetricValues m = task_metrics(preds, vb.labels.at(0), target);
                const double score = performance_score(m, target);
                if (!has_best || score > best_val) {
                    best_val = score;
                    has_best = true;
                }
            }
            rel.set(s, t, best_val);
        }
    }
    return rel;
}

}  // namespace saal
