#pragma once

#include <memory>
#include <optional>

#include "saal/datasets.hpp"
#include "saal/metrics.hpp"
#include "saal/strategies.hpp"

namespace saal {

struct TrainerConfig {
    double eta0 = 0.1;
    int epochs = 10;
    int batch_size = 32;
    double omega_lr = 1e-4;
    std::uint64_t seed = 0;
    StrategyKind strategy = StrategyKind::equal;
    int shared_depth = -1;  // -1: keep the architecture's value

    void validate() const;
};

struct EpochRecord {
    int epoch = 0;
    double eta = 0.0;
    std::map<std::string, double> train_loss;  // per route id, mean over batches
    std::map<int, double> val_loss;            // per task
    double val_loss_total = 0.0;
    std::optional<double> val_delta_mtl;
    std::optional<ImprovementReport> val_report;
    CoefficientSet coefficients;  // raw snapshot at epoch end
    double mean_batch_ms = 0.0;
    std::shared_ptr<const ParameterStore> params_snapshot;
};

using TrainingHistory = std::vector<EpochRecord>;

struct Checkpoint {
    int epoch = 0;
    ParameterStore params;
    std::optional<ImprovementReport> val_report;
};

// Best epoch: argmax of validation delta_mtl (ties -> earliest). Runs
// without STL baselines fall back to the smallest total validation loss.
std::size_t select_checkpoint_index(const TrainingHistory& history);
Checkpoint select_checkpoint(const TrainingHistory& history);

struct TrainOptions {
    // Validation metrics of per-task STL baselines; enables delta_mtl
    // checkpoint selection and per-epoch improvement reports.
    std::map<int, MetricValues> stl_val_metrics;
    // Enumeration coefficients, required for saal_e and saal_ew.
    std::optional<CoefficientSet> enumeration_mask;
};

struct TrainResult {
    MtlModel model;
    TrainingHistory history;
    Checkpoint best;
};

// One training run. Owns its model; batch order, parameter init and PCGrad
// ordering all derive from config.seed, so identical configs replay
// bit-exactly. Exposed stepwise so benchmarks and relationship probes can
// drive batches themselves.
class TrainingRun {
public:
    TrainingRun(const MultiTaskDataset& data, ArchitectureConfig arch, const TrainerConfig& cfg,
                const TrainOptions& opts = {});

    MtlModel& model() { return model_; }
    const MtlModel& model() const { return model_; }
    const TrainerConfig& config() const { return cfg_; }
    const CoefficientSet& coefficients() const { return coeffs_; }
    const TrainingHistory& history() const { return history_; }

    double epoch_eta(int epoch) const;
    // Deterministic shuffled batch row-index blocks for one epoch.
    std::vector<std::vector<std::size_t>> epoch_batch_indices(int epoch) const;
    Batch make_batch(const std::vector<std::size_t>& rows) const { return data_.gather(rows); }

    // One optimisation step on a batch (includes the omega update for the
    // weighting strategies).
    void step_batch(const Batch& batch, double eta);

    // Validation pass, history append, checkpoint snapshot.
    void finish_epoch(int epoch, double mean_batch_ms);

    void run_all();

    std::map<int, MetricValues> evaluate_metrics(Split split) const;

private:
    void composite_step(const Batch& batch, double eta);
    void weighted_primary_step(const Batch& batch, const std::map<int, double>& weights,
                               double eta);
    void pcgrad_step(const Batch& batch, double eta);
    Batch next_val_batch();
    void record_route_loss(const Route& route, double loss);

    const MultiTaskDataset& data_;
    TrainerConfig cfg_;
    TrainOptions opts_;
    MtlModel model_;
    CoefficientSet coeffs_;
    AdamState omega_state_;
    AdamConfig omega_adam_;
    std::map<int, double> log_vars_;            // uncertainty weighting state
    std::map<int, double> dwa_epoch_weights_;   // fixed per epoch
    std::vector<std::map<int, double>> epoch_primary_losses_;
    std::map<std::string, double> route_loss_sum_;
    std::map<std::string, int> route_loss_count_;
    TrainingHistory history_;
    long global_step_ = 0;
    std::size_t val_cursor_ = 0;
    bool warned_primary_zero_ = false;
};

TrainResult train_run(const MultiTaskDataset& data, ArchitectureConfig arch,
                      const TrainerConfig& cfg, const TrainOptions& opts = {});

// Mean wall-clock per training batch for `strategy`, divided by the mean for
// equal weighting measured under identical conditions.
double measure_batch_runtime(StrategyKind strategy, const MultiTaskDataset& data,
                             ArchitectureConfig arch, TrainerConfig cfg, int warmup, int samples,
                             const TrainOptions& opts = {});

// Mean wall-clock (ms) per batch for one strategy; building block of the
// ratio above.
double mean_batch_ms(StrategyKind strategy, const MultiTaskDataset& data, ArchitectureConfig arch,
                     TrainerConfig cfg, int warmup, int samples, const TrainOptions& opts = {});

// Per-task metrics of the primary predictions over a split.
std::map<int, MetricValues> evaluate_split_metrics(const MtlModel& model,
                                                   const MultiTaskDataset& data, Split split);

std::map<int, std::vector<MetricSpec>> metric_specs_for_tasks(const std::vector<TaskSpec>& tasks);

}  // namespace saal
