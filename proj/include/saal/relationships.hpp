#pragma once

#include "saal/relmatrix.hpp"
#include "saal/trainer.hpp"

namespace saal {

// STL baseline runs used by the oracle and the experiment harness: per-task
// validation and test metrics of the best checkpoint.
struct StlBaselines {
    std::map<int, MetricValues> val_metrics;
    std::map<int, MetricValues> test_metrics;
};
StlBaselines train_stl_baselines(const MultiTaskDataset& data, ArchitectureConfig arch,
                                 TrainerConfig cfg);

// Ground-truth directed relationships: trains T STL models and T(T-1)/2
// shared-bottom pair models; score(s, t) is the relative improvement of task
// t in the pair {s, t} against its STL baseline. The raw A values (baseline
// = 0 for STL-vs-itself, pairwise = delta of the pair run) are stored so the
// enumeration cases stay reconstructible.
RelationshipMatrix enumerate_pairwise(const MultiTaskDataset& data, ArchitectureConfig arch,
                                      const TrainerConfig& cfg);

// As above, reusing STL baselines the caller already trained.
RelationshipMatrix enumerate_pairwise(const MultiTaskDataset& data, ArchitectureConfig arch,
                                      const TrainerConfig& cfg, const StlBaselines& stl);

// One look-ahead probe: score(s, t) = L_t(theta) - L_t(theta - eta grad L_s),
// positive when the virtual step on task s reduces task t's loss. Train and
// validation variants are both produced.
struct LookaheadSample {
    RelationshipMatrix train;
    RelationshipMatrix val;
};
LookaheadSample lookahead_loss(MtlModel& model, const Batch& train_batch, const Batch& val_batch,
                               double eta);

// One gradient-angle probe over the shared partition: score(s, t) = angle
// between the two tasks' shared gradients, in [0, pi]; exactly symmetric.
// Zero-norm gradients leave the cell undefined.
RelationshipMatrix gradient_angle(const MtlModel& model, const Batch& batch);

// Collects per-cell samples and reports the median matrix.
class MedianMatrixAccumulator {
public:
    explicit MedianMatrixAccumulator(int num_tasks, std::string method);
    void add(const RelationshipMatrix& sample);
    RelationshipMatrix median() const;

private:
    int num_tasks_;
    std::string method_;
    std::map<std::pair<int, int>, std::vector<double>> samples_;
};

// Trains a shared-bottom equal-weighting model while probing every
// `probe_interval` batches; returns per-cell medians over the run.
struct LookaheadAnalysis {
    RelationshipMatrix train;
    RelationshipMatrix val;
};
LookaheadAnalysis run_lookahead_analysis(const MultiTaskDataset& data, ArchitectureConfig arch,
                                         TrainerConfig cfg, int probe_interval = 10);
RelationshipMatrix run_gradient_angle_analysis(const MultiTaskDataset& data,
                                               ArchitectureConfig arch, TrainerConfig cfg,
                                               int probe_interval = 10);

// Transferability of frozen features: train an STL model on the source task,
// freeze its encoder, fine-tune a fresh transfer head (two dense layers) plus
// a target decoder, and score the target's validation performance (accuracy,
// or negated mse). The diagonal holds the self-transfer control.
RelationshipMatrix feature_transfer_similarity(const MultiTaskDataset& data,
                                               ArchitectureConfig arch, const TrainerConfig& cfg);

}  // namespace saal
