#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "saal/model.hpp"

namespace saal {

enum class Split { train, val, test };

// One mini-batch: a common input block plus labels for every task (all tasks
// share the input tensor; self-auxiliaries reuse the source task's labels).
struct Batch {
    Tensor x;
    std::map<int, Tensor> labels;
    std::size_t count = 0;
};

class MultiTaskDataset {
public:
    MultiTaskDataset(Tensor features, std::map<int, Tensor> labels, std::vector<TaskSpec> tasks,
                     std::vector<std::size_t> train_idx, std::vector<std::size_t> val_idx,
                     std::vector<std::size_t> test_idx);

    const std::vector<TaskSpec>& tasks() const { return tasks_; }
    int num_tasks() const { return static_cast<int>(tasks_.size()); }
    std::size_t num_samples() const { return features_.rows(); }
    int input_dim() const { return static_cast<int>(features_.cols()); }

    const Tensor& features() const { return features_; }
    const Tensor& labels(int task) const;

    const std::vector<std::size_t>& indices(Split split) const;

    Batch gather(const std::vector<std::size_t>& rows) const;
    Batch whole_split(Split split) const;

    // View with a reduced, reindexed task set; features and splits unchanged.
    MultiTaskDataset subset_tasks(const std::vector<int>& task_ids) const;

private:
    Tensor features_;
    std::map<int, Tensor> labels_;
    std::vector<TaskSpec> tasks_;
    std::vector<std::size_t> train_idx_, val_idx_, test_idx_;
};

// Deterministic shuffled split; val/test sizes floor(fraction * N), the
// remainder goes to train.
struct SplitSizes {
    std::size_t train, val, test;
};
SplitSizes split_sizes(std::size_t n, double train_fraction, double val_fraction,
                       double test_fraction);
void make_splits(std::size_t n, double train_fraction, double val_fraction,
                 double test_fraction, std::uint64_t seed, std::vector<std::size_t>& train,
                 std::vector<std::size_t>& val, std::vector<std::size_t>& test);

// Per-task generator knobs. `support` is the number of leading latent
// dimensions the labels depend on (-1 = all), `scale` multiplies the clean
// signal (the noisy task's scale sets how hard its gradients hit shared
// features), `noise_std` is additive label noise, and `clone_transform`
// reuses the helper task's label map (degenerate identical-task control).
struct SyntheticTaskConfig {
    TaskKind kind = TaskKind::regression;
    int output_dim = 2;
    int support = -1;
    double noise_std = 0.0;
    double scale = 1.0;
    bool clone_transform = false;
};

struct SyntheticSpec {
    int latent_dim = 8;
    int num_samples = 2000;
    int input_dim = 16;
    double input_noise_std = 0.01;
    SyntheticTaskConfig helper;   // task 0: clean, full-latent by default
    SyntheticTaskConfig noisy;    // task 1: subspace + label noise by default
    double train_fraction = 0.7;
    double val_fraction = 0.15;
    double test_fraction = 0.15;

    SyntheticSpec() {
        helper.output_dim = 4;
        helper.support = -1;
        noisy.output_dim = 2;
        noisy.support = 3;
        noisy.noise_std = 1.0;
        noisy.scale = 2.0;
    }
    void validate() const;
};

// Two tasks over a common latent space, planted so that task 0 (clean,
// full-latent) transfers positively to task 1 (noisy subspace of task 0's
// support) while task 1's noisy gradients degrade task 0.
MultiTaskDataset generate_planted_asymmetric(const SyntheticSpec& spec, std::uint64_t seed);

// Two noiseless tasks on overlapping latent subspaces; joint training should
// help both directions.
MultiTaskDataset generate_symmetric_positive(const SyntheticSpec& spec, std::uint64_t seed);

// CSV ingestion. The schema maps header columns to features and task labels;
// classification label columns hold integer class ids.
struct CsvTaskSchema {
    std::string name;
    std::vector<std::string> columns;
    TaskKind kind = TaskKind::regression;
    int num_classes = 0;  // 0: infer from data
};

struct CsvSchema {
    std::vector<std::string> feature_columns;
    std::vector<CsvTaskSchema> tasks;
    double train_fraction = 0.7;
    double val_fraction = 0.15;
    double test_fraction = 0.15;
    std::uint64_t split_seed = 0;
};

MultiTaskDataset load_csv(const std::string& path, const CsvSchema& schema);

}  // namespace saal
