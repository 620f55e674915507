#include "saal/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "saal/rng.hpp"

namespace saal {

MultiTaskDataset::MultiTaskDataset(Tensor features, std::map<int, Tensor> labels,
                                   std::vector<TaskSpec> tasks, std::vector<std::size_t> train_idx,
                                   std::vector<std::size_t> val_idx,
                                   std::vector<std::size_t> test_idx)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      tasks_(std::move(tasks)),
      train_idx_(std::move(train_idx)),
      val_idx_(std::move(val_idx)),
      test_idx_(std::move(test_idx)) {
    const std::size_t n = features_.rows();
    for (const auto& t : tasks_) {
        auto it = labels_.find(t.task_id);
        if (it == labels_.end()) {
            throw config_error("dataset missing labels for task " + std::to_string(t.task_id));
        }
        if (it->second.rows() != n) {
            throw config_error("labels row count mismatch for task " + std::to_string(t.task_id));
        }
        if (static_cast<int>(it->second.cols()) != t.output_dim) {
            throw config_error("labels width mismatch for task " + std::to_string(t.task_id));
        }
    }
}

const Tensor& MultiTaskDataset::labels(int task) const {
    auto it = labels_.find(task);
    if (it == labels_.end()) throw contract_error("unknown task id: " + std::to_string(task));
    return it->second;
}

const std::vector<std::size_t>& MultiTaskDataset::indices(Split split) const {
    switch (split) {
        case Split::train:
            return train_idx_;
        case Split::val:
            return val_idx_;
        case Split::test:
            return test_idx_;
    }
    throw contract_error("unknown split");
}

Batch MultiTaskDataset::gather(const std::vector<std::size_t>& rows) const {
    if (rows.empty()) throw contract_error("cannot gather an empty batch");
    const std::size_t d = features_.cols();
    Batch batch;
    batch.count = rows.size();
    Tensor x = Tensor::zeros({rows.size(), d});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double* src = features_.values().data() + rows[i] * d;
        std::copy(src, src + d, x.values().data() + i * d);
    }
    batch.x = std::move(x);
    for (const auto& t : tasks_) {
        const Tensor& full = labels_.at(t.task_id);
        const std::size_t w = full.cols();
        Tensor y = Tensor::zeros({rows.size(), w});
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const double* src = full.values().data() + rows[i] * w;
            std::copy(src, src + w, y.values().data() + i * w);
        }
        batch.labels.emplace(t.task_id, std::move(y));
    }
    return batch;
}

Batch MultiTaskDataset::whole_split(Split split) const {
    const auto& idx = indices(split);
    if (idx.empty()) throw contract_error("empty split");
    return gather(idx);
}

MultiTaskDataset MultiTaskDataset::subset_tasks(const std::vector<int>& task_ids) const {
    if (task_ids.empty()) throw config_error("task subset must be non-empty");
    std::vector<TaskSpec> new_tasks;
    std::map<int, Tensor> new_labels;
    for (std::size_t i = 0; i < task_ids.size(); ++i) {
        const int old_id = task_ids[i];
        if (old_id < 0 || old_id >= num_tasks()) {
            throw config_error("task subset references unknown task " + std::to_string(old_id));
        }
        TaskSpec spec = tasks_[old_id];
        spec.task_id = static_cast<int>(i);
        new_tasks.push_back(spec);
        new_labels.emplace(static_cast<int>(i), labels_.at(old_id));
    }
    return MultiTaskDataset(features_, std::move(new_labels), std::move(new_tasks), train_idx_,
                            val_idx_, test_idx_);
}

SplitSizes split_sizes(std::size_t n, double train_fraction, double val_fraction,
                       double test_fraction) {
    if (train_fraction < 0 || val_fraction < 0 || test_fraction < 0 ||
        std::abs(train_fraction + val_fraction + test_fraction - 1.0) > 1e-9) {
        throw config_error("split fractions must be non-negative and sum to 1");
    }
    SplitSizes s{};
    s.val = static_cast<std::size_t>(std::floor(val_fraction * static_cast<double>(n)));
    s.test = static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(n)));
    if (s.val + s.test > n) throw config_error("split fractions leave no training data");
    s.train = n - s.val - s.test;
    return s;
}

void make_splits(std::size_t n, double train_fraction, double val_fraction, double test_fraction,
                 std::uint64_t seed, std::vector<std::size_t>& train, std::vector<std::size_t>& val,
                 std::vector<std::size_t>& test) {
    const SplitSizes sizes = split_sizes(n, train_fraction, val_fraction, test_fraction);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, "split"));
    rng.shuffle(order);
    train.assign(order.begin(), order.begin() + sizes.train);
    val.assign(order.begin() + sizes.train, order.begin() + sizes.train + sizes.val);
    test.assign(order.begin() + sizes.train + sizes.val, order.end());
}

void SyntheticSpec::validate() const {
    if (latent_dim < 1 || num_samples < 4 || input_dim < 1) {
        throw config_error("synthetic spec dimensions out of range");
    }
    for (const SyntheticTaskConfig* c : {&helper, &noisy}) {
        if (c->output_dim < 1) throw config_error("synthetic task output_dim must be >= 1");
        if (c->kind == TaskKind::classification && c->output_dim < 2) {
            throw config_error("classification tasks need >= 2 classes");
        }
        if (c->noise_std < 0) throw config_error("label noise std must be >= 0");
        if (c->support == 0 || c->support > latent_dim) {
            throw config_error("task support must be in [1, latent_dim] or -1 for all");
        }
    }
    if (noisy.clone_transform &&
        (noisy.output_dim != helper.output_dim || noisy.kind != helper.kind)) {
        throw config_error("clone_transform requires matching task shapes");
    }
}

namespace {

struct LatentData {
    Tensor z;  // (N, k)
    Tensor x;  // (N, input_dim)
};

LatentData draw_latent(const SyntheticSpec& spec, std::uint64_t seed) {
    const std::size_t n = static_cast<std::size_t>(spec.num_samples);
    const std::size_t k = static_cast<std::size_t>(spec.latent_dim);
    const std::size_t d = static_cast<std::size_t>(spec.input_dim);

    LatentData out{Tensor::zeros({n, k}), Tensor::zeros({n, d})};
    Rng z_rng(derive_seed(seed, "latent"));
    for (auto& v : out.z.values()) v = z_rng.normal();

    Rng w_rng(derive_seed(seed, "mixing"));
    Tensor w = Tensor::zeros({k, d});
    const double scale = 1.0 / std::sqrt(static_cast<double>(k));
    for (auto& v : w.values()) v = w_rng.normal() * scale;

    Rng noise_rng(derive_seed(seed, "input_noise"));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) acc += out.z[i * k + p] * w[p * d + j];
            out.x[i * d + j] = acc + spec.input_noise_std * noise_rng.normal();
        }
    }
    return out;
}

// Labels from a random linear map of the first `support` latent dims, plus a
// bounded nonlinearity so encoders with activations have something to learn.
Tensor make_labels(const Tensor& z, const SyntheticTaskConfig& cfg, int latent_dim,
                   std::uint64_t transform_seed, std::uint64_t noise_seed) {
    const std::size_t n = z.rows();
    const std::size_t k = z.cols();
    const std::size_t support =
        cfg.support < 0 ? static_cast<std::size_t>(latent_dim) : static_cast<std::size_t>(cfg.support);
    const std::size_t out_dim = static_cast<std::size_t>(cfg.output_dim);

    Rng t_rng(transform_seed);
    Tensor a = Tensor::zeros({support, out_dim});
    const double scale = 1.0 / std::sqrt(static_cast<double>(support));
    for (auto& v : a.values()) v = t_rng.normal() * scale;

    Tensor raw = Tensor::zeros({n, out_dim});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < out_dim; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < support; ++p) acc += z[i * k + p] * a[p * out_dim + j];
            raw[i * out_dim + j] = acc + 0.5 * std::tanh(2.0 * acc);
        }
    }

    if (cfg.kind == TaskKind::classification) {
        // class = argmax of the raw scores; one-hot output
        Tensor y = Tensor::zeros({n, out_dim});
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            for (std::size_t j = 1; j < out_dim; ++j) {
                if (raw[i * out_dim + j] > raw[i * out_dim + best]) best = j;
            }
            y[i * out_dim + best] = 1.0;
        }
        return y;
    }

    Rng n_rng(noise_seed);
    for (auto& v : raw.values()) v = cfg.scale * v;
    if (cfg.noise_std > 0.0) {
        for (auto& v : raw.values()) v += cfg.noise_std * n_rng.normal();
    }
    return raw;
}

}  // namespace

MultiTaskDataset generate_planted_asymmetric(const SyntheticSpec& spec, std::uint64_t seed) {
    spec.validate();
    const LatentData data = draw_latent(spec, seed);

    const std::uint64_t helper_transform = derive_seed(seed, "helper_transform");
    const std::uint64_t noisy_transform = spec.noisy.clone_transform
                                              ? helper_transform
                                              : derive_seed(seed, "noisy_transform");
    Tensor y0 = make_labels(data.z, spec.helper, spec.latent_dim, helper_transform,
                            derive_seed(seed, "helper_noise"));
    Tensor y1 = make_labels(data.z, spec.noisy, spec.latent_dim, noisy_transform,
                            derive_seed(seed, "noisy_noise"));

    std::vector<std::size_t> train, val, test;
    make_splits(static_cast<std::size_t>(spec.num_samples), spec.train_fraction,
                spec.val_fraction, spec.test_fraction, seed, train, val, test);
    std::vector<TaskSpec> tasks = {
        {0, spec.helper.kind, spec.helper.output_dim},
        {1, spec.noisy.kind, spec.noisy.output_dim},
    };
    std::map<int, Tensor> labels;
    labels.emplace(0, std::move(y0));
    labels.emplace(1, std::move(y1));
    return MultiTaskDataset(data.x, std::move(labels), std::move(tasks), std::move(train),
                            std::move(val), std::move(test));
}

MultiTaskDataset generate_symmetric_positive(const SyntheticSpec& spec, std::uint64_t seed) {
    spec.validate();
    const LatentData data = draw_latent(spec, seed);

    // Overlapping supports: both tasks read roughly two thirds of the latent
    // space, sharing the middle third; both noiseless.
    const int k = spec.latent_dim;
    const int span = std::max(1, (2 * k + 2) / 3);

    SyntheticTaskConfig a = spec.helper;
    a.noise_std = 0.0;
    a.support = span;

    SyntheticTaskConfig b = spec.noisy;
    b.noise_std = 0.0;
    b.support = span;

    // Task b reads the trailing `span` dims: reuse make_labels by reversing
    // the latent columns for its transform.
    Tensor z_rev = Tensor::zeros(data.z.shape());
    const std::size_t kk = data.z.cols();
    for (std::size_t i = 0; i < data.z.rows(); ++i) {
        for (std::size_t j = 0; j < kk; ++j) {
            z_rev[i * kk + j] = data.z[i * kk + (kk - 1 - j)];
        }
    }

    Tensor y0 = make_labels(data.z, a, k, derive_seed(seed, "sym_a_transform"),
                            derive_seed(seed, "sym_a_noise"));
    Tensor y1 = make_labels(z_rev, b, k, derive_seed(seed, "sym_b_transform"),
                            derive_seed(seed, "sym_b_noise"));

    std::vector<std::size_t> train, val, test;
    make_splits(static_cast<std::size_t>(spec.num_samples), spec.train_fraction,
                spec.val_fraction, spec.test_fraction, seed, train, val, test);
    std::vector<TaskSpec> tasks = {
        {0, a.kind, a.output_dim},
        {1, b.kind, b.output_dim},
    };
    std::map<int, Tensor> labels;
    labels.emplace(0, std::move(y0));
    labels.emplace(1, std::move(y1));
    return MultiTaskDataset(data.x, std::move(labels), std::move(tasks), std::move(train),
                            std::move(val), std::move(test));
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    cells.push_back(cur);
    for (auto& cell : cells) {
        const auto b = cell.find_first_not_of(" \t");
        const auto e = cell.find_last_not_of(" \t");
        cell = b == std::string::npos ? "" : cell.substr(b, e - b + 1);
    }
    return cells;
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& column) {
    double value = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
        throw parse_error("non-numeric cell in row " + std::to_string(row) + ", column '" +
                          column + "': '" + cell + "'");
    }
    return value;
}

}  // namespace

MultiTaskDataset load_csv(const std::string& path, const CsvSchema& schema) {
    if (schema.feature_columns.empty()) throw config_error("schema needs feature columns");
    if (schema.tasks.empty()) throw config_error("schema needs at least one task");

    std::ifstream in(path);
    if (!in) throw parse_error("cannot open CSV file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw parse_error("CSV file is empty: " + path);
    const std::vector<std::string> header = split_csv_line(line);
    std::map<std::string, std::size_t> column_index;
    for (std::size_t i = 0; i < header.size(); ++i) column_index[header[i]] = i;

    auto require_column = [&](const std::string& name) {
        auto it = column_index.find(name);
        if (it == column_index.end()) throw parse_error("missing column '" + name + "'");
        return it->second;
    };
    std::vector<std::size_t> feature_cols;
    for (const auto& c : schema.feature_columns) feature_cols.push_back(require_column(c));
    std::vector<std::vector<std::size_t>> task_cols;
    for (const auto& t : schema.tasks) {
        if (t.columns.empty()) throw config_error("task '" + t.name + "' has no columns");
        if (t.kind == TaskKind::classification && t.columns.size() != 1) {
            throw config_error("classification task '" + t.name + "' needs one label column");
        }
        std::vector<std::size_t> cols;
        for (const auto& c : t.columns) cols.push_back(require_column(c));
        task_cols.push_back(std::move(cols));
    }

    std::vector<std::vector<double>> rows;
    std::size_t row_number = 0;  // 1-based data rows, header excluded
    while (std::getline(in, line)) {
        if (line.empty() && in.eof()) break;
        ++row_number;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw parse_error("ragged row " + std::to_string(row_number) + ": expected " +
                              std::to_string(header.size()) + " cells, got " +
                              std::to_string(cells.size()));
        }
        std::vector<double> parsed(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            parsed[i] = parse_cell(cells[i], row_number, header[i]);
        }
        rows.push_back(std::move(parsed));
    }
    if (rows.empty()) throw parse_error("CSV file has no data rows: " + path);
    const std::size_t n = rows.size();

    Tensor features = Tensor::zeros({n, feature_cols.size()});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < feature_cols.size(); ++j) {
            features[i * feature_cols.size() + j] = rows[i][feature_cols[j]];
        }
    }

    std::vector<TaskSpec> tasks;
    std::map<int, Tensor> labels;
    for (std::size_t t = 0; t < schema.tasks.size(); ++t) {
        const auto& ts = schema.tasks[t];
        if (ts.kind == TaskKind::classification) {
            int num_classes = ts.num_classes;
            std::vector<int> classes(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double raw = rows[i][task_cols[t][0]];
                const int cls = static_cast<int>(raw);
                if (static_cast<double>(cls) != raw || cls < 0) {
                    throw parse_error("row " + std::to_string(i + 1) +
                                      ": class labels must be non-negative integers");
                }
                classes[i] = cls;
                if (num_classes == 0 || cls >= num_classes) {
                    if (ts.num_classes != 0) {
                        throw parse_error("row " + std::to_string(i + 1) + ": class " +
                                          std::to_string(cls) + " out of range");
                    }
                    num_classes = std::max(num_classes, cls + 1);
                }
            }
            num_classes = std::max(num_classes, 2);
            Tensor y = Tensor::zeros({n, static_cast<std::size_t>(num_classes)});
            for (std::size_t i = 0; i < n; ++i) y[i * num_classes + classes[i]] = 1.0;
            tasks.push_back({static_cast<int>(t), TaskKind::classification, num_classes});
            labels.emplace(static_cast<int>(t), std::move(y));
        } else {
            const std::size_t w = task_cols[t].size();
            Tensor y = Tensor::zeros({n, w});
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < w; ++j) y[i * w + j] = rows[i][task_cols[t][j]];
            }
            tasks.push_back({static_cast<int>(t), TaskKind::regression, static_cast<int>(w)});
            labels.emplace(static_cast<int>(t), std::move(y));
        }
    }

    std::vector<std::size_t> train, val, test;
    make_splits(n, schema.train_fraction, schema.val_fraction, schema.test_fraction,
                schema.split_seed, train, val, test);
    return MultiTaskDataset(std::move(features), std::move(labels), std::move(tasks),
                            std::move(train), std::move(val), std::move(test));
}

}  // namespace saal
