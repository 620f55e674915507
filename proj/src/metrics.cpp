#include "saal/metrics.hpp"

#include <cmath>

namespace saal {

std::vector<MetricSpec> metric_specs_for(const TaskSpec& task) {
    if (task.kind == TaskKind::classification) return {{"accuracy", false}};
    return {{"mse", true}};
}

namespace {

std::size_t argmax_row(const Tensor& t, std::size_t row) {
    const std::size_t cols = t.cols();
    std::size_t best = 0;
    for (std::size_t c = 1; c < cols; ++c) {
        if (t[row * cols + c] > t[row * cols + best]) best = c;
    }
    return best;
}

}  // namespace

MetricValues task_metrics(const Tensor& predictions, const Tensor& labels, const TaskSpec& task) {
    if (!predictions.same_shape(labels)) {
        throw dimension_error("task_metrics shape mismatch: " +
                              shape_to_string(predictions.shape()) + " vs " +
                              shape_to_string(labels.shape()));
    }
    if (task.kind == TaskKind::classification) {
        const std::size_t rows = predictions.rows();
        std::size_t correct = 0;
        for (std::size_t r = 0; r < rows; ++r) {
            if (argmax_row(predictions, r) == argmax_row(labels, r)) ++correct;
        }
        return {{"accuracy", static_cast<double>(correct) / static_cast<double>(rows)}};
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions[i] - labels[i];
        acc += d * d;
    }
    return {{"mse", acc / static_cast<double>(predictions.size())}};
}

ImprovementReport relative_improvement(const std::map<int, MetricValues>& mtl_metrics,
                                       const std::map<int, MetricValues>& stl_metrics,
                                       const std::map<int, std::vector<MetricSpec>>& specs) {
    if (mtl_metrics.size() != stl_metrics.size() || mtl_metrics.size() != specs.size()) {
        throw contract_error("relative_improvement: mismatched task sets");
    }
    ImprovementReport report;
    report.mtl_metrics = mtl_metrics;
    report.stl_metrics = stl_metrics;
    double total = 0.0;
    for (const auto& [task, task_specs] : specs) {
        auto mit = mtl_metrics.find(task);
        auto sit = stl_metrics.find(task);
        if (mit == mtl_metrics.end() || sit == stl_metrics.end()) {
            throw contract_error("relative_improvement: missing task " + std::to_string(task));
        }
        if (task_specs.empty()) {
            throw contract_error("relative_improvement: task has no metrics");
        }
        double acc = 0.0;
        for (const auto& spec : task_specs) {
            auto m = mit->second.find(spec.name);
            auto s = sit->second.find(spec.name);
            if (m == mit->second.end() || s == sit->second.end()) {
                throw contract_error("relative_improvement: missing metric " + spec.name);
            }
            if (s->second == 0.0) {
                throw contract_error("relative_improvement: zero baseline for " + spec.name);
            }
            const double rel = (m->second - s->second) / s->second;
            acc += spec.lower_is_better ? -rel : rel;
        }
        const double delta = 100.0 * acc / static_cast<double>(task_specs.size());
        report.delta_task[task] = delta;
        total += delta;
    }
    report.delta_mtl = total / static_cast<double>(specs.size());
    return report;
}

double performance_score(const MetricValues& metrics, const TaskSpec& task) {
    if (task.kind == TaskKind::classification) return metrics.at("accuracy");
    return -metrics.at("mse");
}

double round_decimals(double v, int digits) {
    const double scale = std::pow(10.0, digits);
    return std::round(v * scale) / scale;
}

}  // namespace saal
