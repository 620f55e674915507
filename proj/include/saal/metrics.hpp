#pragma once

#include <map>
#include <string>
#include <vector>

#include "saal/model.hpp"

namespace saal {

struct MetricSpec {
    std::string name;
    bool lower_is_better = false;
};

using MetricValues = std::map<std::string, double>;

// Metrics attached to a task: accuracy (higher better) for classification,
// mse (lower better) for regression.
std::vector<MetricSpec> metric_specs_for(const TaskSpec& task);

MetricValues task_metrics(const Tensor& predictions, const Tensor& labels, const TaskSpec& task);

// Signed percent improvement per task against an STL baseline, averaged over
// that task's metrics:
//   delta_t = (100 / m_t) * sum_i (-1)^{l_i} (M_i - S_i) / S_i
// delta_mtl is the mean of delta_t over tasks.
struct ImprovementReport {
    std::map<int, double> delta_task;  // percent
    double delta_mtl = 0.0;
    std::map<int, MetricValues> mtl_metrics;
    std::map<int, MetricValues> stl_metrics;
};

ImprovementReport relative_improvement(const std::map<int, MetricValues>& mtl_metrics,
                                       const std::map<int, MetricValues>& stl_metrics,
                                       const std::map<int, std::vector<MetricSpec>>& specs);

// Scalar "higher is better" summary used for rank comparisons between
// estimators: accuracy as-is, negated mse.
double performance_score(const MetricValues& metrics, const TaskSpec& task);

// Round half away from zero to `digits` decimals, the rendering used by
// reports (internal values stay unrounded).
double round_decimals(double v, int digits);

}  // namespace saal
