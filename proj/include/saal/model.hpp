#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "saal/graph.hpp"

namespace saal {

enum class TaskKind { regression, classification };

// One learning task. Classification heads emit `output_dim` logits trained
// with softmax cross-entropy; regression heads emit `output_dim` values
// trained with mean squared error.
struct TaskSpec {
    int task_id = 0;
    TaskKind kind = TaskKind::regression;
    int output_dim = 1;
};

enum class Activation { tanh, relu };

struct ArchitectureConfig {
    int input_dim = 1;
    int hidden_width = 16;
    int total_encoder_depth = 2;
    int shared_depth = 1;  // first `shared_depth` encoder layers are shared
    int decoder_depth = 1;
    Activation activation = Activation::tanh;

    void validate() const;
    int encoder_output_dim() const {
        return total_encoder_depth > 0 ? hidden_width : input_dim;
    }
};

// A forward path through the network. The source task supplies data and
// labels; the target task supplies the encoder. Primary routes have
// source == target; self-auxiliary routes differ and use their own decoder.
struct Route {
    int source = 0;
    int target = 0;

    static Route primary(int t) { return {t, t}; }
    static Route self_aux(int s, int t) { return {s, t}; }

    bool is_primary() const { return source == target; }
    std::string id() const {
        return is_primary() ? std::to_string(source)
                            : std::to_string(source) + "->" + std::to_string(target);
    }
    auto operator<=>(const Route&) const = default;
};

// Multi-task model: shared encoder trunk, per-task encoder tails and
// decoders, and one independent decoder per self-auxiliary route. The
// self-auxiliary decoders exist only for training and are never read by the
// inference path.
class MtlModel {
public:
    MtlModel() = default;

    const ArchitectureConfig& arch() const { return arch_; }
    const std::vector<TaskSpec>& tasks() const { return tasks_; }
    const TaskSpec& task(int id) const;
    int num_tasks() const { return static_cast<int>(tasks_.size()); }

    ParameterStore& params() { return params_; }
    const ParameterStore& params() const { return params_; }

    // All routes in deterministic order: primaries by task id, then
    // self-auxiliaries (s, t) lexicographically.
    std::vector<Route> all_routes() const;
    void validate_route(const Route& route) const;

    static std::string input_leaf() { return "x"; }
    static std::string label_leaf(int task) { return "y:" + std::to_string(task); }

    // Appends the route's forward path to `g`; returns the prediction node.
    int append_forward(ComputationGraph& g, const Route& route, int x_node) const;
    // Appends forward plus the source task's loss against its label leaf.
    int append_loss(ComputationGraph& g, const Route& route, int x_node) const;

    ComputationGraph prediction_graph(const Route& route) const;
    ComputationGraph loss_graph(const Route& route) const;

    Tensor forward(const Route& route, const Tensor& x) const;
    Tensor predict_primary(int task_id, const Tensor& x) const;

    // shared + task-specific parameter values; excludes every self_aux
    // partition (they are discarded after training).
    std::size_t inference_parameter_count() const;

    friend MtlModel build_model(const ArchitectureConfig& arch, const std::vector<TaskSpec>& tasks,
                                std::uint64_t seed);

private:
    ArchitectureConfig arch_;
    std::vector<TaskSpec> tasks_;
    ParameterStore params_;
};

// Deterministic construction: each parameter's initial value depends only on
// (seed, parameter name), so two models built with the same seed agree on
// every shared name regardless of which routes exist.
MtlModel build_model(const ArchitectureConfig& arch, const std::vector<TaskSpec>& tasks,
                     std::uint64_t seed);

std::string to_string(TaskKind kind);
TaskKind task_kind_from_string(const std::string& s);
std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

}  // namespace saal
