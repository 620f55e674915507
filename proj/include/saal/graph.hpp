#pragma once

#include <map>
#include <string>
#include <vector>

#include "saal/tensor.hpp"

namespace saal {

// Ownership label of a parameter; every parameter carries exactly one.
struct Partition {
    enum class Kind { shared, task, self_aux };
    Kind kind = Kind::shared;
    int task = -1;    // task owner (kind task) or aux target t (kind self_aux)
    int source = -1;  // aux source s (kind self_aux)

    static Partition shared_part() { return {Kind::shared, -1, -1}; }
    static Partition task_part(int t) { return {Kind::task, t, -1}; }
    static Partition self_aux_part(int s, int t) { return {Kind::self_aux, t, s}; }

    std::string label() const;
    static Partition from_label(const std::string& label);

    bool operator==(const Partition& o) const {
        return kind == o.kind && task == o.task && source == o.source;
    }
};

// Named parameter tensors with disjoint partition labels. std::map keeps
// iteration order deterministic, which the replay guarantees rely on.
class ParameterStore {
public:
    void add(const std::string& name, Tensor value, Partition partition);
    bool contains(const std::string& name) const { return params_.count(name) != 0; }
    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;
    const Partition& partition(const std::string& name) const;
    void erase(const std::string& name);

    std::size_t size() const { return params_.size(); }
    std::size_t total_values() const;

    const std::map<std::string, Tensor>& tensors() const { return params_; }
    std::map<std::string, Tensor>& tensors() { return params_; }
    const std::map<std::string, Partition>& partitions() const { return partitions_; }

    std::vector<std::string> names() const;
    std::vector<std::string> names_in(const Partition& p) const;

    bool operator==(const ParameterStore& o) const { return params_ == o.params_; }

private:
    std::map<std::string, Tensor> params_;
    std::map<std::string, Partition> partitions_;
};

// Gradient of a scalar loss w.r.t. a subset of the parameters: keys are a
// subset of the store's keys and shapes match entry-wise.
using GradientMap = std::map<std::string, Tensor>;

enum class OpKind {
    leaf_param,   // named parameter leaf
    leaf_input,   // named constant/input leaf
    matmul,       // (m,k) x (k,n) -> (m,n)
    add,          // elementwise; rhs may be a single row broadcast over lhs rows
    tanh_op,      // elementwise tanh
    relu_op,      // elementwise max(0, x)
    mse,          // mean squared error over all entries -> scalar
    softmax_ce,   // mean softmax cross-entropy over rows -> scalar
    scale,        // multiply by a fixed scalar
    sum           // sum of all entries -> scalar
};

// Reverse-mode differentiation record: a topologically ordered list of
// primitive nodes with parent indices and a designated output node.
class ComputationGraph {
public:
    struct Node {
        OpKind op;
        int a = -1;             // first parent
        int b = -1;             // second parent
        std::string leaf_name;  // leaves only
        double factor = 1.0;    // scale only
    };

    int param(const std::string& name);
    int input(const std::string& name);
    int matmul(int a, int b);
    int add(int a, int b);
    int tanh(int a);
    int relu(int a);
    int mse(int prediction, int target);
    int softmax_ce(int logits, int onehot);
    int scale(int a, double factor);
    int sum(int a);

    void set_output(int node);
    int output() const { return output_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    std::size_t node_count() const { return nodes_.size(); }

private:
    int push(Node n);
    std::vector<Node> nodes_;
    int output_ = -1;
};

using Inputs = std::map<std::string, Tensor>;

// Evaluates the graph output. Pure: no state is mutated. Shape errors raise
// dimension_error; non-finite intermediates raise numeric_error.
Tensor evaluate(const ComputationGraph& graph, const ParameterStore& params,
                const Inputs& inputs);

// One forward pass returning the values of several nodes at once.
std::vector<Tensor> evaluate_nodes(const ComputationGraph& graph, const ParameterStore& params,
                                   const Inputs& inputs, const std::vector<int>& nodes);

// Reverse-mode gradient of the (scalar) output w.r.t. every parameter leaf
// reachable from the output. Parameters not on the differentiated path are
// absent from the result.
GradientMap backward(const ComputationGraph& graph, const ParameterStore& params,
                     const Inputs& inputs);

// backward plus recorded forward values of `record_nodes`, sharing one
// forward pass.
std::pair<GradientMap, std::vector<Tensor>> backward_with_nodes(
    const ComputationGraph& graph, const ParameterStore& params, const Inputs& inputs,
    const std::vector<int>& record_nodes);

// Central-difference oracle: (L(p+h) - L(p-h)) / 2h per parameter entry,
// restricted to parameter leaves present in the graph.
GradientMap numerical_gradient(const ComputationGraph& graph, const ParameterStore& params,
                               const Inputs& inputs, double h);

}  // namespace saal
