#include "saal/graph.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace saal {

std::string Partition::label() const {
    switch (kind) {
        case Kind::shared:
            return "shared";
        case Kind::task:
            return "task:" + std::to_string(task);
        case Kind::self_aux:
            return "self_aux:" + std::to_string(source) + "->" + std::to_string(task);
    }
    return "?";
}

Partition Partition::from_label(const std::string& label) {
    if (label == "shared") return shared_part();
    if (label.rfind("task:", 0) == 0) {
        return task_part(std::stoi(label.substr(5)));
    }
    if (label.rfind("self_aux:", 0) == 0) {
        const std::string rest = label.substr(9);
        const auto arrow = rest.find("->");
        if (arrow != std::string::npos) {
            return self_aux_part(std::stoi(rest.substr(0, arrow)),
                                 std::stoi(rest.substr(arrow + 2)));
        }
    }
    throw parse_error("unknown partition label: " + label);
}

void ParameterStore::add(const std::string& name, Tensor value, Partition partition) {
    if (params_.count(name)) {
        throw contract_error("duplicate parameter id: " + name);
    }
    params_.emplace(name, std::move(value));
    partitions_.emplace(name, partition);
}

Tensor& ParameterStore::at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw contract_error("unknown parameter id: " + name);
    return it->second;
}

const Tensor& ParameterStore::at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw contract_error("unknown parameter id: " + name);
    return it->second;
}

const Partition& ParameterStore::partition(const std::string& name) const {
    auto it = partitions_.find(name);
    if (it == partitions_.end()) throw contract_error("unknown parameter id: " + name);
    return it->second;
}

void ParameterStore::erase(const std::string& name) {
    params_.erase(name);
    partitions_.erase(name);
}

std::size_t ParameterStore::total_values() const {
    std::size_t n = 0;
    for (const auto& [name, t] : params_) n += t.size();
    return n;
}

std::vector<std::string> ParameterStore::names() const {
    std::vector<std::string> out;
    out.reserve(params_.size());
    for (const auto& [name, t] : params_) out.push_back(name);
    return out;
}

std::vector<std::string> ParameterStore::names_in(const Partition& p) const {
    std::vector<std::string> out;
    for (const auto& [name, part] : partitions_) {
        if (part == p) out.push_back(name);
    }
    return out;
}

int ComputationGraph::push(Node n) {
    if (n.a >= static_cast<int>(nodes_.size()) || n.b >= static_cast<int>(nodes_.size())) {
        throw contract_error("graph parents must precede their node");
    }
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

int ComputationGraph::param(const std::string& name) {
    Node n;
    n.op = OpKind::leaf_param;
    n.leaf_name = name;
    return push(std::move(n));
}

int ComputationGraph::input(const std::string& name) {
    Node n;
    n.op = OpKind::leaf_input;
    n.leaf_name = name;
    return push(std::move(n));
}

int ComputationGraph::matmul(int a, int b) { return push({OpKind::matmul, a, b, "", 1.0}); }
int ComputationGraph::add(int a, int b) { return push({OpKind::add, a, b, "", 1.0}); }
int ComputationGraph::tanh(int a) { return push({OpKind::tanh_op, a, -1, "", 1.0}); }
int ComputationGraph::relu(int a) { return push({OpKind::relu_op, a, -1, "", 1.0}); }
int ComputationGraph::mse(int prediction, int target) {
    return push({OpKind::mse, prediction, target, "", 1.0});
}
int ComputationGraph::softmax_ce(int logits, int onehot) {
    return push({OpKind::softmax_ce, logits, onehot, "", 1.0});
}
int ComputationGraph::scale(int a, double factor) {
    return push({OpKind::scale, a, -1, "", factor});
}
int ComputationGraph::sum(int a) { return push({OpKind::sum, a, -1, "", 1.0}); }

void ComputationGraph::set_output(int node) {
    if (node < 0 || node >= static_cast<int>(nodes_.size())) {
        throw contract_error("output node out of range");
    }
    output_ = node;
}

namespace {

bool is_row_broadcast(const Tensor& a, const Tensor& b) {
    // rhs is a single row applied to every row of lhs
    return a.rank() <= 2 && b.rank() <= 2 && b.rows() == 1 && a.cols() == b.cols() &&
           a.rows() != b.rows();
}

Tensor eval_matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() > 2 || b.rank() > 2 || a.cols() != b.rows()) {
        throw dimension_error("matmul shape mismatch: " + shape_to_string(a.shape()) + " x " +
                              shape_to_string(b.shape()));
    }
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor out = Tensor::zeros({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a[i * k + p];
            if (av == 0.0) continue;
            const double* brow = b.values().data() + p * n;
            double* orow = out.values().data() + i * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

Tensor eval_add(const Tensor& a, const Tensor& b) {
    if (a.same_shape(b)) {
        Tensor out = a;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
        return out;
    }
    if (is_row_broadcast(a, b)) {
        Tensor out = a;
        const std::size_t n = a.cols();
        for (std::size_t i = 0; i < a.rows(); ++i) {
            for (std::size_t j = 0; j < n; ++j) out[i * n + j] += b[j];
        }
        return out;
    }
    throw dimension_error("add shape mismatch: " + shape_to_string(a.shape()) + " + " +
                          shape_to_string(b.shape()));
}

Tensor eval_mse(const Tensor& pred, const Tensor& target) {
    if (!pred.same_shape(target)) {
        throw dimension_error("mse shape mismatch: " + shape_to_string(pred.shape()) + " vs " +
                              shape_to_string(target.shape()));
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        acc += d * d;
    }
    return Tensor::scalar(acc / static_cast<double>(pred.size()));
}

// Row-wise log-softmax, shared by the forward loss and its backward rule.
void softmax_rows(const Tensor& logits, std::vector<double>& probs) {
    const std::size_t rows = logits.rows(), cols = logits.cols();
    probs.resize(rows * cols);
    for (std::size_t i = 0; i < rows; ++i) {
        const double* row = logits.values().data() + i * cols;
        double mx = row[0];
        for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, row[j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < cols; ++j) denom += std::exp(row[j] - mx);
        for (std::size_t j = 0; j < cols; ++j) {
            probs[i * cols + j] = std::exp(row[j] - mx) / denom;
        }
    }
}

Tensor eval_softmax_ce(const Tensor& logits, const Tensor& onehot) {
    if (!logits.same_shape(onehot) || logits.rank() != 2) {
        throw dimension_error("softmax_ce expects matching (batch, classes) tensors");
    }
    const std::size_t rows = logits.rows(), cols = logits.cols();
    std::vector<double> probs;
    softmax_rows(logits, probs);
    double acc = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            const double y = onehot[i * cols + j];
            if (y != 0.0) acc -= y * std::log(std::max(probs[i * cols + j], 1e-300));
        }
    }
    return Tensor::scalar(acc / static_cast<double>(rows));
}

std::vector<Tensor> forward_all(const ComputationGraph& graph, const ParameterStore& params,
                                const Inputs& inputs) {
    const auto& nodes = graph.nodes();
    std::vector<Tensor> values(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& n = nodes[i];
        switch (n.op) {
            case OpKind::leaf_param:
                values[i] = params.at(n.leaf_name);
                break;
            case OpKind::leaf_input: {
                auto it = inputs.find(n.leaf_name);
                if (it == inputs.end()) {
                    throw contract_error("unbound input leaf: " + n.leaf_name);
                }
                values[i] = it->second;
                break;
            }
            case OpKind::matmul:
                values[i] = eval_matmul(values[n.a], values[n.b]);
                break;
            case OpKind::add:
                values[i] = eval_add(values[n.a], values[n.b]);
                break;
            case OpKind::tanh_op: {
                Tensor out = values[n.a];
                for (auto& v : out.values()) v = std::tanh(v);
                values[i] = std::move(out);
                break;
            }
            case OpKind::relu_op: {
                Tensor out = values[n.a];
                for (auto& v : out.values()) v = v > 0.0 ? v : 0.0;
                values[i] = std::move(out);
                break;
            }
            case OpKind::mse:
                values[i] = eval_mse(values[n.a], values[n.b]);
                break;
            case OpKind::softmax_ce:
                values[i] = eval_softmax_ce(values[n.a], values[n.b]);
                break;
            case OpKind::scale: {
                Tensor out = values[n.a];
                for (auto& v : out.values()) v *= n.factor;
                values[i] = std::move(out);
                break;
            }
            case OpKind::sum: {
                double acc = 0.0;
                for (double v : values[n.a].values()) acc += v;
                values[i] = Tensor::scalar(acc);
                break;
            }
        }
        values[i].ensure_finite("graph node");
    }
    return values;
}

void check_output(const ComputationGraph& graph) {
    if (graph.output() < 0) throw contract_error("graph has no designated output node");
}

}  // namespace

Tensor evaluate(const ComputationGraph& graph, const ParameterStore& params,
                const Inputs& inputs) {
    check_output(graph);
    auto values = forward_all(graph, params, inputs);
    return values[graph.output()];
}

std::vector<Tensor> evaluate_nodes(const ComputationGraph& graph, const ParameterStore& params,
                                   const Inputs& inputs, const std::vector<int>& nodes) {
    auto values = forward_all(graph, params, inputs);
    std::vector<Tensor> out;
    out.reserve(nodes.size());
    for (int n : nodes) {
        if (n < 0 || n >= static_cast<int>(values.size())) {
            throw contract_error("evaluate_nodes: node out of range");
        }
        out.push_back(values[n]);
    }
    return out;
}

std::pair<GradientMap, std::vector<Tensor>> backward_with_nodes(
    const ComputationGraph& graph, const ParameterStore& params, const Inputs& inputs,
    const std::vector<int>& record_nodes) {
    check_output(graph);
    const auto& nodes = graph.nodes();
    auto values = forward_all(graph, params, inputs);
    std::vector<Tensor> recorded;
    recorded.reserve(record_nodes.size());
    for (int n : record_nodes) {
        if (n < 0 || n >= static_cast<int>(values.size())) {
            throw contract_error("backward_with_nodes: node out of range");
        }
        recorded.push_back(values[n]);
    }
    if (!values[graph.output()].is_scalar()) {
        throw contract_error("backward requires a scalar output node");
    }

    // Only differentiate the subgraph the output depends on.
    std::vector<bool> needed(nodes.size(), false);
    needed[graph.output()] = true;
    for (int i = static_cast<int>(nodes.size()) - 1; i >= 0; --i) {
        if (!needed[i]) continue;
        if (nodes[i].a >= 0) needed[nodes[i].a] = true;
        if (nodes[i].b >= 0) needed[nodes[i].b] = true;
    }

    std::vector<Tensor> adjoint(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (needed[i]) adjoint[i] = Tensor::zeros(values[i].shape());
    }
    adjoint[graph.output()][0] = 1.0;

    for (int i = static_cast<int>(nodes.size()) - 1; i >= 0; --i) {
        if (!needed[i]) continue;
        const auto& n = nodes[i];
        const Tensor& up = adjoint[i];
        switch (n.op) {
            case OpKind::leaf_param:
            case OpKind::leaf_input:
                break;
            case OpKind::matmul: {
                const Tensor& a = values[n.a];
                const Tensor& b = values[n.b];
                const std::size_t m = a.rows(), k = a.cols(), nn = b.cols();
                Tensor& da = adjoint[n.a];
                Tensor& db = adjoint[n.b];
                // dA += dC * B^T ; dB += A^T * dC
                for (std::size_t r = 0; r < m; ++r) {
                    for (std::size_t c = 0; c < nn; ++c) {
                        const double g = up[r * nn + c];
                        if (g == 0.0) continue;
                        for (std::size_t p = 0; p < k; ++p) {
                            da[r * k + p] += g * b[p * nn + c];
                            db[p * nn + c] += g * a[r * k + p];
                        }
                    }
                }
                break;
            }
            case OpKind::add: {
                Tensor& da = adjoint[n.a];
                Tensor& db = adjoint[n.b];
                for (std::size_t j = 0; j < up.size(); ++j) da[j] += up[j];
                if (values[n.a].same_shape(values[n.b])) {
                    for (std::size_t j = 0; j < up.size(); ++j) db[j] += up[j];
                } else {
                    // broadcast row: reduce over rows
                    const std::size_t cols = values[n.a].cols();
                    for (std::size_t r = 0; r < values[n.a].rows(); ++r) {
                        for (std::size_t c = 0; c < cols; ++c) db[c] += up[r * cols + c];
                    }
                }
                break;
            }
            case OpKind::tanh_op: {
                const Tensor& y = values[i];
                Tensor& da = adjoint[n.a];
                for (std::size_t j = 0; j < up.size(); ++j) {
                    da[j] += up[j] * (1.0 - y[j] * y[j]);
                }
                break;
            }
            case OpKind::relu_op: {
                const Tensor& x = values[n.a];
                Tensor& da = adjoint[n.a];
                for (std::size_t j = 0; j < up.size(); ++j) {
                    if (x[j] > 0.0) da[j] += up[j];
                }
                break;
            }
            case OpKind::mse: {
                const Tensor& pred = values[n.a];
                const Tensor& target = values[n.b];
                const double g = up[0] * 2.0 / static_cast<double>(pred.size());
                Tensor& da = adjoint[n.a];
                Tensor& db = adjoint[n.b];
                for (std::size_t j = 0; j < pred.size(); ++j) {
                    const double d = g * (pred[j] - target[j]);
                    da[j] += d;
                    db[j] -= d;
                }
                break;
            }
            case OpKind::softmax_ce: {
                const Tensor& logits = values[n.a];
                const Tensor& onehot = values[n.b];
                const std::size_t rows = logits.rows(), cols = logits.cols();
                std::vector<double> probs;
                softmax_rows(logits, probs);
                const double g = up[0] / static_cast<double>(rows);
                Tensor& da = adjoint[n.a];
                Tensor& db = adjoint[n.b];
                for (std::size_t r = 0; r < rows; ++r) {
                    double ysum = 0.0;
                    for (std::size_t c = 0; c < cols; ++c) ysum += onehot[r * cols + c];
                    for (std::size_t c = 0; c < cols; ++c) {
                        const std::size_t j = r * cols + c;
                        da[j] += g * (ysum * probs[j] - onehot[j]);
                        db[j] -= g * std::log(std::max(probs[j], 1e-300));
                    }
                }
                break;
            }
            case OpKind::scale: {
                Tensor& da = adjoint[n.a];
                for (std::size_t j = 0; j < up.size(); ++j) da[j] += n.factor * up[j];
                break;
            }
            case OpKind::sum: {
                Tensor& da = adjoint[n.a];
                for (std::size_t j = 0; j < da.size(); ++j) da[j] += up[0];
                break;
            }
        }
    }

    GradientMap grads;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!needed[i] || nodes[i].op != OpKind::leaf_param) continue;
        adjoint[i].ensure_finite("gradient");
        auto [it, inserted] = grads.emplace(nodes[i].leaf_name, adjoint[i]);
        if (!inserted) {
            // same parameter referenced by several leaves: accumulate
            Tensor& acc = it->second;
            for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += adjoint[i][j];
        }
    }
    return {std::move(grads), std::move(recorded)};
}

GradientMap backward(const ComputationGraph& graph, const ParameterStore& params,
                     const Inputs& inputs) {
    return backward_with_nodes(graph, params, inputs, {}).first;
}

GradientMap numerical_gradient(const ComputationGraph& graph, const ParameterStore& params,
                               const Inputs& inputs, double h) {
    if (h <= 0.0) throw contract_error("numerical_gradient requires h > 0");
    check_output(graph);

    // Restrict to parameters that actually appear as leaves.
    std::map<std::string, bool> present;
    for (const auto& n : graph.nodes()) {
        if (n.op == OpKind::leaf_param) present[n.leaf_name] = true;
    }

    ParameterStore work;
    for (const auto& [name, t] : params.tensors()) {
        work.add(name, t, params.partition(name));
    }

    GradientMap grads;
    for (const auto& [name, flag] : present) {
        Tensor& p = work.at(name);
        Tensor g = Tensor::zeros(p.shape());
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double orig = p[j];
            p[j] = orig + h;
            const double up = evaluate(graph, work, inputs).scalar_value();
            p[j] = orig - h;
            const double down = evaluate(graph, work, inputs).scalar_value();
            p[j] = orig;
            g[j] = (up - down) / (2.0 * h);
        }
        grads.emplace(name, std::move(g));
    }
    return grads;
}

}  // namespace saal
