#include "saal/model.hpp"

#include <cmath>

#include "saal/rng.hpp"

namespace saal {

void ArchitectureConfig::validate() const {
    if (input_dim < 1) throw config_error("input_dim must be >= 1");
    if (hidden_width < 1) throw config_error("hidden_width must be >= 1");
    if (total_encoder_depth < 0) throw config_error("total_encoder_depth must be >= 0");
    if (decoder_depth < 1) throw config_error("decoder_depth must be >= 1");
    if (shared_depth < 0 || shared_depth > total_encoder_depth) {
        throw config_error("shared_depth must lie in [0, total_encoder_depth]");
    }
}

const TaskSpec& MtlModel::task(int id) const {
    if (id < 0 || id >= num_tasks()) {
        throw contract_error("unknown task id: " + std::to_string(id));
    }
    return tasks_[id];
}

std::vector<Route> MtlModel::all_routes() const {
    std::vector<Route> out;
    for (int t = 0; t < num_tasks(); ++t) out.push_back(Route::primary(t));
    for (int s = 0; s < num_tasks(); ++s) {
        for (int t = 0; t < num_tasks(); ++t) {
            if (s != t) out.push_back(Route::self_aux(s, t));
        }
    }
    return out;
}

void MtlModel::validate_route(const Route& route) const {
    if (route.source < 0 || route.source >= num_tasks() || route.target < 0 ||
        route.target >= num_tasks()) {
        throw contract_error("unknown route: " + route.id());
    }
}

namespace {

std::string layer_w(const std::string& prefix, int layer) {
    return prefix + "." + std::to_string(layer) + ".w";
}
std::string layer_b(const std::string& prefix, int layer) {
    return prefix + "." + std::to_string(layer) + ".b";
}

std::string shared_enc_prefix() { return "enc.shared"; }
std::string task_enc_prefix(int t) { return "enc.task" + std::to_string(t); }
std::string task_dec_prefix(int t) { return "dec.task" + std::to_string(t); }
std::string aux_dec_prefix(int s, int t) {
    return "dec.aux" + std::to_string(s) + "to" + std::to_string(t);
}

// Glorot-uniform weights, zero biases. The init stream is derived from the
// parameter name so construction order never shifts other parameters.
Tensor init_weight(std::uint64_t seed, const std::string& name, int fan_in, int fan_out) {
    Rng rng(derive_seed(seed, name));
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor w = Tensor::zeros({static_cast<std::size_t>(fan_in), static_cast<std::size_t>(fan_out)});
    for (auto& v : w.values()) v = rng.uniform(-a, a);
    return w;
}

}  // namespace

int MtlModel::append_forward(ComputationGraph& g, const Route& route, int x_node) const {
    validate_route(route);
    const bool use_relu = arch_.activation == Activation::relu;
    int h = x_node;
    auto dense = [&](const std::string& prefix, int layer, bool activate) {
        const int w = g.param(layer_w(prefix, layer));
        const int b = g.param(layer_b(prefix, layer));
        h = g.add(g.matmul(h, w), b);
        if (activate) h = use_relu ? g.relu(h) : g.tanh(h);
    };
    for (int i = 0; i < arch_.shared_depth; ++i) dense(shared_enc_prefix(), i, true);
    for (int i = arch_.shared_depth; i < arch_.total_encoder_depth; ++i) {
        dense(task_enc_prefix(route.target), i, true);
    }
    const std::string dec_prefix = route.is_primary()
                                       ? task_dec_prefix(route.target)
                                       : aux_dec_prefix(route.source, route.target);
    for (int j = 0; j < arch_.decoder_depth; ++j) {
        dense(dec_prefix, j, j + 1 < arch_.decoder_depth);
    }
    return h;
}

int MtlModel::append_loss(ComputationGraph& g, const Route& route, int x_node) const {
    const int pred = append_forward(g, route, x_node);
    const int y = g.input(label_leaf(route.source));
    const TaskSpec& src = task(route.source);
    return src.kind == TaskKind::classification ? g.softmax_ce(pred, y) : g.mse(pred, y);
}

ComputationGraph MtlModel::prediction_graph(const Route& route) const {
    ComputationGraph g;
    const int x = g.input(input_leaf());
    g.set_output(append_forward(g, route, x));
    return g;
}

ComputationGraph MtlModel::loss_graph(const Route& route) const {
    ComputationGraph g;
    const int x = g.input(input_leaf());
    g.set_output(append_loss(g, route, x));
    return g;
}

Tensor MtlModel::forward(const Route& route, const Tensor& x) const {
    const ComputationGraph g = prediction_graph(route);
    return evaluate(g, params_, {{input_leaf(), x}});
}

Tensor MtlModel::predict_primary(int task_id, const Tensor& x) const {
    return forward(Route::primary(task_id), x);
}

std::size_t MtlModel::inference_parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, part] : params_.partitions()) {
        if (part.kind != Partition::Kind::self_aux) n += params_.at(name).size();
    }
    return n;
}

MtlModel build_model(const ArchitectureConfig& arch, const std::vector<TaskSpec>& tasks,
                     std::uint64_t seed) {
    arch.validate();
    if (tasks.empty()) throw config_error("at least one task required");
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (tasks[i].task_id != static_cast<int>(i)) {
            throw config_error("task ids must be dense and ordered");
        }
        if (tasks[i].output_dim < 1) throw config_error("task output_dim must be >= 1");
        if (tasks[i].kind == TaskKind::classification && tasks[i].output_dim < 2) {
            throw config_error("classification tasks need >= 2 classes");
        }
    }

    MtlModel model;
    model.arch_ = arch;
    model.tasks_ = tasks;
    const int T = static_cast<int>(tasks.size());

    auto add_dense = [&](const std::string& prefix, int layer, int fan_in, int fan_out,
                         Partition part) {
        const std::string wn = layer_w(prefix, layer);
        model.params_.add(wn, init_weight(seed, wn, fan_in, fan_out), part);
        model.params_.add(layer_b(prefix, layer),
                          Tensor::zeros({1, static_cast<std::size_t>(fan_out)}), part);
    };
    auto encoder_layer_in = [&](int i) { return i == 0 ? arch.input_dim : arch.hidden_width; };

    for (int i = 0; i < arch.shared_depth; ++i) {
        add_dense(shared_enc_prefix(), i, encoder_layer_in(i), arch.hidden_width,
                  Partition::shared_part());
    }
    for (int t = 0; t < T; ++t) {
        for (int i = arch.shared_depth; i < arch.total_encoder_depth; ++i) {
            add_dense(task_enc_prefix(t), i, encoder_layer_in(i), arch.hidden_width,
                      Partition::task_part(t));
        }
    }

    // Decoder layer widths for a head predicting `out_dim` values.
    auto add_decoder = [&](const std::string& prefix, int out_dim, Partition part) {
        int in_dim = arch.encoder_output_dim();
        for (int j = 0; j < arch.decoder_depth; ++j) {
            const bool last = j + 1 == arch.decoder_depth;
            const int out = last ? out_dim : arch.hidden_width;
            add_dense(prefix, j, in_dim, out, part);
            in_dim = out;
        }
    };
    for (int t = 0; t < T; ++t) {
        add_decoder(task_dec_prefix(t), tasks[t].output_dim, Partition::task_part(t));
    }
    // Self-auxiliary s->t predicts task s's labels through task t's encoder,
    // with a decoder shaped like task s's.
    for (int s = 0; s < T; ++s) {
        for (int t = 0; t < T; ++t) {
            if (s == t) continue;
            add_decoder(aux_dec_prefix(s, t), tasks[s].output_dim,
                        Partition::self_aux_part(s, t));
        }
    }
    return model;
}

std::string to_string(TaskKind kind) {
    return kind == TaskKind::classification ? "classification" : "regression";
}

TaskKind task_kind_from_string(const std::string& s) {
    if (s == "classification") return TaskKind::classification;
    if (s == "regression") return TaskKind::regression;
    throw parse_error("unknown task kind: " + s);
}

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

Activation activation_from_string(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "tanh") return Activation::tanh;
    throw parse_error("unknown activation: " + s);
}

}  // namespace saal
