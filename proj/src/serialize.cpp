#include "saal/serialize.hpp"

#include <cstring>
#include <iomanip>
#include <sstream>

namespace saal {

namespace {
constexpr char kB64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(const std::uint8_t* data, std::size_t len) {
    std::string out;
    out.reserve((len + 2) / 3 * 4);
    for (std::size_t i = 0; i < len; i += 3) {
        const std::uint32_t b0 = data[i];
        const std::uint32_t b1 = i + 1 < len ? data[i + 1] : 0;
        const std::uint32_t b2 = i + 2 < len ? data[i + 2] : 0;
        const std::uint32_t triple = (b0 << 16) | (b1 << 8) | b2;
        out.push_back(kB64Alphabet[(triple >> 18) & 0x3f]);
        out.push_back(kB64Alphabet[(triple >> 12) & 0x3f]);
        out.push_back(i + 1 < len ? kB64Alphabet[(triple >> 6) & 0x3f] : '=');
        out.push_back(i + 2 < len ? kB64Alphabet[triple & 0x3f] : '=');
    }
    return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
    auto value_of = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        if (c == '=') return -1;
        throw parse_error("invalid base64 character");
    };
    if (text.size() % 4 != 0) throw parse_error("base64 length must be a multiple of 4");
    std::vector<std::uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        const int v0 = value_of(text[i]);
        const int v1 = value_of(text[i + 1]);
        const int v2 = value_of(text[i + 2]);
        const int v3 = value_of(text[i + 3]);
        if (v0 < 0 || v1 < 0) throw parse_error("malformed base64 block");
        const std::uint32_t triple = (static_cast<std::uint32_t>(v0) << 18) |
                                     (static_cast<std::uint32_t>(v1) << 12) |
                                     (v2 < 0 ? 0u : static_cast<std::uint32_t>(v2) << 6) |
                                     (v3 < 0 ? 0u : static_cast<std::uint32_t>(v3));
        out.push_back(static_cast<std::uint8_t>((triple >> 16) & 0xff));
        if (v2 >= 0) out.push_back(static_cast<std::uint8_t>((triple >> 8) & 0xff));
        if (v3 >= 0) out.push_back(static_cast<std::uint8_t>(triple & 0xff));
    }
    return out;
}

std::string encode_doubles(const std::vector<double>& values) {
    std::vector<std::uint8_t> bytes(values.size() * 8);
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::uint64_t bits;
        std::memcpy(&bits, &values[i], 8);
        for (int b = 0; b < 8; ++b) {
            bytes[i * 8 + b] = static_cast<std::uint8_t>((bits >> (8 * b)) & 0xff);
        }
    }
    return base64_encode(bytes.data(), bytes.size());
}

std::vector<double> decode_doubles(const std::string& text) {
    const std::vector<std::uint8_t> bytes = base64_decode(text);
    if (bytes.size() % 8 != 0) throw parse_error("double payload length must be a multiple of 8");
    std::vector<double> out(bytes.size() / 8);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) {
            bits |= static_cast<std::uint64_t>(bytes[i * 8 + b]) << (8 * b);
        }
        std::memcpy(&out[i], &bits, 8);
    }
    return out;
}

json tensor_to_json(const Tensor& t) {
    json j;
    j["shape"] = t.shape();
    j["data_b64"] = encode_doubles(t.values());
    return j;
}

Tensor tensor_from_json(const json& j) {
    std::vector<std::size_t> shape = j.at("shape").get<std::vector<std::size_t>>();
    std::vector<double> values = decode_doubles(j.at("data_b64").get<std::string>());
    return Tensor(std::move(shape), std::move(values));
}

json coefficients_to_json(const CoefficientSet& coeffs) {
    json primary = json::object();
    for (const auto& [t, v] : coeffs.primary) primary[std::to_string(t)] = v;
    json aux = json::object();
    for (const auto& [st, v] : coeffs.aux) {
        aux[std::to_string(st.first) + "->" + std::to_string(st.second)] = v;
    }
    return json{{"primary", primary}, {"aux", aux}};
}

CoefficientSet coefficients_from_json(const json& j) {
    CoefficientSet out;
    for (const auto& [key, v] : j.at("primary").items()) {
        out.primary[std::stoi(key)] = v.get<double>();
    }
    for (const auto& [key, v] : j.at("aux").items()) {
        const auto arrow = key.find("->");
        if (arrow == std::string::npos) throw parse_error("bad aux coefficient key: " + key);
        out.aux[{std::stoi(key.substr(0, arrow)), std::stoi(key.substr(arrow + 2))}] =
            v.get<double>();
    }
    return out;
}

json architecture_to_json(const ArchitectureConfig& arch) {
    return json{{"input_dim", arch.input_dim},
                {"hidden_width", arch.hidden_width},
                {"total_encoder_depth", arch.total_encoder_depth},
                {"shared_depth", arch.shared_depth},
                {"decoder_depth", arch.decoder_depth},
                {"activation", to_string(arch.activation)}};
}

ArchitectureConfig architecture_from_json(const json& j) {
    ArchitectureConfig arch;
    arch.input_dim = j.at("input_dim").get<int>();
    arch.hidden_width = j.at("hidden_width").get<int>();
    arch.total_encoder_depth = j.at("total_encoder_depth").get<int>();
    arch.shared_depth = j.at("shared_depth").get<int>();
    arch.decoder_depth = j.at("decoder_depth").get<int>();
    arch.activation = activation_from_string(j.at("activation").get<std::string>());
    return arch;
}

json tasks_to_json(const std::vector<TaskSpec>& tasks) {
    json out = json::array();
    for (const auto& t : tasks) {
        out.push_back(json{{"task_id", t.task_id},
                           {"kind", to_string(t.kind)},
                           {"output_dim", t.output_dim}});
    }
    return out;
}

std::vector<TaskSpec> tasks_from_json(const json& j) {
    std::vector<TaskSpec> out;
    for (const auto& item : j) {
        TaskSpec t;
        t.task_id = item.at("task_id").get<int>();
        t.kind = task_kind_from_string(item.at("kind").get<std::string>());
        t.output_dim = item.at("output_dim").get<int>();
        out.push_back(t);
    }
    return out;
}

json checkpoint_to_json(const MtlModel& model, const Checkpoint& ckpt) {
    json j;
    j["format"] = "saal-checkpoint-v1";
    j["architecture"] = architecture_to_json(model.arch());
    j["tasks"] = tasks_to_json(model.tasks());
    j["epoch"] = ckpt.epoch;
    if (ckpt.val_report) j["validation_report"] = report_to_json(*ckpt.val_report);
    json params = json::object();
    for (const auto& [name, tensor] : ckpt.params.tensors()) {
        json p = tensor_to_json(tensor);
        p["partition"] = ckpt.params.partition(name).label();
        params[name] = std::move(p);
    }
    j["parameters"] = std::move(params);
    return j;
}

LoadedCheckpoint checkpoint_from_json(const json& j) {
    if (j.at("format").get<std::string>() != "saal-checkpoint-v1") {
        throw parse_error("not a saal checkpoint file");
    }
    LoadedCheckpoint out;
    const ArchitectureConfig arch = architecture_from_json(j.at("architecture"));
    const std::vector<TaskSpec> tasks = tasks_from_json(j.at("tasks"));
    out.model = build_model(arch, tasks, 0);
    out.epoch = j.at("epoch").get<int>();
    ParameterStore params;
    for (const auto& [name, p] : j.at("parameters").items()) {
        params.add(name, tensor_from_json(p),
                   Partition::from_label(p.at("partition").get<std::string>()));
    }
    out.model.params() = std::move(params);
    return out;
}

json report_to_json(const ImprovementReport& report) {
    json delta = json::object();
    for (const auto& [t, v] : report.delta_task) delta[std::to_string(t)] = v;
    auto metrics_to_json = [](const std::map<int, MetricValues>& m) {
        json out = json::object();
        for (const auto& [t, values] : m) {
            json mv = json::object();
            for (const auto& [name, v] : values) mv[name] = v;
            out[std::to_string(t)] = std::move(mv);
        }
        return out;
    };
    return json{{"format", "saal-report-v1"},
                {"delta_task", delta},
                {"delta_mtl", report.delta_mtl},
                {"mtl_metrics", metrics_to_json(report.mtl_metrics)},
                {"stl_metrics", metrics_to_json(report.stl_metrics)}};
}

ImprovementReport report_from_json(const json& j) {
    ImprovementReport out;
    for (const auto& [t, v] : j.at("delta_task").items()) {
        out.delta_task[std::stoi(t)] = v.get<double>();
    }
    out.delta_mtl = j.at("delta_mtl").get<double>();
    auto metrics_from = [](const json& m) {
        std::map<int, MetricValues> out_m;
        for (const auto& [t, values] : m.items()) {
            MetricValues mv;
            for (const auto& [name, v] : values.items()) mv[name] = v.get<double>();
            out_m[std::stoi(t)] = std::move(mv);
        }
        return out_m;
    };
    out.mtl_metrics = metrics_from(j.at("mtl_metrics"));
    out.stl_metrics = metrics_from(j.at("stl_metrics"));
    return out;
}

json matrix_to_json(const RelationshipMatrix& rel) {
    const int T = rel.num_tasks();
    json score = json::array();
    for (int s = 0; s < T; ++s) {
        json row = json::array();
        for (int t = 0; t < T; ++t) {
            if (rel.defined(s, t)) {
                row.push_back(rel.get(s, t));
            } else {
                row.push_back(nullptr);
            }
        }
        score.push_back(std::move(row));
    }
    json j{{"format", "saal-relmatrix-v1"},
           {"method", rel.method()},
           {"num_tasks", T},
           {"score", std::move(score)},
           {"seeds", rel.seeds}};
    if (!rel.baseline.empty()) {
        json baseline = json::object();
        for (const auto& [t, v] : rel.baseline) baseline[std::to_string(t)] = v;
        j["baseline"] = std::move(baseline);
    }
    if (!rel.pairwise.empty()) {
        json pairwise = json::object();
        for (const auto& [st, v] : rel.pairwise) {
            pairwise[std::to_string(st.first) + "->" + std::to_string(st.second)] = v;
        }
        j["pairwise"] = std::move(pairwise);
    }
    return j;
}

RelationshipMatrix matrix_from_json(const json& j) {
    if (j.at("format").get<std::string>() != "saal-relmatrix-v1") {
        throw parse_error("not a saal relationship matrix file");
    }
    RelationshipMatrix rel(j.at("num_tasks").get<int>(), j.at("method").get<std::string>());
    const auto& score = j.at("score");
    for (int s = 0; s < rel.num_tasks(); ++s) {
        for (int t = 0; t < rel.num_tasks(); ++t) {
            const auto& cell = score.at(s).at(t);
            if (!cell.is_null()) rel.set(s, t, cell.get<double>());
        }
    }
    if (j.contains("seeds")) rel.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("baseline")) {
        for (const auto& [t, v] : j.at("baseline").items()) {
            rel.baseline[std::stoi(t)] = v.get<double>();
        }
    }
    if (j.contains("pairwise")) {
        for (const auto& [key, v] : j.at("pairwise").items()) {
            const auto arrow = key.find("->");
            rel.pairwise[{std::stoi(key.substr(0, arrow)), std::stoi(key.substr(arrow + 2))}] =
                v.get<double>();
        }
    }
    return rel;
}

json correlation_to_json(const CorrelationReport& report) {
    json per_target = json::object();
    for (const auto& [t, rho] : report.per_target) {
        if (rho) {
            per_target[std::to_string(t)] = *rho;
        } else {
            per_target[std::to_string(t)] = nullptr;
        }
    }
    json j{{"format", "saal-correlation-v1"}, {"per_target", per_target}};
    if (report.mean) {
        j["mean"] = *report.mean;
    } else {
        j["mean"] = nullptr;
    }
    return j;
}

json epoch_record_to_json(const EpochRecord& rec) {
    json val_loss = json::object();
    for (const auto& [t, v] : rec.val_loss) val_loss[std::to_string(t)] = v;
    json j{{"epoch", rec.epoch},
           {"eta", rec.eta},
           {"train_loss", rec.train_loss},
           {"val_loss", val_loss},
           {"val_loss_total", rec.val_loss_total},
           {"coefficients", coefficients_to_json(rec.coefficients)},
           {"mean_batch_ms", rec.mean_batch_ms}};
    if (rec.val_delta_mtl) j["val_delta_mtl"] = *rec.val_delta_mtl;
    return j;
}

std::string render_matrix_text(const RelationshipMatrix& rel) {
    const int T = rel.num_tasks();
    std::ostringstream os;
    os << "method: " << rel.method() << "\n";
    os << std::setw(8) << "src\\tgt";
    for (int t = 0; t < T; ++t) os << std::setw(10) << ("t" + std::to_string(t));
    os << "\n";
    for (int s = 0; s < T; ++s) {
        os << std::setw(8) << ("t" + std::to_string(s));
        for (int t = 0; t < T; ++t) {
            if (rel.defined(s, t)) {
                os << std::setw(10) << std::fixed << std::setprecision(4)
                   << std::showpos << rel.get(s, t) << std::noshowpos;
            } else {
                os << std::setw(10) << "--";
            }
        }
        os << "\n";
    }
    return os.str();
}

std::string render_report_text(const ImprovementReport& report,
                               const std::vector<TaskSpec>& tasks) {
    std::ostringstream os;
    os << std::setw(8) << "task" << std::setw(12) << "delta(%)"
       << "   metrics (mtl | stl)\n";
    for (const auto& t : tasks) {
        os << std::setw(8) << ("t" + std::to_string(t.task_id)) << std::setw(12) << std::fixed
           << std::setprecision(2) << report.delta_task.at(t.task_id) << "   ";
        bool first = true;
        for (const auto& [name, v] : report.mtl_metrics.at(t.task_id)) {
            if (!first) os << ", ";
            first = false;
            os << name << " " << std::setprecision(4) << v << " | "
               << report.stl_metrics.at(t.task_id).at(name);
        }
        os << "\n";
    }
    os << std::setw(8) << "MTL" << std::setw(12) << std::setprecision(2) << report.delta_mtl
       << "\n";
    return os.str();
}

}  // namespace saal
