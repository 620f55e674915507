#pragma once

#include <string>

#include <json.hpp>

#include "saal/metrics.hpp"
#include "saal/relmatrix.hpp"
#include "saal/strategies.hpp"
#include "saal/trainer.hpp"

namespace saal {

using json = nlohmann::json;

// Raw little-endian bytes of the doubles, base64-coded: checkpoints
// round-trip 64-bit floats bit-exactly.
std::string base64_encode(const std::uint8_t* data, std::size_t len);
std::vector<std::uint8_t> base64_decode(const std::string& text);
std::string encode_doubles(const std::vector<double>& values);
std::vector<double> decode_doubles(const std::string& text);

json tensor_to_json(const Tensor& t);
Tensor tensor_from_json(const json& j);

// {"primary": {"0": 1.0, ...}, "aux": {"0->1": 0.5, ...}}
json coefficients_to_json(const CoefficientSet& coeffs);
CoefficientSet coefficients_from_json(const json& j);

json architecture_to_json(const ArchitectureConfig& arch);
ArchitectureConfig architecture_from_json(const json& j);
json tasks_to_json(const std::vector<TaskSpec>& tasks);
std::vector<TaskSpec> tasks_from_json(const json& j);

// Model checkpoint file: architecture, task specs, epoch, optional
// validation report, and every parameter tensor with its partition label.
json checkpoint_to_json(const MtlModel& model, const Checkpoint& ckpt);
struct LoadedCheckpoint {
    MtlModel model;
    int epoch = 0;
};
LoadedCheckpoint checkpoint_from_json(const json& j);

json report_to_json(const ImprovementReport& report);
ImprovementReport report_from_json(const json& j);

json matrix_to_json(const RelationshipMatrix& rel);
RelationshipMatrix matrix_from_json(const json& j);

json correlation_to_json(const CorrelationReport& report);

json epoch_record_to_json(const EpochRecord& rec);

// Aligned text rendering.
std::string render_matrix_text(const RelationshipMatrix& rel);
std::string render_report_text(const ImprovementReport& report,
                               const std::vector<TaskSpec>& tasks);

}  // namespace saal
