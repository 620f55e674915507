#pragma once

#include <string>
#include <vector>

#include "saal/relationships.hpp"
#include "saal/serialize.hpp"

namespace saal {

// Resolved experiment configuration. Parsing is strict: unknown keys are
// rejected before any compute.
struct DatasetSection {
    std::string generator;  // "planted_asymmetric" | "symmetric_positive"; empty => csv
    SyntheticSpec spec;
    std::string csv_path;
    std::string schema_path;
};

struct BenchSection {
    int warmup = 3;
    int samples = 25;
};

struct ExperimentConfig {
    DatasetSection dataset;
    ArchitectureConfig architecture;
    TrainerConfig trainer;  // seed is filled per run
    std::vector<std::uint64_t> seeds = {0};
    std::string output_dir = "out";
    BenchSection bench;
    int lookahead_interval = 10;
};

json load_json_file(const std::string& path);
void apply_override(json& config, const std::string& assignment);  // "a.b.c=value"
json load_config_with_overrides(const std::string& path,
                                const std::vector<std::string>& overrides);
ExperimentConfig parse_experiment_config(const json& j);
CsvSchema parse_csv_schema(const json& j);

MultiTaskDataset make_dataset(const DatasetSection& section, std::uint64_t seed);

// One full training pipeline for one seed: STL baselines, optional
// enumeration, the strategy run, checkpoint/report emission.
struct SeedRunResult {
    ImprovementReport test_report;
    int best_epoch = 0;
};
SeedRunResult run_one_seed(const ExperimentConfig& cfg, std::uint64_t seed,
                           const std::string& seed_dir, const json& resolved_config);

// Runs `fns` with at most `jobs` concurrent threads.
void run_jobs(std::vector<std::function<void()>> fns, int jobs);

int default_jobs_from_env();

// CLI commands; return process exit codes (0 ok, 2 config error, 3 numeric
// or training error).
struct CliCommon {
    std::string config_path;
    std::vector<std::string> overrides;
    int jobs = 1;
};

int cmd_run(const CliCommon& cli);
int cmd_relationships(const CliCommon& cli, const std::string& method,
                      const std::string& out_dir);
int cmd_bench(const CliCommon& cli);
int cmd_sweep_shared_depth(const CliCommon& cli);
int cmd_report(const std::string& path);

}  // namespace saal
