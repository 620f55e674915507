#include "saal/experiment.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace saal {

namespace fs = std::filesystem;

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw parse_error("invalid JSON in " + path + ": " + e.what());
    }
    return j;
}

void apply_override(json& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw config_error("override must look like key.path=value: " + assignment);
    }
    const std::string path = assignment.substr(0, eq);
    const std::string value_text = assignment.substr(eq + 1);

    json value;
    try {
        value = json::parse(value_text);
    } catch (const json::parse_error&) {
        value = value_text;  // bare strings stay strings
    }

    json* node = &config;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot - start);
        if (key.empty()) throw config_error("bad override path: " + path);
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

json load_config_with_overrides(const std::string& path,
                                const std::vector<std::string>& overrides) {
    json j = load_json_file(path);
    for (const auto& o : overrides) apply_override(j, o);
    return j;
}

namespace {

void require_keys(const json& j, const std::string& where,
                  std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw config_error(where + " must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) {
            if (key == a) {
                ok = true;
                break;
            }
        }
        if (!ok) throw config_error("unknown key '" + key + "' in " + where);
    }
}

SyntheticTaskConfig parse_synthetic_task(const json& j, const std::string& where,
                                         const SyntheticTaskConfig& defaults) {
    require_keys(j, where,
                 {"kind", "output_dim", "support", "noise_std", "scale", "clone_transform"});
    SyntheticTaskConfig out = defaults;
    if (j.contains("kind")) out.kind = task_kind_from_string(j.at("kind").get<std::string>());
    out.output_dim = j.value("output_dim", out.output_dim);
    out.support = j.value("support", out.support);
    out.noise_std = j.value("noise_std", out.noise_std);
    out.scale = j.value("scale", out.scale);
    out.clone_transform = j.value("clone_transform", out.clone_transform);
    return out;
}

SyntheticSpec parse_synthetic_spec(const json& j) {
    require_keys(j, "dataset.spec",
                 {"latent_dim", "num_samples", "input_dim", "input_noise_std", "helper", "noisy",
                  "train_fraction", "val_fraction", "test_fraction"});
    SyntheticSpec spec;
    spec.latent_dim = j.value("latent_dim", spec.latent_dim);
    spec.num_samples = j.value("num_samples", spec.num_samples);
    spec.input_dim = j.value("input_dim", spec.input_dim);
    spec.input_noise_std = j.value("input_noise_std", spec.input_noise_std);
    if (j.contains("helper")) {
        spec.helper = parse_synthetic_task(j.at("helper"), "dataset.spec.helper", spec.helper);
    }
    if (j.contains("noisy")) {
        spec.noisy = parse_synthetic_task(j.at("noisy"), "dataset.spec.noisy", spec.noisy);
    }
    spec.train_fraction = j.value("train_fraction", spec.train_fraction);
    spec.val_fraction = j.value("val_fraction", spec.val_fraction);
    spec.test_fraction = j.value("test_fraction", spec.test_fraction);
    return spec;
}

ArchitectureConfig parse_architecture(const json& j) {
    require_keys(j, "architecture",
                 {"input_dim", "hidden_width", "total_encoder_depth", "shared_depth",
                  "decoder_depth", "activation"});
    ArchitectureConfig arch;
    arch.input_dim = j.value("input_dim", arch.input_dim);
    arch.hidden_width = j.value("hidden_width", arch.hidden_width);
    arch.total_encoder_depth = j.value("total_encoder_depth", arch.total_encoder_depth);
    arch.shared_depth = j.value("shared_depth", arch.shared_depth);
    arch.decoder_depth = j.value("decoder_depth", arch.decoder_depth);
    if (j.contains("activation")) {
        arch.activation = activation_from_string(j.at("activation").get<std::string>());
    }
    arch.validate();
    return arch;
}

TrainerConfig parse_trainer(const json& j) {
    require_keys(j, "trainer",
                 {"strategy", "eta0", "epochs", "batch_size", "omega_lr", "shared_depth"});
    TrainerConfig cfg;
    if (j.contains("strategy")) {
        cfg.strategy = strategy_from_string(j.at("strategy").get<std::string>());
    }
    cfg.eta0 = j.value("eta0", cfg.eta0);
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.omega_lr = j.value("omega_lr", cfg.omega_lr);
    cfg.shared_depth = j.value("shared_depth", cfg.shared_depth);
    cfg.validate();
    return cfg;
}

}  // namespace

ExperimentConfig parse_experiment_config(const json& j) {
    require_keys(j, "config",
                 {"dataset", "architecture", "trainer", "seeds", "output_dir", "bench",
                  "lookahead_interval"});
    ExperimentConfig cfg;

    const json& d = j.at("dataset");
    require_keys(d, "dataset", {"generator", "spec", "csv", "schema"});
    if (d.contains("generator")) {
        cfg.dataset.generator = d.at("generator").get<std::string>();
        if (cfg.dataset.generator != "planted_asymmetric" &&
            cfg.dataset.generator != "symmetric_positive") {
            throw config_error("unknown generator: " + cfg.dataset.generator);
        }
        if (d.contains("spec")) cfg.dataset.spec = parse_synthetic_spec(d.at("spec"));
        cfg.dataset.spec.validate();
    } else if (d.contains("csv")) {
        cfg.dataset.csv_path = d.at("csv").get<std::string>();
        if (!d.contains("schema")) throw config_error("csv dataset needs a schema file");
        cfg.dataset.schema_path = d.at("schema").get<std::string>();
    } else {
        throw config_error("dataset needs either a generator or a csv path");
    }

    cfg.architecture = parse_architecture(j.at("architecture"));
    cfg.trainer = parse_trainer(j.at("trainer"));
    if (j.contains("seeds")) {
        cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        if (cfg.seeds.empty()) throw config_error("seeds must be non-empty");
    }
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    if (j.contains("bench")) {
        require_keys(j.at("bench"), "bench", {"warmup", "samples"});
        cfg.bench.warmup = j.at("bench").value("warmup", cfg.bench.warmup);
        cfg.bench.samples = j.at("bench").value("samples", cfg.bench.samples);
    }
    cfg.lookahead_interval = j.value("lookahead_interval", cfg.lookahead_interval);
    return cfg;
}

CsvSchema parse_csv_schema(const json& j) {
    require_keys(j, "schema", {"features", "tasks", "splits"});
    CsvSchema schema;
    schema.feature_columns = j.at("features").get<std::vector<std::string>>();
    for (const auto& t : j.at("tasks")) {
        require_keys(t, "schema.tasks[]", {"name", "cols", "kind", "num_classes"});
        CsvTaskSchema task;
        task.name = t.at("name").get<std::string>();
        task.columns = t.at("cols").get<std::vector<std::string>>();
        task.kind = task_kind_from_string(t.at("kind").get<std::string>());
        task.num_classes = t.value("num_classes", 0);
        schema.tasks.push_back(std::move(task));
    }
    if (j.contains("splits")) {
        const json& s = j.at("splits");
        require_keys(s, "schema.splits", {"fractions", "seed"});
        if (s.contains("fractions")) {
            const auto f = s.at("fractions").get<std::vector<double>>();
            if (f.size() != 3) throw config_error("splits.fractions needs 3 entries");
            schema.train_fraction = f[0];
            schema.val_fraction = f[1];
            schema.test_fraction = f[2];
        }
        schema.split_seed = s.value("seed", schema.split_seed);
    }
    return schema;
}

MultiTaskDataset make_dataset(const DatasetSection& section, std::uint64_t seed) {
    if (section.generator == "planted_asymmetric") {
        return generate_planted_asymmetric(section.spec, seed);
    }
    if (section.generator == "symmetric_positive") {
        return generate_symmetric_positive(section.spec, seed);
    }
    const CsvSchema schema = parse_csv_schema(load_json_file(section.schema_path));
    return load_csv(section.csv_path, schema);
}

namespace {

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw error("cannot write file: " + path);
    out << text;
}

void write_json_file(const std::string& path, const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

}  // namespace

SeedRunResult run_one_seed(const ExperimentConfig& cfg, std::uint64_t seed,
                           const std::string& seed_dir, const json& resolved_config) {
    fs::create_directories(seed_dir);
    const MultiTaskDataset data = make_dataset(cfg.dataset, seed);

    TrainerConfig run_cfg = cfg.trainer;
    run_cfg.seed = seed;

    const StlBaselines stl = train_stl_baselines(data, cfg.architecture, run_cfg);

    TrainOptions opts;
    opts.stl_val_metrics = stl.val_metrics;
    if (run_cfg.strategy == StrategyKind::saal_e || run_cfg.strategy == StrategyKind::saal_ew) {
        const RelationshipMatrix rel =
            enumerate_pairwise(data, cfg.architecture, run_cfg, stl);
        opts.enumeration_mask = saal_enumeration(rel);
        json rel_json = matrix_to_json(rel);
        rel_json["config"] = resolved_config;
        rel_json["seed"] = seed;
        write_json_file(seed_dir + "/enumeration.json", rel_json);
    }

    const TrainResult result = train_run(data, cfg.architecture, run_cfg, opts);

    // history as JSON-lines, one epoch per line
    {
        std::ofstream out(seed_dir + "/history.jsonl");
        if (!out) throw error("cannot write history file");
        for (const auto& rec : result.history) {
            json line = epoch_record_to_json(rec);
            line["seed"] = seed;
            out << line.dump() << "\n";
        }
    }

    json ckpt_json = checkpoint_to_json(result.model, result.best);
    ckpt_json["config"] = resolved_config;
    ckpt_json["seed"] = seed;
    write_json_file(seed_dir + "/checkpoint.json", ckpt_json);

    // final test report from the checkpointed parameters
    MtlModel best = build_model(result.model.arch(), data.tasks(), seed);
    best.params() = result.best.params;
    const auto test_metrics = evaluate_split_metrics(best, data, Split::test);
    const ImprovementReport report = relative_improvement(
        test_metrics, stl.test_metrics, metric_specs_for_tasks(data.tasks()));

    json report_json = report_to_json(report);
    report_json["config"] = resolved_config;
    report_json["seed"] = seed;
    report_json["best_epoch"] = result.best.epoch;
    write_json_file(seed_dir + "/report.json", report_json);

    return SeedRunResult{report, result.best.epoch};
}

void run_jobs(std::vector<std::function<void()>> fns, int jobs) {
    if (jobs < 1) jobs = 1;
    if (jobs == 1) {
        for (auto& fn : fns) fn();
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    std::mutex error_mutex;
    std::exception_ptr first_error;
    const int n = std::min<int>(jobs, static_cast<int>(fns.size()));
    for (int w = 0; w < n; ++w) {
        workers.emplace_back([&]() {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= fns.size()) return;
                try {
                    fns[i]();
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : workers) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

int default_jobs_from_env() {
    const char* env = std::getenv("SAAL_JOBS");
    if (!env) return 1;
    const int v = std::atoi(env);
    return v >= 1 ? v : 1;
}

namespace {

int guard(const std::function<void()>& body) {
    try {
        body();
        return 0;
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const parse_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace

int cmd_run(const CliCommon& cli) {
    return guard([&]() {
        const json resolved = load_config_with_overrides(cli.config_path, cli.overrides);
        const ExperimentConfig cfg = parse_experiment_config(resolved);
        fs::create_directories(cfg.output_dir);

        std::vector<SeedRunResult> results(cfg.seeds.size());
        std::vector<std::function<void()>> jobs;
        for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
            jobs.push_back([&, i]() {
                const std::uint64_t seed = cfg.seeds[i];
                const std::string seed_dir =
                    cfg.output_dir + "/seed" + std::to_string(seed);
                results[i] = run_one_seed(cfg, seed, seed_dir, resolved);
            });
        }
        run_jobs(std::move(jobs), cli.jobs);

        // seed-averaged report
        json mean = json::object();
        mean["format"] = "saal-mean-report-v1";
        mean["config"] = resolved;
        mean["seeds"] = cfg.seeds;
        std::map<int, double> delta_sum;
        double mtl_sum = 0.0;
        for (const auto& r : results) {
            for (const auto& [t, d] : r.test_report.delta_task) delta_sum[t] += d;
            mtl_sum += r.test_report.delta_mtl;
        }
        json delta = json::object();
        for (const auto& [t, s] : delta_sum) {
            delta[std::to_string(t)] = s / static_cast<double>(results.size());
        }
        mean["delta_task_mean"] = delta;
        mean["delta_mtl_mean"] = mtl_sum / static_cast<double>(results.size());
        write_json_file(cfg.output_dir + "/report_mean.json", mean);
        std::cout << "wrote " << cfg.output_dir << "/report_mean.json\n";
    });
}

int cmd_relationships(const CliCommon& cli, const std::string& method,
                      const std::string& out_dir) {
    return guard([&]() {
        const json resolved = load_config_with_overrides(cli.config_path, cli.overrides);
        const ExperimentConfig cfg = parse_experiment_config(resolved);
        const std::string out = out_dir.empty() ? cfg.output_dir + "/relationships" : out_dir;
        fs::create_directories(out);

        const std::uint64_t seed = cfg.seeds.front();
        const MultiTaskDataset data = make_dataset(cfg.dataset, seed);
        TrainerConfig run_cfg = cfg.trainer;
        run_cfg.seed = seed;

        std::vector<RelationshipMatrix> produced;
        if (method == "enum") {
            produced.push_back(enumerate_pairwise(data, cfg.architecture, run_cfg));
        } else if (method == "lookahead") {
            const LookaheadAnalysis la = run_lookahead_analysis(data, cfg.architecture, run_cfg,
                                                                cfg.lookahead_interval);
            produced.push_back(la.train);
            produced.push_back(la.val);
        } else if (method == "gradangle") {
            produced.push_back(run_gradient_angle_analysis(data, cfg.architecture, run_cfg,
                                                           cfg.lookahead_interval));
        } else if (method == "feature") {
            produced.push_back(feature_transfer_similarity(data, cfg.architecture, run_cfg));
        } else {
            throw config_error("unknown relationships method: " + method);
        }

        // existing matrices in the output directory, for correlation reports
        std::vector<std::pair<std::string, RelationshipMatrix>> existing;
        for (const auto& entry : fs::directory_iterator(out)) {
            if (entry.path().extension() != ".json") continue;
            json j;
            try {
                j = load_json_file(entry.path().string());
            } catch (const parse_error&) {
                continue;
            }
            if (j.contains("format") && j["format"] == "saal-relmatrix-v1") {
                existing.emplace_back(entry.path().stem().string(), matrix_from_json(j));
            }
        }

        for (const auto& rel : produced) {
            json j = matrix_to_json(rel);
            j["config"] = resolved;
            j["seed"] = seed;
            const std::string path = out + "/" + rel.method() + ".json";
            write_json_file(path, j);
            write_text_file(out + "/" + rel.method() + ".txt", render_matrix_text(rel));
            std::cout << render_matrix_text(rel);

            for (const auto& [name, other] : existing) {
                if (other.num_tasks() != rel.num_tasks()) continue;
                const CorrelationReport corr = spearman(rel, other);
                json cj = correlation_to_json(corr);
                cj["a"] = rel.method();
                cj["b"] = name;
                cj["config"] = resolved;
                write_json_file(out + "/spearman_" + rel.method() + "_vs_" + name + ".json", cj);
            }
        }
    });
}

int cmd_bench(const CliCommon& cli) {
    return guard([&]() {
        const json resolved = load_config_with_overrides(cli.config_path, cli.overrides);
        const ExperimentConfig cfg = parse_experiment_config(resolved);
        fs::create_directories(cfg.output_dir);

        const std::uint64_t seed = cfg.seeds.front();
        const MultiTaskDataset data = make_dataset(cfg.dataset, seed);
        TrainerConfig run_cfg = cfg.trainer;
        run_cfg.seed = seed;

        // enumeration mask shared by saal_e / saal_ew rows; the precompute is
        // excluded from the per-batch timing
        TrainOptions saal_opts;
        saal_opts.enumeration_mask =
            saal_enumeration(enumerate_pairwise(data, cfg.architecture, run_cfg));

        const std::vector<StrategyKind> strategies = {
            StrategyKind::equal,  StrategyKind::uncertainty, StrategyKind::dwa,
            StrategyKind::pcgrad, StrategyKind::saal_e,      StrategyKind::saal_w,
            StrategyKind::saal_ew};

        json rows = json::array();
        std::ostringstream table;
        table << std::setw(12) << "method" << std::setw(12) << "ms/batch" << std::setw(10)
              << "ratio" << "\n";
        double equal_ms = 0.0;
        for (StrategyKind k : strategies) {
            const TrainOptions& opts =
                (k == StrategyKind::saal_e || k == StrategyKind::saal_ew) ? saal_opts
                                                                          : TrainOptions{};
            const double ms = mean_batch_ms(k, data, cfg.architecture, run_cfg,
                                            cfg.bench.warmup, cfg.bench.samples, opts);
            if (k == StrategyKind::equal) equal_ms = ms;
            const double ratio = ms / equal_ms;
            rows.push_back(json{{"method", to_string(k)}, {"ms_per_batch", ms},
                                {"ratio_vs_equal", ratio}});
            table << std::setw(12) << to_string(k) << std::setw(12) << std::fixed
                  << std::setprecision(3) << ms << std::setw(10) << std::setprecision(2) << ratio
                  << "\n";
        }
        json out{{"format", "saal-bench-v1"},
                 {"config", resolved},
                 {"seed", seed},
                 {"warmup", cfg.bench.warmup},
                 {"samples", cfg.bench.samples},
                 {"rows", rows}};
        write_json_file(cfg.output_dir + "/bench.json", out);
        table << "warmup " << cfg.bench.warmup << ", samples " << cfg.bench.samples << "\n";
        write_text_file(cfg.output_dir + "/bench.txt", table.str());
        std::cout << table.str();
    });
}

int cmd_sweep_shared_depth(const CliCommon& cli) {
    return guard([&]() {
        const json resolved = load_config_with_overrides(cli.config_path, cli.overrides);
        const ExperimentConfig cfg = parse_experiment_config(resolved);
        fs::create_directories(cfg.output_dir);
        const int D = cfg.architecture.total_encoder_depth;

        // rows: depth x strategy x task -> mean delta over seeds
        json rows = json::array();
        std::ostringstream table;
        table << std::setw(7) << "depth" << std::setw(10) << "method";
        const MultiTaskDataset probe = make_dataset(cfg.dataset, cfg.seeds.front());
        const int T = probe.num_tasks();
        for (int t = 0; t < T; ++t) table << std::setw(12) << ("delta_t" + std::to_string(t));
        table << std::setw(12) << "delta_mtl" << "\n";

        for (const StrategyKind strategy : {StrategyKind::equal, StrategyKind::saal_e}) {
            for (int depth = 0; depth <= D; ++depth) {
                std::map<int, double> delta_sum;
                double mtl_sum = 0.0;
                for (const std::uint64_t seed : cfg.seeds) {
                    const MultiTaskDataset data = make_dataset(cfg.dataset, seed);
                    TrainerConfig run_cfg = cfg.trainer;
                    run_cfg.seed = seed;
                    run_cfg.shared_depth = depth;
                    run_cfg.strategy = strategy;

                    // the depth-0 equal run doubles as the shared STL
                    // baseline of this sweep (no-sharing endpoint)
                    TrainerConfig base_cfg = run_cfg;
                    base_cfg.shared_depth = 0;
                    base_cfg.strategy = StrategyKind::equal;
                    const TrainResult base = train_run(data, cfg.architecture, base_cfg);
                    MtlModel base_model =
                        build_model(base.model.arch(), data.tasks(), seed);
                    base_model.params() = base.best.params;
                    const auto base_test = evaluate_split_metrics(base_model, data, Split::test);
                    const auto base_val = evaluate_split_metrics(base_model, data, Split::val);

                    TrainOptions opts;
                    opts.stl_val_metrics = base_val;
                    if (strategy == StrategyKind::saal_e) {
                        opts.enumeration_mask = saal_enumeration(
                            enumerate_pairwise(data, cfg.architecture, run_cfg));
                    }
                    ImprovementReport report;
                    if (strategy == StrategyKind::equal && depth == 0) {
                        // self-comparison: the baseline run is this run
                        report = relative_improvement(base_test, base_test,
                                                      metric_specs_for_tasks(data.tasks()));
                    } else {
                        const TrainResult res =
                            train_run(data, cfg.architecture, run_cfg, opts);
                        MtlModel best = build_model(res.model.arch(), data.tasks(), seed);
                        best.params() = res.best.params;
                        const auto test = evaluate_split_metrics(best, data, Split::test);
                        report = relative_improvement(test, base_test,
                                                      metric_specs_for_tasks(data.tasks()));
                    }
                    for (const auto& [t, d] : report.delta_task) delta_sum[t] += d;
                    mtl_sum += report.delta_mtl;
                }
                const double n = static_cast<double>(cfg.seeds.size());
                json row{{"shared_depth", depth}, {"method", to_string(strategy)}};
                table << std::setw(7) << depth << std::setw(10) << to_string(strategy);
                json deltas = json::object();
                for (const auto& [t, s] : delta_sum) {
                    deltas[std::to_string(t)] = s / n;
                    table << std::setw(12) << std::fixed << std::setprecision(2) << s / n;
                }
                row["delta_task"] = deltas;
                row["delta_mtl"] = mtl_sum / n;
                table << std::setw(12) << std::setprecision(2) << mtl_sum / n << "\n";
                rows.push_back(std::move(row));
            }
        }
        json out{{"format", "saal-sweep-v1"}, {"config", resolved}, {"rows", rows}};
        write_json_file(cfg.output_dir + "/sweep.json", out);
        write_text_file(cfg.output_dir + "/sweep.txt", table.str());
        std::cout << table.str();
    });
}

int cmd_report(const std::string& path) {
    return guard([&]() {
        const json j = load_json_file(path);
        if (!j.contains("format")) throw parse_error("file has no format tag: " + path);
        const std::string format = j.at("format").get<std::string>();
        if (format == "saal-report-v1") {
            const ImprovementReport report = report_from_json(j);
            std::vector<TaskSpec> tasks;
            for (const auto& [t, d] : report.delta_task) tasks.push_back({t, TaskKind::regression, 1});
            std::cout << render_report_text(report, tasks);
        } else if (format == "saal-relmatrix-v1") {
            std::cout << render_matrix_text(matrix_from_json(j));
        } else if (format == "saal-mean-report-v1") {
            std::cout << "seed-averaged deltas (%):\n";
            for (const auto& [t, d] : j.at("delta_task_mean").items()) {
                std::cout << "  task " << t << ": " << d.get<double>() << "\n";
            }
            std::cout << "  MTL: " << j.at("delta_mtl_mean").get<double>() << "\n";
        } else if (format == "saal-bench-v1") {
            for (const auto& row : j.at("rows")) {
                std::cout << row.at("method").get<std::string>() << "  "
                          << row.at("ms_per_batch").get<double>() << " ms  x"
                          << row.at("ratio_vs_equal").get<double>() << "\n";
            }
        } else {
            throw parse_error("unknown format tag: " + format);
        }
    });
}

}  // namespace saal
