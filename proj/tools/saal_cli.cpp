#include <CLI11.hpp>

#include "saal/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"saal: multi-task optimisation toolkit with self-auxiliary asymmetric learning"};
    app.require_subcommand(1);

    saal::CliCommon common;
    common.jobs = saal::default_jobs_from_env();

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", common.config_path, "experiment config JSON")->required();
        cmd->add_option("--set", common.overrides,
                        "dotted-path config override, e.g. trainer.epochs=20");
        cmd->add_option("--jobs", common.jobs, "max concurrent jobs (default: SAAL_JOBS or 1)");
    };

    auto* run = app.add_subcommand("run", "train one strategy over the configured seeds");
    add_common(run);
    std::vector<std::uint64_t> seed_override;
    run->add_option("--seed", seed_override, "run only these seeds");

    auto* rel = app.add_subcommand("relationships", "compute a task-relationship matrix");
    add_common(rel);
    std::string method = "enum";
    std::string rel_out;
    rel->add_option("--method", method, "enum | lookahead | gradangle | feature")->required();
    rel->add_option("--out", rel_out, "output directory (default: <output_dir>/relationships)");

    auto* bench = app.add_subcommand("bench", "per-batch runtime ratios vs equal weighting");
    add_common(bench);

    auto* sweep = app.add_subcommand("sweep-shared-depth",
                                     "equal vs saal_e across shared depths 0..D");
    add_common(sweep);

    auto* report = app.add_subcommand("report", "re-render a JSON artifact as text");
    std::string report_path;
    report->add_option("path", report_path, "JSON artifact to render")->required();

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        if (!seed_override.empty()) {
            std::string list = "seeds=[";
            for (std::size_t i = 0; i < seed_override.size(); ++i) {
                if (i) list += ",";
                list += std::to_string(seed_override[i]);
            }
            list += "]";
            common.overrides.push_back(std::move(list));
        }
        return saal::cmd_run(common);
    }
    if (rel->parsed()) return saal::cmd_relationships(common, method, rel_out);
    if (bench->parsed()) return saal::cmd_bench(common);
    if (sweep->parsed()) return saal::cmd_sweep_shared_depth(common);
    if (report->parsed()) return saal::cmd_report(report_path);
    return 0;
}
