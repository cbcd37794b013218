#include "iobs/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"interval observer design, verification, and simulation"};
    app.require_subcommand(1);

    std::string config_path, output_path, report_path, plot_script;
    iobs::commands::SimulateOptions sim_opts;

    auto* check = app.add_subcommand("check", "verify design assumptions");
    check->add_option("config", config_path, "scenario config (JSON)")->required();
    check->add_option("--report", report_path, "machine-readable report path");

    auto* design = app.add_subcommand("design", "solve the LTI design offline");
    design->add_option("config", config_path, "scenario config (JSON)")->required();
    design->add_option("-o,--output", output_path, "design artifact path")
        ->required();

    auto* simulate = app.add_subcommand("simulate", "run a scenario and emit traces");
    simulate->add_option("configs", sim_opts.config_paths, "scenario configs (JSON)")
        ->required();
    simulate->add_option("-o,--output", sim_opts.csv_override, "CSV output path");
    simulate->add_option("--report", sim_opts.report_override, "report JSON path");
    simulate->add_option("--plot-script", sim_opts.plot_script,
                         "emit a gnuplot template");
    simulate->add_option("--jobs", sim_opts.jobs, "concurrent scenario runs")
        ->default_val(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : iobs::commands::kExitConfigError;
    }

    try {
        if (check->parsed())
            return iobs::commands::cmd_check(config_path, report_path, std::cout);
        if (design->parsed())
            return iobs::commands::cmd_design(config_path, output_path, std::cout);
        return iobs::commands::cmd_simulate(sim_opts, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return iobs::commands::kExitCheckFailed;
    }
}
