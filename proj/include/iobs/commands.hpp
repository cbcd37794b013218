#pragma once

#include "iobs/config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace iobs::commands {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfigError = 2;

void write_csv(const sim::SimulationTrace& tr, const std::string& path);
std::string make_report(const sim::SimulationTrace& tr, const std::string& kind_name);
void write_plot_script(const sim::SimulationTrace& tr, const std::string& csv_path,
                       const std::string& script_path);

int cmd_check(const std::string& config_path, const std::string& report_path,
              std::ostream& out);

int cmd_design(const std::string& config_path, const std::string& artifact_path,
               std::ostream& out);

struct SimulateOptions {
    std::vector<std::string> config_paths;
    std::string csv_override;     // only valid with a single config
    std::string report_override;  // only valid with a single config
    std::string plot_script;      // emit gnuplot template alongside CSV
    int jobs = 1;
};

int cmd_simulate(const SimulateOptions& opts, std::ostream& out);

}  // namespace iobs::commands
