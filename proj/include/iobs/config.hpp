#pragma once

#include "iobs/expr.hpp"
#include "iobs/sim.hpp"

#include <string>

namespace iobs::config {

// Bad config contents: schema, dimensions, expressions. Maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& path, const std::string& msg)
        : std::runtime_error(path.empty() ? msg : path + ": " + msg), path_(path) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

struct ConfigDocument {
    sim::Scenario scenario;
    std::string kind_name;
    std::vector<Eigen::Index> m_list;  // LTV block dims, used by check commands
    std::string csv_path;
    std::string report_path;
    bool explicit_target = false;
};

ConfigDocument load_file(const std::string& path);
ConfigDocument load_string(const std::string& text, const std::string& origin = "<inline>");

}  // namespace iobs::config
