#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fracflow/eval.hpp"
#include "fracflow/solver.hpp"

namespace fracflow::cli {

// Process exit codes.
enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kIo = 2,
    kNumerical = 3,
};

// Everything a command needs. Keys of the flat config file are the long flag names.
struct RunConfig {
    SolverParams params;
    std::filesystem::path frame0;
    std::filesystem::path frame1;
    std::filesystem::path gt;
    std::filesystem::path flow;       // input flow for eval / viz
    std::filesystem::path out;        // .flo for flow, .png for viz
    std::filesystem::path color_out;  // optional visualization written by flow
    std::filesystem::path csv;
    std::vector<RegionSpec> regions;
    std::string sweep_param;
    std::vector<double> sweep_values;
    std::optional<double> max_motion;
    int jobs = 1;
};

// Parses "key = value" lines; blank lines and lines starting with '#' or ';' are skipped.
[[nodiscard]] std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

// Applies config entries onto cfg. Unknown keys raise ValidationError.
void apply_config(const std::map<std::string, std::string>& entries, RunConfig& cfg);

// "x0,y0,x1,y1"
[[nodiscard]] RegionSpec parse_region(const std::string& text);
// Comma-separated reals.
[[nodiscard]] std::vector<double> parse_values(const std::string& text);

// Command bodies. Errors propagate as ValidationError / IoError / NumericalError.
void cmd_flow(const RunConfig& cfg, std::ostream& out);
void cmd_eval(const RunConfig& cfg, std::ostream& out);
void cmd_sweep(const RunConfig& cfg, std::ostream& out);
void cmd_viz(const RunConfig& cfg, std::ostream& out);

// Full command-line entry point; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fracflow::cli
