#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace uniesn::cli {

enum ExitCode : int {
    kOk = 0,
    kConfigError = 2,
    kStageFailure = 3,
    kBudgetViolation = 4,
    kVerifyFailure = 5,
};

struct ConstructOptions {
    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
};

struct VerifyOptions {
    std::string esn_path;
    std::string config_path;
    std::optional<std::string> out_dir;   // defaults to the directory of esn_path
    std::optional<std::string> nets_path; // defaults to nets.json beside esn_path
};

struct SweepOptions {
    std::string config_path;
    std::optional<std::vector<double>> eps;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
};

/// Writes esn.json, nets.json, report.json, budget.csv and timings.json.
/// stdout receives only the report path; stage logs go to `log`.
int cmd_construct(const ConstructOptions& opts, std::ostream& out, std::ostream& log);

/// Writes verify.json with one entry per property check.
int cmd_verify(const VerifyOptions& opts, std::ostream& out, std::ostream& log);

/// Writes sweep.csv with one row per eps.
int cmd_sweep(const SweepOptions& opts, std::ostream& out, std::ostream& log);

/// Parses "0.5,0.3,0.1"; throws std::invalid_argument on malformed input.
std::vector<double> parse_eps_list(const std::string& text);

/// Entry point of the `uniesn` executable.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& log);

}  // namespace uniesn::cli
