#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cevhedge/model.hpp"
#include "cevhedge/pricing.hpp"

namespace cevhedge {

/// Process exit codes of the command-line front end.
enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3, kExitNoConvergence = 4 };

/// Settings shared by all subcommands. Parsed from flat `key = value` text;
/// `#` starts a comment. Every key except `maturity` has a default.
struct ExperimentConfig {
    ModelParams model;
    /// call | put | bond (G = 1)
    std::string option_kind = "call";
    double strike = 100.0;
    double maturity = 1.0;

    double s0 = 100.0;
    double H0 = 0.0;
    /// Initial cash; the option price at (0, s0) when unset.
    std::optional<double> x0;

    std::size_t t_steps = 200;
    std::size_t s_nodes = 200;
    double s_min = 50.0;
    double s_max = 200.0;

    double tol = 1e-4;
    int max_iter = 50;

    std::size_t n_paths = 100000;
    std::size_t mc_steps = 500;
    std::uint64_t seed = 1;
    unsigned threads = 1;

    std::string strategy = "optimal";
    double kappa = 10.0;
    std::optional<std::size_t> trace_path;
    std::optional<std::filesystem::path> fields;

    std::vector<double> eps_list{0.1, 0.01, 0.001, 0.0001};
    int k = 1;
    int sweep_max_iter = 400;

    std::size_t validate_paths = 4000;
    std::size_t validate_grid = 60;
    std::size_t validate_steps = 100;

    std::filesystem::path out_dir = "out";

    OptionSpec option() const;
    /// Throws InvalidInput on inconsistent settings.
    void validate() const;
};

/// Throws InvalidInput naming the offending key or line.
ExperimentConfig parse_config(std::istream& in, const std::string& source = "config");
ExperimentConfig load_config(const std::filesystem::path& path);
/// Comma-separated floats, e.g. "0.1,0.01".
std::vector<double> parse_float_list(const std::string& text);

struct SweepRow {
    double eps;
    double v_opt;
    double psi_naive;
    double se_psi_naive;
    double ratio_k;
    int iterations;
    std::string warning;
};

struct SweepResult {
    int k = 1;
    std::vector<SweepRow> rows;
    /// Least-squares slope of log psi_naive against eps^{-1/2}; empty for a single eps.
    std::optional<double> decay_slope;
};

/// Per eps (sorted descending): HJB solve, V at (H0, s0, 0), and an MC
/// evaluation of the benchmark rate on common paths.
SweepResult run_sweep(const ExperimentConfig& config, std::ostream& log);
void write_sweep_csv(const SweepResult& result, std::ostream& out);

/// Subcommands. Each writes into config.out_dir and returns an ExitCode;
/// failures are reported on `log`.
int cmd_price(const ExperimentConfig& config, std::ostream& log);
int cmd_solve(const ExperimentConfig& config, std::ostream& log);
int cmd_simulate(const ExperimentConfig& config, std::ostream& log);
int cmd_sweep(const ExperimentConfig& config, std::ostream& log);
int cmd_validate(const ExperimentConfig& config, std::ostream& log);

/// Maps exceptions from a subcommand body onto exit codes.
int run_guarded(int (*command)(const ExperimentConfig&, std::ostream&), const ExperimentConfig& config,
                std::ostream& log);

}  // namespace cevhedge
