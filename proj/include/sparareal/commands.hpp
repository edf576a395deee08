#pragma once

#include "sparareal/bounds.hpp"
#include "sparareal/csv.hpp"
#include "sparareal/experiments.hpp"
#include "sparareal/run_file.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sparareal {

enum ExitCode : int {
    exit_ok = 0,
    exit_config_error = 1,
    exit_cap_reached = 2,
    exit_numeric_failure = 3,
};

struct CommandOptions {
    /// Replaces output.directory when set.
    std::optional<std::string> out_dir;
    int workers = 1;
};

/// One realization; writes <prefix>trajectory.csv. Returns exit_cap_reached
/// when the tolerance was not met within K_max.
int cmd_solve(const RunFile& rf, const CommandOptions& opts, std::ostream& log);

/// Writes the CSVs for the requested quantities.
int cmd_experiment(const RunFile& rf, const CommandOptions& opts, std::ostream& log);

/// Writes <prefix>constants.csv and <prefix>bounds.csv.
int cmd_bounds(const RunFile& rf, const CommandOptions& opts, std::ostream& log);

/// The bound curves that apply to a model: superlinear, linear and k = 1 for
/// state-independent or no noise; the rule bound and its numeric recursion
/// for sampling rules.
std::vector<BoundCurve> bound_curves_for_model(const BoundConstants& c, const PerturbationModel& model,
                                               const EmpiricalErrors& errors, int K, int N);

/// Constants table rows for one model.
std::vector<ConstantRow> constant_rows(const IVProblem& problem, const BoundConstants& c,
                                        const PerturbationModel& model);

/// Loads the config and/or preset, runs the subcommand and maps failures to
/// exit codes. Composite presets write each member into its own subdirectory.
int dispatch(const std::string& command, const std::optional<std::string>& config_path,
             const std::optional<std::string>& preset, const CommandOptions& opts, std::ostream& log,
             std::ostream& err);

}  // namespace sparareal
