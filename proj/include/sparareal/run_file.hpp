#pragma once

#include "sparareal/bounds.hpp"
#include "sparareal/experiments.hpp"
#include "sparareal/perturbations.hpp"
#include "sparareal/problems.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace sparareal {

/// A run description read from a `section.key = value` text file.
///
/// Lines are trimmed; blank lines and lines starting with '#' are ignored.
/// Unknown and repeated keys are errors. Every error names its line.
struct RunFile {
    std::string problem_kind;  ///< "linear" or "scalar"
    int d = 0;
    LinearMode mode = LinearMode::contractive;
    std::uint64_t problem_seed = 0;
    double t0 = 0.0;
    double T = 6.0;
    int N = 20;

    PerturbationModel perturbation;

    int k_max = 0;
    std::optional<double> eps = 1e-8;
    std::uint64_t solver_seed = 0;

    int R = 500;
    std::vector<double> eps_grid;
    std::set<Quantity> quantities{Quantity::error_table};
    std::vector<PerturbationModel> models;

    bool centred = false;
    RuleDerivation derivation = RuleDerivation::published;

    std::string output_directory = ".";
    std::string output_prefix;
};

/// Raw key -> (value, line) map with strict syntax checks only.
using KeyValues = std::map<std::string, std::pair<std::string, int>>;

/// Throws ConfigError.
KeyValues parse_key_values(const std::string& text);

/// Builds and validates a RunFile. Throws ConfigError.
RunFile interpret_run_file(const KeyValues& kv);

/// parse_key_values then interpret_run_file.
RunFile parse_run_file(const std::string& text);

/// Reads and parses a file. Throws ConfigError, including for unreadable files.
KeyValues load_key_values(const std::string& path);

/// Names of all presets, single and composite.
std::vector<std::string> preset_names();

/// The keys of a single preset, or the members of a composite one as
/// (name, keys) pairs. Throws ConfigError for an unknown name.
std::vector<std::pair<std::string, KeyValues>> expand_preset(const std::string& name);

/// Entries of `overrides` replace those of `base`.
KeyValues merge_key_values(KeyValues base, const KeyValues& overrides);

/// The problem the run file describes.
std::shared_ptr<const IVProblem> build_problem(const RunFile& rf);

/// Run config for a single solve.
RunConfig build_run_config(const RunFile& rf, std::shared_ptr<const IVProblem> problem, int workers);

MCConfig build_mc_config(const RunFile& rf, std::shared_ptr<const IVProblem> problem, int workers);

}  // namespace sparareal
