#pragma once

#include "sparareal/bounds.hpp"
#include "sparareal/perturbations.hpp"
#include "sparareal/pint_core.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace sparareal {

enum class Quantity { error_table, moments, tolerance_sweep, comparison };

std::string to_string(Quantity q);
/// Throws std::invalid_argument for an unknown name.
Quantity parse_quantity(const std::string& name);

struct MCConfig {
    /// Template for every realization; its perturbation drives the error table.
    RunConfig run;
    int R = 500;
    std::set<Quantity> quantities{Quantity::error_table};
    /// Strictly decreasing.
    std::vector<double> eps_grid;
    /// Models compared by moments and sweeps. Empty selects run.perturbation.
    std::vector<PerturbationModel> models;
    /// Drop realizations that abort instead of failing the whole run.
    bool skip_failed = false;
    /// Realization-level threads. Results do not depend on it.
    int workers = 1;

    /// Throws std::invalid_argument.
    void validate() const;
    [[nodiscard]] std::vector<PerturbationModel> comparison_models() const;
};

struct FailedRealization {
    std::uint64_t realization = 0;
    std::uint64_t seed = 0;
    std::string message;
};

/// Mean-square errors over realizations, indexed [k][n].
struct ErrorTable {
    int R = 0;
    PerturbationModel model;
    /// Cells with n <= k hold exact zeros; raw_mse keeps the computed value.
    std::vector<std::vector<double>> mse;
    std::vector<std::vector<double>> stderr_;
    std::vector<std::vector<double>> raw_mse;
    /// max_n mse[k][n] and the standard error of that cell.
    std::vector<double> ehat;
    std::vector<double> ehat_stderr;
    /// ||u(t_n)||_inf of the reference trajectory.
    std::vector<double> exact_norm;
    std::vector<FailedRealization> failed;

    [[nodiscard]] int K() const { return static_cast<int>(mse.size()) - 1; }
    [[nodiscard]] int N() const { return mse.empty() ? 0 : static_cast<int>(mse[0].size()) - 1; }
};

/// Runs R realizations of run.perturbation with stopping disabled, to k_max.
ErrorTable mc_error_table(const MCConfig& mc);

struct MomentTrace {
    PerturbationModel model;
    /// value[k] = max_n of the realization mean of ||xi^k_n||_inf^2, k = 0..K-1.
    std::vector<double> value;
    std::vector<double> stderr_;
    /// dt^{2q+1} E||z||_inf^2 for state-independent models.
    std::optional<double> analytic;
};

std::vector<MomentTrace> mc_moments(const MCConfig& mc);

struct SweepPoint {
    PerturbationModel model;
    double eps = 0.0;
    double mean_k = 0.0;
    double stderr_ = 0.0;
};

/// Expected stopping iteration per model and tolerance. Each realization runs
/// once to k_max; the stopping rule is then applied offline to its recorded
/// increments. A realization that never stops counts as k_max.
std::vector<SweepPoint> mc_tolerance_sweep(const MCConfig& mc);

/// First k >= 1 whose increment meets eps, else k_max.
int stopping_iteration(const std::vector<double>& increment, double eps, int k_max);

struct ComparisonOptions {
    /// Standard errors subtracted from the empirical value before comparing.
    double se_slack = 3.0;
    /// Adds (16 eps_mach max(1, ||u(t_n)||))^2 to the bound, the squared
    /// round-off of states that are exact in exact arithmetic.
    bool roundoff_allowance = true;
};

struct ComparisonRow {
    int k = 0;
    double empirical = 0.0;
    double stderr_ = 0.0;
    BoundKind kind = BoundKind::superlinear;
    /// Empty when the bound does not apply.
    std::optional<double> bound;
    bool dominated = false;
};

struct LatticeVerdict {
    int checked = 0;
    int violations = 0;
    /// Largest (empirical - slack) / (bound + allowance) and where it occurs.
    double worst_ratio = 0.0;
    int worst_k = -1;
    int worst_n = -1;
};

/// Squared round-off allowance at node n.
double roundoff_allowance(const ErrorTable& table, int n);

/// One row per (curve, k). k-only curves compare against ehat[k]. Lattice
/// curves report ehat[k] against the largest bound over n, and are marked
/// dominated only when every node n > k of row k is.
std::vector<ComparisonRow> compare_bounds(const ErrorTable& table, const std::vector<BoundCurve>& curves,
                                          const ComparisonOptions& options = {});

/// Checks e^k_n against a lattice curve at every (k, n) it covers.
LatticeVerdict lattice_verdict(const ErrorTable& table, const BoundCurve& curve, const ComparisonOptions& options = {});

}  // namespace sparareal
