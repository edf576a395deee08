#pragma once

#include "sparareal/perturbations.hpp"
#include "sparareal/problems.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace sparareal {

struct RunConfig {
    std::shared_ptr<const IVProblem> problem;
    /// Iteration cap, 1..N. Zero selects N.
    int k_max = 0;
    /// Stopping tolerance in the infinity norm. nullopt disables stopping and
    /// runs to k_max; +infinity stops at k = 1.
    std::optional<double> eps = 1e-8;
    PerturbationModel perturbation;
    std::uint64_t seed = 0;
    /// Monte Carlo realization index; selects an independent family of draws.
    std::uint64_t realization = 0;
    /// Fill IterationHistory::xi_sq with ||xi^k_n||_inf^2.
    bool record_xi_moments = false;
    /// Threads used for the fine sweep. Results do not depend on it.
    int workers = 1;
};

enum class Termination {
    tolerance,  ///< every node met the tolerance
    exact,      ///< reached k = N, where the iterate is the fine solution
    cap,        ///< hit k_max first
};

struct IterationHistory {
    /// states[k][n], k = 0..K, n = 0..N.
    std::vector<std::vector<State>> states;
    /// increment[k] = max_n ||U^k_n - U^{k-1}_n||_inf; increment[0] is +inf.
    std::vector<double> increment;
    std::optional<int> converged_k;
    Termination termination = Termination::cap;
    std::optional<double> eps;
    /// xi_sq[k][n] = ||xi^k_n||_inf^2 for the update producing U^{k+1}_{n+1};
    /// empty unless recording was requested.
    std::vector<std::vector<double>> xi_sq;

    [[nodiscard]] int iterations() const { return static_cast<int>(states.size()) - 1; }
};

/// g_new + f_old - g_old + xi, summed in that order.
State pc_update(const State& g_new, const State& f_old, const State& g_old, const State& xi);

/// Largest I with ||U^k_n - U^{k-1}_n||_inf < eps for every n <= I. A node whose
/// iterates agree exactly also counts, so eps = 0 still credits unchanged nodes.
/// Returns -1 if node 0 fails. Throws std::invalid_argument unless 1 <= k <= K.
int check_convergence(const IterationHistory& history, int k, double eps);

/// Everything that went into one predictor-corrector update, for diagnostics.
struct UpdateRecord {
    int k = 0;  ///< producing U^{k+1}_{n+1}
    int n = 0;
    const State* g_new = nullptr;  ///< G(U^{k+1}_n)
    const State* f_old = nullptr;  ///< F(U^k_n)
    const State* g_old = nullptr;  ///< G(U^k_n)
    const State* xi = nullptr;     ///< xi^k_n; for sampling rules the implied value
    const State* alpha = nullptr;  ///< sampling rules with n > k only
    const State* f_alpha = nullptr;
    const State* g_alpha = nullptr;
    const State* result = nullptr;
};

using UpdateObserver = std::function<void(const UpdateRecord&)>;

/// Deterministic parareal. Throws std::invalid_argument if a perturbation is
/// configured and NumericError at the first non-finite node.
IterationHistory parareal_solve(const RunConfig& config);

/// Stochastic parareal. Sampling rules use the alpha-form update. With no
/// perturbation the result equals parareal_solve bit for bit.
IterationHistory sparareal_solve(const RunConfig& config, const UpdateObserver& observer = {});

/// Runs body(i) for i in [begin, end) over up to `workers` threads.
void parallel_for(int workers, int begin, int end, const std::function<void(int)>& body);

}  // namespace sparareal
