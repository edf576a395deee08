#pragma once

#include "sparareal/problems.hpp"
#include "sparareal/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sparareal {

enum class NoiseFamily { gaussian, uniform };

/// Which noise, if any, is added to the predictor-corrector update.
struct PerturbationModel {
    enum class Tag { none, state_independent, sampling_rule };

    Tag tag = Tag::none;
    NoiseFamily family = NoiseFamily::gaussian;  ///< state_independent only
    double q = 0.0;                              ///< state_independent only
    int rule = 1;                                ///< sampling_rule only, 1..4

    static PerturbationModel none() { return {}; }
    /// Throws std::invalid_argument for non-finite q.
    static PerturbationModel state_independent(NoiseFamily family, double q);
    /// Throws std::invalid_argument unless 1 <= rule <= 4.
    static PerturbationModel sampling_rule(int rule);

    [[nodiscard]] bool is_none() const { return tag == Tag::none; }
    [[nodiscard]] bool is_state_independent() const { return tag == Tag::state_independent; }
    [[nodiscard]] bool is_sampling_rule() const { return tag == Tag::sampling_rule; }
    /// Rules 1 and 3 centre on F(U^{k-1}_{n-1}); rules 2 and 4 on U^k_n.
    [[nodiscard]] bool rule_uses_fine() const { return is_sampling_rule() && (rule == 1 || rule == 3); }
    [[nodiscard]] bool rule_is_gaussian() const { return is_sampling_rule() && (rule == 1 || rule == 2); }

    /// Short identifier such as "none", "gaussian-q5", "rule3".
    [[nodiscard]] std::string label() const;
};

bool operator==(const PerturbationModel& a, const PerturbationModel& b);

/// Parses a label() string back into a model. Throws std::invalid_argument.
PerturbationModel parse_perturbation_label(const std::string& label);

/// Standard deviation dt^{q+1/2} of one component of a state-independent draw.
double state_independent_scale(double q, double dt);

/// One xi^k_n draw: i.i.d. components with mean 0 and variance dt^{2q+1}.
/// Gaussian, or uniform on [-sqrt(3) s, sqrt(3) s] with s = dt^{q+1/2}.
State draw_state_independent(const PerturbationModel& model, const RngStream& stream, std::uint64_t realization,
                             int k, int n, double dt, int d);

/// |G(U^k_{n-1}) - G(U^{k-1}_{n-1})| from the two coarse values.
State sigma_kn(const State& g_curr, const State& g_prev);

/// Same, evaluating the coarse flow on states[k][n-1] and states[k-1][n-1].
/// Requires k >= 1 and n >= 1.
State sigma_kn(const std::vector<std::vector<State>>& states, int k, int n, const FlowMap& coarse_flow, double dt);

/// One alpha^k_n draw for sampling rule 1..4.
///
/// `u_kn` is U^k_n and `f_prev` is the stored F(U^{k-1}_{n-1}); only the one
/// the rule centres on is read. Throws std::logic_error if k < 1 or n <= k.
State sample_alpha(int rule, int k, int n, const State& u_kn, const State& f_prev, const State& sigma,
                   const RngStream& stream, std::uint64_t realization);

/// (F(alpha) - G(alpha)) - (F(u) - G(u)).
State xi_from_alpha(const State& alpha, const State& u_kn, const FlowMap& fine_flow, const FlowMap& coarse_flow,
                    double dt);
State xi_from_alpha(const State& f_alpha, const State& g_alpha, const State& f_u, const State& g_u);

/// Running average of ||xi^k_n||_inf^2 over realizations, per (k, n).
class XiMomentTracker {
public:
    /// Adds one realization's table, indexed [k][n]. Rows may differ in count.
    void add(const std::vector<std::vector<double>>& xi_sq);
    /// Combines another tracker's sums; order of merges does not change the result
    /// as long as the same tables are merged in the same order.
    void merge(const XiMomentTracker& other);

    [[nodiscard]] std::size_t realizations() const { return count_; }
    /// mean[k][n].
    [[nodiscard]] std::vector<std::vector<double>> mean() const;
    /// max over n of mean[k][n], per k.
    [[nodiscard]] std::vector<double> max_over_n() const;

private:
    std::vector<std::vector<double>> sum_;
    std::size_t count_ = 0;
};

/// E[max_i z_i^2] for a d-vector of unit-variance components of the family.
/// Gaussian by quadrature of 1 - erf(sqrt(t/2))^d, uniform in closed form 3d/(d+2).
double expected_max_square(int d, NoiseFamily family);

/// C2 such that E||xi||_inf^r <= (C2 dt^{q+1/2})^r for r in {1, 2, 4}.
///
/// Uniform: sqrt(3), the support bound. Gaussian: the largest empirical
/// (E||z||_inf^r)^{1/r} over `draws` seeded standard-normal d-vectors, inflated by 10%.
double estimate_c2(int d, NoiseFamily family, int draws = 1000000, std::uint64_t seed = 0xc2c2);

}  // namespace sparareal
