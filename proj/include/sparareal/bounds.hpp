#pragma once

#include "sparareal/perturbations.hpp"
#include "sparareal/problems.hpp"

#include <optional>
#include <string>
#include <vector>

namespace sparareal {

/// How the sampling-rule constants Lambda1..Lambda3 are formed.
enum class RuleDerivation {
    /// The published expressions.
    published,
    /// Carries the (2 + 1/dt) weight of the perturbation split into every rule
    /// constant and scales sigma-driven terms by E||z||_inf^2 of the draw.
    norm_consistent,
};

/// Problem constants, the noise exponent and the empirical starting errors,
/// plus the quantities derived from them.
///
/// Call derive() after changing an input. The derived fields are plain members
/// so a caller can also set them directly.
struct BoundConstants {
    double C1 = 0.0;
    double C2 = 0.0;
    double L_G = 0.0;
    double L_F = 0.0;
    int p = 1;
    /// Noise exponent; nullopt means no state-independent noise (Lambda = 0).
    std::optional<double> q;
    double dt = 0.1;
    double e0_hat = 0.0;
    double e1_hat = 0.0;
    bool centred = false;
    RuleDerivation derivation = RuleDerivation::published;
    /// E||z||_inf^2 of a sampling-rule draw; read only by norm_consistent.
    double draw_moment = 1.0;

    double A = 0.0;
    double B = 0.0;
    double Lambda = 0.0;
    double D = 0.0;
    double Lambda1_24 = 0.0;
    double Lambda2_24 = 0.0;
    double Lambda1_13 = 0.0;
    double Lambda2_13 = 0.0;
    double Lambda3_13 = 0.0;

    void derive();
    /// 16 hex digits hashing every input and derived value.
    [[nodiscard]] std::string fingerprint() const;
};

enum class BoundKind { superlinear, linear, rule24, rule13, numeric_recursion_24, numeric_recursion_13, k1 };
enum class RuleVariant { rule24, rule13 };

std::string to_string(BoundKind kind);
RuleVariant rule_variant(int rule);

/// One bound value. `n` is empty for bounds over k alone; `value` is empty
/// where the bound does not apply (B >= 1).
struct BoundPoint {
    int k = 0;
    std::optional<int> n;
    std::optional<double> value;
};

struct BoundCurve {
    BoundKind kind = BoundKind::superlinear;
    std::vector<BoundPoint> points;

    /// Value at (k, n), or at k for k-only curves. Empty if absent or inapplicable.
    [[nodiscard]] std::optional<double> at(int k, std::optional<int> n = std::nullopt) const;
};

/// Superlinear bound at 2 <= k < n. Throws std::invalid_argument otherwise.
double superlinear_bound(const BoundConstants& c, int k, int n);

/// Linear bound at k >= 2; empty when B >= 1.
std::optional<double> linear_bound(const BoundConstants& c, int k);

/// e0_hat * A * sum_{i=0}^{n-2} B^i for n >= 1.
double k1_bound(const BoundConstants& c, int n);

/// Growth rate lambda_1 of the two-term recursion behind the rule bounds; empty when B >= 1.
std::optional<double> rule_rate(const BoundConstants& c, RuleVariant variant);

/// e0_hat * lambda_1^k at k >= 2; empty when B >= 1.
std::optional<double> rule_bound(const BoundConstants& c, RuleVariant variant, int k);

BoundCurve superlinear_curve(const BoundConstants& c, int K, int N);
BoundCurve linear_curve(const BoundConstants& c, int K);
BoundCurve rule_curve(const BoundConstants& c, RuleVariant variant, int K);
BoundCurve k1_curve(const BoundConstants& c, int N);

enum class RecursionSeed {
    /// e^1_n = D sum_{i<n} B^i and e^k_0 = 0. Iterating from this row
    /// reproduces the superlinear closed form exactly.
    closed_form,
    /// The k1_bound row, with every node n <= k held at zero.
    exact_k1,
};

/// Iterates e^{k+1}_{n+1} = A e^k_n + B e^{k+1}_n + Lambda as an equality.
/// Returns values[k][n] for k = 0..K, n = 0..N; row 0 holds e0_hat off node 0.
std::vector<std::vector<double>> solve_recursion_superlinear(const BoundConstants& c, int K, int N,
                                                             RecursionSeed seed = RecursionSeed::closed_form);

/// Iterates the sampling-rule recursion as an equality from the given k = 0
/// and k = 1 rows (length N + 1, entry 0 zero). rule13 replaces A by A + Lambda3.
std::vector<std::vector<double>> solve_recursion_rules(const BoundConstants& c, RuleVariant variant,
                                                       const std::vector<double>& e0_row,
                                                       const std::vector<double>& e1_row, int K);

/// Lattice curve for 2 <= k <= K, k < n <= N.
BoundCurve lattice_curve(BoundKind kind, const std::vector<std::vector<double>>& values);

struct ProblemConstants {
    double C1 = 0.0;
    double L_G = 0.0;
    double L_F = 0.0;
    bool C1_exact = false;
    bool lipschitz_exact = false;
};

/// Linear problems: ||exp(Q dt) - (I + Q dt/m)^m||_inf / dt^{p+1}, exact.
/// Otherwise the largest difference quotient of F - G over `samples` seeded
/// pairs in the domain box, divided by dt^{p+1} and inflated by 10%.
/// Throws std::invalid_argument for a box with zero volume.
double estimate_C1(const IVProblem& problem, int samples = 10000, std::uint64_t seed = 0xc1c1);

ProblemConstants problem_constants(const IVProblem& problem);

struct EmpiricalErrors {
    double e0_hat = 0.0;
    double e1_hat = 0.0;
    std::vector<double> e0_row;
    std::vector<double> e1_row;
};

/// Squared infinity-norm errors of the coarse sweep and the first deterministic
/// update against the serial fine trajectory.
EmpiricalErrors empirical_e_hats(const IVProblem& problem);

/// Constants for a problem under a perturbation model. C2 comes from
/// estimate_c2 (cached per dimension and family), draw_moment from
/// expected_max_square for the model's rule family.
BoundConstants make_bound_constants(const IVProblem& problem, const PerturbationModel& model, bool centred = false,
                                    RuleDerivation derivation = RuleDerivation::published);

}  // namespace sparareal
