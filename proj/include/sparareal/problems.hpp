#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace sparareal {

using State = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Flow map over a time step: (state, dt) -> state.
using FlowMap = std::function<State(const State&, double)>;
using VectorField = std::function<State(const State&)>;

/// Uniform mesh t_n = t0 + n*dt, n = 0..N. The last node is pinned to T.
struct Mesh {
    double t0 = 0.0;
    double T = 1.0;
    int N = 1;
    double dt = 1.0;
    std::vector<double> nodes;

    static Mesh uniform(double t0, double T, int N);
};

enum class ProblemKind { linear, scalar_nonlinear, custom };
enum class MatrixStructure { diagonal, dense };
enum class LinearMode { contractive, expansive };

/// du/dt = Q u. Exact flow exp(Q dt) u, coarse flow forward Euler.
struct LinearSystemSpec {
    Matrix Q;
    MatrixStructure structure = MatrixStructure::diagonal;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// An autonomous IVP together with its fine (exact) and coarse flow maps.
///
/// Immutable after construction; safe to share across threads.
struct IVProblem {
    ProblemKind kind = ProblemKind::custom;
    std::string name;
    int dim = 1;
    Mesh mesh;
    State u0;
    VectorField field;
    FlowMap exact_flow;
    FlowMap coarse_flow;
    /// Per-component box bounding the states the solver is expected to visit.
    std::vector<Interval> domain_box;
    std::optional<LinearSystemSpec> linear;
    /// Forward-Euler substeps per coarse slice.
    int coarse_substeps = 1;
    /// Order p of the coarse solver's local truncation error O(dt^{p+1}).
    int coarse_order = 1;

    [[nodiscard]] State fine(const State& u) const { return exact_flow(u, mesh.dt); }
    [[nodiscard]] State coarse(const State& u) const { return coarse_flow(u, mesh.dt); }
};

/// Random diagonal linear system whose B = L_G^2 (1 + 2 dt) lands below one
/// (contractive) or at/above one (expansive). u0 is uniform on [-5, 5]^d.
///
/// The coarse amplification factors 1 + Q_ii dt are drawn uniformly in a band
/// pinned to the threshold rho = (1 + 2 dt)^{-1/2}: [0.97, 0.995] rho for
/// contractive, [1.0, 1.1] rho for expansive. Throws std::invalid_argument on
/// d < 1 or N < 1, and if the achieved B misses the requested regime.
IVProblem make_linear_problem(int d, LinearMode mode, std::uint64_t seed, double t0, double T, int N,
                              int coarse_substeps = 1);

/// Linear problem from an explicit matrix. A diagonal structure requires zero
/// off-diagonal entries.
IVProblem make_linear_problem(const LinearSystemSpec& spec, const State& u0, const Mesh& mesh,
                              int coarse_substeps = 1);

/// du/dt = sqrt(u^2 + 2) on [-1, 1], u(-1) = 5, N = 20.
IVProblem make_scalar_problem(int coarse_substeps = 1);

/// Wraps user-supplied maps. No closed-form constants are available for it.
IVProblem make_custom_problem(std::string name, VectorField field, FlowMap exact_flow, FlowMap coarse_flow,
                              const State& u0, const Mesh& mesh, int coarse_order = 1);

/// exp(Q dt). Dispatches to the diagonal path when Q has no off-diagonal
/// entries, otherwise scaling and squaring with a truncated Taylor series.
/// Throws NumericError on non-finite input.
Matrix matrix_exponential(const Matrix& Q, double dt);
Matrix matrix_exponential_diagonal(const Matrix& Q, double dt);
Matrix matrix_exponential_dense(const Matrix& Q, double dt);

/// Max absolute row sum.
double inf_norm(const Matrix& M);
double inf_norm(const State& v);

struct LipschitzConstants {
    double coarse = 0.0;  ///< L_G
    double fine = 0.0;    ///< L_F
};

/// Closed-form Lipschitz constants (infinity norm) for the built-in problems.
/// Throws UnsupportedProblem for custom problems; use estimate_lipschitz.
LipschitzConstants lipschitz_constants(const IVProblem& problem);

/// Largest sampled difference quotient over `samples` seeded pairs in the
/// domain box, inflated by 10%.
LipschitzConstants estimate_lipschitz(const IVProblem& problem, int samples = 10000, std::uint64_t seed = 0x5eed);

/// U_0 = u0, U_{n+1} = F(U_n). Throws NumericError naming the first
/// non-finite node.
std::vector<State> serial_fine_solve(const IVProblem& problem);

}  // namespace sparareal
