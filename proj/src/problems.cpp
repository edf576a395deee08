#include "sparareal/problems.hpp"

#include "sparareal/errors.hpp"
#include "sparareal/rng.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <sstream>
#include <stdexcept>

namespace sparareal {

namespace {

bool is_diagonal(const Matrix& Q) {
    for (Eigen::Index j = 0; j < Q.cols(); ++j)
        for (Eigen::Index i = 0; i < Q.rows(); ++i)
            if (i != j && Q(i, j) != 0.0) return false;
    return true;
}

void require_finite(const Matrix& Q) {
    if (!Q.allFinite()) throw NumericError("matrix_exponential: non-finite matrix entry", std::nullopt, std::nullopt);
}

double norm1(const Matrix& M) { return M.cwiseAbs().colwise().sum().maxCoeff(); }

/// (I + Q h)^m applied to u, one Euler substep at a time.
State euler_substeps(const Matrix& Q, bool diagonal, const State& u, double dt, int m) {
    const double h = dt / m;
    State v = u;
    for (int s = 0; s < m; ++s) {
        if (diagonal)
            v = v.array() + h * Q.diagonal().array() * v.array();
        else
            v = v + h * (Q * v);
    }
    return v;
}

/// (I + Q dt/m)^m as a matrix.
Matrix coarse_matrix(const Matrix& Q, double dt, int m) {
    const Eigen::Index d = Q.rows();
    const Matrix step = Matrix::Identity(d, d) + (dt / m) * Q;
    Matrix out = Matrix::Identity(d, d);
    for (int s = 0; s < m; ++s) out = step * out;
    return out;
}

/// Componentwise min/max over a trajectory, widened to 1.5x its extent. A
/// constant component gets a half-width of max(1, |u|)/2 instead.
std::vector<Interval> trajectory_box(const std::vector<State>& traj) {
    const Eigen::Index d = traj.front().size();
    std::vector<Interval> box(static_cast<std::size_t>(d));
    for (Eigen::Index i = 0; i < d; ++i) {
        double lo = traj.front()(i), hi = lo;
        for (const auto& u : traj) {
            lo = std::min(lo, u(i));
            hi = std::max(hi, u(i));
        }
        const double pad = hi > lo ? 0.25 * (hi - lo) : 0.5 * std::max(1.0, std::abs(lo));
        box[static_cast<std::size_t>(i)] = {lo - pad, hi + pad};
    }
    return box;
}

}  // namespace

Mesh Mesh::uniform(double t0, double T, int N) {
    if (N < 1) throw std::invalid_argument("mesh: N must be at least 1");
    if (!(T > t0)) throw std::invalid_argument("mesh: T must exceed t0");
    Mesh m;
    m.t0 = t0;
    m.T = T;
    m.N = N;
    m.dt = (T - t0) / N;
    m.nodes.resize(static_cast<std::size_t>(N) + 1);
    for (int n = 0; n < N; ++n) m.nodes[static_cast<std::size_t>(n)] = t0 + n * m.dt;
    m.nodes.back() = T;
    return m;
}

double inf_norm(const Matrix& M) { return M.cwiseAbs().rowwise().sum().maxCoeff(); }

double inf_norm(const State& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

Matrix matrix_exponential_diagonal(const Matrix& Q, double dt) {
    require_finite(Q);
    const Eigen::Index d = Q.rows();
    Matrix E = Matrix::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i) E(i, i) = std::exp(Q(i, i) * dt);
    return E;
}

Matrix matrix_exponential_dense(const Matrix& Q, double dt) {
    require_finite(Q);
    const Eigen::Index d = Q.rows();
    Matrix A = Q * dt;

    // Scale until ||A||_1 <= 1/2 so the Taylor tail is tiny, then square back.
    int squarings = 0;
    const double a_norm = norm1(A);
    if (a_norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(a_norm / 0.5)));
    A /= std::ldexp(1.0, squarings);

    Matrix sum = Matrix::Identity(d, d);
    Matrix term = Matrix::Identity(d, d);
    for (int j = 1; j <= 40; ++j) {
        term = term * A / static_cast<double>(j);
        sum += term;
        if (norm1(term) <= 1e-18 * norm1(sum)) break;
    }
    for (int s = 0; s < squarings; ++s) sum = sum * sum;
    if (!sum.allFinite()) throw NumericError("matrix_exponential: overflow", std::nullopt, std::nullopt);
    return sum;
}

Matrix matrix_exponential(const Matrix& Q, double dt) {
    if (Q.rows() != Q.cols()) throw std::invalid_argument("matrix_exponential: Q must be square");
    return is_diagonal(Q) ? matrix_exponential_diagonal(Q, dt) : matrix_exponential_dense(Q, dt);
}

IVProblem make_linear_problem(const LinearSystemSpec& spec, const State& u0, const Mesh& mesh, int coarse_substeps) {
    const Eigen::Index d = spec.Q.rows();
    if (d < 1 || spec.Q.cols() != d) throw std::invalid_argument("linear problem: Q must be square and non-empty");
    if (u0.size() != d) throw std::invalid_argument("linear problem: u0 dimension does not match Q");
    if (coarse_substeps < 1) throw std::invalid_argument("linear problem: coarse_substeps must be >= 1");
    const bool diagonal = spec.structure == MatrixStructure::diagonal;
    if (diagonal && !is_diagonal(spec.Q))
        throw std::invalid_argument("linear problem: diagonal structure with non-zero off-diagonal entries");
    require_finite(spec.Q);

    IVProblem p;
    p.kind = ProblemKind::linear;
    p.name = diagonal ? "linear-diagonal" : "linear-dense";
    p.dim = static_cast<int>(d);
    p.mesh = mesh;
    p.u0 = u0;
    p.linear = spec;
    p.coarse_substeps = coarse_substeps;
    p.coarse_order = 1;

    auto Q = std::make_shared<const Matrix>(spec.Q);
    const int m = coarse_substeps;
    p.field = [Q](const State& u) -> State { return (*Q) * u; };

    if (diagonal) {
        auto q = std::make_shared<const Eigen::ArrayXd>(spec.Q.diagonal().array());
        p.exact_flow = [q](const State& u, double h) -> State { return u.array() * (*q * h).exp(); };
        p.coarse_flow = [Q, m](const State& u, double h) -> State { return euler_substeps(*Q, true, u, h, m); };
    } else {
        const double mesh_dt = mesh.dt;
        auto E = std::make_shared<const Matrix>(matrix_exponential_dense(spec.Q, mesh_dt));
        p.exact_flow = [Q, E, mesh_dt](const State& u, double h) -> State {
            if (h == mesh_dt) return (*E) * u;
            return matrix_exponential_dense(*Q, h) * u;
        };
        p.coarse_flow = [Q, m](const State& u, double h) -> State { return euler_substeps(*Q, false, u, h, m); };
    }

    p.domain_box = trajectory_box(serial_fine_solve(p));
    return p;
}

IVProblem make_linear_problem(int d, LinearMode mode, std::uint64_t seed, double t0, double T, int N,
                              int coarse_substeps) {
    if (d < 1) throw std::invalid_argument("linear problem: d must be at least 1");
    if (N < 1) throw std::invalid_argument("linear problem: N must be at least 1");
    if (coarse_substeps < 1) throw std::invalid_argument("linear problem: coarse_substeps must be >= 1");
    const Mesh mesh = Mesh::uniform(t0, T, N);
    const double dt = mesh.dt;
    const double rho = 1.0 / std::sqrt(1.0 + 2.0 * dt);
    const double band_lo = mode == LinearMode::contractive ? 0.97 : 1.0;
    const double band_hi = mode == LinearMode::contractive ? 0.995 : 1.1;

    const RngStream stream(seed);
    auto coef_rng = stream.substream(0, 0, 0, DrawKind::problem_setup);
    auto u0_rng = stream.substream(0, 0, 1, DrawKind::problem_setup);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> init(-5.0, 5.0);

    const int m = coarse_substeps;
    Matrix Q = Matrix::Zero(d, d);
    State u0(d);
    for (int i = 0; i < d; ++i) {
        // Coarse amplification factor a = (1 + Q_ii dt/m)^m, inverted for Q_ii.
        const double a = rho * (band_lo + (band_hi - band_lo) * unit(coef_rng));
        Q(i, i) = (std::pow(a, 1.0 / m) - 1.0) * m / dt;
    }
    for (int i = 0; i < d; ++i) u0(i) = init(u0_rng);

    IVProblem p = make_linear_problem(LinearSystemSpec{Q, MatrixStructure::diagonal}, u0, mesh, coarse_substeps);
    const double lg = lipschitz_constants(p).coarse;
    const double B = lg * lg * (1.0 + 2.0 * dt);
    const bool ok = mode == LinearMode::contractive ? B < 1.0 : B >= 1.0;
    if (!ok) {
        std::ostringstream os;
        os << "linear problem: requested " << (mode == LinearMode::contractive ? "contractive (B < 1)" : "expansive (B >= 1)")
           << " regime not achieved for dt = " << dt << "; achieved B = " << B;
        throw std::invalid_argument(os.str());
    }
    p.name = mode == LinearMode::contractive ? "linear-contractive" : "linear-expansive";
    return p;
}

IVProblem make_scalar_problem(int coarse_substeps) {
    if (coarse_substeps < 1) throw std::invalid_argument("scalar problem: coarse_substeps must be >= 1");
    IVProblem p;
    p.kind = ProblemKind::scalar_nonlinear;
    p.name = "scalar-nonlinear";
    p.dim = 1;
    p.mesh = Mesh::uniform(-1.0, 1.0, 20);
    p.u0 = State::Constant(1, 5.0);
    p.coarse_substeps = coarse_substeps;
    p.coarse_order = 1;

    const double sqrt2 = std::sqrt(2.0);
    p.field = [](const State& u) -> State { return (u.array().square() + 2.0).sqrt(); };
    p.exact_flow = [sqrt2](const State& u, double h) -> State {
        return sqrt2 * (h + (u.array() / sqrt2).asinh()).sinh();
    };
    const int m = coarse_substeps;
    p.coarse_flow = [m](const State& u, double h) -> State {
        const double step = h / m;
        State v = u;
        for (int s = 0; s < m; ++s) v = v.array() + step * (v.array().square() + 2.0).sqrt();
        return v;
    };
    p.domain_box = trajectory_box(serial_fine_solve(p));
    return p;
}

IVProblem make_custom_problem(std::string name, VectorField field, FlowMap exact_flow, FlowMap coarse_flow,
                              const State& u0, const Mesh& mesh, int coarse_order) {
    if (u0.size() < 1) throw std::invalid_argument("custom problem: empty initial condition");
    IVProblem p;
    p.kind = ProblemKind::custom;
    p.name = std::move(name);
    p.dim = static_cast<int>(u0.size());
    p.mesh = mesh;
    p.u0 = u0;
    p.field = std::move(field);
    p.exact_flow = std::move(exact_flow);
    p.coarse_flow = std::move(coarse_flow);
    p.coarse_order = coarse_order;
    p.domain_box = trajectory_box(serial_fine_solve(p));
    return p;
}

LipschitzConstants lipschitz_constants(const IVProblem& problem) {
    const double dt = problem.mesh.dt;
    const int m = problem.coarse_substeps;
    switch (problem.kind) {
    case ProblemKind::linear: {
        const Matrix& Q = problem.linear->Q;
        return {inf_norm(coarse_matrix(Q, dt, m)), inf_norm(matrix_exponential(Q, dt))};
    }
    case ProblemKind::scalar_nonlinear:
        // |f'(u)| = |u| / sqrt(u^2 + 2) < 1, so each Euler substep is (1 + h)-Lipschitz
        // and the exact flow is e^{dt}-Lipschitz.
        return {std::pow(1.0 + dt / m, m), std::exp(dt)};
    case ProblemKind::custom:
        break;
    }
    throw UnsupportedProblem("lipschitz_constants: no closed form for problem '" + problem.name + "'");
}

LipschitzConstants estimate_lipschitz(const IVProblem& problem, int samples, std::uint64_t seed) {
    if (samples < 1) throw std::invalid_argument("estimate_lipschitz: samples must be positive");
    const RngStream stream(seed);
    auto rng = stream.substream(0, 0, 0, DrawKind::constant_estimation);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double dt = problem.mesh.dt;
    const auto d = static_cast<Eigen::Index>(problem.domain_box.size());
    State u(d), v(d);
    LipschitzConstants best;
    for (int s = 0; s < samples; ++s) {
        for (Eigen::Index i = 0; i < d; ++i) {
            const auto& iv = problem.domain_box[static_cast<std::size_t>(i)];
            u(i) = iv.lo + (iv.hi - iv.lo) * unit(rng);
            v(i) = iv.lo + (iv.hi - iv.lo) * unit(rng);
        }
        const double gap = inf_norm(State(u - v));
        if (gap == 0.0) continue;
        best.coarse = std::max(best.coarse, inf_norm(State(problem.coarse_flow(u, dt) - problem.coarse_flow(v, dt))) / gap);
        best.fine = std::max(best.fine, inf_norm(State(problem.exact_flow(u, dt) - problem.exact_flow(v, dt))) / gap);
    }
    best.coarse *= 1.1;
    best.fine *= 1.1;
    return best;
}

std::vector<State> serial_fine_solve(const IVProblem& problem) {
    std::vector<State> traj;
    traj.reserve(static_cast<std::size_t>(problem.mesh.N) + 1);
    traj.push_back(problem.u0);
    for (int n = 0; n < problem.mesh.N; ++n) {
        State next = problem.exact_flow(traj.back(), problem.mesh.dt);
        if (!next.allFinite())
            throw NumericError("serial fine solve: non-finite state at node " + std::to_string(n + 1), std::nullopt, n + 1);
        traj.push_back(std::move(next));
    }
    return traj;
}

}  // namespace sparareal
