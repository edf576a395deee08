#include "sparareal/errors.hpp"
#include "sparareal/problems.hpp"

#include <doctest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <limits>
#include <random>

using namespace sparareal;

TEST_CASE("uniform mesh") {
    const Mesh m = Mesh::uniform(-1.0, 1.0, 20);
    CHECK(m.dt == doctest::Approx(0.1));
    REQUIRE(m.nodes.size() == 21);
    CHECK(m.nodes.front() == -1.0);
    CHECK(m.nodes.back() == 1.0);
    CHECK(m.nodes[10] == doctest::Approx(0.0));
    CHECK_THROWS_AS(Mesh::uniform(0.0, 1.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(Mesh::uniform(1.0, 1.0, 4), std::invalid_argument);
}

TEST_CASE("infinity norms") {
    Matrix M(2, 2);
    M << 1, -2, 3, 0.5;
    CHECK(inf_norm(M) == 3.5);
    State v(3);
    v << 1, -4, 2;
    CHECK(inf_norm(v) == 4.0);
}

TEST_CASE("dense matrix exponential agrees with an independent implementation") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> z;
    for (int d : {1, 2, 5, 12}) {
        for (double scale : {0.01, 1.0, 8.0}) {
            Matrix Q(d, d);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) Q(i, j) = scale * z(rng);
            const double dt = 0.3;
            const Matrix mine = matrix_exponential_dense(Q, dt);
            const Matrix oracle = Matrix(Q * dt).exp();
            CHECK(inf_norm(Matrix(mine - oracle)) <= 1e-12 * std::max(1.0, inf_norm(oracle)));
        }
    }
}

TEST_CASE("diagonal and dense exponentials agree on diagonal input") {
    Matrix Q = Matrix::Zero(3, 3);
    Q.diagonal() << -1.0, 0.5, -3.0;
    const Matrix a = matrix_exponential(Q, 0.25);
    const Matrix b = matrix_exponential_dense(Q, 0.25);
    CHECK(inf_norm(Matrix(a - b)) < 1e-14);
    CHECK(a(0, 0) == doctest::Approx(std::exp(-0.25)));
    CHECK(a(0, 1) == 0.0);
}

TEST_CASE("matrix exponential rejects non-finite and non-square input") {
    Matrix Q = Matrix::Zero(2, 2);
    Q(0, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(matrix_exponential(Q, 0.1), NumericError);
    CHECK_THROWS_AS(matrix_exponential(Matrix::Zero(2, 3), 0.1), std::invalid_argument);
}

TEST_CASE("linear builder lands in the requested regime") {
    for (double T : {2.0, 6.0}) {
        const IVProblem c = make_linear_problem(100, LinearMode::contractive, 3, 0.0, T, 20);
        const IVProblem e = make_linear_problem(100, LinearMode::expansive, 3, 0.0, T, 20);
        const double dt = c.mesh.dt;
        const double lgc = lipschitz_constants(c).coarse;
        const double lge = lipschitz_constants(e).coarse;
        CHECK(lgc * lgc * (1 + 2 * dt) < 1.0);
        CHECK(lge * lge * (1 + 2 * dt) >= 1.0);
        CHECK(c.u0.maxCoeff() <= 5.0);
        CHECK(c.u0.minCoeff() >= -5.0);
        CHECK(c.dim == 100);
    }
    CHECK_THROWS_AS(make_linear_problem(0, LinearMode::contractive, 1, 0, 1, 10), std::invalid_argument);
    CHECK_THROWS_AS(make_linear_problem(2, LinearMode::contractive, 1, 0, 1, 0), std::invalid_argument);
}

TEST_CASE("linear builder is deterministic in its seed") {
    const IVProblem a = make_linear_problem(10, LinearMode::contractive, 8, 0, 6, 20);
    const IVProblem b = make_linear_problem(10, LinearMode::contractive, 8, 0, 6, 20);
    const IVProblem c = make_linear_problem(10, LinearMode::contractive, 9, 0, 6, 20);
    CHECK((a.linear->Q.array() == b.linear->Q.array()).all());
    CHECK((a.u0.array() == b.u0.array()).all());
    CHECK(!(a.u0.array() == c.u0.array()).all());
}

TEST_CASE("linear flows") {
    Matrix Q(2, 2);
    Q << -1.0, 0.3, 0.2, -2.0;
    State u0(2);
    u0 << 1.0, -1.0;
    const Mesh mesh = Mesh::uniform(0.0, 1.0, 10);
    const IVProblem p = make_linear_problem(LinearSystemSpec{Q, MatrixStructure::dense}, u0, mesh);
    const State f = p.fine(u0);
    const State oracle = Matrix(Q * 0.1).exp() * u0;
    CHECK(inf_norm(State(f - oracle)) < 1e-14);
    const State g = p.coarse(u0);
    CHECK(inf_norm(State(g - (u0 + 0.1 * Q * u0))) < 1e-15);

    const IVProblem two = make_linear_problem(LinearSystemSpec{Q, MatrixStructure::dense}, u0, mesh, 2);
    const State g2 = two.coarse(u0);
    const State h = u0 + 0.05 * Q * u0;
    CHECK(inf_norm(State(g2 - (h + 0.05 * Q * h))) < 1e-15);

    CHECK_THROWS_AS(make_linear_problem(LinearSystemSpec{Q, MatrixStructure::diagonal}, u0, mesh),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_linear_problem(LinearSystemSpec{Q, MatrixStructure::dense}, State::Zero(3), mesh),
                    std::invalid_argument);
}

TEST_CASE("scalar problem reproduces its closed-form solution") {
    const IVProblem p = make_scalar_problem();
    CHECK(p.mesh.N == 20);
    CHECK(p.mesh.dt == doctest::Approx(0.1));
    const auto traj = serial_fine_solve(p);
    const double c = std::asinh(5.0 / std::sqrt(2.0));
    for (int n = 0; n <= 20; ++n) {
        const double t = p.mesh.nodes[static_cast<std::size_t>(n)];
        const double exact = std::sqrt(2.0) * std::sinh(t + 1.0 + c);
        CHECK(traj[static_cast<std::size_t>(n)](0) == doctest::Approx(exact).epsilon(1e-12));
    }
    State u(1);
    u << 5.0;
    CHECK(p.coarse(u)(0) == doctest::Approx(5.0 + 0.1 * std::sqrt(27.0)));
}

TEST_CASE("closed-form Lipschitz constants") {
    const IVProblem s = make_scalar_problem();
    const auto l = lipschitz_constants(s);
    CHECK(l.coarse == doctest::Approx(1.1));
    CHECK(l.fine == doctest::Approx(std::exp(0.1)));
    // Sampled quotients never exceed the closed form once the inflation is removed.
    const auto est = estimate_lipschitz(s, 5000);
    CHECK(est.coarse / 1.1 <= l.coarse + 1e-12);
    CHECK(est.fine / 1.1 <= l.fine + 1e-12);
    CHECK(est.coarse / 1.1 > 1.0);

    const IVProblem lin = make_linear_problem(20, LinearMode::contractive, 4, 0, 6, 20);
    const auto ll = lipschitz_constants(lin);
    const double dt = lin.mesh.dt;
    double expected = 0.0;
    for (int i = 0; i < 20; ++i) expected = std::max(expected, std::abs(1.0 + dt * lin.linear->Q(i, i)));
    CHECK(ll.coarse == doctest::Approx(expected));
}

TEST_CASE("custom problems have no closed-form constants") {
    const Mesh mesh = Mesh::uniform(0, 1, 4);
    const auto id = [](const State& u, double) { return u; };
    const IVProblem p = make_custom_problem(
        "identity", [](const State& u) { return State(State::Zero(u.size())); }, id, id, State::Ones(2), mesh);
    CHECK_THROWS_AS(lipschitz_constants(p), UnsupportedProblem);
    const auto est = estimate_lipschitz(p, 100);
    CHECK(est.coarse == doctest::Approx(1.1));
}

TEST_CASE("serial fine solve reports the first non-finite node") {
    const Mesh mesh = Mesh::uniform(0, 1, 5);
    int calls = 0;
    const auto fine = [&calls](const State& u, double) -> State {
        ++calls;
        return calls >= 3 ? State::Constant(u.size(), std::numeric_limits<double>::infinity()) : u;
    };
    IVProblem p;
    p.mesh = mesh;
    p.u0 = State::Ones(1);
    p.exact_flow = fine;
    try {
        serial_fine_solve(p);
        FAIL("expected a NumericError");
    } catch (const NumericError& e) {
        REQUIRE(e.node());
        CHECK(*e.node() == 3);
    }
}

TEST_CASE("domain box covers the reference trajectory") {
    const IVProblem p = make_scalar_problem();
    const auto traj = serial_fine_solve(p);
    REQUIRE(p.domain_box.size() == 1);
    for (const auto& u : traj) {
        CHECK(u(0) >= p.domain_box[0].lo);
        CHECK(u(0) <= p.domain_box[0].hi);
    }
}
