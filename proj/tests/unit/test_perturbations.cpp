#include "sparareal/perturbations.hpp"
#include "sparareal/problems.hpp"

#include <doctest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <random>

using namespace sparareal;

namespace {

const auto gaussian = [](double q) { return PerturbationModel::state_independent(NoiseFamily::gaussian, q); };
const auto uniform = [](double q) { return PerturbationModel::state_independent(NoiseFamily::uniform, q); };

}  // namespace

TEST_CASE("model construction and labels") {
    CHECK(PerturbationModel::none().label() == "none");
    CHECK(gaussian(5).label() == "gaussian-q5");
    CHECK(uniform(0.5).label() == "uniform-q0.5");
    CHECK(PerturbationModel::sampling_rule(3).label() == "rule3");
    for (const auto& m : {PerturbationModel::none(), gaussian(0), gaussian(25), uniform(10), PerturbationModel::sampling_rule(1),
                          PerturbationModel::sampling_rule(4)})
        CHECK(parse_perturbation_label(m.label()) == m);
    CHECK_THROWS_AS(PerturbationModel::sampling_rule(0), std::invalid_argument);
    CHECK_THROWS_AS(PerturbationModel::sampling_rule(5), std::invalid_argument);
    CHECK_THROWS_AS(gaussian(INFINITY), std::invalid_argument);
    CHECK_THROWS_AS(parse_perturbation_label("rule7"), std::invalid_argument);
    CHECK_THROWS_AS(parse_perturbation_label("gaussian-qx"), std::invalid_argument);
    CHECK(PerturbationModel::sampling_rule(1).rule_uses_fine());
    CHECK(!PerturbationModel::sampling_rule(2).rule_uses_fine());
    CHECK(PerturbationModel::sampling_rule(2).rule_is_gaussian());
    CHECK(!PerturbationModel::sampling_rule(4).rule_is_gaussian());
}

TEST_CASE("state-independent draws have variance dt^(2q+1)") {
    const RngStream s(1);
    const double dt = 0.25;
    for (const auto& model : {gaussian(0), uniform(0)}) {
        double sq = 0.0;
        const int draws = 1000000;
        for (int i = 0; i < draws; ++i) {
            const double x = draw_state_independent(model, s, 0, 1, 2 + i, dt, 1)(0);
            sq += x * x;
        }
        CHECK(sq / draws == doctest::Approx(0.25).epsilon(0.01));
    }
}

TEST_CASE("uniform draws respect their support") {
    const RngStream s(2);
    const double dt = 0.3, q = 2.0;
    const double half = std::sqrt(3.0) * std::pow(dt, q + 0.5);
    for (int n = 2; n < 2000; ++n) CHECK(inf_norm(draw_state_independent(uniform(q), s, 0, 1, n, dt, 10)) <= half);
}

TEST_CASE("no noise draws zeros") {
    const RngStream s(3);
    CHECK(inf_norm(draw_state_independent(PerturbationModel::none(), s, 0, 1, 2, 0.1, 4)) == 0.0);
}

TEST_CASE("draws depend only on their key") {
    const RngStream s(4);
    const State a = draw_state_independent(gaussian(1), s, 5, 2, 7, 0.2, 3);
    draw_state_independent(gaussian(1), s, 5, 2, 8, 0.2, 3);
    const State b = draw_state_independent(gaussian(1), s, 5, 2, 7, 0.2, 3);
    CHECK((a.array() == b.array()).all());
    const State c = draw_state_independent(gaussian(1), s, 6, 2, 7, 0.2, 3);
    CHECK(!(a.array() == c.array()).all());
}

TEST_CASE("expected max square: closed form and quadrature against sampling") {
    CHECK(expected_max_square(1, NoiseFamily::uniform) == doctest::Approx(1.0));
    CHECK(expected_max_square(1, NoiseFamily::gaussian) == doctest::Approx(1.0).epsilon(1e-10));
    std::mt19937_64 rng(77);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> w(-std::sqrt(3.0), std::sqrt(3.0));
    for (int d : {2, 10, 100}) {
        const int draws = 100000;
        double sg = 0.0, su = 0.0;
        for (int s = 0; s < draws; ++s) {
            double mg = 0.0, mu = 0.0;
            for (int i = 0; i < d; ++i) {
                mg = std::max(mg, std::abs(z(rng)));
                mu = std::max(mu, std::abs(w(rng)));
            }
            sg += mg * mg;
            su += mu * mu;
        }
        CHECK(expected_max_square(d, NoiseFamily::gaussian) == doctest::Approx(sg / draws).epsilon(0.02));
        CHECK(expected_max_square(d, NoiseFamily::uniform) == doctest::Approx(su / draws).epsilon(0.02));
    }
    // The maximum of squares grows like 2 ln d.
    CHECK(expected_max_square(1000, NoiseFamily::gaussian) < 2.0 * std::log(1000.0) + 2.0);
    CHECK(expected_max_square(1000, NoiseFamily::gaussian) > expected_max_square(100, NoiseFamily::gaussian));
    CHECK(expected_max_square(100, NoiseFamily::uniform) <= 3.0);
}

TEST_CASE("C2 bounds the absolute moments of the draws") {
    const double dt = 0.3, q = 1.0;
    const double s = std::pow(dt, q + 0.5);
    for (const auto& [d, family] : {std::pair{1, NoiseFamily::gaussian}, std::pair{100, NoiseFamily::gaussian},
                                     std::pair{100, NoiseFamily::uniform}}) {
        const double c2 = estimate_c2(d, family);
        const RngStream stream(99);
        const PerturbationModel model = PerturbationModel::state_independent(family, q);
        const int draws = family == NoiseFamily::gaussian && d > 1 ? 200000 : 1000000;
        double m[3] = {0, 0, 0}, m2[3] = {0, 0, 0};
        for (int i = 0; i < draws; ++i) {
            const double x = inf_norm(draw_state_independent(model, stream, 0, 1, 2 + i, dt, d));
            const double p[3] = {x, x * x, x * x * x * x};
            for (int r = 0; r < 3; ++r) {
                m[r] += p[r];
                m2[r] += p[r] * p[r];
            }
        }
        const int order[3] = {1, 2, 4};
        for (int r = 0; r < 3; ++r) {
            const double mean = m[r] / draws;
            const double se = std::sqrt(std::max(0.0, m2[r] / draws - mean * mean) / draws);
            CHECK(mean - 3.0 * se <= std::pow(c2 * s, order[r]));
        }
    }
    CHECK(estimate_c2(100, NoiseFamily::uniform) == doctest::Approx(std::sqrt(3.0)));
}

TEST_CASE("sigma from coarse values") {
    const IVProblem p = make_scalar_problem();
    State a(1), b(1);
    a << 5.0;
    b << 4.0;
    // Two forward-Euler steps by hand: (5 + 0.1 sqrt 27) - (4 + 0.1 sqrt 18).
    const double by_hand = 1.0 + 0.1 * (std::sqrt(27.0) - std::sqrt(18.0));
    CHECK(sigma_kn(p.coarse(a), p.coarse(b))(0) == doctest::Approx(by_hand).epsilon(1e-12));
    CHECK(inf_norm(sigma_kn(p.coarse(a), p.coarse(a))) == 0.0);

    std::vector<std::vector<State>> states = {{a, b}, {b, a}};
    const State sig = sigma_kn(states, 1, 1, p.coarse_flow, p.mesh.dt);
    CHECK(sig(0) == doctest::Approx(by_hand).epsilon(1e-12));
    CHECK(sig.minCoeff() >= 0.0);
    CHECK_THROWS_AS(sigma_kn(states, 0, 1, p.coarse_flow, p.mesh.dt), std::logic_error);
}

TEST_CASE("degenerate sampling distributions") {
    const RngStream s(5);
    State u(2), f(2);
    u << 1.0, 2.0;
    f << -3.0, 4.0;
    const State zero = State::Zero(2);
    CHECK((sample_alpha(2, 1, 2, u, f, zero, s, 0).array() == u.array()).all());
    CHECK((sample_alpha(4, 1, 2, u, f, zero, s, 0).array() == u.array()).all());
    CHECK((sample_alpha(1, 1, 2, u, f, zero, s, 0).array() == f.array()).all());
    CHECK((sample_alpha(3, 1, 2, u, f, zero, s, 0).array() == f.array()).all());
    CHECK_THROWS_AS(sample_alpha(2, 0, 2, u, f, zero, s, 0), std::logic_error);
    CHECK_THROWS_AS(sample_alpha(2, 2, 2, u, f, zero, s, 0), std::logic_error);
}

TEST_CASE("paired rules share means and variances") {
    const RngStream s(6);
    State u(2), f(2), sigma(2);
    u << 1.0, -2.0;
    f << 0.5, 3.0;
    sigma << 0.3, 2.0;
    const int draws = 100000;
    for (const auto& [ga, un, centre] : {std::tuple{2, 4, u}, std::tuple{1, 3, f}}) {
        for (int rule : {ga, un}) {
            State sum = State::Zero(2), sq = State::Zero(2);
            for (int i = 0; i < draws; ++i) {
                const State a = sample_alpha(rule, 1, 2 + i, u, f, sigma, s, 0);
                sum += a;
                sq += a.cwiseProduct(a);
            }
            const State mean = sum / draws;
            const State var = sq / draws - mean.cwiseProduct(mean);
            for (int c = 0; c < 2; ++c) {
                CHECK(std::abs(mean(c) - centre(c)) <= 3.0 * sigma(c) / std::sqrt(double(draws)));
                CHECK(var(c) == doctest::Approx(sigma(c) * sigma(c)).epsilon(0.02));
            }
        }
    }
}

TEST_CASE("xi from alpha") {
    Matrix Q(2, 2);
    Q << -1.0, 0.4, 0.1, -0.5;
    State u0(2);
    u0 << 1.0, 2.0;
    const IVProblem p = make_linear_problem(LinearSystemSpec{Q, MatrixStructure::dense}, u0, Mesh::uniform(0, 2, 10));
    const double dt = p.mesh.dt;
    State alpha(2), u(2);
    alpha << 0.3, -0.7;
    u << 1.1, 0.2;

    CHECK(inf_norm(xi_from_alpha(u, u, p.exact_flow, p.coarse_flow, dt)) == 0.0);

    // Linear flows: xi = (exp(Q dt) - I - Q dt)(alpha - u).
    const Matrix M = Matrix(Q * dt).exp() - Matrix::Identity(2, 2) - Q * dt;
    const State direct = xi_from_alpha(alpha, u, p.exact_flow, p.coarse_flow, dt);
    CHECK(inf_norm(State(direct - M * (alpha - u))) <= 1e-12);

    const State values = xi_from_alpha(p.fine(alpha), p.coarse(alpha), p.fine(u), p.coarse(u));
    CHECK((values.array() == direct.array()).all());
}

TEST_CASE("moment tracker") {
    XiMomentTracker t;
    t.add({{0, 0}, {0, 0}});
    t.add({{0, 0}, {0, 0}});
    CHECK(t.max_over_n() == std::vector<double>{0, 0});

    XiMomentTracker a, b, all;
    const std::vector<std::vector<double>> r1 = {{1, 3}, {2, 0}}, r2 = {{3, 1}, {4, 0}}, r3 = {{0, 0}, {0, 6}};
    a.add(r1);
    a.add(r2);
    b.add(r3);
    a.merge(b);
    all.add(r1);
    all.add(r2);
    all.add(r3);
    CHECK(a.realizations() == 3);
    CHECK(a.mean() == all.mean());
    const auto mx = all.max_over_n();
    CHECK(mx[0] == doctest::Approx(4.0 / 3.0));
    CHECK(mx[1] == doctest::Approx(2.0));
}
