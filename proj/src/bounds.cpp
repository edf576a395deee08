#include "sparareal/bounds.hpp"

#include "sparareal/pint_core.hpp"
#include "sparareal/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <stdexcept>
#include <utility>

namespace sparareal {

namespace {

double log_choose(int n, int r) {
    return std::lgamma(n + 1.0) - std::lgamma(r + 1.0) - std::lgamma(n - r + 1.0);
}

/// exp(log_coef) * base^e, with base^0 = 1 even for base = 0.
double scaled_power(double log_coef, double base, int e) {
    if (e == 0) return std::exp(log_coef);
    if (base == 0.0) return 0.0;
    return std::exp(log_coef + e * std::log(base));
}

double pairwise_sum(const double* v, std::size_t count) {
    if (count == 0) return 0.0;
    if (count <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < count; ++i) s += v[i];
        return s;
    }
    const std::size_t half = count / 2;
    return pairwise_sum(v, half) + pairwise_sum(v + half, count - half);
}

double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()); }

/// sum_{l=0}^{L} C(l + j, l) A^j B^l.
double binomial_series(int j, int L, double A, double B) {
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(std::max(L + 1, 0)));
    const double log_a = j == 0 ? 0.0 : (A == 0.0 ? -INFINITY : j * std::log(A));
    if (std::isinf(log_a)) return 0.0;
    for (int l = 0; l <= L; ++l) terms.push_back(scaled_power(log_choose(l + j, l) + log_a, B, l));
    return pairwise_sum(terms);
}

double geometric_sum(double B, int count) {
    std::vector<double> terms;
    double t = 1.0;
    for (int i = 0; i < count; ++i) {
        terms.push_back(t);
        t *= B;
    }
    return pairwise_sum(terms);
}

void require_lattice(int K, int N) {
    if (K < 0 || N < 0) throw std::invalid_argument("bound lattice: K and N must be non-negative");
}

}  // namespace

void BoundConstants::derive() {
    const double h = std::pow(dt, 2 * p + 2);
    const double c1h = C1 * C1 * h;
    const double lg2 = L_G * L_G;
    const double lf2 = L_F * L_F;
    if (centred) {
        A = c1h * (1.0 + 1.0 / dt);
        B = lg2 * (1.0 + dt);
        Lambda = q ? C2 * C2 * std::pow(dt, 2.0 * *q + 1.0) : 0.0;
    } else {
        A = c1h * (2.0 + 1.0 / dt);
        B = lg2 * (1.0 + 2.0 * dt);
        Lambda = q ? C2 * C2 * std::pow(dt, 2.0 * *q + 1.0) * (2.0 + 1.0 / dt) : 0.0;
    }
    D = A * e0_hat;

    const bool consistent = derivation == RuleDerivation::norm_consistent;
    const double w = consistent ? 2.0 + 1.0 / dt : 1.0;
    const double m = consistent ? draw_moment : 1.0;
    Lambda1_24 = w * c1h * m * lg2 * (1.0 + 1.0 / dt);
    Lambda2_24 = w * c1h * m * lg2 * (1.0 + dt);
    Lambda1_13 = w * 2.0 * c1h * m * lg2 * (1.0 + 1.0 / dt);
    Lambda2_13 = w * 2.0 * c1h * (m * lg2 * (1.0 + dt) + 2.0 * lf2);
    Lambda3_13 = w * 4.0 * c1h;
}

std::string BoundConstants::fingerprint() const {
    const double fields[] = {C1,     C2,         L_G,        L_F,        static_cast<double>(p),
                             q ? *q : NAN,       dt,         e0_hat,     e1_hat,
                             centred ? 1.0 : 0.0, derivation == RuleDerivation::published ? 0.0 : 1.0,
                             draw_moment, A, B, Lambda, D, Lambda1_24, Lambda2_24, Lambda1_13, Lambda2_13, Lambda3_13};
    std::uint64_t h = 0x243F6A8885A308D3ULL;
    for (double f : fields) {
        std::uint64_t bits = 0;
        std::memcpy(&bits, &f, sizeof bits);
        h = mix64(h ^ bits);
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string to_string(BoundKind kind) {
    switch (kind) {
    case BoundKind::superlinear: return "superlinear";
    case BoundKind::linear: return "linear";
    case BoundKind::rule24: return "rule24";
    case BoundKind::rule13: return "rule13";
    case BoundKind::numeric_recursion_24: return "numeric_recursion_24";
    case BoundKind::numeric_recursion_13: return "numeric_recursion_13";
    case BoundKind::k1: return "k1";
    }
    return "unknown";
}

RuleVariant rule_variant(int rule) {
    if (rule == 1 || rule == 3) return RuleVariant::rule13;
    if (rule == 2 || rule == 4) return RuleVariant::rule24;
    throw std::invalid_argument("rule_variant: rule must be in 1..4");
}

std::optional<double> BoundCurve::at(int k, std::optional<int> n) const {
    for (const auto& pt : points)
        if (pt.k == k && pt.n == n) return pt.value;
    return std::nullopt;
}

double superlinear_bound(const BoundConstants& c, int k, int n) {
    if (k < 2 || n <= k) throw std::invalid_argument("superlinear_bound: requires 2 <= k < n");
    const double head = c.D == 0.0 ? 0.0 : c.D * binomial_series(k - 1, n - k, c.A, c.B);
    double tail = 0.0;
    if (c.Lambda != 0.0) {
        std::vector<double> rows;
        for (int j = 0; j <= k - 2; ++j) rows.push_back(binomial_series(j, n - j - 1, c.A, c.B));
        tail = c.Lambda * pairwise_sum(rows);
    }
    return head + tail;
}

std::optional<double> linear_bound(const BoundConstants& c, int k) {
    if (k < 2) throw std::invalid_argument("linear_bound: requires k >= 2");
    if (!(c.B < 1.0)) return std::nullopt;
    const double r = c.A / (1.0 - c.B);
    return c.e1_hat * std::pow(r, k - 1) + c.Lambda / (1.0 - c.B) * geometric_sum(r, k - 1);
}

double k1_bound(const BoundConstants& c, int n) {
    if (n < 1) throw std::invalid_argument("k1_bound: requires n >= 1");
    return c.e0_hat * c.A * geometric_sum(c.B, n - 1);
}

std::optional<double> rule_rate(const BoundConstants& c, RuleVariant variant) {
    if (!(c.B < 1.0)) return std::nullopt;
    const double S = variant == RuleVariant::rule24 ? c.A + c.Lambda1_24 : c.A + c.Lambda1_13 + c.Lambda3_13;
    const double L2 = variant == RuleVariant::rule24 ? c.Lambda2_24 : c.Lambda2_13;
    const double omb = 1.0 - c.B;
    return (S + std::sqrt(S * S + 4.0 * L2 * omb)) / (2.0 * omb);
}

std::optional<double> rule_bound(const BoundConstants& c, RuleVariant variant, int k) {
    if (k < 2) throw std::invalid_argument("rule_bound: requires k >= 2");
    const auto rate = rule_rate(c, variant);
    if (!rate) return std::nullopt;
    return c.e0_hat * std::pow(*rate, k);
}

BoundCurve superlinear_curve(const BoundConstants& c, int K, int N) {
    require_lattice(K, N);
    BoundCurve curve{BoundKind::superlinear, {}};
    for (int k = 2; k <= K; ++k)
        for (int n = k + 1; n <= N; ++n) curve.points.push_back({k, n, superlinear_bound(c, k, n)});
    return curve;
}

BoundCurve linear_curve(const BoundConstants& c, int K) {
    BoundCurve curve{BoundKind::linear, {}};
    for (int k = 2; k <= K; ++k) curve.points.push_back({k, std::nullopt, linear_bound(c, k)});
    return curve;
}

BoundCurve rule_curve(const BoundConstants& c, RuleVariant variant, int K) {
    BoundCurve curve{variant == RuleVariant::rule24 ? BoundKind::rule24 : BoundKind::rule13, {}};
    for (int k = 2; k <= K; ++k) curve.points.push_back({k, std::nullopt, rule_bound(c, variant, k)});
    return curve;
}

BoundCurve k1_curve(const BoundConstants& c, int N) {
    BoundCurve curve{BoundKind::k1, {}};
    for (int n = 1; n <= N; ++n) curve.points.push_back({1, n, k1_bound(c, n)});
    return curve;
}

std::vector<std::vector<double>> solve_recursion_superlinear(const BoundConstants& c, int K, int N,
                                                             RecursionSeed seed) {
    require_lattice(K, N);
    std::vector<std::vector<double>> e(static_cast<std::size_t>(K) + 1, std::vector<double>(static_cast<std::size_t>(N) + 1, 0.0));
    for (int n = 1; n <= N; ++n) e[0][static_cast<std::size_t>(n)] = c.e0_hat;
    if (K < 1) return e;
    for (int n = 1; n <= N; ++n) {
        const auto i = static_cast<std::size_t>(n);
        e[1][i] = seed == RecursionSeed::closed_form ? c.D * geometric_sum(c.B, n) : k1_bound(c, n);
    }
    if (seed == RecursionSeed::exact_k1) e[1][1] = 0.0;
    for (int k = 1; k < K; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        for (int n = 0; n < N; ++n) {
            const auto i = static_cast<std::size_t>(n);
            double v = c.A * e[kk][i] + c.B * e[kk + 1][i] + c.Lambda;
            if (seed == RecursionSeed::exact_k1 && n + 1 <= k + 1) v = 0.0;
            e[kk + 1][i + 1] = v;
        }
    }
    return e;
}

std::vector<std::vector<double>> solve_recursion_rules(const BoundConstants& c, RuleVariant variant,
                                                       const std::vector<double>& e0_row,
                                                       const std::vector<double>& e1_row, int K) {
    if (e0_row.size() != e1_row.size() || e0_row.empty())
        throw std::invalid_argument("solve_recursion_rules: rows must have equal, non-zero length");
    if (K < 1) throw std::invalid_argument("solve_recursion_rules: K must be at least 1");
    const std::size_t len = e0_row.size();
    const double a = variant == RuleVariant::rule24 ? c.A : c.A + c.Lambda3_13;
    const double l1 = variant == RuleVariant::rule24 ? c.Lambda1_24 : c.Lambda1_13;
    const double l2 = variant == RuleVariant::rule24 ? c.Lambda2_24 : c.Lambda2_13;

    std::vector<std::vector<double>> e(static_cast<std::size_t>(K) + 1, std::vector<double>(len, 0.0));
    e[0] = e0_row;
    e[1] = e1_row;
    e[0][0] = 0.0;
    e[1][0] = 0.0;
    for (std::size_t k = 1; k < static_cast<std::size_t>(K); ++k) {
        for (std::size_t n = 0; n + 1 < len; ++n) {
            double v = a * e[k][n] + c.B * e[k + 1][n];
            if (n >= 1) v += l1 * e[k][n - 1] + l2 * e[k - 1][n - 1];
            e[k + 1][n + 1] = v;
        }
    }
    return e;
}

BoundCurve lattice_curve(BoundKind kind, const std::vector<std::vector<double>>& values) {
    BoundCurve curve{kind, {}};
    for (std::size_t k = 2; k < values.size(); ++k)
        for (std::size_t n = k + 1; n < values[k].size(); ++n)
            curve.points.push_back({static_cast<int>(k), static_cast<int>(n), values[k][n]});
    return curve;
}

double estimate_C1(const IVProblem& problem, int samples, std::uint64_t seed) {
    const double dt = problem.mesh.dt;
    const double scale = std::pow(dt, problem.coarse_order + 1);
    if (problem.kind == ProblemKind::linear && problem.linear) {
        const Matrix& Q = problem.linear->Q;
        const Eigen::Index d = Q.rows();
        const Matrix step = Matrix::Identity(d, d) + (dt / problem.coarse_substeps) * Q;
        Matrix G = Matrix::Identity(d, d);
        for (int s = 0; s < problem.coarse_substeps; ++s) G = step * G;
        return inf_norm(Matrix(matrix_exponential(Q, dt) - G)) / scale;
    }
    if (samples < 1) throw std::invalid_argument("estimate_C1: samples must be positive");
    for (const auto& iv : problem.domain_box)
        if (!(iv.hi > iv.lo)) throw std::invalid_argument("estimate_C1: domain box has zero volume");

    const RngStream stream(seed);
    auto rng = stream.substream(0, 0, 1, DrawKind::constant_estimation);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto d = static_cast<Eigen::Index>(problem.domain_box.size());
    const auto defect = [&](const State& u) -> State { return problem.fine(u) - problem.coarse(u); };
    State u(d), v(d);
    double best = 0.0;
    for (int s = 0; s < samples; ++s) {
        for (Eigen::Index i = 0; i < d; ++i) {
            const auto& iv = problem.domain_box[static_cast<std::size_t>(i)];
            u(i) = iv.lo + (iv.hi - iv.lo) * unit(rng);
            v(i) = iv.lo + (iv.hi - iv.lo) * unit(rng);
        }
        const double gap = inf_norm(State(u - v));
        if (gap == 0.0) continue;
        best = std::max(best, inf_norm(State(defect(u) - defect(v))) / (scale * gap));
    }
    return 1.1 * best;
}

ProblemConstants problem_constants(const IVProblem& problem) {
    ProblemConstants pc;
    pc.C1 = estimate_C1(problem);
    pc.C1_exact = problem.kind == ProblemKind::linear;
    if (problem.kind == ProblemKind::custom) {
        const auto l = estimate_lipschitz(problem);
        pc.L_G = l.coarse;
        pc.L_F = l.fine;
        pc.lipschitz_exact = false;
    } else {
        const auto l = lipschitz_constants(problem);
        pc.L_G = l.coarse;
        pc.L_F = l.fine;
        pc.lipschitz_exact = true;
    }
    return pc;
}

EmpiricalErrors empirical_e_hats(const IVProblem& problem) {
    RunConfig cfg;
    cfg.problem = std::shared_ptr<const IVProblem>(&problem, [](const IVProblem*) {});
    cfg.k_max = 1;
    cfg.eps = std::nullopt;
    const IterationHistory h = parareal_solve(cfg);
    const auto exact = serial_fine_solve(problem);

    EmpiricalErrors out;
    for (int k = 0; k <= 1; ++k) {
        auto& row = k == 0 ? out.e0_row : out.e1_row;
        const auto& states = h.states[static_cast<std::size_t>(k)];
        row.resize(exact.size());
        for (std::size_t n = 0; n < exact.size(); ++n) {
            const double err = inf_norm(State(states[n] - exact[n]));
            row[n] = err * err;
        }
    }
    out.e0_hat = *std::max_element(out.e0_row.begin(), out.e0_row.end());
    out.e1_hat = *std::max_element(out.e1_row.begin(), out.e1_row.end());
    return out;
}

namespace {

double cached_c2(int d, NoiseFamily family) {
    static std::mutex mutex;
    static std::map<std::pair<int, int>, double> cache;
    const std::pair<int, int> key{d, static_cast<int>(family)};
    {
        std::lock_guard<std::mutex> lock(mutex);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    const double value = estimate_c2(d, family);
    std::lock_guard<std::mutex> lock(mutex);
    cache.emplace(key, value);
    return value;
}

}  // namespace

BoundConstants make_bound_constants(const IVProblem& problem, const PerturbationModel& model, bool centred,
                                    RuleDerivation derivation) {
    const ProblemConstants pc = problem_constants(problem);
    const EmpiricalErrors errs = empirical_e_hats(problem);
    BoundConstants c;
    c.C1 = pc.C1;
    c.L_G = pc.L_G;
    c.L_F = pc.L_F;
    c.p = problem.coarse_order;
    c.dt = problem.mesh.dt;
    c.e0_hat = errs.e0_hat;
    c.e1_hat = errs.e1_hat;
    c.centred = centred;
    c.derivation = derivation;
    if (model.is_state_independent()) {
        c.q = model.q;
        c.C2 = cached_c2(problem.dim, model.family);
    }
    const bool uniform_rule = model.is_sampling_rule() && !model.rule_is_gaussian();
    c.draw_moment = expected_max_square(problem.dim, uniform_rule ? NoiseFamily::uniform : NoiseFamily::gaussian);
    c.derive();
    return c;
}

}  // namespace sparareal
