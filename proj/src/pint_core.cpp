#include "sparareal/pint_core.hpp"

#include "sparareal/errors.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace sparareal {

namespace {

using Row = std::vector<State>;

int resolve_k_max(const RunConfig& config) {
    if (!config.problem) throw std::invalid_argument("run config: no problem");
    const int N = config.problem->mesh.N;
    const int k_max = config.k_max == 0 ? N : config.k_max;
    if (k_max < 1 || k_max > N) throw std::invalid_argument("run config: K_max must lie in 1..N");
    if (config.eps && (std::isnan(*config.eps) || *config.eps < 0.0))
        throw std::invalid_argument("run config: eps must be non-negative");
    if (config.workers < 1) throw std::invalid_argument("run config: workers must be positive");
    return k_max;
}

void require_finite(const State& u, int k, int n) {
    if (!u.allFinite())
        throw NumericError("non-finite state at k = " + std::to_string(k) + ", n = " + std::to_string(n), k, n);
}

/// Zeroth coarse sweep U^0_{n+1} = G(U^0_n). Fills the coarse row as it goes.
Row coarse_sweep(const IVProblem& p, Row& coarse_row) {
    const int N = p.mesh.N;
    Row row(static_cast<std::size_t>(N) + 1);
    coarse_row.assign(static_cast<std::size_t>(N), State());
    row[0] = p.u0;
    for (int n = 0; n < N; ++n) {
        const auto i = static_cast<std::size_t>(n);
        coarse_row[i] = p.coarse(row[i]);
        row[i + 1] = coarse_row[i];
        require_finite(row[i + 1], 0, n + 1);
    }
    return row;
}

double max_increment(const Row& next, const Row& prev) {
    double m = 0.0;
    for (std::size_t n = 0; n < next.size(); ++n) m = std::max(m, inf_norm(State(next[n] - prev[n])));
    return m;
}

bool increment_converged(double increment, double eps) { return increment < eps || increment == 0.0; }

/// Returns true once the run should stop after producing iteration k.
bool finish_iteration(IterationHistory& h, int k, int N, int k_max, const std::optional<double>& eps) {
    // k = N takes precedence: the iterate is the fine solution whatever the increment.
    if (k == N) {
        h.converged_k = k;
        h.termination = Termination::exact;
        return true;
    }
    if (eps && increment_converged(h.increment[static_cast<std::size_t>(k)], *eps)) {
        h.converged_k = k;
        h.termination = Termination::tolerance;
        return true;
    }
    if (k == k_max) {
        h.termination = Termination::cap;
        return true;
    }
    return false;
}

}  // namespace

State pc_update(const State& g_new, const State& f_old, const State& g_old, const State& xi) {
    State out = g_new + f_old;
    out -= g_old;
    out += xi;
    return out;
}

int check_convergence(const IterationHistory& history, int k, double eps) {
    if (k < 1 || k > history.iterations()) throw std::invalid_argument("check_convergence: k out of range");
    const Row& cur = history.states[static_cast<std::size_t>(k)];
    const Row& prev = history.states[static_cast<std::size_t>(k) - 1];
    int I = -1;
    for (std::size_t n = 0; n < cur.size(); ++n) {
        if (!increment_converged(inf_norm(State(cur[n] - prev[n])), eps)) break;
        I = static_cast<int>(n);
    }
    return I;
}

void parallel_for(int workers, int begin, int end, const std::function<void(int)>& body) {
    const int count = end - begin;
    if (count <= 0) return;
    const int threads = std::min(std::max(workers, 1), count);
    if (threads == 1) {
        for (int i = begin; i < end; ++i) body(i);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            for (int i = begin + t; i < end; i += threads) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

IterationHistory parareal_solve(const RunConfig& config) {
    if (!config.perturbation.is_none()) throw std::invalid_argument("parareal_solve: perturbation must be none");
    const int k_max = resolve_k_max(config);
    const IVProblem& p = *config.problem;
    const int N = p.mesh.N;
    const State zero = State::Zero(p.dim);

    IterationHistory h;
    h.eps = config.eps;
    Row g_row;
    h.states.push_back(coarse_sweep(p, g_row));
    h.increment.push_back(std::numeric_limits<double>::infinity());

    for (int k = 0; k < k_max; ++k) {
        const Row& cur = h.states[static_cast<std::size_t>(k)];
        Row f_row(static_cast<std::size_t>(N));
        parallel_for(config.workers, k, N,
                     [&](int n) { f_row[static_cast<std::size_t>(n)] = p.fine(cur[static_cast<std::size_t>(n)]); });

        Row next(cur.begin(), cur.begin() + k + 1);
        next.resize(static_cast<std::size_t>(N) + 1);
        Row g_next = g_row;
        for (int n = k; n < N; ++n) {
            const auto i = static_cast<std::size_t>(n);
            g_next[i] = p.coarse(next[i]);
            next[i + 1] = pc_update(g_next[i], f_row[i], g_row[i], zero);
            require_finite(next[i + 1], k + 1, n + 1);
        }
        h.increment.push_back(max_increment(next, cur));
        h.states.push_back(std::move(next));
        g_row = std::move(g_next);
        if (finish_iteration(h, k + 1, N, k_max, config.eps)) break;
    }
    return h;
}

IterationHistory sparareal_solve(const RunConfig& config, const UpdateObserver& observer) {
    const int k_max = resolve_k_max(config);
    const IVProblem& p = *config.problem;
    const int N = p.mesh.N;
    const int d = p.dim;
    const double dt = p.mesh.dt;
    const PerturbationModel& model = config.perturbation;
    const RngStream stream(config.seed);
    const State zero = State::Zero(d);
    const auto sz = [](int i) { return static_cast<std::size_t>(i); };

    IterationHistory h;
    h.eps = config.eps;
    // coarse[k][n] = G(U^k_n); fine[k][n] = F(U^k_n), filled for n >= k.
    std::vector<Row> coarse(1);
    std::vector<Row> fine;
    h.states.push_back(coarse_sweep(p, coarse[0]));
    h.increment.push_back(std::numeric_limits<double>::infinity());

    for (int k = 0; k < k_max; ++k) {
        const Row& cur = h.states[sz(k)];
        const Row& g_cur = coarse[sz(k)];
        const bool noisy = k >= 1 && !model.is_none();
        const bool rules = noisy && model.is_sampling_rule();

        // Draws depend only on (seed, realization, k, n), so they can be taken in the fan-out.
        Row f_row(sz(N)), alpha(sz(N)), f_alpha(sz(N)), g_alpha(sz(N)), xi(sz(N), zero);
        parallel_for(config.workers, k, N, [&](int n) {
            const auto i = sz(n);
            f_row[i] = p.fine(cur[i]);
            if (!noisy || n == k) return;
            if (rules) {
                const State sigma = sigma_kn(g_cur[i - 1], coarse[sz(k - 1)][i - 1]);
                const State empty;
                const State& f_prev = model.rule_uses_fine() ? fine[sz(k - 1)][i - 1] : empty;
                alpha[i] = sample_alpha(model.rule, k, n, cur[i], f_prev, sigma, stream, config.realization);
                f_alpha[i] = p.fine(alpha[i]);
                g_alpha[i] = p.coarse(alpha[i]);
            } else {
                xi[i] = draw_state_independent(model, stream, config.realization, k, n, dt, d);
            }
        });

        if (rules) {
            for (int n = k + 1; n < N; ++n) {
                const auto i = sz(n);
                require_finite(alpha[i], k, n);
                xi[i] = xi_from_alpha(f_alpha[i], g_alpha[i], f_row[i], g_cur[i]);
            }
        }

        Row next(cur.begin(), cur.begin() + k + 1);
        next.resize(sz(N) + 1);
        Row g_next = g_cur;
        for (int n = k; n < N; ++n) {
            const auto i = sz(n);
            g_next[i] = p.coarse(next[i]);
            const bool use_alpha = rules && n > k;
            if (use_alpha)
                next[i + 1] = pc_update(g_next[i], f_alpha[i], g_alpha[i], zero);
            else
                next[i + 1] = pc_update(g_next[i], f_row[i], g_cur[i], xi[i]);
            require_finite(next[i + 1], k + 1, n + 1);
            if (observer) {
                UpdateRecord rec;
                rec.k = k;
                rec.n = n;
                rec.g_new = &g_next[i];
                rec.f_old = &f_row[i];
                rec.g_old = &g_cur[i];
                rec.xi = &xi[i];
                if (use_alpha) {
                    rec.alpha = &alpha[i];
                    rec.f_alpha = &f_alpha[i];
                    rec.g_alpha = &g_alpha[i];
                }
                rec.result = &next[i + 1];
                observer(rec);
            }
        }

        if (config.record_xi_moments) {
            std::vector<double> row(sz(N), 0.0);
            for (int n = k; n < N; ++n) {
                const double v = inf_norm(xi[sz(n)]);
                row[sz(n)] = v * v;
            }
            h.xi_sq.push_back(std::move(row));
        }

        h.increment.push_back(max_increment(next, cur));
        h.states.push_back(std::move(next));
        fine.push_back(std::move(f_row));
        coarse.push_back(std::move(g_next));
        if (finish_iteration(h, k + 1, N, k_max, config.eps)) break;
    }
    return h;
}

}  // namespace sparareal
