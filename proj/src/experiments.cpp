#include "sparareal/experiments.hpp"

#include "sparareal/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sparareal {

namespace {

using Table = std::vector<std::vector<double>>;

template <class T, class Extract>
std::vector<std::optional<T>> run_realizations(const MCConfig& mc, const PerturbationModel& model, bool record_xi,
                                               Extract extract, std::vector<FailedRealization>& failed) {
    std::vector<std::optional<T>> out(static_cast<std::size_t>(mc.R));
    std::vector<std::string> errors(static_cast<std::size_t>(mc.R));
    parallel_for(mc.workers, 0, mc.R, [&](int r) {
        RunConfig cfg = mc.run;
        cfg.perturbation = model;
        cfg.realization = static_cast<std::uint64_t>(r);
        cfg.eps = std::nullopt;
        cfg.record_xi_moments = record_xi;
        cfg.workers = 1;
        try {
            out[static_cast<std::size_t>(r)] = extract(sparareal_solve(cfg));
        } catch (const NumericError& e) {
            errors[static_cast<std::size_t>(r)] = e.what();
        }
    });
    for (int r = 0; r < mc.R; ++r) {
        const auto& msg = errors[static_cast<std::size_t>(r)];
        if (msg.empty()) continue;
        if (!mc.skip_failed)
            throw NumericError("realization " + std::to_string(r) + " (seed " + std::to_string(mc.run.seed) +
                                   ", " + model.label() + ") aborted: " + msg,
                               std::nullopt, std::nullopt);
        failed.push_back({static_cast<std::uint64_t>(r), mc.run.seed, msg});
    }
    return out;
}

/// Mean and standard error of each cell, summed in realization order.
void cell_statistics(const std::vector<std::optional<Table>>& samples, Table& mean, Table& se, int& count) {
    count = 0;
    for (const auto& s : samples) {
        if (!s) continue;
        if (count == 0) {
            mean.assign(s->size(), {});
            se.assign(s->size(), {});
            for (std::size_t k = 0; k < s->size(); ++k) {
                mean[k].assign((*s)[k].size(), 0.0);
                se[k].assign((*s)[k].size(), 0.0);
            }
        }
        ++count;
        for (std::size_t k = 0; k < s->size(); ++k)
            for (std::size_t n = 0; n < (*s)[k].size(); ++n) mean[k][n] += (*s)[k][n];
    }
    if (count == 0) return;
    for (auto& row : mean)
        for (double& v : row) v /= count;
    if (count < 2) return;
    for (const auto& s : samples) {
        if (!s) continue;
        for (std::size_t k = 0; k < s->size(); ++k)
            for (std::size_t n = 0; n < (*s)[k].size(); ++n) {
                const double dev = (*s)[k][n] - mean[k][n];
                se[k][n] += dev * dev;
            }
    }
    for (auto& row : se)
        for (double& v : row) v = std::sqrt(v / (count - 1) / count);
}

int effective_k_max(const RunConfig& run) {
    if (!run.problem) throw std::invalid_argument("mc config: no problem");
    return run.k_max == 0 ? run.problem->mesh.N : run.k_max;
}

}  // namespace

std::string to_string(Quantity q) {
    switch (q) {
    case Quantity::error_table: return "error_table";
    case Quantity::moments: return "moments";
    case Quantity::tolerance_sweep: return "tolerance_sweep";
    case Quantity::comparison: return "comparison";
    }
    return "unknown";
}

Quantity parse_quantity(const std::string& name) {
    for (Quantity q : {Quantity::error_table, Quantity::moments, Quantity::tolerance_sweep, Quantity::comparison})
        if (to_string(q) == name) return q;
    throw std::invalid_argument("unknown quantity '" + name + "'");
}

void MCConfig::validate() const {
    if (!run.problem) throw std::invalid_argument("mc config: no problem");
    if (R < 1) throw std::invalid_argument("mc config: R must be at least 1");
    if (workers < 1) throw std::invalid_argument("mc config: workers must be positive");
    const int N = run.problem->mesh.N;
    const int k_max = effective_k_max(run);
    if (k_max < 1 || k_max > N) throw std::invalid_argument("mc config: K_max must lie in 1..N");
    for (std::size_t i = 0; i < eps_grid.size(); ++i) {
        if (std::isnan(eps_grid[i]) || eps_grid[i] < 0.0) throw std::invalid_argument("mc config: eps must be non-negative");
        if (i > 0 && !(eps_grid[i] < eps_grid[i - 1]))
            throw std::invalid_argument("mc config: eps_grid must be strictly decreasing");
    }
    if (quantities.count(Quantity::tolerance_sweep) && eps_grid.empty())
        throw std::invalid_argument("mc config: tolerance sweep needs a non-empty eps_grid");
}

std::vector<PerturbationModel> MCConfig::comparison_models() const {
    return models.empty() ? std::vector<PerturbationModel>{run.perturbation} : models;
}

ErrorTable mc_error_table(const MCConfig& mc) {
    mc.validate();
    const IVProblem& p = *mc.run.problem;
    const auto exact = serial_fine_solve(p);

    ErrorTable t;
    t.model = mc.run.perturbation;
    const auto samples = run_realizations<Table>(
        mc, mc.run.perturbation, false,
        [&](const IterationHistory& h) {
            Table sq(h.states.size(), std::vector<double>(exact.size(), 0.0));
            for (std::size_t k = 0; k < h.states.size(); ++k)
                for (std::size_t n = 0; n < exact.size(); ++n) {
                    const double e = inf_norm(State(h.states[k][n] - exact[n]));
                    sq[k][n] = e * e;
                }
            return sq;
        },
        t.failed);
    cell_statistics(samples, t.raw_mse, t.stderr_, t.R);
    if (t.R == 0) throw NumericError("every realization aborted", std::nullopt, std::nullopt);

    t.mse = t.raw_mse;
    const std::size_t K = t.mse.size() - 1;
    t.ehat.assign(K + 1, 0.0);
    t.ehat_stderr.assign(K + 1, 0.0);
    for (std::size_t k = 0; k <= K; ++k) {
        for (std::size_t n = 0; n <= std::min(k, exact.size() - 1); ++n) {
            t.mse[k][n] = 0.0;
            t.stderr_[k][n] = 0.0;
        }
        for (std::size_t n = 0; n < exact.size(); ++n)
            if (t.mse[k][n] > t.ehat[k]) {
                t.ehat[k] = t.mse[k][n];
                t.ehat_stderr[k] = t.stderr_[k][n];
            }
    }
    t.exact_norm.reserve(exact.size());
    for (const auto& u : exact) t.exact_norm.push_back(inf_norm(u));
    return t;
}

std::vector<MomentTrace> mc_moments(const MCConfig& mc) {
    mc.validate();
    const IVProblem& p = *mc.run.problem;
    std::vector<MomentTrace> out;
    for (const auto& model : mc.comparison_models()) {
        std::vector<FailedRealization> failed;
        const auto samples = run_realizations<Table>(
            mc, model, true, [](const IterationHistory& h) { return h.xi_sq; }, failed);
        Table mean, se;
        int count = 0;
        cell_statistics(samples, mean, se, count);
        MomentTrace tr;
        tr.model = model;
        tr.value.assign(mean.size(), 0.0);
        tr.stderr_.assign(mean.size(), 0.0);
        for (std::size_t k = 0; k < mean.size(); ++k)
            for (std::size_t n = 0; n < mean[k].size(); ++n)
                if (mean[k][n] > tr.value[k]) {
                    tr.value[k] = mean[k][n];
                    tr.stderr_[k] = se[k][n];
                }
        if (model.is_state_independent())
            tr.analytic = std::pow(p.mesh.dt, 2.0 * model.q + 1.0) * expected_max_square(p.dim, model.family);
        out.push_back(std::move(tr));
    }
    return out;
}

int stopping_iteration(const std::vector<double>& increment, double eps, int k_max) {
    for (int k = 1; k < static_cast<int>(increment.size()) && k <= k_max; ++k) {
        const double inc = increment[static_cast<std::size_t>(k)];
        if (inc < eps || inc == 0.0) return k;
    }
    return k_max;
}

std::vector<SweepPoint> mc_tolerance_sweep(const MCConfig& mc) {
    mc.validate();
    const int k_max = effective_k_max(mc.run);
    std::vector<SweepPoint> out;
    for (const auto& model : mc.comparison_models()) {
        std::vector<FailedRealization> failed;
        const auto samples = run_realizations<std::vector<double>>(
            mc, model, false, [](const IterationHistory& h) { return h.increment; }, failed);
        for (double eps : mc.eps_grid) {
            std::vector<double> ks;
            for (const auto& s : samples)
                if (s) ks.push_back(stopping_iteration(*s, eps, k_max));
            SweepPoint pt;
            pt.model = model;
            pt.eps = eps;
            if (!ks.empty()) {
                double sum = 0.0;
                for (double k : ks) sum += k;
                pt.mean_k = sum / ks.size();
                if (ks.size() > 1) {
                    double ss = 0.0;
                    for (double k : ks) ss += (k - pt.mean_k) * (k - pt.mean_k);
                    pt.stderr_ = std::sqrt(ss / (ks.size() - 1) / ks.size());
                }
            }
            out.push_back(pt);
        }
    }
    return out;
}

double roundoff_allowance(const ErrorTable& table, int n) {
    const double scale = table.exact_norm.empty() ? 1.0 : std::max(1.0, table.exact_norm[static_cast<std::size_t>(n)]);
    const double r = 16.0 * std::numeric_limits<double>::epsilon() * scale;
    return r * r;
}

namespace {

bool cell_dominated(const ErrorTable& t, int k, int n, double bound, const ComparisonOptions& o, double* ratio) {
    const auto kk = static_cast<std::size_t>(k);
    const auto nn = static_cast<std::size_t>(n);
    const double lhs = t.mse[kk][nn] - o.se_slack * t.stderr_[kk][nn];
    const double rhs = bound + (o.roundoff_allowance ? roundoff_allowance(t, n) : 0.0);
    if (ratio) *ratio = rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    return lhs <= rhs;
}

}  // namespace

std::vector<ComparisonRow> compare_bounds(const ErrorTable& table, const std::vector<BoundCurve>& curves,
                                          const ComparisonOptions& options) {
    std::vector<ComparisonRow> rows;
    for (const auto& curve : curves) {
        std::vector<int> ks;
        for (const auto& pt : curve.points)
            if (pt.k <= table.K() && std::find(ks.begin(), ks.end(), pt.k) == ks.end()) ks.push_back(pt.k);
        for (int k : ks) {
            ComparisonRow row;
            row.k = k;
            row.kind = curve.kind;
            row.empirical = table.ehat[static_cast<std::size_t>(k)];
            row.stderr_ = table.ehat_stderr[static_cast<std::size_t>(k)];
            bool all = true;
            for (const auto& pt : curve.points) {
                if (pt.k != k) continue;
                if (!pt.value) {
                    row.bound.reset();
                    all = false;
                    break;
                }
                if (pt.n) {
                    if (*pt.n > table.N()) continue;
                    row.bound = std::max(row.bound.value_or(0.0), *pt.value);
                    all = all && cell_dominated(table, k, *pt.n, *pt.value, options, nullptr);
                } else {
                    row.bound = *pt.value;
                    const double lhs = row.empirical - options.se_slack * row.stderr_;
                    double allowance = 0.0;
                    if (options.roundoff_allowance)
                        for (int n = 0; n <= table.N(); ++n) allowance = std::max(allowance, roundoff_allowance(table, n));
                    all = lhs <= *pt.value + allowance;
                }
            }
            row.dominated = row.bound.has_value() && all;
            rows.push_back(row);
        }
    }
    return rows;
}

LatticeVerdict lattice_verdict(const ErrorTable& table, const BoundCurve& curve, const ComparisonOptions& options) {
    LatticeVerdict v;
    for (const auto& pt : curve.points) {
        if (!pt.n || !pt.value || pt.k > table.K() || *pt.n > table.N()) continue;
        double ratio = 0.0;
        const bool ok = cell_dominated(table, pt.k, *pt.n, *pt.value, options, &ratio);
        ++v.checked;
        if (!ok) ++v.violations;
        if (v.worst_k < 0 || ratio > v.worst_ratio) {
            v.worst_ratio = ratio;
            v.worst_k = pt.k;
            v.worst_n = *pt.n;
        }
    }
    return v;
}

}  // namespace sparareal
