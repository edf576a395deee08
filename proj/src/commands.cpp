#include "sparareal/commands.hpp"

#include "sparareal/csv.hpp"
#include "sparareal/errors.hpp"

#include <filesystem>
#include <ostream>

namespace sparareal {

namespace {

std::filesystem::path output_path(const RunFile& rf, const CommandOptions& opts, const std::string& name) {
    const std::filesystem::path dir = opts.out_dir ? *opts.out_dir : rf.output_directory;
    return dir / (rf.output_prefix + name);
}

}  // namespace

std::vector<BoundCurve> bound_curves_for_model(const BoundConstants& c, const PerturbationModel& model,
                                               const EmpiricalErrors& errors, int K, int N) {
    std::vector<BoundCurve> curves;
    if (model.is_sampling_rule()) {
        const RuleVariant v = rule_variant(model.rule);
        curves.push_back(rule_curve(c, v, K));
        const BoundKind kind = v == RuleVariant::rule24 ? BoundKind::numeric_recursion_24 : BoundKind::numeric_recursion_13;
        curves.push_back(lattice_curve(kind, solve_recursion_rules(c, v, errors.e0_row, errors.e1_row, K)));
    } else {
        curves.push_back(superlinear_curve(c, K, N));
        curves.push_back(linear_curve(c, K));
        curves.push_back(k1_curve(c, N));
    }
    return curves;
}

std::vector<ConstantRow> constant_rows(const IVProblem& problem, const BoundConstants& c,
                                       const PerturbationModel& model) {
    const std::string m = model.label();
    const bool linear = problem.kind == ProblemKind::linear;
    const bool builtin = problem.kind != ProblemKind::custom;
    std::vector<ConstantRow> rows = {
        {m, "C1", c.C1, linear ? "exact" : "estimated"},
        {m, "L_G", c.L_G, builtin ? "exact" : "estimated"},
        {m, "L_F", c.L_F, builtin ? "exact" : "estimated"},
        {m, "dt", c.dt, "exact"},
        {m, "p", static_cast<double>(c.p), "exact"},
        {m, "e0_hat", c.e0_hat, "exact"},
        {m, "e1_hat", c.e1_hat, "exact"},
    };
    if (model.is_state_independent()) {
        rows.push_back({m, "q", *c.q, "exact"});
        rows.push_back({m, "C2", c.C2, model.family == NoiseFamily::uniform ? "exact" : "estimated"});
    }
    for (const auto& [name, value] : {std::pair{"A", c.A}, std::pair{"B", c.B}, std::pair{"Lambda", c.Lambda},
                                      std::pair{"D", c.D}})
        rows.push_back({m, name, value, "derived"});
    if (model.is_sampling_rule()) {
        if (rule_variant(model.rule) == RuleVariant::rule24) {
            rows.push_back({m, "Lambda1", c.Lambda1_24, "derived"});
            rows.push_back({m, "Lambda2", c.Lambda2_24, "derived"});
        } else {
            rows.push_back({m, "Lambda1", c.Lambda1_13, "derived"});
            rows.push_back({m, "Lambda2", c.Lambda2_13, "derived"});
            rows.push_back({m, "Lambda3", c.Lambda3_13, "derived"});
        }
    }
    return rows;
}

int cmd_solve(const RunFile& rf, const CommandOptions& opts, std::ostream& log) {
    const auto problem = build_problem(rf);
    const RunConfig cfg = build_run_config(rf, problem, opts.workers);
    const IterationHistory h = sparareal_solve(cfg);
    const auto fine = serial_fine_solve(*problem);
    write_file_atomic(output_path(rf, opts, "trajectory.csv"), trajectory_csv(h, fine, problem->mesh));
    if (h.converged_k) {
        log << "converged at k = " << *h.converged_k
            << (h.termination == Termination::exact ? " (k = N, exact)" : "") << '\n';
        return exit_ok;
    }
    log << "no convergence within K_max = " << h.iterations() << '\n';
    return exit_cap_reached;
}

int cmd_experiment(const RunFile& rf, const CommandOptions& opts, std::ostream& log) {
    const auto problem = build_problem(rf);
    const MCConfig mc = build_mc_config(rf, problem, opts.workers);
    mc.validate();
    const auto models = mc.comparison_models();
    const bool want_table = rf.quantities.count(Quantity::error_table) != 0;
    const bool want_comparison = rf.quantities.count(Quantity::comparison) != 0;

    if (want_table || want_comparison) {
        std::vector<ErrorTable> tables;
        for (const auto& model : models) {
            MCConfig one = mc;
            one.run.perturbation = model;
            log << "error table: " << model.label() << " (R = " << mc.R << ")\n";
            tables.push_back(mc_error_table(one));
        }
        if (want_table) {
            write_file_atomic(output_path(rf, opts, "error_table.csv"), error_table_csv(tables));
            write_file_atomic(output_path(rf, opts, "ehat.csv"), ehat_csv(tables));
        }
        if (want_comparison) {
            const EmpiricalErrors errors = empirical_e_hats(*problem);
            std::vector<LabelledCurve> curves;
            std::vector<LabelledComparison> comparisons;
            std::vector<ConstantRow> constants;
            for (const auto& t : tables) {
                const BoundConstants c = make_bound_constants(*problem, t.model, rf.centred, rf.derivation);
                auto model_curves = bound_curves_for_model(c, t.model, errors, t.K(), t.N());
                comparisons.push_back({t.model.label(), compare_bounds(t, model_curves)});
                for (auto& curve : model_curves) curves.push_back({t.model.label(), c.fingerprint(), std::move(curve)});
                const auto rows = constant_rows(*problem, c, t.model);
                constants.insert(constants.end(), rows.begin(), rows.end());
            }
            write_file_atomic(output_path(rf, opts, "comparison.csv"), comparison_csv(comparisons));
            write_file_atomic(output_path(rf, opts, "bounds.csv"), bounds_csv(curves));
            write_file_atomic(output_path(rf, opts, "constants.csv"), constants_csv(constants));
        }
    }
    if (rf.quantities.count(Quantity::moments)) {
        log << "moments over " << models.size() << " model(s)\n";
        write_file_atomic(output_path(rf, opts, "moments.csv"), moments_csv(mc_moments(mc)));
    }
    if (rf.quantities.count(Quantity::tolerance_sweep)) {
        log << "tolerance sweep over " << models.size() << " model(s)\n";
        write_file_atomic(output_path(rf, opts, "sweep.csv"), sweep_csv(mc_tolerance_sweep(mc)));
    }
    return exit_ok;
}

int cmd_bounds(const RunFile& rf, const CommandOptions& opts, std::ostream& log) {
    const auto problem = build_problem(rf);
    const EmpiricalErrors errors = empirical_e_hats(*problem);
    const std::vector<PerturbationModel> models =
        rf.models.empty() ? std::vector<PerturbationModel>{rf.perturbation} : rf.models;
    std::vector<LabelledCurve> curves;
    std::vector<ConstantRow> constants;
    for (const auto& model : models) {
        const BoundConstants c = make_bound_constants(*problem, model, rf.centred, rf.derivation);
        if (!(c.B < 1.0)) log << model.label() << ": B = " << c.B << " >= 1, linear and rule bounds inapplicable\n";
        const int K = rf.k_max > 0 ? rf.k_max : problem->mesh.N;
        for (auto& curve : bound_curves_for_model(c, model, errors, K, problem->mesh.N))
            curves.push_back({model.label(), c.fingerprint(), std::move(curve)});
        const auto rows = constant_rows(*problem, c, model);
        constants.insert(constants.end(), rows.begin(), rows.end());
    }
    write_file_atomic(output_path(rf, opts, "constants.csv"), constants_csv(constants));
    write_file_atomic(output_path(rf, opts, "bounds.csv"), bounds_csv(curves));
    return exit_ok;
}

int dispatch(const std::string& command, const std::optional<std::string>& config_path,
             const std::optional<std::string>& preset, const CommandOptions& opts, std::ostream& log,
             std::ostream& err) {
    try {
        if (command != "solve" && command != "experiment" && command != "bounds")
            throw ConfigError("unknown subcommand '" + command + "'");
        if (!config_path && !preset) throw ConfigError("either --config or --preset is required");
        if (opts.workers < 1) throw ConfigError("--workers must be positive");

        const KeyValues base = config_path ? load_key_values(*config_path) : KeyValues{};
        std::vector<std::pair<std::string, KeyValues>> runs;
        if (preset) {
            for (auto& [name, kv] : expand_preset(*preset)) runs.emplace_back(name, merge_key_values(base, kv));
        } else {
            runs.emplace_back("", base);
        }

        int worst = exit_ok;
        for (const auto& [name, kv] : runs) {
            const RunFile rf = interpret_run_file(kv);
            CommandOptions member = opts;
            if (runs.size() > 1) {
                const std::filesystem::path dir = opts.out_dir ? *opts.out_dir : rf.output_directory;
                member.out_dir = (dir / name).string();
            }
            if (!name.empty()) log << "[" << name << "]\n";
            int code = exit_ok;
            if (command == "solve")
                code = cmd_solve(rf, member, log);
            else if (command == "experiment")
                code = cmd_experiment(rf, member, log);
            else
                code = cmd_bounds(rf, member, log);
            if (worst == exit_ok) worst = code;
        }
        return worst;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config_error;
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << '\n';
        return exit_numeric_failure;
    } catch (const std::invalid_argument& e) {
        err << "invalid configuration: " << e.what() << '\n';
        return exit_config_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_numeric_failure;
    }
}

}  // namespace sparareal
