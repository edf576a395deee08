#include "sparareal/run_file.hpp"

#include "sparareal/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace sparareal {

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "problem.kind",      "problem.d",         "problem.mode",   "problem.seed",     "problem.t0",
        "problem.T",         "problem.N",         "perturbation.model", "perturbation.family", "perturbation.rule",
        "perturbation.q",    "solver.K_max",      "solver.eps",     "solver.seed",      "mc.R",
        "mc.eps_grid",       "mc.quantities",     "mc.models",      "bounds.centred",   "bounds.derivation",
        "output.directory",  "output.prefix",
    };
    return keys;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

/// Typed accessors that remember which keys were consumed.
class Reader {
public:
    explicit Reader(const KeyValues& kv) : kv_(kv) {}

    [[nodiscard]] bool has(const std::string& key) const { return kv_.count(key) != 0; }
    [[nodiscard]] int line(const std::string& key) const { return has(key) ? kv_.at(key).second : 0; }

    std::string text(const std::string& key) {
        used_.insert(key);
        return kv_.at(key).first;
    }

    double real(const std::string& key) {
        const std::string s = text(key);
        double v = 0.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size())
            throw ConfigError(key + ": expected a number, got '" + s + "'", line(key));
        return v;
    }

    long long integer(const std::string& key) {
        const std::string s = text(key);
        long long v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size())
            throw ConfigError(key + ": expected an integer, got '" + s + "'", line(key));
        return v;
    }

    std::uint64_t seed(const std::string& key) {
        const std::string s = text(key);
        std::uint64_t v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size())
            throw ConfigError(key + ": expected an unsigned 64-bit integer, got '" + s + "'", line(key));
        return v;
    }

    bool boolean(const std::string& key) {
        const std::string s = text(key);
        if (s == "true" || s == "1") return true;
        if (s == "false" || s == "0") return false;
        throw ConfigError(key + ": expected true or false, got '" + s + "'", line(key));
    }

    void forbid(const std::string& key, const std::string& reason) {
        if (has(key)) throw ConfigError(key + ": " + reason, line(key));
    }

    void require(const std::string& key, const std::string& reason) {
        if (!has(key)) throw ConfigError("missing " + key + " (" + reason + ")");
    }

private:
    const KeyValues& kv_;
    std::set<std::string> used_;
};

PerturbationModel read_perturbation(Reader& r) {
    if (!r.has("perturbation.model")) {
        for (const char* k : {"perturbation.family", "perturbation.rule", "perturbation.q"})
            r.forbid(k, "set perturbation.model first");
        return PerturbationModel::none();
    }
    const std::string model = r.text("perturbation.model");
    if (model == "none") {
        for (const char* k : {"perturbation.family", "perturbation.rule", "perturbation.q"})
            r.forbid(k, "not used when perturbation.model = none");
        return PerturbationModel::none();
    }
    if (model == "state_independent") {
        r.forbid("perturbation.rule", "only used by sampling_rule");
        r.require("perturbation.family", "state_independent noise");
        r.require("perturbation.q", "state_independent noise");
        const std::string fam = r.text("perturbation.family");
        NoiseFamily family;
        if (fam == "gaussian")
            family = NoiseFamily::gaussian;
        else if (fam == "uniform")
            family = NoiseFamily::uniform;
        else
            throw ConfigError("perturbation.family: expected gaussian or uniform, got '" + fam + "'",
                              r.line("perturbation.family"));
        const double q = r.real("perturbation.q");
        if (!std::isfinite(q)) throw ConfigError("perturbation.q: must be finite", r.line("perturbation.q"));
        return PerturbationModel::state_independent(family, q);
    }
    if (model == "sampling_rule") {
        r.forbid("perturbation.family", "only used by state_independent");
        r.forbid("perturbation.q", "only used by state_independent");
        r.require("perturbation.rule", "sampling_rule");
        const long long rule = r.integer("perturbation.rule");
        if (rule < 1 || rule > 4) throw ConfigError("perturbation.rule: must be 1, 2, 3 or 4", r.line("perturbation.rule"));
        return PerturbationModel::sampling_rule(static_cast<int>(rule));
    }
    throw ConfigError("perturbation.model: expected none, state_independent or sampling_rule, got '" + model + "'",
                      r.line("perturbation.model"));
}

KeyValues from_pairs(std::initializer_list<std::pair<const char*, const char*>> pairs) {
    KeyValues kv;
    for (const auto& [k, v] : pairs) kv[k] = {v, 0};
    return kv;
}

const char* const kLinearSweepModels = "rule1,rule2,rule3,rule4,gaussian-q0,gaussian-q5,gaussian-q10,gaussian-q25";
const char* const kSweepGrid = "1e-1,1e-2,1e-3,1e-4,1e-5,1e-6,1e-7,1e-8,1e-9,1e-10";

KeyValues linear_base(const char* mode) {
    return from_pairs({{"problem.kind", "linear"},
                       {"problem.d", "100"},
                       {"problem.mode", mode},
                       {"problem.seed", "1"},
                       {"problem.t0", "0"},
                       {"problem.T", "6"},
                       {"problem.N", "20"},
                       {"solver.seed", "20230101"},
                       {"mc.R", "500"}});
}

KeyValues scalar_base() {
    return from_pairs({{"problem.kind", "scalar"}, {"solver.seed", "20230101"}, {"mc.R", "500"}});
}

KeyValues with(KeyValues base, std::initializer_list<std::pair<const char*, const char*>> extra) {
    for (const auto& [k, v] : extra) base[k] = {v, 0};
    return base;
}

KeyValues gaussian_figure(KeyValues base, const char* q) {
    return with(std::move(base), {{"perturbation.model", "state_independent"},
                                  {"perturbation.family", "gaussian"},
                                  {"perturbation.q", q},
                                  {"solver.K_max", "10"},
                                  {"mc.quantities", "error_table,comparison"}});
}

KeyValues rule_figure(KeyValues base, const char* models) {
    return with(std::move(base), {{"mc.models", models}, {"solver.K_max", "10"}, {"mc.quantities", "error_table,comparison"}});
}

KeyValues sweep_figure(KeyValues base) {
    return with(std::move(base), {{"mc.models", kLinearSweepModels},
                                  {"mc.eps_grid", kSweepGrid},
                                  {"mc.quantities", "tolerance_sweep"}});
}

const std::map<std::string, KeyValues>& single_presets() {
    static const std::map<std::string, KeyValues> presets = [] {
        std::map<std::string, KeyValues> p;
        p["fig2a"] = gaussian_figure(linear_base("contractive"), "0");
        p["fig2b"] = gaussian_figure(linear_base("contractive"), "5");
        p["fig2c"] = gaussian_figure(linear_base("contractive"), "10");
        p["fig3a"] = gaussian_figure(linear_base("expansive"), "0");
        p["fig3b"] = gaussian_figure(linear_base("expansive"), "5");
        p["fig3c"] = gaussian_figure(linear_base("expansive"), "10");
        p["fig4"] = with(linear_base("contractive"),
                         {{"mc.models", "rule1,rule2,rule3,rule4,gaussian-q0,gaussian-q5,gaussian-q10"},
                          {"mc.quantities", "moments"}});
        p["fig5a"] = rule_figure(linear_base("contractive"), "rule2,rule4");
        p["fig5b"] = rule_figure(linear_base("contractive"), "rule1,rule3");
        p["fig6"] = sweep_figure(linear_base("contractive"));
        p["fig7a"] = gaussian_figure(scalar_base(), "1");
        p["fig7b"] = gaussian_figure(scalar_base(), "5");
        p["fig7c"] = gaussian_figure(scalar_base(), "10");
        p["fig8a"] = rule_figure(scalar_base(), "rule2,rule4");
        p["fig8b"] = rule_figure(scalar_base(), "rule1,rule3");
        p["fig9"] = sweep_figure(scalar_base());
        return p;
    }();
    return presets;
}

const std::map<std::string, std::vector<std::string>>& composite_presets() {
    static const std::map<std::string, std::vector<std::string>> presets = {
        {"fig2", {"fig2a", "fig2b", "fig2c"}}, {"fig3", {"fig3a", "fig3b", "fig3c"}}, {"fig5", {"fig5a", "fig5b"}},
        {"fig7", {"fig7a", "fig7b", "fig7c"}}, {"fig8", {"fig8a", "fig8b"}},
    };
    return presets;
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
    KeyValues kv;
    std::istringstream is(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(is, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line_no);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("empty key", line_no);
        if (value.empty()) throw ConfigError(key + ": empty value", line_no);
        if (!known_keys().count(key)) throw ConfigError("unknown key '" + key + "'", line_no);
        if (auto it = kv.find(key); it != kv.end())
            throw ConfigError(key + ": repeated (first set on line " + std::to_string(it->second.second) + ")", line_no);
        kv[key] = {value, line_no};
    }
    return kv;
}

RunFile interpret_run_file(const KeyValues& kv) {
    for (const auto& [key, entry] : kv)
        if (!known_keys().count(key)) throw ConfigError("unknown key '" + key + "'", entry.second);

    Reader r(kv);
    RunFile rf;
    r.require("problem.kind", "the problem block is mandatory");
    rf.problem_kind = r.text("problem.kind");
    if (rf.problem_kind == "linear") {
        r.require("problem.d", "linear problem");
        r.require("problem.mode", "linear problem");
        r.require("problem.seed", "linear problem");
        const long long d = r.integer("problem.d");
        if (d < 1) throw ConfigError("problem.d: must be at least 1", r.line("problem.d"));
        rf.d = static_cast<int>(d);
        const std::string mode = r.text("problem.mode");
        if (mode == "contractive")
            rf.mode = LinearMode::contractive;
        else if (mode == "expansive")
            rf.mode = LinearMode::expansive;
        else
            throw ConfigError("problem.mode: expected contractive or expansive, got '" + mode + "'", r.line("problem.mode"));
        rf.problem_seed = r.seed("problem.seed");
        if (r.has("problem.t0")) rf.t0 = r.real("problem.t0");
        if (r.has("problem.T")) rf.T = r.real("problem.T");
        if (r.has("problem.N")) {
            const long long N = r.integer("problem.N");
            if (N < 1) throw ConfigError("problem.N: must be at least 1", r.line("problem.N"));
            rf.N = static_cast<int>(N);
        }
        if (!(std::isfinite(rf.t0) && std::isfinite(rf.T) && rf.T > rf.t0))
            throw ConfigError("problem.T: must exceed problem.t0", r.line("problem.T"));
    } else if (rf.problem_kind == "scalar") {
        for (const char* k : {"problem.d", "problem.mode", "problem.seed", "problem.t0", "problem.T", "problem.N"})
            r.forbid(k, "the scalar problem is fixed");
        rf.t0 = -1.0;
        rf.T = 1.0;
        rf.N = 20;
        rf.d = 1;
    } else {
        throw ConfigError("problem.kind: expected linear or scalar, got '" + rf.problem_kind + "'", r.line("problem.kind"));
    }

    rf.perturbation = read_perturbation(r);

    if (r.has("solver.K_max")) {
        const long long k = r.integer("solver.K_max");
        if (k < 1 || k > rf.N) throw ConfigError("solver.K_max: must lie in 1..N", r.line("solver.K_max"));
        rf.k_max = static_cast<int>(k);
    } else {
        rf.k_max = rf.N;
    }
    if (r.has("solver.eps")) {
        if (r.text("solver.eps") == "none") {
            rf.eps = std::nullopt;
        } else {
            const double eps = r.real("solver.eps");
            if (std::isnan(eps) || eps < 0.0) throw ConfigError("solver.eps: must be non-negative", r.line("solver.eps"));
            rf.eps = eps;
        }
    }
    r.require("solver.seed", "seeds are never defaulted");
    rf.solver_seed = r.seed("solver.seed");

    if (r.has("mc.R")) {
        const long long R = r.integer("mc.R");
        if (R < 1) throw ConfigError("mc.R: must be at least 1", r.line("mc.R"));
        rf.R = static_cast<int>(R);
    }
    if (r.has("mc.eps_grid")) {
        const int ln = r.line("mc.eps_grid");
        for (const auto& item : split_list(r.text("mc.eps_grid"))) {
            double v = 0.0;
            const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
            if (res.ec != std::errc() || res.ptr != item.data() + item.size() || std::isnan(v) || v < 0.0)
                throw ConfigError("mc.eps_grid: bad tolerance '" + item + "'", ln);
            if (!rf.eps_grid.empty() && !(v < rf.eps_grid.back()))
                throw ConfigError("mc.eps_grid: must be strictly decreasing", ln);
            rf.eps_grid.push_back(v);
        }
        if (rf.eps_grid.empty()) throw ConfigError("mc.eps_grid: empty list", ln);
    }
    if (r.has("mc.quantities")) {
        const int ln = r.line("mc.quantities");
        rf.quantities.clear();
        for (const auto& item : split_list(r.text("mc.quantities"))) {
            try {
                rf.quantities.insert(parse_quantity(item));
            } catch (const std::invalid_argument& e) {
                throw ConfigError(std::string("mc.quantities: ") + e.what(), ln);
            }
        }
        if (rf.quantities.empty()) throw ConfigError("mc.quantities: empty list", ln);
    }
    if (rf.quantities.count(Quantity::tolerance_sweep) && rf.eps_grid.empty())
        throw ConfigError("missing mc.eps_grid (tolerance_sweep)", r.line("mc.quantities"));
    if (r.has("mc.models")) {
        const int ln = r.line("mc.models");
        for (const auto& item : split_list(r.text("mc.models"))) {
            try {
                rf.models.push_back(parse_perturbation_label(item));
            } catch (const std::invalid_argument& e) {
                throw ConfigError(std::string("mc.models: ") + e.what(), ln);
            }
        }
    }

    if (r.has("bounds.centred")) rf.centred = r.boolean("bounds.centred");
    if (r.has("bounds.derivation")) {
        const std::string s = r.text("bounds.derivation");
        if (s == "published")
            rf.derivation = RuleDerivation::published;
        else if (s == "norm_consistent")
            rf.derivation = RuleDerivation::norm_consistent;
        else
            throw ConfigError("bounds.derivation: expected published or norm_consistent", r.line("bounds.derivation"));
    }

    if (r.has("output.directory")) rf.output_directory = r.text("output.directory");
    if (r.has("output.prefix")) rf.output_prefix = r.text("output.prefix");
    return rf;
}

RunFile parse_run_file(const std::string& text) { return interpret_run_file(parse_key_values(text)); }

KeyValues load_key_values(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_key_values(ss.str());
}

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const auto& [name, kv] : single_presets()) names.push_back(name);
    for (const auto& [name, members] : composite_presets()) names.push_back(name);
    std::sort(names.begin(), names.end());
    return names;
}

std::vector<std::pair<std::string, KeyValues>> expand_preset(const std::string& name) {
    if (auto it = single_presets().find(name); it != single_presets().end()) return {{name, it->second}};
    if (auto it = composite_presets().find(name); it != composite_presets().end()) {
        std::vector<std::pair<std::string, KeyValues>> out;
        for (const auto& member : it->second) out.emplace_back(member, single_presets().at(member));
        return out;
    }
    throw ConfigError("unknown preset '" + name + "'");
}

KeyValues merge_key_values(KeyValues base, const KeyValues& overrides) {
    for (const auto& [k, v] : overrides) base[k] = v;
    return base;
}

std::shared_ptr<const IVProblem> build_problem(const RunFile& rf) {
    if (rf.problem_kind == "scalar") return std::make_shared<const IVProblem>(make_scalar_problem());
    if (rf.problem_kind == "linear")
        return std::make_shared<const IVProblem>(make_linear_problem(rf.d, rf.mode, rf.problem_seed, rf.t0, rf.T, rf.N));
    throw ConfigError("problem.kind: unsupported '" + rf.problem_kind + "'");
}

RunConfig build_run_config(const RunFile& rf, std::shared_ptr<const IVProblem> problem, int workers) {
    RunConfig cfg;
    cfg.problem = std::move(problem);
    cfg.k_max = rf.k_max;
    cfg.eps = rf.eps;
    cfg.perturbation = rf.perturbation;
    cfg.seed = rf.solver_seed;
    cfg.workers = workers;
    return cfg;
}

MCConfig build_mc_config(const RunFile& rf, std::shared_ptr<const IVProblem> problem, int workers) {
    MCConfig mc;
    mc.run = build_run_config(rf, std::move(problem), 1);
    mc.R = rf.R;
    mc.quantities = rf.quantities;
    mc.eps_grid = rf.eps_grid;
    mc.models = rf.models;
    mc.workers = workers;
    return mc;
}

}  // namespace sparareal
