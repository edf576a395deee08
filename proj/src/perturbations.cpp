#include "sparareal/perturbations.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace sparareal {

PerturbationModel PerturbationModel::state_independent(NoiseFamily family, double q) {
    if (!std::isfinite(q)) throw std::invalid_argument("perturbation: q must be finite");
    PerturbationModel m;
    m.tag = Tag::state_independent;
    m.family = family;
    m.q = q;
    return m;
}

PerturbationModel PerturbationModel::sampling_rule(int rule) {
    if (rule < 1 || rule > 4) throw std::invalid_argument("perturbation: sampling rule must be in 1..4");
    PerturbationModel m;
    m.tag = Tag::sampling_rule;
    m.rule = rule;
    return m;
}

std::string PerturbationModel::label() const {
    switch (tag) {
    case Tag::none:
        return "none";
    case Tag::state_independent: {
        std::string qs = std::to_string(q);
        qs.erase(qs.find_last_not_of('0') + 1);
        if (!qs.empty() && qs.back() == '.') qs.pop_back();
        return std::string(family == NoiseFamily::gaussian ? "gaussian" : "uniform") + "-q" + qs;
    }
    case Tag::sampling_rule:
        return "rule" + std::to_string(rule);
    }
    return "none";
}

bool operator==(const PerturbationModel& a, const PerturbationModel& b) {
    if (a.tag != b.tag) return false;
    switch (a.tag) {
    case PerturbationModel::Tag::none:
        return true;
    case PerturbationModel::Tag::state_independent:
        return a.family == b.family && a.q == b.q;
    case PerturbationModel::Tag::sampling_rule:
        return a.rule == b.rule;
    }
    return false;
}

PerturbationModel parse_perturbation_label(const std::string& label) {
    if (label == "none") return PerturbationModel::none();
    if (label.size() == 5 && label.rfind("rule", 0) == 0) {
        const char c = label[4];
        if (c >= '1' && c <= '4') return PerturbationModel::sampling_rule(c - '0');
    }
    for (const auto& [prefix, family] : {std::pair{std::string("gaussian-q"), NoiseFamily::gaussian},
                                         std::pair{std::string("uniform-q"), NoiseFamily::uniform}}) {
        if (label.rfind(prefix, 0) != 0) continue;
        const std::string rest = label.substr(prefix.size());
        std::size_t used = 0;
        double q = 0.0;
        try {
            q = std::stod(rest, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != rest.size()) break;
        return PerturbationModel::state_independent(family, q);
    }
    throw std::invalid_argument("unknown perturbation model '" + label + "'");
}

double state_independent_scale(double q, double dt) { return std::pow(dt, q + 0.5); }

State draw_state_independent(const PerturbationModel& model, const RngStream& stream, std::uint64_t realization,
                             int k, int n, double dt, int d) {
    State xi = State::Zero(d);
    if (!model.is_state_independent()) return xi;
    auto rng = stream.substream(realization, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(n),
                                DrawKind::state_independent);
    const double s = state_independent_scale(model.q, dt);
    if (model.family == NoiseFamily::gaussian) {
        std::normal_distribution<double> z(0.0, 1.0);
        for (int i = 0; i < d; ++i) xi(i) = s * z(rng);
    } else {
        const double half_width = std::sqrt(3.0) * s;
        std::uniform_real_distribution<double> w(-half_width, half_width);
        for (int i = 0; i < d; ++i) xi(i) = w(rng);
    }
    return xi;
}

State sigma_kn(const State& g_curr, const State& g_prev) { return (g_curr - g_prev).cwiseAbs(); }

State sigma_kn(const std::vector<std::vector<State>>& states, int k, int n, const FlowMap& coarse_flow, double dt) {
    if (k < 1 || n < 1) throw std::logic_error("sigma_kn: requires k >= 1 and n >= 1");
    const auto kk = static_cast<std::size_t>(k);
    const auto nn = static_cast<std::size_t>(n);
    return sigma_kn(coarse_flow(states[kk][nn - 1], dt), coarse_flow(states[kk - 1][nn - 1], dt));
}

State sample_alpha(int rule, int k, int n, const State& u_kn, const State& f_prev, const State& sigma,
                   const RngStream& stream, std::uint64_t realization) {
    if (k < 1) throw std::logic_error("sample_alpha: sampling rules are undefined at k = 0");
    if (n <= k) throw std::logic_error("sample_alpha: requires n > k");
    if (rule < 1 || rule > 4) throw std::invalid_argument("sample_alpha: rule must be in 1..4");

    auto rng = stream.substream(realization, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(n),
                                DrawKind::sampling_rule);
    const bool centre_on_fine = rule == 1 || rule == 3;
    State alpha = centre_on_fine ? f_prev : u_kn;
    const Eigen::Index d = alpha.size();
    if (rule == 1 || rule == 2) {
        std::normal_distribution<double> z(0.0, 1.0);
        for (Eigen::Index i = 0; i < d; ++i) alpha(i) += sigma(i) * z(rng);
    } else {
        std::uniform_real_distribution<double> w(0.0, 1.0);
        const double r3 = std::sqrt(3.0);
        for (Eigen::Index i = 0; i < d; ++i) alpha(i) += r3 * sigma(i) * (2.0 * w(rng) - 1.0);
    }
    return alpha;
}

State xi_from_alpha(const State& alpha, const State& u_kn, const FlowMap& fine_flow, const FlowMap& coarse_flow,
                    double dt) {
    return xi_from_alpha(fine_flow(alpha, dt), coarse_flow(alpha, dt), fine_flow(u_kn, dt), coarse_flow(u_kn, dt));
}

State xi_from_alpha(const State& f_alpha, const State& g_alpha, const State& f_u, const State& g_u) {
    return (f_alpha - g_alpha) - (f_u - g_u);
}

void XiMomentTracker::add(const std::vector<std::vector<double>>& xi_sq) {
    if (sum_.size() < xi_sq.size()) sum_.resize(xi_sq.size());
    for (std::size_t k = 0; k < xi_sq.size(); ++k) {
        if (sum_[k].size() < xi_sq[k].size()) sum_[k].resize(xi_sq[k].size(), 0.0);
        for (std::size_t n = 0; n < xi_sq[k].size(); ++n) sum_[k][n] += xi_sq[k][n];
    }
    ++count_;
}

void XiMomentTracker::merge(const XiMomentTracker& other) {
    if (sum_.size() < other.sum_.size()) sum_.resize(other.sum_.size());
    for (std::size_t k = 0; k < other.sum_.size(); ++k) {
        if (sum_[k].size() < other.sum_[k].size()) sum_[k].resize(other.sum_[k].size(), 0.0);
        for (std::size_t n = 0; n < other.sum_[k].size(); ++n) sum_[k][n] += other.sum_[k][n];
    }
    count_ += other.count_;
}

std::vector<std::vector<double>> XiMomentTracker::mean() const {
    auto out = sum_;
    if (count_ == 0) return out;
    for (auto& row : out)
        for (auto& v : row) v /= static_cast<double>(count_);
    return out;
}

std::vector<double> XiMomentTracker::max_over_n() const {
    const auto m = mean();
    std::vector<double> out(m.size(), 0.0);
    for (std::size_t k = 0; k < m.size(); ++k)
        for (double v : m[k]) out[k] = std::max(out[k], v);
    return out;
}

double expected_max_square(int d, NoiseFamily family) {
    if (d < 1) throw std::invalid_argument("expected_max_square: d must be positive");
    if (family == NoiseFamily::uniform) return 3.0 * d / (d + 2.0);

    // E[M] = int_0^inf 2 s P(max |z_i| > s) ds, smooth in s where the form in
    // t = s^2 has a square-root cusp at zero.
    const auto integrand = [d](double s) {
        const double c = std::erfc(s / std::sqrt(2.0));
        return 2.0 * s * -std::expm1(d * std::log1p(-c));
    };
    const double upper = 12.0;
    const int intervals = 24000;  // even, for Simpson
    const double h = upper / intervals;
    double acc = integrand(0.0) + integrand(upper);
    for (int i = 1; i < intervals; ++i) acc += (i % 2 ? 4.0 : 2.0) * integrand(i * h);
    return acc * h / 3.0;
}

double estimate_c2(int d, NoiseFamily family, int draws, std::uint64_t seed) {
    if (d < 1) throw std::invalid_argument("estimate_c2: d must be positive");
    if (draws < 1) throw std::invalid_argument("estimate_c2: draws must be positive");
    if (family == NoiseFamily::uniform) return std::sqrt(3.0);

    const RngStream stream(seed);
    auto rng = stream.substream(static_cast<std::uint64_t>(d), 0, 0, DrawKind::constant_estimation);
    std::normal_distribution<double> z(0.0, 1.0);
    double m1 = 0.0, m2 = 0.0, m4 = 0.0;
    for (int s = 0; s < draws; ++s) {
        double mx = 0.0;
        for (int i = 0; i < d; ++i) mx = std::max(mx, std::abs(z(rng)));
        const double sq = mx * mx;
        m1 += mx;
        m2 += sq;
        m4 += sq * sq;
    }
    const double inv = 1.0 / draws;
    const double worst = std::max({m1 * inv, std::sqrt(m2 * inv), std::pow(m4 * inv, 0.25)});
    return 1.1 * worst;
}

}  // namespace sparareal
