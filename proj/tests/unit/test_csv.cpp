#include "sparareal/csv.hpp"

#include <doctest.h>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace sparareal;
namespace fs = std::filesystem;

namespace {

std::vector<std::vector<std::string>> rows(const std::string& text) {
    std::vector<std::vector<std::string>> out;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) out.push_back(split_csv_line(line));
    return out;
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("sparareal_csv_" + name);
    fs::remove_all(dir);
    return dir;
}

ErrorTable tiny_table() {
    ErrorTable t;
    t.R = 4;
    t.model = PerturbationModel::sampling_rule(2);
    t.mse = {{0, 1, 2}, {0, 0, 0.5}};
    t.raw_mse = {{0, 1, 2}, {1e-33, 2e-32, 0.5}};
    t.stderr_ = {{0, 0.1, 0.2}, {0, 0, 0.05}};
    t.ehat = {2, 0.5};
    t.ehat_stderr = {0.2, 0.05};
    return t;
}

}  // namespace

TEST_CASE("number formatting round-trips") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-300, 300);
    for (int i = 0; i < 1000; ++i) {
        const double v = std::pow(10.0, u(rng) / 10.0) * (i % 2 ? -1.0 : 1.0);
        const std::string s = format_double(v);
        double back = 0.0;
        std::from_chars(s.data(), s.data() + s.size(), back);
        CHECK(back == v);
    }
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(INFINITY) == "inf");
    CHECK(format_double(-INFINITY) == "-inf");
    CHECK(format_double(NAN) == "nan");
}

TEST_CASE("split") {
    CHECK(split_csv_line("a,b,,c") == std::vector<std::string>{"a", "b", "", "c"});
    CHECK(split_csv_line("a,").size() == 2);
    CHECK(split_csv_line("").empty());
}

TEST_CASE("error table and ehat schemas") {
    const auto t = tiny_table();
    const auto e = rows(error_table_csv({t}));
    REQUIRE(e.size() == 1 + 6);
    CHECK(e[0] == std::vector<std::string>{"model", "k", "n", "mse", "stderr", "R", "raw_mse"});
    CHECK(e[1] == std::vector<std::string>{"rule2", "0", "0", "0", "0", "4", "0"});
    CHECK(e[5][6] == "2e-32");
    CHECK(e[5][3] == "0");

    const auto h = rows(ehat_csv({t, t}));
    REQUIRE(h.size() == 1 + 4);
    CHECK(h[0] == std::vector<std::string>{"model", "k", "ehat", "stderr"});
    CHECK(h[2] == std::vector<std::string>{"rule2", "1", "0.5", "0.05"});
}

TEST_CASE("moments and sweep schemas") {
    MomentTrace m;
    m.model = PerturbationModel::state_independent(NoiseFamily::gaussian, 5);
    m.value = {1e-6, 2e-6};
    m.stderr_ = {1e-8, 2e-8};
    m.analytic = 3e-6;
    MomentTrace r;
    r.model = PerturbationModel::sampling_rule(1);
    r.value = {0.1};
    r.stderr_ = {0.01};
    const auto mm = rows(moments_csv({m, r}));
    REQUIRE(mm.size() == 4);
    CHECK(mm[0] == std::vector<std::string>{"model", "k", "max_second_moment", "stderr", "analytic"});
    CHECK(mm[1] == std::vector<std::string>{"gaussian-q5", "0", "1e-06", "1e-08", "3e-06"});
    CHECK(mm[3][4] == "");

    const auto s = rows(sweep_csv({SweepPoint{PerturbationModel::none(), 1e-3, 4.5, 0.25}}));
    REQUIRE(s.size() == 2);
    CHECK(s[0] == std::vector<std::string>{"model", "eps", "mean_k", "stderr"});
    CHECK(s[1] == std::vector<std::string>{"none", "0.001", "4.5", "0.25"});
}

TEST_CASE("bounds, constants and comparison schemas") {
    BoundCurve lin{BoundKind::linear, {{2, std::nullopt, 0.5}, {3, std::nullopt, std::nullopt}}};
    BoundCurve sup{BoundKind::superlinear, {{2, 3, 0.25}}};
    const auto b = rows(bounds_csv({{"gaussian-q0", "00ff", lin}, {"gaussian-q0", "00ff", sup}}));
    REQUIRE(b.size() == 4);
    CHECK(b[0] == std::vector<std::string>{"model", "kind", "k", "n", "value", "fingerprint"});
    CHECK(b[1] == std::vector<std::string>{"gaussian-q0", "linear", "2", "", "0.5", "00ff"});
    CHECK(b[2][4] == "inapplicable");
    CHECK(b[3] == std::vector<std::string>{"gaussian-q0", "superlinear", "2", "3", "0.25", "00ff"});

    const auto c = rows(constants_csv({{"none", "C1", 0.25, "exact"}}));
    CHECK(c[0] == std::vector<std::string>{"model", "name", "value", "provenance"});
    CHECK(c[1] == std::vector<std::string>{"none", "C1", "0.25", "exact"});

    ComparisonRow yes{2, 0.1, 0.01, BoundKind::linear, 0.5, true};
    ComparisonRow na{3, 0.1, 0.01, BoundKind::rule24, std::nullopt, false};
    const auto cmp = rows(comparison_csv({{"rule2", {yes, na}}}));
    REQUIRE(cmp.size() == 3);
    CHECK(cmp[0] ==
          std::vector<std::string>{"model", "k", "empirical", "stderr", "bound_kind", "bound_value", "dominated"});
    CHECK(cmp[1] == std::vector<std::string>{"rule2", "2", "0.1", "0.01", "linear", "0.5", "1"});
    CHECK(cmp[2][5] == "inapplicable");
    CHECK(cmp[2][6] == "0");
}

TEST_CASE("trajectory schema") {
    IterationHistory h;
    h.states = {{State::Constant(2, 1.0), State::Constant(2, 2.0)}, {State::Constant(2, 1.0), State::Constant(2, 3.0)}};
    const std::vector<State> fine = {State::Constant(2, 1.0), State::Constant(2, 3.0)};
    const auto t = rows(trajectory_csv(h, fine, Mesh::uniform(0, 0.5, 1)));
    REQUIRE(t.size() == 1 + 2 * 2 * 2 + 2 * 2);
    CHECK(t[0] == std::vector<std::string>{"series", "k", "n", "t", "component", "value"});
    CHECK(t[1] == std::vector<std::string>{"iterate", "0", "0", "0", "0", "1"});
    CHECK(t.back() == std::vector<std::string>{"fine", "", "1", "0.5", "1", "3"});
}

TEST_CASE("atomic writes") {
    const fs::path dir = scratch("atomic");
    const fs::path file = dir / "nested" / "out.csv";
    write_file_atomic(file, "a,b\n1,2\n");
    write_file_atomic(file, "a,b\n3,4\n");
    std::ifstream in(file);
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str() == "a,b\n3,4\n");
    for (const auto& entry : fs::directory_iterator(dir / "nested")) CHECK(entry.path().extension() != ".tmp");
    fs::remove_all(dir);
}
