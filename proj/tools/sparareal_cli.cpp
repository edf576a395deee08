#include "sparareal/commands.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <utility>

int main(int argc, char** argv) {
    CLI::App app{"Parareal and stochastic parareal laboratory"};
    app.require_subcommand(1);

    std::optional<std::string> config;
    std::optional<std::string> preset;
    std::optional<std::string> out;
    int workers = 1;

    const std::pair<const char*, const char*> commands[] = {
        {"solve", "One realization; writes trajectory.csv"},
        {"experiment", "Monte Carlo error tables, comparisons, moments and sweeps"},
        {"bounds", "Constants and bound curves; writes constants.csv and bounds.csv"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config, "Run file (section.key = value)");
        sub->add_option("--preset", preset, "Figure preset; overrides the config's keys");
        sub->add_option("--out", out, "Output directory");
        sub->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : sparareal::exit_config_error;
    }

    sparareal::CommandOptions opts;
    opts.out_dir = out;
    opts.workers = workers;
    const std::string command = app.get_subcommands().front()->get_name();
    return sparareal::dispatch(command, config, preset, opts, std::cout, std::cerr);
}
