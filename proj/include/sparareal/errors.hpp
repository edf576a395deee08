#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace sparareal {

/// A state became non-finite. Carries the lattice location when known.
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& what, std::optional<int> iteration, std::optional<int> node)
        : std::runtime_error(what), iteration_(iteration), node_(node) {}

    [[nodiscard]] std::optional<int> iteration() const noexcept { return iteration_; }
    [[nodiscard]] std::optional<int> node() const noexcept { return node_; }

private:
    std::optional<int> iteration_;
    std::optional<int> node_;
};

/// Malformed or inconsistent run configuration. `line` is 1-based, 0 when the
/// problem is not tied to a single line (e.g. a missing key).
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    [[nodiscard]] int line() const noexcept { return line_; }

private:
    int line_;
};

/// The operation has no closed form for this kind of problem.
class UnsupportedProblem : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace sparareal
