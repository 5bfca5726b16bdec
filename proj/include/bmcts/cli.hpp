#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "bmcts/experiments.hpp"

namespace bmcts {

enum class Subcommand { Curve, Table1, Fig4a, Hybrid, Bench, Converge, Selftest };

/// Validated command line.
struct CliInvocation {
    Subcommand command = Subcommand::Selftest;
    ExperimentConfig config;
    std::uint32_t runs = 100;     // converge
    double tolerance = 0.02;      // converge
    std::string out_path;         // empty: standard output
    bool quiet = false;
    bool inject_f2_fault = false;  // selftest negative control
    std::string argv_line;         // echoed as "# argv: ..."
};

/// Invalid command line; maps to exit code 2.
class UsageError : public std::runtime_error {
public:
    UsageError(const std::string& message, std::string usage)
        : std::runtime_error(message), usage_(std::move(usage)) {}
    const std::string& usage() const noexcept { return usage_; }

private:
    std::string usage_;
};

/// `--help` was requested; carries the help text (exit code 0).
class HelpRequested : public std::runtime_error {
public:
    explicit HelpRequested(const std::string& text) : std::runtime_error(text) {}
};

CliInvocation parse_args(int argc, const char* const* argv);

/// Runs a parsed invocation. CSV goes to `out` (or the --out file),
/// progress to `diag`. Returns the process exit code.
int execute(const CliInvocation& invocation, std::ostream& out, std::ostream& diag);

/// parse_args + execute with exit codes 0 (success), 1 (runtime failure)
/// and 2 (usage error).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& diag);

struct SelftestOptions {
    bool inject_f2_fault = false;
};

/// Fast oracle checks over every module. Prints one status line per check
/// and returns true when all pass.
bool run_selftest(std::ostream& out, const SelftestOptions& options = {});

}  // namespace bmcts
