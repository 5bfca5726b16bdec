#include "bmcts/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <vector>

namespace bmcts {

namespace {

struct RawOptions {
    std::optional<std::uint64_t> seed;
    std::uint32_t depth = 2;
    std::optional<std::uint32_t> width;
    std::string width_range;
    std::string root_width_range;
    std::string payoffs = "uniform";
    std::string algos;
    std::string backend = "gaussian";
    std::optional<std::uint32_t> trees;
    std::optional<std::uint64_t> max_trials;
    std::uint64_t eval_every = 10;
    std::optional<double> threshold;
    std::string out;
    std::string combiner = "random";
    std::size_t grid_points = kDefaultGridPoints;
    unsigned jobs = 1;
    double payout_cost = 1e-4;
    std::uint32_t runs = 100;
    bool quiet = false;
    bool inject_f2_fault = false;
};

WidthRange parse_range(const std::string& text, const std::string& flag) {
    const auto colon = text.find(':');
    try {
        if (colon != std::string::npos) {
            std::size_t used_lo = 0;
            std::size_t used_hi = 0;
            const std::string lo_text = text.substr(0, colon);
            const std::string hi_text = text.substr(colon + 1);
            const unsigned long lo = std::stoul(lo_text, &used_lo);
            const unsigned long hi = std::stoul(hi_text, &used_hi);
            if (used_lo == lo_text.size() && used_hi == hi_text.size() && lo >= 1 && lo <= hi) {
                return {static_cast<std::uint32_t>(lo), static_cast<std::uint32_t>(hi)};
            }
        }
    } catch (const std::exception&) {
    }
    throw std::invalid_argument(flag + " expects lo:hi with 1 <= lo <= hi, got '" + text + "'");
}

std::vector<Policy> parse_algorithms(const std::string& text, Backend backend) {
    std::vector<Policy> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto p = parse_policy(item, backend);
        if (!p) {
            throw std::invalid_argument("unknown algorithm '" + item +
                                        "' (expected uct, bayes1, bayes2, random, hybrid)");
        }
        out.push_back(*p);
    }
    if (out.empty()) throw std::invalid_argument("--algos must name at least one algorithm");
    return out;
}

struct SubcommandInfo {
    Subcommand command;
    const char* name;
    const char* description;
    std::uint64_t default_max_trials;
};

constexpr SubcommandInfo kSubcommands[] = {
    {Subcommand::Curve, "curve", "Greedy decision error curves over a paired tree set", 2000},
    {Subcommand::Table1, "table1", "Trials until the mean error reaches the threshold", 20000},
    {Subcommand::Fig4a, "fig4a", "Root-child estimation error binned by visit count", 2000},
    {Subcommand::Hybrid, "hybrid", "UCT vs Bayes-UCT2 vs hybrid (UCT sampling, Bayes answers)",
     2000},
    {Subcommand::Bench, "bench", "Raw and payout-adjusted trial throughput", 2000},
    {Subcommand::Converge, "converge", "Root convergence on a fixed separated tree", 200000},
};

}  // namespace

CliInvocation parse_args(int argc, const char* const* argv) {
    CLI::App app{"Bayesian Monte-Carlo tree search on bandit trees", "bmcts"};
    app.require_subcommand(1);
    app.allow_extras(false);
    RawOptions raw;

    std::vector<std::pair<CLI::App*, const SubcommandInfo*>> subs;
    for (const auto& info : kSubcommands) {
        CLI::App* sub = app.add_subcommand(info.name, info.description);
        sub->add_option("--seed", raw.seed, "Master seed")->required();
        sub->add_option("--depth", raw.depth, "Decision levels below the root (>= 1)");
        auto* width = sub->add_option("--width", raw.width, "Fixed width of every interior node");
        auto* range = sub->add_option("--width-range", raw.width_range,
                                      "Random width lo:hi for non-root nodes");
        sub->add_option("--root-width-range", raw.root_width_range,
                        "Random root width lo:hi (default 2:10)")
            ->needs(range);
        width->excludes(range);
        sub->add_option("--payoffs", raw.payoffs, "Leaf payoff model")
            ->check(CLI::IsMember({"uniform", "gaussian"}));
        sub->add_option("--algos", raw.algos,
                        "Comma list of uct, bayes1, bayes2, random, hybrid (suffix g/n pins the "
                        "backend)");
        sub->add_option("--backend", raw.backend, "Belief backend for Bayesian policies")
            ->check(CLI::IsMember({"gaussian", "numeric"}));
        sub->add_option("--trees", raw.trees, "Number of paired random trees");
        sub->add_option("--max-trials", raw.max_trials, "Trials per tree");
        sub->add_option("--eval-every", raw.eval_every, "Evaluation checkpoint spacing");
        sub->add_option("--threshold", raw.threshold,
                        "Error threshold (table1) or convergence tolerance (converge)");
        sub->add_option("--out", raw.out, "Output CSV path (default standard output)");
        sub->add_option("--combiner", raw.combiner, "Gaussian combining order")
            ->check(CLI::IsMember({"random", "minerr"}));
        sub->add_option("--grid-points", raw.grid_points, "Grid points for numeric beliefs")
            ->check(CLI::Range(std::size_t{16}, std::size_t{1} << 20));
        sub->add_option("--jobs", raw.jobs, "Worker threads")->check(CLI::Range(1u, 1024u));
        sub->add_option("--payout-cost", raw.payout_cost, "Seconds per playout for bench")
            ->check(CLI::NonNegativeNumber);
        if (info.command == Subcommand::Converge) {
            sub->add_option("--runs", raw.runs, "Independent runs")->check(CLI::PositiveNumber);
        }
        sub->add_flag("--quiet", raw.quiet, "Suppress progress output");
        subs.emplace_back(sub, &info);
    }
    CLI::App* selftest = app.add_subcommand("selftest", "Fast oracle checks of every module");
    selftest->add_flag("--inject-f2-fault", raw.inject_f2_fault,
                       "Corrupt the F2 lookup table (negative control)");
    selftest->add_option("--out", raw.out, "Output path (default standard output)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        throw HelpRequested(app.help());
    } catch (const CLI::CallForAllHelp&) {
        throw HelpRequested(app.help("", CLI::AppFormatMode::All));
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what(), app.help());
    }

    CliInvocation inv;
    inv.argv_line = "bmcts";
    for (int i = 1; i < argc; ++i) {
        inv.argv_line += ' ';
        inv.argv_line += argv[i];
    }
    inv.out_path = raw.out;
    inv.quiet = raw.quiet;
    inv.inject_f2_fault = raw.inject_f2_fault;

    if (selftest->parsed()) {
        inv.command = Subcommand::Selftest;
        return inv;
    }

    const SubcommandInfo* info = nullptr;
    for (const auto& [sub, i] : subs) {
        if (sub->parsed()) info = i;
    }
    inv.command = info->command;

    try {
        ExperimentConfig& c = inv.config;
        c.master_seed = *raw.seed;
        c.tree.depth = raw.depth;
        if (!raw.width_range.empty()) {
            c.tree.random_width = true;
            c.tree.widths = parse_range(raw.width_range, "--width-range");
            if (!raw.root_width_range.empty()) {
                c.tree.root_widths = parse_range(raw.root_width_range, "--root-width-range");
            }
        } else {
            c.tree.width = raw.width.value_or(5);
        }
        c.tree.payoffs = raw.payoffs == "gaussian" ? PayoffModel::Gaussian : PayoffModel::Uniform;
        const Backend backend = raw.backend == "numeric" ? Backend::Numeric : Backend::Gaussian;
        const bool converge = info->command == Subcommand::Converge;
        const std::string default_algos = converge ? "bayes2" : "uct,bayes2";
        c.algorithms = parse_algorithms(raw.algos.empty() ? default_algos : raw.algos, backend);
        if (converge && c.algorithms.size() != 1) {
            throw std::invalid_argument("converge takes exactly one algorithm");
        }
        c.num_trees = raw.trees.value_or(1000);
        c.max_trials = raw.max_trials.value_or(info->default_max_trials);
        c.eval_every = raw.eval_every;
        c.error_threshold = converge ? 0.01 : raw.threshold.value_or(0.01);
        c.combiner = raw.combiner == "minerr" ? CombinerKind::MinError : CombinerKind::RandomOrder;
        c.grid_points = raw.grid_points;
        c.jobs = raw.jobs;
        c.payout_cost_sec = raw.payout_cost;
        inv.runs = raw.runs;
        inv.tolerance = converge ? raw.threshold.value_or(0.02) : 0.02;
        if (!converge) {
            c.validate();
        } else {
            c.tree.validate();
        }
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what(), app.help());
    }
    return inv;
}

int execute(const CliInvocation& inv, std::ostream& out, std::ostream& diag) {
    std::ostringstream csv;
    bool ok = true;
    ExperimentConfig config = inv.config;
    if (!inv.quiet) {
        config.progress = [&diag](const std::string& line) { diag << line << '\n' << std::flush; };
    }

    if (inv.command == Subcommand::Selftest) {
        ok = run_selftest(csv, SelftestOptions{inv.inject_f2_fault});
    } else {
        csv << "# argv: " << inv.argv_line << '\n';
        switch (inv.command) {
            case Subcommand::Curve: {
                const auto curves = run_error_curve(config);
                write_curve_csv(csv, curves, config.num_trees);
                break;
            }
            case Subcommand::Table1: {
                const auto results = trials_to_threshold(config);
                write_table1_csv(csv, config.tree, results, config.max_trials);
                break;
            }
            case Subcommand::Fig4a: {
                const auto results = estimation_error_binned(config);
                write_fig4a_csv(csv, results);
                break;
            }
            case Subcommand::Hybrid: {
                const auto curves = run_hybrid_study(config);
                write_curve_csv(csv, curves, config.num_trees);
                break;
            }
            case Subcommand::Bench: {
                const auto results = speed_benchmark(config);
                write_bench_csv(csv, results);
                break;
            }
            case Subcommand::Converge: {
                ConvergenceConfig cc;
                cc.shape = separated_test_shape();
                cc.policy = config.algorithms.front();
                cc.trials = config.max_trials;
                cc.runs = inv.runs;
                cc.master_seed = config.master_seed;
                cc.tolerance = inv.tolerance;
                cc.grid_points = config.grid_points;
                cc.combiner = config.combiner;
                cc.jobs = config.jobs;
                cc.progress = config.progress;
                const auto report = convergence_study(cc);
                write_converge_csv(csv, report, inv.tolerance);
                if (!inv.quiet) {
                    diag << report.passed() << "/" << report.runs.size()
                         << " runs within tolerance\n";
                }
                break;
            }
            case Subcommand::Selftest:
                break;
        }
    }

    if (inv.out_path.empty()) {
        out << csv.str() << std::flush;
    } else {
        std::ofstream file(inv.out_path, std::ios::binary);
        if (!file) {
            throw std::runtime_error("cannot open output file '" + inv.out_path + "'");
        }
        file << csv.str();
        if (!file.flush()) {
            throw std::runtime_error("failed writing '" + inv.out_path + "'");
        }
    }
    return ok ? 0 : 1;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& diag) {
    CliInvocation inv;
    try {
        inv = parse_args(argc, argv);
    } catch (const HelpRequested& h) {
        out << h.what();
        return 0;
    } catch (const UsageError& e) {
        diag << "error: " << e.what() << "\n\n" << e.usage();
        return 2;
    }
    try {
        return execute(inv, out, diag);
    } catch (const std::exception& e) {
        diag << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace bmcts
