#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bmcts/cli.hpp"

using namespace bmcts;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "bmcts");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

CliInvocation parse(std::vector<std::string> args) {
    args.insert(args.begin(), "bmcts");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return parse_args(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("valid table1 invocation") {
    const CliInvocation inv = parse({"table1", "--seed", "42", "--depth", "2", "--width", "5", "--payoffs",
                                     "uniform", "--algos", "uct,bayes2", "--backend", "gaussian"});
    CHECK(inv.command == Subcommand::Table1);
    CHECK(inv.config.master_seed == 42);
    CHECK(inv.config.tree.depth == 2);
    CHECK(inv.config.tree.width == 5);
    CHECK_FALSE(inv.config.tree.random_width);
    REQUIRE(inv.config.algorithms.size() == 2);
    CHECK(inv.config.algorithms[1] == Policy{PolicyKind::BayesUct2, Backend::Gaussian});
    CHECK(inv.config.eval_every == 10);
    CHECK(inv.config.error_threshold == 0.01);
    CHECK(inv.config.num_trees == 1000);
}

TEST_CASE("width ranges and other flags") {
    const CliInvocation inv =
        parse({"curve", "--seed", "1", "--width-range", "1:10", "--root-width-range", "3:7", "--payoffs",
               "gaussian", "--backend", "numeric", "--algos", "uct,bayes1,bayes2g", "--combiner", "minerr",
               "--grid-points", "500", "--trees", "12", "--max-trials", "300", "--eval-every", "30",
               "--jobs", "2", "--quiet"});
    CHECK(inv.config.tree.random_width);
    CHECK(inv.config.tree.widths.lo == 1);
    CHECK(inv.config.tree.widths.hi == 10);
    CHECK(inv.config.tree.root_widths.lo == 3);
    CHECK(inv.config.tree.payoffs == PayoffModel::Gaussian);
    CHECK(inv.config.algorithms[1].backend == Backend::Numeric);
    CHECK(inv.config.algorithms[2].backend == Backend::Gaussian);
    CHECK(inv.config.combiner == CombinerKind::MinError);
    CHECK(inv.config.grid_points == 500);
    CHECK(inv.config.jobs == 2);
    CHECK(inv.quiet);
}

TEST_CASE("usage errors exit with code 2") {
    CHECK(run({"curve", "--depth", "2"}).code == 2);
    CHECK(run({"curve", "--seed", "1", "--width", "5", "--width-range", "1:10"}).code == 2);
    CHECK(run({"curve", "--seed", "1", "--bogus"}).code == 2);
    CHECK(run({"curve", "--seed", "1", "--algos", "uct,alphabeta"}).code == 2);
    CHECK(run({"curve", "--seed", "1", "--width-range", "5:2"}).code == 2);
    CHECK(run({"curve", "--seed", "1", "--root-width-range", "2:4"}).code == 2);
    CHECK(run({"curve", "--seed", "1", "--backend", "exact"}).code == 2);
    CHECK(run({"curve", "--seed", "1", "--max-trials", "5", "--eval-every", "10"}).code == 2);
    CHECK(run({"converge", "--seed", "1", "--algos", "uct,bayes2"}).code == 2);
    CHECK(run({}).code == 2);
    CHECK_THROWS_AS(parse({"fig4a", "--trees", "3"}), UsageError);
    const Result r = run({"table1", "--seed", "x"});
    CHECK(r.code == 2);
    CHECK(r.err.find("Usage") != std::string::npos);
}

TEST_CASE("help exits cleanly") {
    const Result r = run({"--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("table1") != std::string::npos);
}

TEST_CASE("curve output is self-describing and deterministic") {
    const std::vector<std::string> args{"curve", "--seed", "9", "--trees", "15", "--max-trials", "100",
                                        "--eval-every", "25", "--quiet"};
    const Result a = run(args);
    const Result b = run(args);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.err.empty());
    CHECK(a.out.starts_with("# argv: bmcts curve --seed 9 --trees 15 --max-trials 100 --eval-every 25 --quiet\n"
                            "algorithm,backend,trial,mean_error,stderr,num_trees\n"));
}

TEST_CASE("progress goes to the diagnostic stream only") {
    const Result r = run({"curve", "--seed", "9", "--trees", "100", "--max-trials", "20"});
    REQUIRE(r.code == 0);
    CHECK(r.err.find("100/100 trees") != std::string::npos);
    CHECK(r.out.find("100/100 trees") == std::string::npos);
}

TEST_CASE("output file") {
    const std::string path = "test_cli_output.csv";
    const Result r = run({"bench", "--seed", "1", "--trees", "2", "--max-trials", "50", "--out", path, "--quiet"});
    REQUIRE(r.code == 0);
    CHECK(r.out.empty());
    std::ifstream in(path);
    std::stringstream content;
    content << in.rdbuf();
    CHECK(content.str().find("algorithm,backend,raw_trials_per_sec") != std::string::npos);
    std::remove(path.c_str());

    CHECK(run({"bench", "--seed", "1", "--trees", "1", "--max-trials", "10", "--out",
               "/nonexistent-dir/x.csv", "--quiet"})
              .code == 1);
}

TEST_CASE("converge subcommand") {
    const Result r = run({"converge", "--seed", "3", "--runs", "3", "--max-trials", "20000", "--quiet"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("run,algorithm,backend,trials,root_mean,true_value,abs_error,within_tolerance\n") !=
          std::string::npos);
    CHECK(r.out.find("0,bayes2,gaussian,20000,") != std::string::npos);
}

TEST_CASE("selftest") {
    const Result good = run({"selftest"});
    CHECK(good.code == 0);
    CHECK(good.out.find("FAIL") == std::string::npos);
    CHECK(run({"selftest"}).out == good.out);

    const Result bad = run({"selftest", "--inject-f2-fault"});
    CHECK(bad.code == 1);
    CHECK(bad.out.find("FAIL restructured_identity") != std::string::npos);
}
