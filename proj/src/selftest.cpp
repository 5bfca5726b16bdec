#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "bmcts/cli.hpp"

namespace bmcts {

namespace {

struct Check {
    bool pass;
    std::string detail;
};

// Composite Simpson moments of max(A, B) for independent Gaussians.
Moments max_moments_by_quadrature(const GaussianBelief& a, const GaussianBelief& b) {
    const double spread = 12.0 * std::max(a.sigma, b.sigma);
    const double lo = std::min(a.mu, b.mu) - spread;
    const double hi = std::max(a.mu, b.mu) + spread;
    constexpr int kIntervals = 20000;
    const double h = (hi - lo) / kIntervals;
    double m0 = 0.0, m1 = 0.0, m2 = 0.0;
    for (int i = 0; i <= kIntervals; ++i) {
        const double x = lo + i * h;
        const double za = (x - a.mu) / a.sigma;
        const double zb = (x - b.mu) / b.sigma;
        const double f = normal_pdf(za) / a.sigma * normal_cdf(zb) +
                         normal_pdf(zb) / b.sigma * normal_cdf(za);
        const double w = (i == 0 || i == kIntervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        m0 += w * f;
        m1 += w * f * x;
        m2 += w * f * x * x;
    }
    m0 *= h / 3.0;
    m1 *= h / 3.0;
    m2 *= h / 3.0;
    const double mean = m1 / m0;
    return {mean, m2 / m0 - mean * mean};
}

std::string fmt(double v) { return format_float(v); }

// Inputs of the standard sweep: mu2 = 0, sigma2 = 1, sigma1 = ratio,
// mu1 placed so that the normalized gap equals alpha.
template <typename F>
void for_each_sweep_pair(F&& f) {
    for (const double alpha : {-4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0}) {
        for (const double ratio : {0.25, 0.5, 1.0, 2.0, 4.0}) {
            const double sigma_m = std::sqrt(ratio * ratio + 1.0);
            f(GaussianBelief{alpha * sigma_m, ratio}, GaussianBelief{0.0, 1.0});
        }
    }
}

Check check_std_normal() {
    const double e1 = std::abs(std_normal(0.0).pdf - 0.3989422804014327);
    const double e2 = std::abs(std_normal(0.0).cdf - 0.5);
    const double e3 = std::abs(std_normal(-1.959963984540054).cdf - 0.025);
    const double e4 = std::abs(std_normal(8.0).cdf - 1.0);
    const bool pass = e1 < 1e-12 && e2 < 1e-12 && e3 < 1e-9 && e4 < 1e-7;
    return {pass, "max error " + fmt(std::max({e1, e2, e3, e4}))};
}

Check check_tables(const LookupTables& tables) {
    double worst = 0.0;
    for (double a = -9.0; a <= 9.0; a += 0.000731) {
        worst = std::max(worst, std::abs(tables.cdf(a) - normal_cdf(a)));
        worst = std::max(worst, std::abs(tables.f1(a) - clark_f1(a)));
        worst = std::max(worst, std::abs(tables.f2(a) - clark_f2(a)));
    }
    return {worst <= 1e-5, "max interpolation error " + fmt(worst)};
}

Check check_clark_quadrature() {
    double worst_mean = 0.0;
    double worst_var = 0.0;
    for_each_sweep_pair([&](const GaussianBelief& a, const GaussianBelief& b) {
        const GaussianBelief clark = clark_max_pair(a, b, 0.0);
        const Moments q = max_moments_by_quadrature(a, b);
        worst_mean = std::max(worst_mean, std::abs(clark.mu - q.mean));
        worst_var = std::max(worst_var, std::abs(clark.sigma * clark.sigma - q.variance) / q.variance);
    });
    return {worst_mean <= 1e-3 && worst_var <= 1e-2,
            "mean error " + fmt(worst_mean) + ", relative variance error " + fmt(worst_var)};
}

Check check_restructured_identity(const LookupTables& tables) {
    double exact_gap = 0.0;
    double table_gap = 0.0;
    for_each_sweep_pair([&](const GaussianBelief& a, const GaussianBelief& b) {
        const GaussianBelief direct = clark_max_pair_direct(a, b);
        const GaussianBelief exact = clark_max_pair(a, b, 0.0, nullptr);
        const GaussianBelief tabled = clark_max_pair(a, b, 0.0, &tables);
        const double scale = std::max(1.0, a.sigma * a.sigma + b.sigma * b.sigma);
        const double dv = direct.sigma * direct.sigma;
        exact_gap = std::max({exact_gap, std::abs(exact.mu - direct.mu),
                              std::abs(exact.sigma * exact.sigma - dv)});
        table_gap = std::max({table_gap, std::abs(tabled.mu - direct.mu) / scale,
                              std::abs(tabled.sigma * tabled.sigma - dv) / scale});
    });
    return {exact_gap <= 1e-9 && table_gap <= 1e-4,
            "exact gap " + fmt(exact_gap) + ", table gap " + fmt(table_gap)};
}

Check check_grid_order_statistics() {
    const GridBelief flat = beta_to_grid(beta_uniform_prior(), kDefaultGridPoints);
    const std::vector<GridBelief> two{flat, flat};
    const std::vector<GridBelief> three{flat, flat, flat};
    const Moments max2 = grid_moments(grid_max(two));
    const Moments max3 = grid_moments(grid_max(three));
    const Moments min2 = grid_moments(grid_min(two));
    const double err = std::max({std::abs(max2.mean - 2.0 / 3.0), std::abs(max2.variance - 1.0 / 18.0),
                                 std::abs(max3.mean - 0.75), std::abs(min2.mean - 1.0 / 3.0)});
    return {err <= 1e-3, "max error " + fmt(err)};
}

Check check_beta_grid() {
    double worst = 0.0;
    for (const BetaPosterior p : {BetaPosterior{1, 1}, BetaPosterior{2, 1}, BetaPosterior{4, 2},
                                  BetaPosterior{30, 70}, BetaPosterior{3, 9}}) {
        const Moments g = grid_moments(beta_to_grid(p));
        const Moments c = beta_moments(p);
        worst = std::max({worst, std::abs(g.mean - c.mean), std::abs(g.variance - c.variance)});
    }
    return {worst <= 1e-4, "max moment error " + fmt(worst)};
}

Check check_combiner_agreement() {
    Rng rng(20240601);
    std::vector<double> diffs;
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<GaussianBelief> kids(5);
        for (auto& k : kids) {
            k.mu = uniform_open01(rng);
            k.sigma = 0.01 + 0.29 * uniform_open01(rng);
        }
        SplitMix64 order(static_cast<std::uint64_t>(trial));
        const double r = combine_max_random_order(std::span<const GaussianBelief>(kids), 0.0, order).mu;
        const double m = combine_max_min_error(kids).mu;
        diffs.push_back(std::abs(r - m));
    }
    std::sort(diffs.begin(), diffs.end());
    const double p99 = diffs[static_cast<std::size_t>(0.99 * (diffs.size() - 1))];
    return {p99 <= 0.02, "99th percentile mean gap " + fmt(p99)};
}

Check check_convergence_smoke() {
    ConvergenceConfig on_policy;
    on_policy.shape = separated_test_shape();
    on_policy.policy = {PolicyKind::BayesUct2, Backend::Gaussian};
    on_policy.trials = 20000;
    on_policy.runs = 4;
    on_policy.master_seed = 7;
    on_policy.tolerance = 0.05;
    const auto a = convergence_study(on_policy);

    ConvergenceConfig off_policy = on_policy;
    off_policy.policy = {PolicyKind::UniformRandom, Backend::Numeric};
    off_policy.runs = 2;
    const auto b = convergence_study(off_policy);
    const bool pass = a.passed() == a.runs.size() && b.passed() == b.runs.size();
    return {pass, "bayes2g " + std::to_string(a.passed()) + "/" + std::to_string(a.runs.size()) +
                      ", randomn " + std::to_string(b.passed()) + "/" + std::to_string(b.runs.size())};
}

Check check_paired_smoke() {
    ExperimentConfig c;
    c.tree.depth = 2;
    c.tree.width = 5;
    c.num_trees = 200;
    c.max_trials = 500;
    c.eval_every = 50;
    c.master_seed = 11;
    c.algorithms = {Policy{PolicyKind::Uct}, Policy{PolicyKind::BayesUct2}};
    const auto curves = run_error_curve(c);
    double uct = 0.0, bayes = 0.0;
    for (std::size_t k = 1; k < curves[0].points.size(); ++k) {
        uct += curves[0].points[k].mean_error;
        bayes += curves[1].points[k].mean_error;
    }
    return {bayes < uct, "summed error uct " + fmt(uct) + " vs bayes2g " + fmt(bayes)};
}

}  // namespace

bool run_selftest(std::ostream& out, const SelftestOptions& options) {
    const LookupTables tables = options.inject_f2_fault ? default_tables().with_f2_offset(0.01)
                                                        : default_tables();
    const std::vector<std::pair<const char*, std::function<Check()>>> checks = {
        {"std_normal", check_std_normal},
        {"lookup_tables", [&] { return check_tables(tables); }},
        {"clark_vs_quadrature", check_clark_quadrature},
        {"restructured_identity", [&] { return check_restructured_identity(tables); }},
        {"grid_order_statistics", check_grid_order_statistics},
        {"beta_grid_moments", check_beta_grid},
        {"combiner_agreement", check_combiner_agreement},
        {"convergence_smoke", check_convergence_smoke},
        {"paired_error_smoke", check_paired_smoke},
    };
    std::size_t passed = 0;
    for (const auto& [name, run] : checks) {
        const Check c = run();
        passed += c.pass ? 1 : 0;
        out << (c.pass ? "PASS " : "FAIL ") << name << ": " << c.detail << '\n';
    }
    out << "selftest: " << passed << "/" << checks.size() << " checks passed\n";
    return passed == checks.size();
}

}  // namespace bmcts
