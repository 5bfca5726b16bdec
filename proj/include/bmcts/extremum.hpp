#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "bmcts/belief.hpp"
#include "bmcts/seeding.hpp"

namespace bmcts {

struct NormalValues {
    double pdf;
    double cdf;
};

/// Standard normal density and distribution function.
NormalValues std_normal(double x) noexcept;
double normal_pdf(double x) noexcept;
double normal_cdf(double x) noexcept;

/// Mean kernel of the pairwise max: F1(a) = a Phi(a) + phi(a).
double clark_f1(double a) noexcept;
/// Variance kernel of the pairwise max:
/// F2(a) = a^2 Phi(1 - Phi) + (1 - 2 Phi) a phi - phi^2.
double clark_f2(double a) noexcept;

/// Linearly interpolated tables of Phi, F1 and F2 on a uniform alpha grid.
/// Immutable after construction and safe for concurrent reads.
class LookupTables {
public:
    static constexpr double kDefaultMin = -8.0;
    static constexpr double kDefaultMax = 8.0;
    static constexpr double kDefaultStep = 1.0 / 1024.0;

    LookupTables(double alpha_min = kDefaultMin, double alpha_max = kDefaultMax,
                 double step = kDefaultStep);

    double alpha_min() const noexcept { return alpha_min_; }
    double alpha_max() const noexcept { return alpha_max_; }
    double step() const noexcept { return step_; }
    std::size_t size() const noexcept { return cdf_.size(); }

    double cdf(double a) const noexcept;
    double f1(double a) const noexcept;
    double f2(double a) const noexcept;

    /// Returns a copy whose F2 samples are shifted by `delta`. Used as a
    /// negative control by the self-test.
    LookupTables with_f2_offset(double delta) const;

private:
    // Index and fractional position of a in-range query.
    std::pair<std::size_t, double> locate(double a) const noexcept;

    double alpha_min_;
    double alpha_max_;
    double step_;
    double inv_step_;
    std::vector<double> cdf_;
    std::vector<double> f1_;
    std::vector<double> f2_;
};

/// Process-wide tables with the default range and step.
const LookupTables& default_tables();

/// Normalized mean gap and combined spread of a Gaussian pair.
struct PairGeometry {
    double alpha;
    double sigma_m;
};

PairGeometry pair_geometry(const GaussianBelief& a, const GaussianBelief& b, double rho);

/// Moment-matched Gaussian of max(A, B) in the restructured F1/F2 form.
/// `tables == nullptr` evaluates Phi, F1 and F2 exactly. Throws
/// std::invalid_argument for rho outside [-1, 1] or non-finite inputs.
GaussianBelief clark_max_pair(const GaussianBelief& a, const GaussianBelief& b, double rho = 0.0,
                              const LookupTables* tables = nullptr);

/// Same quantity from the direct first and second moment expressions, with
/// exact functions. Reference for the restructured form.
GaussianBelief clark_max_pair_direct(const GaussianBelief& a, const GaussianBelief& b,
                                     double rho = 0.0);

/// min(A, B) = -max(-A, -B).
GaussianBelief clark_min_pair(const GaussianBelief& a, const GaussianBelief& b, double rho = 0.0,
                              const LookupTables* tables = nullptr);

/// Approximation-error proxy for combining a pair: the largest absolute gap
/// between the exact CDF of max(A, B) (product of the input CDFs) and the
/// moment-matched Gaussian CDF, taken over the nine decile points of the
/// matched output.
double pair_error_estimate(const GaussianBelief& a, const GaussianBelief& b, double rho = 0.0);

enum class CombinerKind { RandomOrder, MinError };

/// Shuffles the children with `gen`, then folds clark_max_pair left to right.
template <std::uniform_random_bit_generator G>
GaussianBelief combine_max_random_order(std::span<const GaussianBelief> children, double rho,
                                        G& gen, const LookupTables* tables = nullptr);

template <std::uniform_random_bit_generator G>
GaussianBelief combine_min_random_order(std::span<const GaussianBelief> children, double rho,
                                        G& gen, const LookupTables* tables = nullptr);

/// Greedy pairwise combining: repeatedly merges the pair with the smallest
/// pair_error_estimate. O(K^2 log K) time, O(K^2) candidate storage.
GaussianBelief combine_max_min_error(std::span<const GaussianBelief> children, double rho = 0.0,
                                     const LookupTables* tables = nullptr);
GaussianBelief combine_min_min_error(std::span<const GaussianBelief> children, double rho = 0.0,
                                     const LookupTables* tables = nullptr);

/// Exact K-way extremum on a shared grid: product of child CDFs (MAX) or of
/// survival functions (MIN), differentiated by central differences and
/// renormalized. Throws on empty input or mismatched grids.
GridBelief grid_max(std::span<const GridBelief> children);
GridBelief grid_min(std::span<const GridBelief> children);

/// Core of grid_max/grid_min operating on precomputed child CDFs. `pdf` and
/// `scratch` must have the grid size.
void grid_extremum_from_cdfs(std::span<const std::span<const double>> child_cdfs, bool is_max,
                             std::span<double> pdf, std::span<double> scratch);

// ---------------------------------------------------------------------------

namespace detail {
GaussianBelief negated(const GaussianBelief& g) noexcept;
void check_nonempty(std::size_t count);
}  // namespace detail

template <std::uniform_random_bit_generator G>
GaussianBelief combine_max_random_order(std::span<const GaussianBelief> children, double rho,
                                        G& gen, const LookupTables* tables) {
    detail::check_nonempty(children.size());
    if (children.size() == 1) {
        return children.front();
    }
    std::vector<GaussianBelief> order(children.begin(), children.end());
    for (std::size_t i = order.size() - 1; i > 0; --i) {
        std::swap(order[i], order[uniform_index(gen, i + 1)]);
    }
    GaussianBelief acc = order.front();
    for (std::size_t i = 1; i < order.size(); ++i) {
        acc = clark_max_pair(acc, order[i], rho, tables);
    }
    return acc;
}

template <std::uniform_random_bit_generator G>
GaussianBelief combine_min_random_order(std::span<const GaussianBelief> children, double rho,
                                        G& gen, const LookupTables* tables) {
    detail::check_nonempty(children.size());
    std::vector<GaussianBelief> flipped;
    flipped.reserve(children.size());
    for (const auto& c : children) {
        flipped.push_back(detail::negated(c));
    }
    return detail::negated(combine_max_random_order(std::span<const GaussianBelief>(flipped), rho,
                                                    gen, tables));
}

}  // namespace bmcts
