#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bmcts {

/// Beta posterior over a leaf arm's win rate: prior pseudo-counts plus
/// observed wins (alpha) and losses (beta).
struct BetaPosterior {
    double alpha = 1.0;
    double beta = 1.0;

    friend bool operator==(const BetaPosterior&, const BetaPosterior&) = default;
};

/// Moment-matched Gaussian summary of a value distribution.
struct GaussianBelief {
    double mu = 0.0;
    double sigma = 0.0;

    friend bool operator==(const GaussianBelief&, const GaussianBelief&) = default;
};

/// First two moments of a distribution.
struct Moments {
    double mean = 0.0;
    double variance = 0.0;
};

/// Default number of grid points for numeric beliefs.
inline constexpr std::size_t kDefaultGridPoints = 1000;
inline constexpr std::size_t kMinGridPoints = 16;

/// Equally spaced abscissae x_k = k / (G - 1) on [0, 1], with cached logs
/// of x and 1 - x for fast beta density evaluation.
class GridAxis {
public:
    explicit GridAxis(std::size_t points = kDefaultGridPoints);

    std::size_t size() const noexcept { return x_.size(); }
    double step() const noexcept { return step_; }
    double x(std::size_t k) const noexcept { return x_[k]; }
    std::span<const double> points() const noexcept { return x_; }
    std::span<const double> log_x() const noexcept { return log_x_; }
    std::span<const double> log_1mx() const noexcept { return log_1mx_; }

private:
    double step_;
    std::vector<double> x_;
    std::vector<double> log_x_;
    std::vector<double> log_1mx_;
};

/// Numeric PDF sampled on the G equally spaced points of [0, 1].
/// Normalized so that its trapezoid integral is 1.
struct GridBelief {
    std::vector<double> pdf;

    std::size_t size() const noexcept { return pdf.size(); }
    double step() const noexcept { return 1.0 / static_cast<double>(pdf.size() - 1); }
    double x(std::size_t k) const noexcept { return static_cast<double>(k) * step(); }
};

BetaPosterior beta_uniform_prior() noexcept;

/// Conjugate update with one binary outcome (nonzero counts as a win).
BetaPosterior beta_update(BetaPosterior post, int outcome) noexcept;

Moments beta_moments(const BetaPosterior& post) noexcept;

GaussianBelief beta_to_gaussian(const BetaPosterior& post) noexcept;

/// Beta density evaluated on the grid and renormalized. Throws
/// std::invalid_argument when G < 16.
GridBelief beta_to_grid(const BetaPosterior& post, std::size_t grid_points = kDefaultGridPoints);
GridBelief beta_to_grid(const BetaPosterior& post, const GridAxis& axis);

/// Writes the renormalized beta density into `pdf` (sized to the axis).
void fill_beta_density(const BetaPosterior& post, const GridAxis& axis, std::vector<double>& pdf);

/// Trapezoid integral of samples with spacing `step`.
double trapezoid(std::span<const double> values, double step) noexcept;

/// Scales `pdf` so that its trapezoid integral is 1. Leaves an all-zero
/// input untouched.
void normalize_pdf(std::span<double> pdf, double step) noexcept;

Moments grid_moments(const GridBelief& g) noexcept;
Moments grid_moments(std::span<const double> pdf) noexcept;

/// Cumulative trapezoid integral of the density; cdf[0] = 0.
std::vector<double> grid_cdf(const GridBelief& g);
void grid_cdf(std::span<const double> pdf, std::span<double> cdf) noexcept;

}  // namespace bmcts
