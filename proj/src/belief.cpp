#include "bmcts/belief.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace bmcts {

GridAxis::GridAxis(std::size_t points)
    : step_(0.0), x_(points), log_x_(points), log_1mx_(points) {
    if (points < kMinGridPoints) {
        throw std::invalid_argument("grid needs at least " + std::to_string(kMinGridPoints) +
                                    " points, got " + std::to_string(points));
    }
    step_ = 1.0 / static_cast<double>(points - 1);
    for (std::size_t k = 0; k < points; ++k) {
        // Exact endpoints so that log(0) is -inf rather than a tiny value.
        const double x = k + 1 == points ? 1.0 : static_cast<double>(k) * step_;
        x_[k] = x;
        log_x_[k] = std::log(x);
        log_1mx_[k] = std::log1p(-x);
    }
}

BetaPosterior beta_uniform_prior() noexcept { return {1.0, 1.0}; }

BetaPosterior beta_update(BetaPosterior post, int outcome) noexcept {
    if (outcome != 0) {
        post.alpha += 1.0;
    } else {
        post.beta += 1.0;
    }
    return post;
}

Moments beta_moments(const BetaPosterior& post) noexcept {
    const double s = post.alpha + post.beta;
    return {post.alpha / s, post.alpha * post.beta / (s * s * (s + 1.0))};
}

GaussianBelief beta_to_gaussian(const BetaPosterior& post) noexcept {
    const Moments m = beta_moments(post);
    return {m.mean, std::sqrt(m.variance)};
}

namespace {

// (e - 1) * log(t) with the convention 0 * log(0) = 0.
double power_term(double exponent, double log_t) noexcept {
    return exponent == 0.0 ? 0.0 : exponent * log_t;
}

}  // namespace

void fill_beta_density(const BetaPosterior& post, const GridAxis& axis, std::vector<double>& pdf) {
    const std::size_t n = axis.size();
    pdf.resize(n);
    const double a1 = post.alpha - 1.0;
    const double b1 = post.beta - 1.0;
    const auto lx = axis.log_x();
    const auto l1mx = axis.log_1mx();

    // Work in log space relative to the maximum; large counts would
    // otherwise underflow every sample.
    double max_log = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
        const double l = power_term(a1, lx[k]) + power_term(b1, l1mx[k]);
        pdf[k] = l;
        max_log = std::max(max_log, l);
    }
    for (std::size_t k = 0; k < n; ++k) {
        pdf[k] = std::exp(pdf[k] - max_log);
    }
    normalize_pdf(pdf, axis.step());
}

GridBelief beta_to_grid(const BetaPosterior& post, const GridAxis& axis) {
    GridBelief g;
    fill_beta_density(post, axis, g.pdf);
    return g;
}

GridBelief beta_to_grid(const BetaPosterior& post, std::size_t grid_points) {
    return beta_to_grid(post, GridAxis(grid_points));
}

double trapezoid(std::span<const double> values, double step) noexcept {
    if (values.size() < 2) {
        return 0.0;
    }
    double sum = 0.5 * (values.front() + values.back());
    for (std::size_t k = 1; k + 1 < values.size(); ++k) {
        sum += values[k];
    }
    return sum * step;
}

void normalize_pdf(std::span<double> pdf, double step) noexcept {
    const double total = trapezoid(pdf, step);
    if (total > 0.0) {
        const double inv = 1.0 / total;
        for (double& v : pdf) {
            v *= inv;
        }
    }
}

Moments grid_moments(std::span<const double> pdf) noexcept {
    const std::size_t n = pdf.size();
    if (n < 2) {
        return {};
    }
    const double h = 1.0 / static_cast<double>(n - 1);
    auto weight = [n](std::size_t k) { return (k == 0 || k + 1 == n) ? 0.5 : 1.0; };

    double mass = 0.0;
    double first = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double w = weight(k) * pdf[k];
        mass += w;
        first += w * (static_cast<double>(k) * h);
    }
    mass *= h;
    first *= h;
    const double mean = mass > 0.0 ? first / mass : 0.0;

    double second = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double d = static_cast<double>(k) * h - mean;
        second += weight(k) * pdf[k] * d * d;
    }
    second *= h;
    return {mean, mass > 0.0 ? second / mass : 0.0};
}

Moments grid_moments(const GridBelief& g) noexcept { return grid_moments(std::span<const double>(g.pdf)); }

void grid_cdf(std::span<const double> pdf, std::span<double> cdf) noexcept {
    const std::size_t n = pdf.size();
    if (n == 0) {
        return;
    }
    const double half_h = 0.5 / static_cast<double>(n - 1);
    double acc = 0.0;
    cdf[0] = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
        acc += half_h * (pdf[k - 1] + pdf[k]);
        cdf[k] = acc;
    }
}

std::vector<double> grid_cdf(const GridBelief& g) {
    std::vector<double> cdf(g.size());
    grid_cdf(g.pdf, cdf);
    return cdf;
}

}  // namespace bmcts
