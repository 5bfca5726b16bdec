#include "bmcts/extremum.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <string>

namespace bmcts {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

}  // namespace

double normal_pdf(double x) noexcept { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x * kInvSqrt2); }

NormalValues std_normal(double x) noexcept { return {normal_pdf(x), normal_cdf(x)}; }

double clark_f1(double a) noexcept { return a * normal_cdf(a) + normal_pdf(a); }

double clark_f2(double a) noexcept {
    const double cdf = normal_cdf(a);
    const double upper = normal_cdf(-a);  // 1 - Phi(a) without cancellation
    const double pdf = normal_pdf(a);
    return a * a * cdf * upper + (upper - cdf) * a * pdf - pdf * pdf;
}

// ---------------------------------------------------------------------------
// LookupTables

LookupTables::LookupTables(double alpha_min, double alpha_max, double step)
    : alpha_min_(alpha_min), alpha_max_(alpha_max), step_(step), inv_step_(1.0 / step) {
    if (!(alpha_max > alpha_min) || !(step > 0.0)) {
        throw std::invalid_argument("lookup table needs alpha_max > alpha_min and step > 0");
    }
    const auto n = static_cast<std::size_t>(std::llround((alpha_max - alpha_min) / step)) + 1;
    cdf_.resize(n);
    f1_.resize(n);
    f2_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = alpha_min + static_cast<double>(i) * step;
        cdf_[i] = normal_cdf(a);
        f1_[i] = clark_f1(a);
        f2_[i] = clark_f2(a);
    }
}

std::pair<std::size_t, double> LookupTables::locate(double a) const noexcept {
    const double pos = (a - alpha_min_) * inv_step_;
    auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= cdf_.size()) {
        i = cdf_.size() - 2;
    }
    return {i, pos - static_cast<double>(i)};
}

double LookupTables::cdf(double a) const noexcept {
    if (a <= alpha_min_) return 0.0;
    if (a >= alpha_max_) return 1.0;
    const auto [i, t] = locate(a);
    return cdf_[i] + t * (cdf_[i + 1] - cdf_[i]);
}

double LookupTables::f1(double a) const noexcept {
    if (a <= alpha_min_) return 0.0;
    if (a >= alpha_max_) return a;
    const auto [i, t] = locate(a);
    return f1_[i] + t * (f1_[i + 1] - f1_[i]);
}

double LookupTables::f2(double a) const noexcept {
    if (a <= alpha_min_ || a >= alpha_max_) return 0.0;
    const auto [i, t] = locate(a);
    return f2_[i] + t * (f2_[i + 1] - f2_[i]);
}

LookupTables LookupTables::with_f2_offset(double delta) const {
    LookupTables copy = *this;
    for (double& v : copy.f2_) {
        v += delta;
    }
    return copy;
}

const LookupTables& default_tables() {
    static const LookupTables tables;
    return tables;
}

// ---------------------------------------------------------------------------
// Pairwise Gaussian max

namespace {

void check_pair(const GaussianBelief& a, const GaussianBelief& b, double rho) {
    if (!(rho >= -1.0 && rho <= 1.0)) {
        throw std::invalid_argument("correlation must lie in [-1, 1], got " + std::to_string(rho));
    }
    if (!std::isfinite(a.mu) || !std::isfinite(b.mu) || !std::isfinite(a.sigma) ||
        !std::isfinite(b.sigma) || a.sigma < 0.0 || b.sigma < 0.0) {
        throw std::invalid_argument("Gaussian inputs must be finite with sigma >= 0");
    }
}

double combined_spread(const GaussianBelief& a, const GaussianBelief& b, double rho) noexcept {
    const double var = a.sigma * a.sigma - 2.0 * rho * a.sigma * b.sigma + b.sigma * b.sigma;
    return var > 0.0 ? std::sqrt(var) : 0.0;
}

}  // namespace

PairGeometry pair_geometry(const GaussianBelief& a, const GaussianBelief& b, double rho) {
    check_pair(a, b, rho);
    const double sigma_m = combined_spread(a, b, rho);
    const double alpha = sigma_m > 0.0 ? (a.mu - b.mu) / sigma_m : 0.0;
    return {alpha, sigma_m};
}

GaussianBelief clark_max_pair(const GaussianBelief& a, const GaussianBelief& b, double rho,
                              const LookupTables* tables) {
    check_pair(a, b, rho);
    const double sigma_m = combined_spread(a, b, rho);
    if (sigma_m == 0.0) {
        // A - B is constant: the larger mean always wins.
        return a.mu >= b.mu ? a : b;
    }
    const double alpha = (a.mu - b.mu) / sigma_m;
    double cdf, f1, f2;
    if (tables != nullptr) {
        cdf = tables->cdf(alpha);
        f1 = tables->f1(alpha);
        f2 = tables->f2(alpha);
    } else {
        cdf = normal_cdf(alpha);
        f1 = clark_f1(alpha);
        f2 = clark_f2(alpha);
    }
    const double va = a.sigma * a.sigma;
    const double vb = b.sigma * b.sigma;
    const double mu = b.mu + sigma_m * f1;
    const double var = vb + (va - vb) * cdf + sigma_m * sigma_m * f2;
    return {mu, var > 0.0 ? std::sqrt(var) : 0.0};
}

GaussianBelief clark_max_pair_direct(const GaussianBelief& a, const GaussianBelief& b, double rho) {
    check_pair(a, b, rho);
    const double sigma_m = combined_spread(a, b, rho);
    if (sigma_m == 0.0) {
        return a.mu >= b.mu ? a : b;
    }
    const double alpha = (a.mu - b.mu) / sigma_m;
    const double pdf = normal_pdf(alpha);
    const double cdf = normal_cdf(alpha);
    const double cdf_neg = normal_cdf(-alpha);
    const double mu = a.mu * cdf + b.mu * cdf_neg + pdf * sigma_m;
    const double second = (a.mu * a.mu + a.sigma * a.sigma) * cdf +
                          (b.mu * b.mu + b.sigma * b.sigma) * cdf_neg +
                          (a.mu + b.mu) * sigma_m * pdf;
    const double var = second - mu * mu;
    return {mu, var > 0.0 ? std::sqrt(var) : 0.0};
}

namespace detail {

GaussianBelief negated(const GaussianBelief& g) noexcept { return {-g.mu, g.sigma}; }

void check_nonempty(std::size_t count) {
    if (count == 0) {
        throw std::invalid_argument("cannot combine an empty set of beliefs");
    }
}

}  // namespace detail

GaussianBelief clark_min_pair(const GaussianBelief& a, const GaussianBelief& b, double rho,
                              const LookupTables* tables) {
    return detail::negated(clark_max_pair(detail::negated(a), detail::negated(b), rho, tables));
}

// ---------------------------------------------------------------------------
// Min-error combining

namespace {

double gaussian_cdf_at(const GaussianBelief& g, double x) noexcept {
    if (g.sigma == 0.0) {
        return x >= g.mu ? 1.0 : 0.0;
    }
    return normal_cdf((x - g.mu) / g.sigma);
}

// Standard normal deciles 0.1 .. 0.9.
constexpr std::array<double, 9> kDecileZ = {
    -1.2815515655446004, -0.8416212335729143, -0.5244005127080407,
    -0.2533471031357997, 0.0,                 0.2533471031357997,
    0.5244005127080407,  0.8416212335729143,  1.2815515655446004,
};

}  // namespace

double pair_error_estimate(const GaussianBelief& a, const GaussianBelief& b, double rho) {
    const GaussianBelief out = clark_max_pair(a, b, rho);
    if (out.sigma == 0.0) {
        return 0.0;
    }
    double worst = 0.0;
    for (const double z : kDecileZ) {
        const double x = out.mu + out.sigma * z;
        const double exact = gaussian_cdf_at(a, x) * gaussian_cdf_at(b, x);
        worst = std::max(worst, std::abs(exact - normal_cdf(z)));
    }
    return worst;
}

GaussianBelief combine_max_min_error(std::span<const GaussianBelief> children, double rho,
                                     const LookupTables* tables) {
    detail::check_nonempty(children.size());
    if (children.size() == 1) {
        return children.front();
    }

    struct Candidate {
        double error;
        std::size_t i;
        std::size_t j;
        bool operator>(const Candidate& o) const {
            if (error != o.error) return error > o.error;
            if (i != o.i) return i > o.i;
            return j > o.j;
        }
    };

    std::vector<GaussianBelief> slots(children.begin(), children.end());
    std::vector<bool> alive(slots.size(), true);
    slots.reserve(2 * children.size());
    alive.reserve(2 * children.size());
    std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> heap;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        for (std::size_t j = i + 1; j < slots.size(); ++j) {
            heap.push({pair_error_estimate(slots[i], slots[j], rho), i, j});
        }
    }

    std::size_t remaining = slots.size();
    while (remaining > 1) {
        const Candidate best = heap.top();
        heap.pop();
        if (!alive[best.i] || !alive[best.j]) {
            continue;  // stale entry
        }
        alive[best.i] = false;
        alive[best.j] = false;
        const GaussianBelief merged = clark_max_pair(slots[best.i], slots[best.j], rho, tables);
        const std::size_t id = slots.size();
        slots.push_back(merged);
        alive.push_back(true);
        --remaining;
        for (std::size_t m = 0; m < id; ++m) {
            if (alive[m]) {
                heap.push({pair_error_estimate(slots[m], merged, rho), m, id});
            }
        }
    }
    for (std::size_t k = slots.size(); k-- > 0;) {
        if (alive[k]) {
            return slots[k];
        }
    }
    return slots.back();
}

GaussianBelief combine_min_min_error(std::span<const GaussianBelief> children, double rho,
                                     const LookupTables* tables) {
    detail::check_nonempty(children.size());
    std::vector<GaussianBelief> flipped;
    flipped.reserve(children.size());
    for (const auto& c : children) {
        flipped.push_back(detail::negated(c));
    }
    return detail::negated(combine_max_min_error(flipped, rho, tables));
}

// ---------------------------------------------------------------------------
// Grid extremum

void grid_extremum_from_cdfs(std::span<const std::span<const double>> child_cdfs, bool is_max,
                             std::span<double> pdf, std::span<double> scratch) {
    const std::size_t n = pdf.size();
    // scratch <- CDF of the extremum
    if (is_max) {
        std::fill(scratch.begin(), scratch.end(), 1.0);
        for (const auto& cdf : child_cdfs) {
            for (std::size_t k = 0; k < n; ++k) scratch[k] *= cdf[k];
        }
    } else {
        std::fill(scratch.begin(), scratch.end(), 1.0);
        for (const auto& cdf : child_cdfs) {
            for (std::size_t k = 0; k < n; ++k) scratch[k] *= 1.0 - cdf[k];
        }
        for (std::size_t k = 0; k < n; ++k) scratch[k] = 1.0 - scratch[k];
    }

    const double inv_h = static_cast<double>(n - 1);
    pdf[0] = (scratch[1] - scratch[0]) * inv_h;
    pdf[n - 1] = (scratch[n - 1] - scratch[n - 2]) * inv_h;
    for (std::size_t k = 1; k + 1 < n; ++k) {
        pdf[k] = 0.5 * (scratch[k + 1] - scratch[k - 1]) * inv_h;
    }
    for (double& v : pdf) {
        v = std::max(v, 0.0);
    }
    normalize_pdf(pdf, 1.0 / inv_h);
}

namespace {

GridBelief grid_extremum(std::span<const GridBelief> children, bool is_max) {
    if (children.empty()) {
        throw std::invalid_argument("cannot combine an empty set of grid beliefs");
    }
    const std::size_t n = children.front().size();
    if (n < kMinGridPoints) {
        throw std::invalid_argument("grid belief has fewer than 16 points");
    }
    std::vector<std::vector<double>> cdfs;
    cdfs.reserve(children.size());
    for (const auto& c : children) {
        if (c.size() != n) {
            throw std::invalid_argument("grid beliefs use different grids (" + std::to_string(n) +
                                        " vs " + std::to_string(c.size()) + " points)");
        }
        cdfs.push_back(grid_cdf(c));
    }
    std::vector<std::span<const double>> views(cdfs.begin(), cdfs.end());
    GridBelief out;
    out.pdf.resize(n);
    std::vector<double> scratch(n);
    grid_extremum_from_cdfs(views, is_max, out.pdf, scratch);
    return out;
}

}  // namespace

GridBelief grid_max(std::span<const GridBelief> children) { return grid_extremum(children, true); }

GridBelief grid_min(std::span<const GridBelief> children) { return grid_extremum(children, false); }

}  // namespace bmcts
