#include "fppihrg/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <utility>

namespace fppihrg {

EmpiricalSample::EmpiricalSample(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw std::invalid_argument("EmpiricalSample: empty sample");
    std::sort(values_.begin(), values_.end());
    double sum = 0.0;
    for (double v : values_) sum += v;
    mean_ = sum / static_cast<double>(values_.size());
    if (values_.size() > 1) {
        double ss = 0.0;
        for (double v : values_) ss += (v - mean_) * (v - mean_);
        variance_ = ss / static_cast<double>(values_.size() - 1);
    }
}

double EmpiricalSample::std_error_of_mean() const {
    return std::sqrt(variance_ / static_cast<double>(values_.size()));
}

double EmpiricalSample::quantile(double q) const {
    if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile: q must lie in [0,1]");
    const std::size_t n = values_.size();
    if (n == 1) return values_[0];
    const double pos = q * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= n) return values_.back();
    const double frac = pos - static_cast<double>(lo);
    return values_[lo] * (1.0 - frac) + values_[lo + 1] * frac;
}

double EmpiricalSample::ecdf(double x) const {
    const auto it = std::upper_bound(values_.begin(), values_.end(), x);
    return static_cast<double>(it - values_.begin()) / static_cast<double>(values_.size());
}

double cdf_normal(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double cdf_gumbel(double x) { return std::exp(-std::exp(-x)); }

double cdf_exponential(double x, double rate) {
    if (rate <= 0.0) throw std::invalid_argument("cdf_exponential: rate must be positive");
    if (x <= 0.0) return 0.0;
    return -std::expm1(-rate * x);
}

namespace {

// Regularized lower incomplete gamma P(a, x), power series branch (x < a+1).
double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    for (int k = 1; k < 100000; ++k) {
        term *= x / (a + static_cast<double>(k));
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a, x), Lentz continued fraction (x >= a+1).
double gamma_q_cont_fraction(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 100000; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

} // namespace

double cdf_gamma(double x, double shape, double rate) {
    if (shape <= 0.0 || rate <= 0.0) throw std::invalid_argument("cdf_gamma: shape and rate must be positive");
    const double z = rate * x;
    if (z <= 0.0) return 0.0;
    if (z < shape + 1.0) return gamma_p_series(shape, z);
    return 1.0 - gamma_q_cont_fraction(shape, z);
}

double ks_statistic(const EmpiricalSample& sample, const std::function<double(double)>& cdf) {
    const auto& xs = sample.values();
    const auto n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        d = std::max(d, f - static_cast<double>(i) / n);
        d = std::max(d, static_cast<double>(i + 1) / n - f);
    }
    return d;
}

double ks_two_sample(const EmpiricalSample& a, const EmpiricalSample& b) {
    const auto& xs = a.values();
    const auto& ys = b.values();
    const auto na = static_cast<double>(xs.size());
    const auto nb = static_cast<double>(ys.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < xs.size() && j < ys.size()) {
        const double v = std::min(xs[i], ys[j]);
        while (i < xs.size() && xs[i] <= v) ++i;
        while (j < ys.size() && ys[j] <= v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

double sample_normal(Rng& rng) {
    const double u = rng.uniform_open();
    const double v = rng.uniform();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * 3.14159265358979323846 * v);
}

double harmonic_number(std::int64_t n) {
    if (n < 0) throw std::invalid_argument("harmonic_number: n must be nonnegative");
    double h = 0.0;
    for (std::int64_t i = 1; i <= n; ++i) h += 1.0 / static_cast<double>(i);
    return h;
}

MaxExpIdentityResult max_exp_identity_check(std::int64_t m, std::int64_t reps, std::uint64_t seed) {
    if (m < 1 || reps < 1) throw std::invalid_argument("max_exp_identity_check: m and reps must be positive");
    std::vector<double> partial(static_cast<std::size_t>(reps));
    std::vector<double> maxima(static_cast<std::size_t>(reps));
    for (std::int64_t rep = 0; rep < reps; ++rep) {
        Rng ra(derive_seed(seed, "max_exp_partial", static_cast<std::uint64_t>(rep)));
        Rng rb(derive_seed(seed, "max_exp_max", static_cast<std::uint64_t>(rep)));
        double s = 0.0;
        for (std::int64_t i = 1; i <= m; ++i) s += ra.exponential() / static_cast<double>(i);
        double mx = 0.0;
        for (std::int64_t i = 0; i < m; ++i) mx = std::max(mx, rb.exponential());
        partial[static_cast<std::size_t>(rep)] = s;
        maxima[static_cast<std::size_t>(rep)] = mx;
    }
    EmpiricalSample sa(std::move(partial));
    EmpiricalSample sb(std::move(maxima));
    return MaxExpIdentityResult{ks_two_sample(sa, sb), sa.mean(), sb.mean()};
}

GumbelSumMoments gumbel_sum_moments(std::int64_t reps, std::uint64_t seed) {
    if (reps < 2) throw std::invalid_argument("gumbel_sum_moments: reps must be at least 2");
    std::vector<double> vals(static_cast<std::size_t>(reps));
    for (std::int64_t rep = 0; rep < reps; ++rep) {
        Rng rng(derive_seed(seed, "gumbel_sum", static_cast<std::uint64_t>(rep)));
        vals[static_cast<std::size_t>(rep)] = rng.gumbel() + rng.gumbel() - rng.gumbel();
    }
    EmpiricalSample s(std::move(vals));
    return GumbelSumMoments{s.mean(), s.variance(), 0.0};
}

void write_ecdf(const EmpiricalSample& sample, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_ecdf: cannot open " + path);
    const auto& xs = sample.values();
    const auto n = static_cast<double>(xs.size());
    char line[64];
    for (std::size_t i = 0; i < xs.size(); ++i) {
        std::snprintf(line, sizeof(line), "%.17g\t%.17g\n", xs[i], static_cast<double>(i + 1) / n);
        out << line;
    }
}

namespace {

// Gauss-Legendre nodes/weights on [-1,1], computed once by Newton iteration.
const std::vector<std::pair<double, double>>& gauss_legendre_20() {
    static const std::vector<std::pair<double, double>> rule = [] {
        const int n = 20;
        std::vector<std::pair<double, double>> out(n);
        for (int i = 0; i < n; ++i) {
            double x = std::cos(3.14159265358979323846 * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
            double dp = 0.0;
            for (int iter = 0; iter < 100; ++iter) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
                    p0 = p1;
                    p1 = p2;
                }
                dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
                const double dx = -p1 / dp;
                x += dx;
                if (std::abs(dx) < 1e-16) break;
            }
            out[static_cast<std::size_t>(i)] = {x, 2.0 / ((1.0 - x * x) * dp * dp)};
        }
        return out;
    }();
    return rule;
}

} // namespace

double integrate_smooth(const std::function<double(double)>& f, double a, double b, int panels) {
    if (panels < 1) throw std::invalid_argument("integrate_smooth: panels must be positive");
    const double width = (b - a) / static_cast<double>(panels);
    double acc = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + width * static_cast<double>(p);
        const double mid = lo + 0.5 * width;
        const double half = 0.5 * width;
        double panel = 0.0;
        for (const auto& [node, weight] : gauss_legendre_20())
            panel += weight * f(mid + half * node);
        acc += panel * half;
    }
    return acc;
}

} // namespace fppihrg
