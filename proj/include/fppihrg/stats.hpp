#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fppihrg/rng.hpp"

namespace fppihrg {

// Sorted sample with cached moments; the unit all statistical checks run on.
class EmpiricalSample {
public:
    EmpiricalSample() = default;
    explicit EmpiricalSample(std::vector<double> values);

    const std::vector<double>& values() const { return values_; }
    std::size_t size() const { return values_.size(); }
    double mean() const { return mean_; }
    double variance() const { return variance_; } // unbiased, 0 for size < 2
    double std_error_of_mean() const;
    // Linear-interpolation quantile, q in [0,1].
    double quantile(double q) const;
    // Right-continuous empirical CDF.
    double ecdf(double x) const;

private:
    std::vector<double> values_;
    double mean_ = 0.0;
    double variance_ = 0.0;
};

double cdf_normal(double x);
double cdf_gumbel(double x);
double cdf_exponential(double x, double rate);
// Regularized lower incomplete gamma at rate*x; series / continued-fraction split.
double cdf_gamma(double x, double shape, double rate);

// One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
double ks_statistic(const EmpiricalSample& sample, const std::function<double(double)>& cdf);
// Two-sample Kolmogorov-Smirnov statistic (merge walk, tie-safe).
double ks_two_sample(const EmpiricalSample& a, const EmpiricalSample& b);

double sample_normal(Rng& rng);

// n-th harmonic number; the exact mean of max of n unit exponentials.
double harmonic_number(std::int64_t n);

struct MaxExpIdentityResult {
    double ks = 0.0;           // two-sample KS between the two samplers
    double mean_partial = 0.0; // mean of sum_{i<=m} E_i / i
    double mean_max = 0.0;     // mean of max of m unit exponentials
};

// Distributional identity: sum_{i=1}^m E_i/i equals the maximum of m unit
// exponentials. Returns the two-sample KS over `reps` draws from each side.
MaxExpIdentityResult max_exp_identity_check(std::int64_t m, std::int64_t reps, std::uint64_t seed);

struct GumbelSumMoments {
    double mean = 0.0;
    double variance = 0.0;
    double ks_vs_single = 0.0; // KS of (Y1+Y2-Y3 - mean)/sd against its own normal fit, unused slots 0
};

// Moments of Y1 + Y2 - Y3 for i.i.d. standard Gumbel draws.
GumbelSumMoments gumbel_sum_moments(std::int64_t reps, std::uint64_t seed);

// Writes "value<TAB>ecdf" lines, one per sorted sample point.
void write_ecdf(const EmpiricalSample& sample, const std::string& path);

// Composite 20-point Gauss-Legendre quadrature; exact for polynomials of
// degree <= 39 on each panel.
double integrate_smooth(const std::function<double(double)>& f, double a, double b,
                        int panels = 1);

} // namespace fppihrg
