#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fppihrg/stats.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

using namespace fppihrg;

TEST_CASE("empirical sample moments and quantiles on a hand vector") {
    EmpiricalSample s({3.0, 1.0, 2.0});
    CHECK(s.size() == 3);
    CHECK(s.mean() == doctest::Approx(2.0));
    CHECK(s.variance() == doctest::Approx(1.0));
    CHECK(s.std_error_of_mean() == doctest::Approx(std::sqrt(1.0 / 3.0)));
    CHECK(s.values().front() == 1.0);
    CHECK(s.values().back() == 3.0);
    CHECK(s.quantile(0.0) == doctest::Approx(1.0));
    CHECK(s.quantile(0.5) == doctest::Approx(2.0));
    CHECK(s.quantile(0.25) == doctest::Approx(1.5));
    CHECK(s.quantile(1.0) == doctest::Approx(3.0));
}

TEST_CASE("ecdf is right-continuous") {
    EmpiricalSample s({1.0, 2.0, 3.0});
    CHECK(s.ecdf(0.5) == doctest::Approx(0.0));
    CHECK(s.ecdf(1.0) == doctest::Approx(1.0 / 3.0));
    CHECK(s.ecdf(1.999) == doctest::Approx(1.0 / 3.0));
    CHECK(s.ecdf(2.0) == doctest::Approx(2.0 / 3.0));
    CHECK(s.ecdf(3.0) == doctest::Approx(1.0));
    CHECK(s.ecdf(99.0) == doctest::Approx(1.0));
}

TEST_CASE("degenerate samples") {
    EmpiricalSample empty;
    CHECK(empty.size() == 0);
    EmpiricalSample one({4.0});
    CHECK(one.mean() == doctest::Approx(4.0));
    CHECK(one.variance() == doctest::Approx(0.0));
}

TEST_CASE("distribution functions against high-precision references") {
    CHECK(cdf_normal(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(cdf_normal(-1.5) == doctest::Approx(0.066807201268858066).epsilon(1e-14));
    CHECK(cdf_normal(0.7) == doctest::Approx(0.75803634777692699).epsilon(1e-14));
    CHECK(cdf_normal(2.25) == doctest::Approx(0.9877755273449553).epsilon(1e-14));

    CHECK(cdf_gumbel(-1.0) == doctest::Approx(0.065988035845312537).epsilon(1e-14));
    CHECK(cdf_gumbel(0.5) == doctest::Approx(0.54523921189260506).epsilon(1e-14));

    CHECK(cdf_exponential(0.3, 2.0) == doctest::Approx(0.45118836390597357).epsilon(1e-14));
    CHECK(cdf_exponential(-1.0, 2.0) == doctest::Approx(0.0));

    CHECK(cdf_gamma(2.0, 3.0, 1.0) == doctest::Approx(0.32332358381693654).epsilon(1e-12));
    // chi-square with one degree of freedom at 1 = P(|Z| <= 1)
    CHECK(cdf_gamma(1.0, 0.5, 0.5) == doctest::Approx(0.6826894921370859).epsilon(1e-12));
    CHECK(cdf_gamma(0.0, 3.0, 1.0) == doctest::Approx(0.0));
    // shape 1 collapses to the exponential
    for (double x : {0.1, 0.7, 2.5})
        CHECK(cdf_gamma(x, 1.0, 2.0) == doctest::Approx(cdf_exponential(x, 2.0)).epsilon(1e-12));
}

TEST_CASE("one-sample ks statistic is exact on a two-point sample") {
    EmpiricalSample s({0.25, 0.75});
    auto unit_cdf = [](double x) { return std::min(1.0, std::max(0.0, x)); };
    CHECK(ks_statistic(s, unit_cdf) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("two-sample ks statistic on hand samples") {
    EmpiricalSample a({0.0, 1.0});
    EmpiricalSample b({0.5, 1.5});
    CHECK(ks_two_sample(a, b) == doctest::Approx(0.5).epsilon(1e-15));
    EmpiricalSample c({1.0, 2.0, 3.0});
    CHECK(ks_two_sample(c, c) == doctest::Approx(0.0));
    // ties across samples must not inflate the gap
    EmpiricalSample d({1.0, 2.0});
    EmpiricalSample e({1.0, 2.0, 2.0, 9.0});
    CHECK(ks_two_sample(d, e) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("harmonic numbers") {
    CHECK(harmonic_number(1) == doctest::Approx(1.0));
    CHECK(harmonic_number(7) == doctest::Approx(2.5928571428571429).epsilon(1e-15));
    CHECK(harmonic_number(100) == doctest::Approx(5.1873775176396203).epsilon(1e-14));
}

TEST_CASE("normal sampler matches its cdf") {
    Rng r(3);
    std::vector<double> draws;
    draws.reserve(100000);
    for (int i = 0; i < 100000; ++i) draws.push_back(sample_normal(r));
    EmpiricalSample s(std::move(draws));
    CHECK(std::abs(s.mean()) < 0.013);
    CHECK(std::abs(s.variance() - 1.0) < 0.02);
    CHECK(ks_statistic(s, [](double x) { return cdf_normal(x); }) < 0.006);
}

TEST_CASE("partial harmonic sums of exponentials match running maxima in law") {
    const auto res = max_exp_identity_check(3, 4000, 99);
    CHECK(res.ks < 0.04);
    CHECK(res.mean_partial == doctest::Approx(11.0 / 6.0).epsilon(0.05));
    CHECK(res.mean_max == doctest::Approx(11.0 / 6.0).epsilon(0.05));
}

TEST_CASE("two-sided gumbel sum moments") {
    const auto m = gumbel_sum_moments(40000, 5);
    CHECK(std::abs(m.mean - 0.57721566490153286) < 0.04);
    CHECK(std::abs(m.variance - 4.9348022005446793) < 0.25);
}

TEST_CASE("ecdf file is a monotone tab-separated table ending at 1") {
    EmpiricalSample s({2.0, 0.5, 1.0, 1.5});
    const std::string path = "test_stats_ecdf.tsv";
    write_ecdf(s, path);
    std::ifstream in(path);
    REQUIRE(in.good());
    double prev_v = -1e300;
    double prev_f = 0.0;
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        double v = 0.0;
        double f = 0.0;
        ls >> v >> f;
        CHECK(v >= prev_v);
        CHECK(f >= prev_f);
        prev_v = v;
        prev_f = f;
        ++rows;
    }
    CHECK(rows == 4);
    CHECK(prev_f == doctest::Approx(1.0));
    std::remove(path.c_str());
}

TEST_CASE("quadrature is exact on polynomials and accurate on smooth functions") {
    CHECK(integrate_smooth([](double x) { return x * x * x; }, 0.0, 1.0) ==
          doctest::Approx(0.25).epsilon(1e-15));
    CHECK(integrate_smooth([](double x) { return std::exp(x); }, 0.0, 2.0, 4) ==
          doctest::Approx(std::exp(2.0) - 1.0).epsilon(1e-13));
    CHECK(integrate_smooth([](double) { return 1.0; }, -3.0, 5.0) == doctest::Approx(8.0));
}
