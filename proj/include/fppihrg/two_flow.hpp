#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "fppihrg/kernel.hpp"
#include "fppihrg/rng.hpp"

namespace fppihrg {

struct CollisionRecord {
    int index = 0;              // 1-based collision number
    std::int64_t split = 0;     // y-flow split index at which the label died
    double split_time = 0.0;
    double residual = 0.0;      // fresh unit exponential on the frozen half-edge
    std::int64_t label = 0;
    std::int32_t type = 0;
    std::int32_t gen_x = 0;     // hops from x to the x-side end of the collision edge
    std::int32_t gen_y = 0;     // hops from y to the collision vertex
    std::int64_t x_multiplicity = 0;       // x-alive particles sharing the label
    bool y_label_alive_elsewhere = false;  // another y-alive particle shares the label
};

struct TwoFlowOptions {
    std::int64_t a_n = 0;     // x flow freezes after split index a_n
    int i_max = 12;
    std::int64_t y_split_cap = 0; // 0 = ceil(20 * (n / a_n) * (i_max / lambda_tilde))
    int max_attempts = 2000;
};

struct TwoFlowResult {
    bool accepted = false;
    int attempts = 0;
    std::int64_t n = 0;
    std::int64_t a_n = 0;
    double tau_x = 0.0;     // freeze time of the x flow
    double wx_hat = 0.0;    // exp(-lt * tau_x) * x alive count
    double wy_hat = 0.0;    // same for the y flow at its final split
    std::int64_t x_alive_total = 0;
    std::int64_t x_alive_distinct = 0;
    std::vector<CollisionRecord> collisions;
    int argmin_index = 0;   // 1-based into collisions
    double p_n = 0.0;       // tau_x + min_i(split_time_i + residual_i)
    std::int64_t h_n = 0;   // gen_x + gen_y + 1 at the argmin
    std::int64_t y_splits = 0; // last split index the y flow performed
};

// Freeze-and-collide construction: the x flow runs to split a_n and freezes;
// the y flow starts from a uniform root outside x's dead labels, excludes
// those labels from every pool, and each y death hitting an x-alive label is
// a collision candidate. A replication is rejected (fresh sub-seeds) when the
// x flow dies early or the y flow produces no collision within its cap.
TwoFlowResult run_two_flow(const KernelModel& model, std::int64_t n, const TwoFlowOptions& options,
                           std::uint64_t seed);

struct PathAssembly {
    double p_n = 0.0;
    std::int64_t h_n = 0;
    int argmin_index = 0;   // 1-based
    double min_term = 0.0;  // min_i(split_time_i + residual_i)
};

// Minimum over the collision candidates. Throws when none was recorded.
PathAssembly assemble_path_statistics(double tau_x, const std::vector<CollisionRecord>& collisions);

struct GumbelMinSample {
    double value = 0.0;
    int argmin = 0; // 1-based point index
};

// min over i <= i_max of log(P_i)/lt + E_i for a unit-rate Poisson process
// P_1 < P_2 < ... and independent unit exponentials E_i.
GumbelMinSample gumbel_min_draw(double lambda_tilde, int i_max, Rng& rng);

// P(min <= z) = 1 - exp(-exp(lt*z)/(lt+1)).
double gumbel_min_cdf(double z, double lambda_tilde);

// One draw of sum_{i<=N} E_i with N geometric(1/(lt+1)) on {1,2,...} and
// E_i ~ Exp(lt); stochastically dominates the rescaled connection split.
double dominating_sum_draw(double lambda_tilde, Rng& rng);

struct ArgminTailPoint {
    int k = 0;
    double empirical = 0.0; // P(argmin > k)
    double bound = 0.0;     // (lt/(lt+1))^k
    double slack = 0.0;     // 3 binomial standard errors at the bound
    bool pass = false;
};

std::vector<ArgminTailPoint> argmin_tail_check(const std::vector<int>& argmins,
                                               const std::vector<int>& k_grid,
                                               double lambda_tilde);

struct PppCheck {
    double lambda_hat_theory = 0.0;   // lt * sum_s pi_s^2 / mu_s
    double lambda_hat_empirical = 0.0; // 1 / mean(rescaled first collision)
    double ks_c1_exp = 0.0;    // rescaled C1 vs Exp(rate)
    double ks_c3_gamma = 0.0;  // rescaled C3 vs Gamma(3, rate)
    double ks_gap_exp = 0.0;   // rescaled C2-C1 vs Exp(rate)
    double corr_gap_first = 0.0;
};

// rescaled_c123: per accepted run, (C1, C2, C3) * a_n / n. Needs >= 500 runs.
PppCheck ppp_check(const std::vector<std::array<double, 3>>& rescaled_c123,
                   const KernelModel& model);

} // namespace fppihrg
