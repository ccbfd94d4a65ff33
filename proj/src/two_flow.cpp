#include "fppihrg/two_flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "fppihrg/labeled_bp.hpp"
#include "fppihrg/stats.hpp"

namespace fppihrg {

namespace {

std::int64_t default_y_split_cap(std::int64_t n, std::int64_t a_n, int i_max, double lambda_tilde) {
    const double cap = 20.0 * (static_cast<double>(n) / static_cast<double>(a_n)) *
                       (static_cast<double>(i_max) / lambda_tilde);
    return static_cast<std::int64_t>(std::ceil(cap));
}

// One attempt; leaves `out` untouched and returns false when either flow
// fails to produce the required structure.
bool two_flow_attempt(const KernelModel& model, std::int64_t n, const TwoFlowOptions& options,
                      std::uint64_t seed_x, std::uint64_t seed_y, TwoFlowResult& out) {
    const LabelSpace space = make_label_space(model.kernel.mu, n);
    const double lambda_tilde = model.offspring.lambda_tilde;

    Rng rng_x(seed_x);
    const auto x_root = static_cast<std::int64_t>(rng_x.below(static_cast<std::uint64_t>(n)));
    LabeledFlow x_flow(model, space, x_root, nullptr);
    for (std::int64_t k = 0; k <= options.a_n; ++k) {
        if (!x_flow.can_split()) return false;
        x_flow.split(rng_x);
    }
    if (x_flow.alive_count() == 0) return false;

    std::unordered_map<std::int64_t, std::vector<std::int32_t>> x_alive;
    for (const LabeledParticle& p : x_flow.alive()) x_alive[p.label].push_back(p.generation);
    std::vector<std::uint8_t> forbidden(static_cast<std::size_t>(n), 0);
    std::int64_t forbidden_count = 0;
    for (std::int64_t label : x_flow.dead_order()) {
        auto& flag = forbidden[static_cast<std::size_t>(label)];
        if (!flag) {
            flag = 1;
            forbidden_count += 1;
        }
    }
    if (forbidden_count >= n) return false;

    Rng rng_y(seed_y);
    std::int64_t y_root = 0;
    do {
        y_root = static_cast<std::int64_t>(rng_y.below(static_cast<std::uint64_t>(n)));
    } while (forbidden[static_cast<std::size_t>(y_root)]);

    LabeledFlow y_flow(model, space, y_root, &forbidden);
    const std::int64_t cap = options.y_split_cap > 0
                                 ? options.y_split_cap
                                 : default_y_split_cap(n, options.a_n, options.i_max, lambda_tilde);
    std::vector<CollisionRecord> collisions;
    for (std::int64_t k = 0; k <= cap && static_cast<int>(collisions.size()) < options.i_max; ++k) {
        if (!y_flow.can_split()) break;
        const SplitEvent event = y_flow.split(rng_y);
        if (event.thinned) continue;
        auto hit = x_alive.find(event.label);
        if (hit == x_alive.end()) continue;
        CollisionRecord record;
        record.index = static_cast<int>(collisions.size()) + 1;
        record.split = event.split_index;
        record.split_time = event.time;
        record.residual = rng_y.exponential();
        record.label = event.label;
        record.type = event.type;
        record.gen_y = event.generation;
        const auto& gens = hit->second;
        const auto pick = static_cast<std::size_t>(rng_y.below(gens.size()));
        record.gen_x = gens[pick] - 1;
        record.x_multiplicity = static_cast<std::int64_t>(gens.size());
        for (const LabeledParticle& p : y_flow.alive()) {
            if (p.label == event.label) {
                record.y_label_alive_elsewhere = true;
                break;
            }
        }
        collisions.push_back(record);
    }
    if (collisions.empty()) return false;

    out.n = n;
    out.a_n = options.a_n;
    out.tau_x = x_flow.current_time();
    out.wx_hat = x_flow.w_estimate();
    out.wy_hat = y_flow.w_estimate();
    out.x_alive_total = x_flow.alive_count();
    out.x_alive_distinct = static_cast<std::int64_t>(x_alive.size());
    out.collisions = std::move(collisions);
    out.y_splits = y_flow.splits_performed() - 1;
    const PathAssembly assembly = assemble_path_statistics(out.tau_x, out.collisions);
    out.argmin_index = assembly.argmin_index;
    out.p_n = assembly.p_n;
    out.h_n = assembly.h_n;
    return true;
}

} // namespace

TwoFlowResult run_two_flow(const KernelModel& model, std::int64_t n, const TwoFlowOptions& options,
                           std::uint64_t seed) {
    if (options.a_n < 1) throw std::invalid_argument("run_two_flow: a_n must be at least 1");
    if (n < options.a_n + 2) throw std::invalid_argument("run_two_flow: n too small for a_n");
    if (options.i_max < 1) throw std::invalid_argument("run_two_flow: i_max must be at least 1");
    if (!(model.offspring.lambda_tilde > 0.0))
        throw std::invalid_argument("run_two_flow: supercritical kernel required");

    for (int attempt = 0; attempt < options.max_attempts; ++attempt) {
        TwoFlowResult result;
        const std::uint64_t seed_x = derive_seed(seed, "two_flow_x", static_cast<std::uint64_t>(attempt));
        const std::uint64_t seed_y = derive_seed(seed, "two_flow_y", static_cast<std::uint64_t>(attempt));
        if (two_flow_attempt(model, n, options, seed_x, seed_y, result)) {
            result.accepted = true;
            result.attempts = attempt + 1;
            return result;
        }
    }
    throw std::runtime_error("run_two_flow: no accepted replication within max_attempts");
}

PathAssembly assemble_path_statistics(double tau_x, const std::vector<CollisionRecord>& collisions) {
    if (collisions.empty())
        throw std::invalid_argument("assemble_path_statistics: no collision recorded");
    PathAssembly assembly;
    double best = std::numeric_limits<double>::infinity();
    const CollisionRecord* chosen = nullptr;
    for (const CollisionRecord& record : collisions) {
        const double candidate = record.split_time + record.residual;
        if (candidate < best) {
            best = candidate;
            chosen = &record;
        }
    }
    assembly.min_term = best;
    assembly.p_n = tau_x + best;
    assembly.argmin_index = chosen->index;
    assembly.h_n = static_cast<std::int64_t>(chosen->gen_x) + chosen->gen_y + 1;
    return assembly;
}

GumbelMinSample gumbel_min_draw(double lambda_tilde, int i_max, Rng& rng) {
    if (!(lambda_tilde > 0.0))
        throw std::invalid_argument("gumbel_min_draw: lambda_tilde must be positive");
    if (i_max < 1) throw std::invalid_argument("gumbel_min_draw: i_max must be at least 1");
    GumbelMinSample sample;
    sample.value = std::numeric_limits<double>::infinity();
    double arrival = 0.0;
    for (int i = 1; i <= i_max; ++i) {
        arrival += rng.exponential();
        const double value = std::log(arrival) / lambda_tilde + rng.exponential();
        if (value < sample.value) {
            sample.value = value;
            sample.argmin = i;
        }
    }
    return sample;
}

double gumbel_min_cdf(double z, double lambda_tilde) {
    return -std::expm1(-std::exp(lambda_tilde * z) / (lambda_tilde + 1.0));
}

double dominating_sum_draw(double lambda_tilde, Rng& rng) {
    if (!(lambda_tilde > 0.0))
        throw std::invalid_argument("dominating_sum_draw: lambda_tilde must be positive");
    const double success = 1.0 / (lambda_tilde + 1.0);
    double sum = 0.0;
    do {
        sum += rng.exponential(lambda_tilde);
    } while (rng.uniform() >= success);
    return sum;
}

std::vector<ArgminTailPoint> argmin_tail_check(const std::vector<int>& argmins,
                                               const std::vector<int>& k_grid,
                                               double lambda_tilde) {
    if (argmins.empty()) throw std::invalid_argument("argmin_tail_check: empty sample");
    const auto count = static_cast<double>(argmins.size());
    std::vector<ArgminTailPoint> out;
    out.reserve(k_grid.size());
    for (int k : k_grid) {
        ArgminTailPoint point;
        point.k = k;
        std::int64_t exceed = 0;
        for (int a : argmins)
            if (a > k) exceed += 1;
        point.empirical = static_cast<double>(exceed) / count;
        point.bound = std::pow(lambda_tilde / (lambda_tilde + 1.0), k);
        point.slack = 3.0 * std::sqrt(std::max(point.bound * (1.0 - point.bound), 1e-12) / count);
        point.pass = point.empirical <= point.bound + point.slack;
        out.push_back(point);
    }
    return out;
}

PppCheck ppp_check(const std::vector<std::array<double, 3>>& rescaled_c123,
                   const KernelModel& model) {
    if (rescaled_c123.size() < 500) throw std::invalid_argument("ppp_check: needs at least 500 runs");
    const double lambda_tilde = model.offspring.lambda_tilde;
    const StationaryVector pi = stationary_type_vector(model.offspring);
    double rate = 0.0;
    for (std::size_t s = 0; s < pi.pi.size(); ++s) rate += pi.pi[s] * pi.pi[s] / model.kernel.mu[s];
    rate *= lambda_tilde;

    std::vector<double> c1, c3, gaps;
    c1.reserve(rescaled_c123.size());
    c3.reserve(rescaled_c123.size());
    gaps.reserve(rescaled_c123.size());
    for (const auto& row : rescaled_c123) {
        c1.push_back(row[0]);
        c3.push_back(row[2]);
        gaps.push_back(row[1] - row[0]);
    }
    EmpiricalSample s1(c1);
    EmpiricalSample s3(std::move(c3));
    EmpiricalSample sg(gaps);

    PppCheck check;
    check.lambda_hat_theory = rate;
    check.lambda_hat_empirical = 1.0 / s1.mean();
    check.ks_c1_exp = ks_statistic(s1, [&](double x) { return cdf_exponential(x, rate); });
    check.ks_c3_gamma = ks_statistic(s3, [&](double x) { return cdf_gamma(x, 3.0, rate); });
    check.ks_gap_exp = ks_statistic(sg, [&](double x) { return cdf_exponential(x, rate); });

    double mean_c1 = s1.mean();
    double mean_gap = sg.mean();
    double cov = 0.0, var1 = 0.0, varg = 0.0;
    for (std::size_t i = 0; i < c1.size(); ++i) {
        const double d1 = c1[i] - mean_c1;
        const double dg = gaps[i] - mean_gap;
        cov += d1 * dg;
        var1 += d1 * d1;
        varg += dg * dg;
    }
    check.corr_gap_first = cov / std::sqrt(var1 * varg);
    return check;
}

} // namespace fppihrg
