#include "fppihrg/bp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fppihrg/graph.hpp"
#include "fppihrg/stats.hpp"

namespace fppihrg {

OffspringLaw OffspringLaw::poisson(const KernelModel& model) {
    OffspringLaw law;
    law.mode_ = Mode::Poisson;
    law.type_count_ = model.kernel.type_count();
    law.lambda_tilde_ = model.offspring.lambda_tilde;
    law.mean_ = model.offspring.lambda;
    return law;
}

OffspringLaw OffspringLaw::binomial(const KernelModel& model, std::int64_t n) {
    if (n < 1) throw std::invalid_argument("OffspringLaw::binomial: n must be positive");
    OffspringLaw law;
    law.mode_ = Mode::Binomial;
    law.type_count_ = model.kernel.type_count();
    law.lambda_tilde_ = model.offspring.lambda_tilde;
    const auto counts = type_counts(model.kernel.mu, n);
    const int r = law.type_count_;
    law.trials_.assign(static_cast<std::size_t>(r), std::vector<std::int64_t>(static_cast<std::size_t>(r), 0));
    law.prob_.assign(static_cast<std::size_t>(r), std::vector<double>(static_cast<std::size_t>(r), 0.0));
    for (int s = 0; s < r; ++s) {
        for (int t = 0; t < r; ++t) {
            law.trials_[s][t] = counts[static_cast<std::size_t>(t)] - (s == t ? 1 : 0);
            law.prob_[s][t] = std::min(model.kernel.kappa[s][t] / static_cast<double>(n), 1.0);
        }
    }
    return law;
}

OffspringLaw OffspringLaw::deterministic(std::int64_t children) {
    if (children < 0) throw std::invalid_argument("OffspringLaw::deterministic: children must be nonnegative");
    OffspringLaw law;
    law.mode_ = Mode::Deterministic;
    law.type_count_ = 1;
    law.lambda_tilde_ = static_cast<double>(children) - 1.0;
    law.deterministic_children_ = children;
    return law;
}

void OffspringLaw::sample_counts(Rng& rng, int split_type, std::vector<std::int64_t>& out) const {
    if (split_type < 0 || split_type >= type_count_)
        throw std::invalid_argument("OffspringLaw::sample_counts: split_type out of range");
    out.assign(static_cast<std::size_t>(type_count_), 0);
    const auto s = static_cast<std::size_t>(split_type);
    switch (mode_) {
    case Mode::Poisson:
        for (int t = 0; t < type_count_; ++t)
            out[static_cast<std::size_t>(t)] = sample_poisson(rng, mean_[s][static_cast<std::size_t>(t)]);
        break;
    case Mode::Binomial:
        for (int t = 0; t < type_count_; ++t)
            out[static_cast<std::size_t>(t)] =
                sample_binomial(rng, trials_[s][static_cast<std::size_t>(t)], prob_[s][static_cast<std::size_t>(t)]);
        break;
    case Mode::Deterministic:
        out[0] = deterministic_children_;
        break;
    }
}

BpTrajectory run_bp(const OffspringLaw& law, int root_type, const BpOptions& options, Rng& rng) {
    if (root_type < 0 || root_type >= law.type_count())
        throw std::invalid_argument("run_bp: root_type out of range");
    if (options.m_max < 0) throw std::invalid_argument("run_bp: m_max must be nonnegative");

    BpTrajectory traj;
    traj.lambda_tilde = law.lambda_tilde();
    traj.dead_by_type.assign(static_cast<std::size_t>(law.type_count()), 0);
    traj.split_times.reserve(static_cast<std::size_t>(options.m_max) + 1);
    traj.alive_history.reserve(static_cast<std::size_t>(options.m_max) + 1);

    std::vector<std::int64_t> counts;
    if (options.root_splits_immediately) {
        law.sample_counts(rng, root_type, counts);
        for (int t = 0; t < law.type_count(); ++t)
            for (std::int64_t c = 0; c < counts[static_cast<std::size_t>(t)]; ++c)
                traj.alive.push_back({static_cast<std::int32_t>(t), 1});
        traj.dead_by_type[static_cast<std::size_t>(root_type)] += 1;
    } else {
        traj.alive.push_back({static_cast<std::int32_t>(root_type), 0});
    }
    traj.split_times.push_back(0.0);
    traj.alive_history.push_back(traj.alive_count());

    // Per split the stream is consumed as: gap, splitter choice, then child
    // counts in type order.
    for (std::int64_t j = 1; j <= options.m_max; ++j) {
        const auto alive_n = traj.alive.size();
        if (alive_n == 0) break;
        const double gap = rng.exponential() / static_cast<double>(alive_n);
        const auto idx = static_cast<std::size_t>(rng.below(alive_n));
        const BpParticle splitter = traj.alive[idx];
        traj.alive[idx] = traj.alive.back();
        traj.alive.pop_back();
        traj.dead_by_type[static_cast<std::size_t>(splitter.type)] += 1;
        law.sample_counts(rng, splitter.type, counts);
        for (int t = 0; t < law.type_count(); ++t)
            for (std::int64_t c = 0; c < counts[static_cast<std::size_t>(t)]; ++c)
                traj.alive.push_back({static_cast<std::int32_t>(t), splitter.generation + 1});
        traj.split_times.push_back(traj.split_times.back() + gap);
        traj.alive_history.push_back(traj.alive_count());
        traj.splits = j;
    }
    traj.reached_m = (traj.splits == options.m_max);
    return traj;
}

SurvivingRun run_bp_surviving(const OffspringLaw& law, int root_type, const BpOptions& options,
                              std::uint64_t seed, int max_attempts) {
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        Rng rng(derive_seed(seed, "bp_attempt", static_cast<std::uint64_t>(attempt)));
        BpTrajectory traj = run_bp(law, root_type, options, rng);
        if (traj.reached_m) return SurvivingRun{std::move(traj), attempt + 1};
    }
    throw std::runtime_error("run_bp_surviving: no run reached m_max splits");
}

PopulationProfile population_profile(const BpTrajectory& trajectory) {
    PopulationProfile profile;
    profile.alive_by_type.assign(trajectory.dead_by_type.size(), 0);
    profile.dead_by_type = trajectory.dead_by_type;
    for (const BpParticle& p : trajectory.alive)
        profile.alive_by_type[static_cast<std::size_t>(p.type)] += 1;
    for (std::int64_t c : profile.alive_by_type) profile.alive_total += c;
    for (std::int64_t c : profile.dead_by_type) profile.dead_total += c;
    return profile;
}

std::int32_t generation_sample(const BpTrajectory& trajectory, Rng& rng) {
    if (trajectory.alive.empty()) throw std::runtime_error("generation_sample: population is extinct");
    const auto idx = static_cast<std::size_t>(rng.below(trajectory.alive.size()));
    return trajectory.alive[idx].generation;
}

double estimate_w(const BpTrajectory& trajectory) {
    if (!trajectory.reached_m) return 0.0;
    return std::exp(-trajectory.lambda_tilde * trajectory.final_time()) *
           static_cast<double>(trajectory.alive_count());
}

CoupledBpResult coupled_bin_poi_run(const KernelModel& model, std::int64_t n, int root_type,
                                    std::int64_t m_max, Rng& rng) {
    const int r = model.kernel.type_count();
    if (root_type < 0 || root_type >= r)
        throw std::invalid_argument("coupled_bin_poi_run: root_type out of range");
    const auto counts_by_type = type_counts(model.kernel.mu, n);
    std::vector<std::vector<std::int64_t>> trials(static_cast<std::size_t>(r),
                                                  std::vector<std::int64_t>(static_cast<std::size_t>(r), 0));
    std::vector<std::vector<double>> prob(static_cast<std::size_t>(r),
                                          std::vector<double>(static_cast<std::size_t>(r), 0.0));
    for (int s = 0; s < r; ++s) {
        for (int t = 0; t < r; ++t) {
            trials[s][t] = counts_by_type[static_cast<std::size_t>(t)] - (s == t ? 1 : 0);
            prob[s][t] = std::min(model.kernel.kappa[s][t] / static_cast<double>(n), 1.0);
        }
    }

    CoupledBpResult result;
    std::vector<std::int32_t> alive = {static_cast<std::int32_t>(root_type)};
    for (std::int64_t j = 1; j <= m_max; ++j) {
        if (alive.empty()) {
            result.extinct = true;
            break;
        }
        const auto idx = static_cast<std::size_t>(rng.below(alive.size()));
        const std::int32_t s = alive[idx];
        alive[idx] = alive.back();
        alive.pop_back();
        for (int t = 0; t < r; ++t) {
            const double u = rng.uniform();
            const auto su = static_cast<std::size_t>(s);
            const auto tu = static_cast<std::size_t>(t);
            const std::int64_t bin = binomial_inverse_cdf(u, trials[su][tu], prob[su][tu]);
            const std::int64_t poi = poisson_inverse_cdf(u, model.offspring.lambda[su][tu]);
            if (bin != poi) {
                result.decoupled = true;
                result.first_decouple_split = j;
                return result;
            }
            for (std::int64_t c = 0; c < bin; ++c) alive.push_back(static_cast<std::int32_t>(t));
        }
        result.splits = j;
    }
    return result;
}

GrowthEnvelopeResult check_growth_envelope(const BpTrajectory& trajectory, double C) {
    if (!(C > 0.0)) throw std::invalid_argument("check_growth_envelope: C must be positive");
    GrowthEnvelopeResult result;
    result.pass = true;
    const std::int64_t m = trajectory.splits;
    if (m < 3) return result;
    const auto j_lo = std::max<std::int64_t>(
        3, static_cast<std::int64_t>(std::ceil(std::log(std::log(static_cast<double>(m))))));
    for (std::int64_t j = j_lo; j <= m; ++j) {
        const double jd = static_cast<double>(j);
        const double envelope = C * std::sqrt(jd * std::log(jd));
        const double dev = std::abs(static_cast<double>(trajectory.alive_history[static_cast<std::size_t>(j)]) -
                                    trajectory.lambda_tilde * jd);
        const double ratio = dev / envelope;
        if (ratio > result.worst_ratio) {
            result.worst_ratio = ratio;
            result.worst_j = j;
        }
    }
    result.pass = result.worst_ratio <= 1.0;
    return result;
}

std::vector<MgfCheckPoint> mgf_fixed_point_check(const std::vector<double>& w_samples,
                                                 double lambda_tilde,
                                                 const std::vector<double>& ts) {
    if (w_samples.empty()) throw std::invalid_argument("mgf_fixed_point_check: empty sample");
    if (!(lambda_tilde > 0.0))
        throw std::invalid_argument("mgf_fixed_point_check: lambda_tilde must be positive");
    const auto inv_n = 1.0 / static_cast<double>(w_samples.size());
    auto mgf = [&](double s) {
        double acc = 0.0;
        for (double w : w_samples) acc += std::exp(s * w);
        return acc * inv_n;
    };
    std::vector<MgfCheckPoint> out;
    out.reserve(ts.size());
    for (double t : ts) {
        if (t > 0.0) throw std::invalid_argument("mgf_fixed_point_check: t must be nonpositive");
        auto integrand = [&](double u) {
            return std::exp((lambda_tilde + 1.0) * (mgf(t * std::pow(u, lambda_tilde)) - 1.0));
        };
        MgfCheckPoint point;
        point.t = t;
        point.lhs = mgf(t);
        point.rhs = integrate_smooth(integrand, 0.0, 1.0, 32);
        out.push_back(point);
    }
    return out;
}

} // namespace fppihrg
