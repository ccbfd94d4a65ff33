#pragma once

#include <cstdint>
#include <vector>

#include "fppihrg/kernel.hpp"
#include "fppihrg/rng.hpp"

namespace fppihrg {

struct BpParticle {
    std::int32_t type = 0;
    std::int32_t generation = 0;
};

// Offspring distribution of one split, resolved per (splitting type, child type).
class OffspringLaw {
public:
    enum class Mode { Poisson, Binomial, Deterministic };

    // Poisson(lambda_st) children of each type t, the n -> infinity limit law.
    static OffspringLaw poisson(const KernelModel& model);
    // Binomial(n_t - [s==t], kappa_st / n): the exact neighbour count in a
    // graph on n vertices with type counts n_t.
    static OffspringLaw binomial(const KernelModel& model, std::int64_t n);
    // Exactly `children` single-type offspring per split; for tests.
    static OffspringLaw deterministic(std::int64_t children);

    Mode mode() const { return mode_; }
    int type_count() const { return type_count_; }
    double lambda_tilde() const { return lambda_tilde_; }

    // Overwrites out[t] with the child count of type t; draws in type order.
    void sample_counts(Rng& rng, int split_type, std::vector<std::int64_t>& out) const;

private:
    Mode mode_ = Mode::Poisson;
    int type_count_ = 1;
    double lambda_tilde_ = 0.0;
    std::vector<std::vector<double>> mean_;     // Poisson means lambda_st
    std::vector<std::vector<std::int64_t>> trials_; // Binomial trials per (s,t)
    std::vector<std::vector<double>> prob_;     // Binomial success probability
    std::int64_t deterministic_children_ = 0;
};

struct BpOptions {
    std::int64_t m_max = 0;
    // When set, the root is replaced by its children at time zero; the first
    // timed split is the death of one of those children.
    bool root_splits_immediately = false;
};

// State after running a split chain to m_max splits (or extinction).
struct BpTrajectory {
    bool reached_m = false;            // completed m_max splits
    std::int64_t splits = 0;           // splits actually performed
    std::vector<double> split_times;   // [j] = time of split j; [0] = 0
    std::vector<std::int64_t> alive_history; // [j] = alive count after split j
    std::vector<BpParticle> alive;     // population at the final state
    std::vector<std::int64_t> dead_by_type;
    double lambda_tilde = 0.0;

    std::int64_t alive_count() const { return static_cast<std::int64_t>(alive.size()); }
    double final_time() const { return split_times.back(); }
};

// Split chain: gaps are Exp(alive count), the splitting particle is uniform
// over the living, and its children join immediately.
BpTrajectory run_bp(const OffspringLaw& law, int root_type, const BpOptions& options, Rng& rng);

struct SurvivingRun {
    BpTrajectory trajectory;
    int attempts = 0; // total runs including the accepted one
};

// Rejection until a run completes m_max splits; each attempt uses a fresh
// stream derived from `seed` so acceptance does not bias later draws.
SurvivingRun run_bp_surviving(const OffspringLaw& law, int root_type, const BpOptions& options,
                              std::uint64_t seed, int max_attempts = 100000);

struct PopulationProfile {
    std::vector<std::int64_t> alive_by_type;
    std::vector<std::int64_t> dead_by_type;
    std::int64_t alive_total = 0;
    std::int64_t dead_total = 0;
};

PopulationProfile population_profile(const BpTrajectory& trajectory);

// Generation of a uniformly chosen living particle. Throws if none is alive.
std::int32_t generation_sample(const BpTrajectory& trajectory, Rng& rng);

// exp(-lambda_tilde * tau_m) * S_m; zero when the run died before m_max splits.
double estimate_w(const BpTrajectory& trajectory);

struct CoupledBpResult {
    bool decoupled = false;
    std::int64_t first_decouple_split = -1; // split index where counts first differed
    std::int64_t splits = 0;                // splits completed while still coupled
    bool extinct = false;                   // both died (identically) before m_max
};

// Runs the binomial(n) and Poisson offspring laws off shared uniforms, one per
// (split, child type) draw, and reports whether they ever produce different
// counts within m_max splits.
CoupledBpResult coupled_bin_poi_run(const KernelModel& model, std::int64_t n, int root_type,
                                    std::int64_t m_max, Rng& rng);

struct GrowthEnvelopeResult {
    bool pass = false;
    double worst_ratio = 0.0; // max_j |S_j - lt*j| / (C sqrt(j log j))
    std::int64_t worst_j = 0;
};

// Checks |S_j - lambda_tilde * j| <= C sqrt(j log j) for all j from
// max(3, ceil(log log m)) to the last completed split.
GrowthEnvelopeResult check_growth_envelope(const BpTrajectory& trajectory, double C);

struct MgfCheckPoint {
    double t = 0.0;
    double lhs = 0.0; // empirical MGF at t
    double rhs = 0.0; // smoothing transform of the empirical MGF
};

// Evaluates both sides of the fixed-point equation
//   M(t) = int_0^1 exp((lt+1) * (M(t * u^lt) - 1)) du
// on the empirical MGF of the supplied limit-variable samples.
std::vector<MgfCheckPoint> mgf_fixed_point_check(const std::vector<double>& w_samples,
                                                 double lambda_tilde,
                                                 const std::vector<double>& ts);

} // namespace fppihrg
