#pragma once

#include <cstdint>
#include <vector>

#include "fppihrg/graph.hpp"
#include "fppihrg/kernel.hpp"
#include "fppihrg/rng.hpp"

namespace fppihrg {

// Disjoint contiguous label blocks: type t owns [block_start[t], block_start[t] + counts[t]).
struct LabelSpace {
    std::int64_t n = 0;
    std::vector<std::int64_t> counts;
    std::vector<std::int64_t> block_start;

    int type_count() const { return static_cast<int>(counts.size()); }
    std::int32_t label_type(std::int64_t label) const;
};

LabelSpace make_label_space(const std::vector<double>& mu, std::int64_t n);

struct LabeledParticle {
    std::int64_t label = 0;
    std::int32_t type = 0;
    std::int32_t generation = 0;
    double birth_time = 0.0;
};

struct SplitEvent {
    std::int64_t split_index = 0;
    double time = 0.0;
    std::int64_t label = 0;
    std::int32_t type = 0;
    std::int32_t generation = 0;
    bool thinned = false;      // label had died before; the particle leaves no children
    std::int64_t children = 0;
};

// Split chain whose particles carry vertex labels. Offspring counts are
// binomial against the admissible pool, child labels are uniform without
// replacement within one split (excluding the splitter's own label), and
// labels are reusable across splits. A particle whose label already died is
// thinned: at its split it dies childless.
//
// Split 0 is the root's death at time zero; later gaps are Exp(alive count).
class LabeledFlow {
public:
    // forbidden (optional, size n) marks labels excluded from every pool.
    LabeledFlow(const KernelModel& model, LabelSpace space, std::int64_t root_label,
                const std::vector<std::uint8_t>* forbidden);

    bool can_split() const { return !alive_.empty(); }
    // Stream use per split: gap (absent for split 0), splitter choice, then
    // per child type one count draw followed by one draw per child label.
    SplitEvent split(Rng& rng);

    const LabelSpace& space() const { return space_; }
    double lambda_tilde() const { return lambda_tilde_; }
    const std::vector<LabeledParticle>& alive() const { return alive_; }
    std::int64_t alive_count() const { return static_cast<std::int64_t>(alive_.size()); }
    std::int64_t alive_of_type(int t) const { return alive_by_type_[static_cast<std::size_t>(t)]; }
    bool label_dead(std::int64_t label) const { return dead_[static_cast<std::size_t>(label)] != 0; }
    // Every death in order, thinned re-deaths included (multiplicity list).
    const std::vector<std::int64_t>& dead_order() const { return dead_order_; }
    std::int64_t distinct_dead() const { return distinct_dead_; }
    std::int64_t thinned_deaths() const { return thinned_deaths_; }
    const std::vector<double>& split_times() const { return split_times_; }
    std::int64_t splits_performed() const { return static_cast<std::int64_t>(split_times_.size()); }
    double current_time() const { return split_times_.empty() ? 0.0 : split_times_.back(); }
    // exp(-lambda_tilde * current time) * alive count.
    double w_estimate() const;

private:
    void swap_pool_slots(int type, std::int64_t a, std::int64_t b);
    void spawn_children(const LabeledParticle& parent, double time, Rng& rng, SplitEvent& event);

    LabelSpace space_;
    int type_count_ = 0;
    double lambda_tilde_ = 0.0;
    std::vector<std::vector<std::int64_t>> trials_; // per (splitting type, child type)
    std::vector<std::vector<double>> prob_;
    std::vector<std::vector<std::int64_t>> pool_;   // admissible labels, persistently permuted
    std::vector<std::int64_t> pool_pos_;            // label -> slot in its type pool, -1 if excluded
    std::vector<LabeledParticle> alive_;
    std::vector<std::int64_t> alive_by_type_;
    std::vector<std::uint8_t> dead_;
    std::vector<std::int64_t> dead_order_;
    std::vector<double> split_times_;
    std::int64_t next_split_index_ = 0;
    std::int64_t distinct_dead_ = 0;
    std::int64_t thinned_deaths_ = 0;
};

struct FlowTree {
    std::vector<LabeledParticle> alive;
    std::vector<std::int64_t> dead_order; // with multiplicity
    std::vector<double> split_times;      // [k] = time of split k
    std::int64_t splits = -1;             // last split index performed
    std::int64_t thinned_deaths = 0;
    bool extinct = false;                 // died before reaching m_max splits
    double lambda_tilde = 0.0;
    int type_count = 0;
};

// Runs splits 0..m_max (or to extinction). Requires m_max < n.
FlowTree run_labeled_bp(const KernelModel& model, std::int64_t n, std::int64_t root_label,
                        std::int64_t m_max, Rng& rng,
                        const std::vector<std::uint8_t>* forbidden = nullptr);

// Alive type-t particles whose label already died, over alive type-t count;
// -1 when no type-t particle is alive.
double thinned_alive_fraction(const FlowTree& tree, int type);

struct LabelMultiplicity {
    std::int64_t alive_count = 0;
    std::int64_t distinct_labels = 0;
};

LabelMultiplicity multiple_label_count(const FlowTree& tree, int type);

struct FloodResult {
    std::vector<double> time;            // wetting time, kUnreachable when never wet
    std::vector<std::int32_t> hops;      // -1 when never wet
    std::vector<std::int32_t> wet_order; // vertices in wetting order, source first
    std::int64_t thinned_arrivals = 0;   // arrivals at already-wet vertices
};

// Event-driven first-passage flood over realized edge weights: every wetting
// pushes fluid into all incident edges, arrivals at wet vertices spawn
// nothing. Requires adjacency to be built.
FloodResult flood_graph(const WeightedGraph& graph, std::int32_t source);

struct EmbeddingReport {
    std::int64_t compared = 0;
    std::int64_t weight_mismatches = 0;
    std::int64_t hop_mismatches = 0;
    std::int64_t reachable = 0;
    bool exact = false;
};

// Flood and shortest-path tree on the same realized graph must agree exactly,
// vertex by vertex, on (weight, hopcount).
EmbeddingReport embedding_equivalence(const WeightedGraph& graph, std::int32_t source);
EmbeddingReport embedding_equivalence(const KernelModel& model, std::int64_t n, std::uint64_t seed);

} // namespace fppihrg
