#include "fppihrg/labeled_bp.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <tuple>
#include <unordered_set>

#include "fppihrg/shortest_path.hpp"

namespace fppihrg {

std::int32_t LabelSpace::label_type(std::int64_t label) const {
    if (label < 0 || label >= n) throw std::out_of_range("LabelSpace: label out of range");
    auto it = std::upper_bound(block_start.begin(), block_start.end(), label);
    return static_cast<std::int32_t>(it - block_start.begin() - 1);
}

LabelSpace make_label_space(const std::vector<double>& mu, std::int64_t n) {
    if (n < 1) throw std::invalid_argument("make_label_space: n must be positive");
    LabelSpace space;
    space.n = n;
    space.counts = type_counts(mu, n);
    space.block_start.resize(space.counts.size());
    std::int64_t acc = 0;
    for (std::size_t t = 0; t < space.counts.size(); ++t) {
        space.block_start[t] = acc;
        acc += space.counts[t];
    }
    return space;
}

LabeledFlow::LabeledFlow(const KernelModel& model, LabelSpace space, std::int64_t root_label,
                         const std::vector<std::uint8_t>* forbidden)
    : space_(std::move(space)) {
    type_count_ = space_.type_count();
    if (model.kernel.type_count() != type_count_)
        throw std::invalid_argument("LabeledFlow: kernel and label space disagree on type count");
    if (root_label < 0 || root_label >= space_.n)
        throw std::invalid_argument("LabeledFlow: root label out of range");
    if (forbidden && static_cast<std::int64_t>(forbidden->size()) != space_.n)
        throw std::invalid_argument("LabeledFlow: forbidden mask size must equal n");
    if (forbidden && (*forbidden)[static_cast<std::size_t>(root_label)])
        throw std::invalid_argument("LabeledFlow: root label is forbidden");
    lambda_tilde_ = model.offspring.lambda_tilde;

    const auto r = static_cast<std::size_t>(type_count_);
    pool_.resize(r);
    pool_pos_.assign(static_cast<std::size_t>(space_.n), -1);
    for (std::size_t t = 0; t < r; ++t) {
        const std::int64_t start = space_.block_start[t];
        for (std::int64_t k = 0; k < space_.counts[t]; ++k) {
            const std::int64_t label = start + k;
            if (forbidden && (*forbidden)[static_cast<std::size_t>(label)]) continue;
            pool_pos_[static_cast<std::size_t>(label)] = static_cast<std::int64_t>(pool_[t].size());
            pool_[t].push_back(label);
        }
    }
    trials_.assign(r, std::vector<std::int64_t>(r, 0));
    prob_.assign(r, std::vector<double>(r, 0.0));
    for (std::size_t s = 0; s < r; ++s) {
        for (std::size_t t = 0; t < r; ++t) {
            const auto avail = static_cast<std::int64_t>(pool_[t].size());
            trials_[s][t] = std::max<std::int64_t>(0, avail - (s == t ? 1 : 0));
            prob_[s][t] = std::min(model.kernel.kappa[s][t] / static_cast<double>(space_.n), 1.0);
        }
    }
    alive_by_type_.assign(r, 0);
    dead_.assign(static_cast<std::size_t>(space_.n), 0);

    const std::int32_t root_type = space_.label_type(root_label);
    alive_.push_back({root_label, root_type, 0, 0.0});
    alive_by_type_[static_cast<std::size_t>(root_type)] = 1;
}

void LabeledFlow::swap_pool_slots(int type, std::int64_t a, std::int64_t b) {
    if (a == b) return;
    auto& pool = pool_[static_cast<std::size_t>(type)];
    std::swap(pool[static_cast<std::size_t>(a)], pool[static_cast<std::size_t>(b)]);
    pool_pos_[static_cast<std::size_t>(pool[static_cast<std::size_t>(a)])] = a;
    pool_pos_[static_cast<std::size_t>(pool[static_cast<std::size_t>(b)])] = b;
}

void LabeledFlow::spawn_children(const LabeledParticle& parent, double time, Rng& rng,
                                 SplitEvent& event) {
    for (int t = 0; t < type_count_; ++t) {
        const auto s = static_cast<std::size_t>(parent.type);
        const auto tu = static_cast<std::size_t>(t);
        const std::int64_t count = sample_binomial(rng, trials_[s][tu], prob_[s][tu]);
        if (count == 0) continue;
        auto& pool = pool_[tu];
        std::int64_t reach = static_cast<std::int64_t>(pool.size());
        if (parent.type == t) {
            // Park the splitter's own label past the draw range.
            swap_pool_slots(t, pool_pos_[static_cast<std::size_t>(parent.label)], reach - 1);
            reach -= 1;
        }
        // Partial Fisher-Yates prefix; the pool stays permuted between splits,
        // which leaves each batch uniform without replacement.
        for (std::int64_t i = 0; i < count; ++i) {
            const std::int64_t j = i + static_cast<std::int64_t>(
                                           rng.below(static_cast<std::uint64_t>(reach - i)));
            swap_pool_slots(t, i, j);
            alive_.push_back({pool[static_cast<std::size_t>(i)], static_cast<std::int32_t>(t),
                              parent.generation + 1, time});
        }
        alive_by_type_[tu] += count;
        event.children += count;
    }
}

SplitEvent LabeledFlow::split(Rng& rng) {
    if (alive_.empty()) throw std::runtime_error("LabeledFlow::split: no particle alive");
    const auto alive_n = alive_.size();
    const double time = next_split_index_ == 0
                            ? 0.0
                            : split_times_.back() + rng.exponential() / static_cast<double>(alive_n);
    const auto idx = static_cast<std::size_t>(rng.below(alive_n));
    const LabeledParticle splitter = alive_[idx];
    alive_[idx] = alive_.back();
    alive_.pop_back();
    alive_by_type_[static_cast<std::size_t>(splitter.type)] -= 1;

    SplitEvent event;
    event.split_index = next_split_index_;
    event.time = time;
    event.label = splitter.label;
    event.type = splitter.type;
    event.generation = splitter.generation;

    auto& dead_flag = dead_[static_cast<std::size_t>(splitter.label)];
    if (dead_flag) {
        event.thinned = true;
        thinned_deaths_ += 1;
    } else {
        dead_flag = 1;
        distinct_dead_ += 1;
        spawn_children(splitter, time, rng, event);
    }
    dead_order_.push_back(splitter.label);
    split_times_.push_back(time);
    next_split_index_ += 1;
    return event;
}

double LabeledFlow::w_estimate() const {
    return std::exp(-lambda_tilde_ * current_time()) * static_cast<double>(alive_.size());
}

FlowTree run_labeled_bp(const KernelModel& model, std::int64_t n, std::int64_t root_label,
                        std::int64_t m_max, Rng& rng,
                        const std::vector<std::uint8_t>* forbidden) {
    if (m_max < 0) throw std::invalid_argument("run_labeled_bp: m_max must be nonnegative");
    if (m_max >= n) throw std::invalid_argument("run_labeled_bp: m_max must be below n");
    LabeledFlow flow(model, make_label_space(model.kernel.mu, n), root_label, forbidden);
    FlowTree tree;
    for (std::int64_t k = 0; k <= m_max; ++k) {
        if (!flow.can_split()) {
            tree.extinct = true;
            break;
        }
        const SplitEvent event = flow.split(rng);
        tree.splits = event.split_index;
    }
    tree.alive = flow.alive();
    tree.dead_order = flow.dead_order();
    tree.split_times = flow.split_times();
    tree.thinned_deaths = flow.thinned_deaths();
    tree.lambda_tilde = flow.lambda_tilde();
    tree.type_count = flow.space().type_count();
    return tree;
}

double thinned_alive_fraction(const FlowTree& tree, int type) {
    std::unordered_set<std::int64_t> dead(tree.dead_order.begin(), tree.dead_order.end());
    std::int64_t alive_t = 0;
    std::int64_t thinned_t = 0;
    for (const LabeledParticle& p : tree.alive) {
        if (p.type != type) continue;
        alive_t += 1;
        if (dead.count(p.label)) thinned_t += 1;
    }
    if (alive_t == 0) return -1.0;
    return static_cast<double>(thinned_t) / static_cast<double>(alive_t);
}

LabelMultiplicity multiple_label_count(const FlowTree& tree, int type) {
    LabelMultiplicity out;
    std::unordered_set<std::int64_t> labels;
    for (const LabeledParticle& p : tree.alive) {
        if (p.type != type) continue;
        out.alive_count += 1;
        labels.insert(p.label);
    }
    out.distinct_labels = static_cast<std::int64_t>(labels.size());
    return out;
}

FloodResult flood_graph(const WeightedGraph& graph, std::int32_t source) {
    if (graph.adj_offset.empty() && graph.n > 0)
        throw std::runtime_error("flood_graph: adjacency not built");
    if (source < 0 || source >= graph.n) throw std::out_of_range("flood_graph: source out of range");
    FloodResult result;
    result.time.assign(static_cast<std::size_t>(graph.n), kUnreachable);
    result.hops.assign(static_cast<std::size_t>(graph.n), -1);

    using Event = std::tuple<double, std::int32_t, std::int32_t>; // arrival, vertex, hops
    std::priority_queue<Event, std::vector<Event>, std::greater<Event>> events;
    events.emplace(0.0, source, 0);
    while (!events.empty()) {
        const auto [at, v, hops] = events.top();
        events.pop();
        const auto vi = static_cast<std::size_t>(v);
        if (result.hops[vi] >= 0) {
            result.thinned_arrivals += 1;
            continue;
        }
        result.time[vi] = at;
        result.hops[vi] = hops;
        result.wet_order.push_back(v);
        for (std::int64_t e = graph.adj_offset[vi]; e < graph.adj_offset[vi + 1]; ++e) {
            events.emplace(at + graph.adj_weight[static_cast<std::size_t>(e)],
                           graph.adj_vertex[static_cast<std::size_t>(e)], hops + 1);
        }
    }
    return result;
}

EmbeddingReport embedding_equivalence(const WeightedGraph& graph, std::int32_t source) {
    const FloodResult flood = flood_graph(graph, source);
    const SsspTree tree = shortest_path_tree(graph, source);
    EmbeddingReport report;
    for (std::int64_t v = 0; v < graph.n; ++v) {
        const auto vi = static_cast<std::size_t>(v);
        report.compared += 1;
        const bool flood_wet = flood.hops[vi] >= 0;
        const bool tree_reached = tree.hops[vi] >= 0;
        if (!flood_wet && !tree_reached) continue;
        report.reachable += 1;
        if (!flood_wet || !tree_reached || flood.time[vi] != tree.distance[vi])
            report.weight_mismatches += 1;
        if (!flood_wet || !tree_reached || flood.hops[vi] != tree.hops[vi])
            report.hop_mismatches += 1;
    }
    report.exact = report.weight_mismatches == 0 && report.hop_mismatches == 0;
    return report;
}

EmbeddingReport embedding_equivalence(const KernelModel& model, std::int64_t n, std::uint64_t seed) {
    Rng rng(seed);
    const TypedVertexSet vertices = sample_vertices(model, n, rng);
    WeightedGraph graph = sample_graph(model, vertices, rng, seed);
    build_adjacency(graph);
    return embedding_equivalence(graph, 0);
}

} // namespace fppihrg
