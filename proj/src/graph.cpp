#include "fppihrg/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace fppihrg {

std::vector<std::int64_t> type_counts(const std::vector<double>& mu, std::int64_t n) {
    const auto r = static_cast<int>(mu.size());
    std::vector<std::int64_t> counts(static_cast<std::size_t>(r), 0);
    std::vector<std::pair<double, int>> remainders;
    std::int64_t assigned = 0;
    for (int t = 0; t < r; ++t) {
        const double exact = static_cast<double>(n) * mu[static_cast<std::size_t>(t)];
        const auto base = static_cast<std::int64_t>(std::floor(exact));
        counts[static_cast<std::size_t>(t)] = base;
        assigned += base;
        remainders.emplace_back(exact - static_cast<double>(base), t);
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (std::int64_t k = 0; k < n - assigned; ++k)
        ++counts[static_cast<std::size_t>(remainders[static_cast<std::size_t>(k)].second)];
    return counts;
}

TypedVertexSet sample_vertices(const KernelModel& model, std::int64_t n, Rng& rng) {
    if (n < 2) throw std::invalid_argument("sample_vertices: n must be at least 2");
    TypedVertexSet vs;
    vs.n = n;
    vs.counts = type_counts(model.kernel.mu, n);
    vs.type_of.reserve(static_cast<std::size_t>(n));
    for (int t = 0; t < static_cast<int>(vs.counts.size()); ++t)
        vs.type_of.insert(vs.type_of.end(), static_cast<std::size_t>(vs.counts[static_cast<std::size_t>(t)]),
                          static_cast<std::int32_t>(t));
    shuffle(rng, vs.type_of);
    return vs;
}

namespace {

// Inclusion thresholds on the raw 64-bit scale; probability 1 handled apart.
struct PairThresholds {
    std::vector<std::vector<std::uint64_t>> threshold;
    std::vector<std::vector<bool>> certain;
    std::vector<std::vector<double>> prob;
};

PairThresholds pair_thresholds(const KernelModel& model, std::int64_t n) {
    const int r = model.kernel.type_count();
    PairThresholds t;
    t.threshold.assign(static_cast<std::size_t>(r), std::vector<std::uint64_t>(static_cast<std::size_t>(r), 0));
    t.certain.assign(static_cast<std::size_t>(r), std::vector<bool>(static_cast<std::size_t>(r), false));
    t.prob.assign(static_cast<std::size_t>(r), std::vector<double>(static_cast<std::size_t>(r), 0.0));
    for (int s = 0; s < r; ++s) {
        for (int u = 0; u < r; ++u) {
            const double p = std::min(model.kernel.kappa[static_cast<std::size_t>(s)][static_cast<std::size_t>(u)] /
                                          static_cast<double>(n),
                                      1.0);
            t.prob[static_cast<std::size_t>(s)][static_cast<std::size_t>(u)] = p;
            if (p >= 1.0) {
                t.certain[static_cast<std::size_t>(s)][static_cast<std::size_t>(u)] = true;
                t.threshold[static_cast<std::size_t>(s)][static_cast<std::size_t>(u)] = ~0ull;
            } else {
                t.threshold[static_cast<std::size_t>(s)][static_cast<std::size_t>(u)] =
                    static_cast<std::uint64_t>(p * 0x1.0p64);
            }
        }
    }
    return t;
}

void sample_all_pairs(const PairThresholds& th, const TypedVertexSet& vs, Rng& rng, WeightedGraph& g) {
    const auto n = static_cast<std::int32_t>(vs.n);
    for (std::int32_t i = 0; i < n; ++i) {
        const auto ti = static_cast<std::size_t>(vs.type_of[static_cast<std::size_t>(i)]);
        const auto& row = th.threshold[ti];
        const auto& sure = th.certain[ti];
        for (std::int32_t j = i + 1; j < n; ++j) {
            const auto tj = static_cast<std::size_t>(vs.type_of[static_cast<std::size_t>(j)]);
            const std::uint64_t u = rng.next_u64();
            if (u < row[tj] || sure[tj])
                g.edges.push_back(Edge{i, j, rng.exponential()});
        }
    }
}

// Geometric gap sampling over a linearly indexed pair block.
void sample_block_geometric(double p, Rng& rng, std::int64_t pair_count,
                            const std::function<void(std::int64_t, double)>& emit) {
    if (p <= 0.0 || pair_count <= 0) return;
    if (p >= 1.0) {
        for (std::int64_t k = 0; k < pair_count; ++k) emit(k, rng.exponential());
        return;
    }
    const double log1mp = std::log1p(-p);
    double pos = 0.0; // floating index; pair_count stays < 2^53 for any feasible n
    while (true) {
        const double gap = std::floor(std::log(rng.uniform_pos()) / log1mp);
        pos += gap;
        if (pos >= static_cast<double>(pair_count)) break;
        emit(static_cast<std::int64_t>(pos), rng.exponential());
        pos += 1.0;
        if (pos >= static_cast<double>(pair_count)) break;
    }
}

void sample_blocked(const PairThresholds& th, const TypedVertexSet& vs, Rng& rng, WeightedGraph& g) {
    const int r = static_cast<int>(vs.counts.size());
    std::vector<std::vector<std::int32_t>> members(static_cast<std::size_t>(r));
    for (std::int32_t v = 0; v < static_cast<std::int32_t>(vs.n); ++v)
        members[static_cast<std::size_t>(vs.type_of[static_cast<std::size_t>(v)])].push_back(v);
    for (int s = 0; s < r; ++s) {
        const auto& ms = members[static_cast<std::size_t>(s)];
        const auto cs = static_cast<std::int64_t>(ms.size());
        // within-type block, pairs (a,b), a < b
        // pairs (a,b), a < b, linear index a*cs - a(a+1)/2 + (b-a-1)
        auto pairs_before_row = [cs](std::int64_t row) { return row * cs - row * (row + 1) / 2; };
        sample_block_geometric(th.prob[static_cast<std::size_t>(s)][static_cast<std::size_t>(s)], rng,
                               cs * (cs - 1) / 2, [&](std::int64_t idx, double w) {
                                   const double disc = std::max(
                                       0.0, (static_cast<double>(cs) - 0.5) * (static_cast<double>(cs) - 0.5) -
                                                2.0 * static_cast<double>(idx));
                                   auto row = static_cast<std::int64_t>(static_cast<double>(cs) - 0.5 - std::sqrt(disc));
                                   row = std::clamp<std::int64_t>(row, 0, cs - 2);
                                   while (row > 0 && pairs_before_row(row) > idx) --row;
                                   while (row < cs - 2 && pairs_before_row(row + 1) <= idx) ++row;
                                   const std::int64_t col = row + 1 + (idx - pairs_before_row(row));
                                   auto uu = ms[static_cast<std::size_t>(row)];
                                   auto vv = ms[static_cast<std::size_t>(col)];
                                   if (uu > vv) std::swap(uu, vv);
                                   g.edges.push_back(Edge{uu, vv, w});
                               });
        for (int t = s + 1; t < r; ++t) {
            const auto& mt = members[static_cast<std::size_t>(t)];
            const auto ct = static_cast<std::int64_t>(mt.size());
            sample_block_geometric(th.prob[static_cast<std::size_t>(s)][static_cast<std::size_t>(t)], rng,
                                   cs * ct, [&](std::int64_t idx, double w) {
                                       auto uu = ms[static_cast<std::size_t>(idx / ct)];
                                       auto vv = mt[static_cast<std::size_t>(idx % ct)];
                                       if (uu > vv) std::swap(uu, vv);
                                       g.edges.push_back(Edge{uu, vv, w});
                                   });
        }
    }
    std::sort(g.edges.begin(), g.edges.end(), [](const Edge& a, const Edge& b) {
        if (a.u != b.u) return a.u < b.u;
        return a.v < b.v;
    });
}

} // namespace

WeightedGraph sample_graph(const KernelModel& model, const TypedVertexSet& vertices, Rng& rng,
                           std::uint64_t seed_tag) {
    WeightedGraph g;
    g.n = vertices.n;
    g.vertices = vertices;
    g.seed = seed_tag;
    const auto th = pair_thresholds(model, vertices.n);
    if (vertices.n <= 20000)
        sample_all_pairs(th, vertices, rng, g);
    else
        sample_blocked(th, vertices, rng, g);
    return g;
}

void build_adjacency(WeightedGraph& graph) {
    const auto n = static_cast<std::size_t>(graph.n);
    std::vector<std::int64_t> degree(n, 0);
    for (const Edge& e : graph.edges) {
        ++degree[static_cast<std::size_t>(e.u)];
        ++degree[static_cast<std::size_t>(e.v)];
    }
    graph.adj_offset.assign(n + 1, 0);
    for (std::size_t v = 0; v < n; ++v) graph.adj_offset[v + 1] = graph.adj_offset[v] + degree[v];
    graph.adj_vertex.assign(static_cast<std::size_t>(graph.adj_offset[n]), 0);
    graph.adj_weight.assign(static_cast<std::size_t>(graph.adj_offset[n]), 0.0);
    std::vector<std::int64_t> cursor(graph.adj_offset.begin(), graph.adj_offset.end() - 1);
    for (const Edge& e : graph.edges) {
        graph.adj_vertex[static_cast<std::size_t>(cursor[static_cast<std::size_t>(e.u)])] = e.v;
        graph.adj_weight[static_cast<std::size_t>(cursor[static_cast<std::size_t>(e.u)]++)] = e.weight;
        graph.adj_vertex[static_cast<std::size_t>(cursor[static_cast<std::size_t>(e.v)])] = e.u;
        graph.adj_weight[static_cast<std::size_t>(cursor[static_cast<std::size_t>(e.v)]++)] = e.weight;
    }
}

ComponentInfo components(const WeightedGraph& graph) {
    const auto n = static_cast<std::size_t>(graph.n);
    std::vector<std::int32_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::vector<std::int32_t> rank(n, 0);
    std::function<std::int32_t(std::int32_t)> find = [&](std::int32_t x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    };
    for (const Edge& e : graph.edges) {
        auto a = find(e.u);
        auto b = find(e.v);
        if (a == b) continue;
        if (rank[static_cast<std::size_t>(a)] < rank[static_cast<std::size_t>(b)]) std::swap(a, b);
        parent[static_cast<std::size_t>(b)] = a;
        if (rank[static_cast<std::size_t>(a)] == rank[static_cast<std::size_t>(b)]) ++rank[static_cast<std::size_t>(a)];
    }
    ComponentInfo info;
    info.component_of.assign(n, -1);
    std::vector<std::int32_t> root_id(n, -1);
    std::int32_t next_id = 0;
    for (std::size_t v = 0; v < n; ++v) {
        const auto root = static_cast<std::size_t>(find(static_cast<std::int32_t>(v)));
        if (root_id[root] < 0) {
            root_id[root] = next_id++;
            info.sizes.push_back(0);
        }
        info.component_of[v] = root_id[root];
        ++info.sizes[static_cast<std::size_t>(root_id[root])];
    }
    for (std::int64_t s : info.sizes) info.largest_size = std::max(info.largest_size, s);
    info.largest_fraction = static_cast<double>(info.largest_size) / static_cast<double>(graph.n);
    return info;
}

std::pair<std::int32_t, std::int32_t> sample_connected_pair(const ComponentInfo& info,
                                                            std::int64_t n, Rng& rng) {
    if (info.largest_size < 2)
        throw std::invalid_argument("sample_connected_pair: no component with two vertices");
    for (int attempt = 0; attempt < 100000000; ++attempt) {
        const auto u = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(n)));
        const auto v = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(n)));
        if (u == v) continue;
        if (info.component_of[static_cast<std::size_t>(u)] == info.component_of[static_cast<std::size_t>(v)])
            return {u, v};
    }
    throw std::runtime_error("sample_connected_pair: rejection sampling exhausted");
}

std::string dump_graph(const WeightedGraph& graph) {
    std::vector<Edge> sorted = graph.edges;
    std::sort(sorted.begin(), sorted.end(), [](const Edge& a, const Edge& b) {
        if (a.u != b.u) return a.u < b.u;
        return a.v < b.v;
    });
    std::string out;
    char line[96];
    std::snprintf(line, sizeof(line), "# %lld %d %llu\n", static_cast<long long>(graph.n),
                  static_cast<int>(graph.vertices.counts.size()),
                  static_cast<unsigned long long>(graph.seed));
    out += line;
    for (const Edge& e : sorted) {
        std::snprintf(line, sizeof(line), "%d %d %.17g\n", e.u, e.v, e.weight);
        out += line;
    }
    return out;
}

} // namespace fppihrg
