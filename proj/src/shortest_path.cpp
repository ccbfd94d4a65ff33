#include "fppihrg/shortest_path.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>
#include <tuple>

namespace fppihrg {

SsspTree shortest_path_tree(const WeightedGraph& graph, std::int32_t source) {
    if (source < 0 || source >= graph.n) throw std::invalid_argument("shortest_path_tree: source out of range");
    if (graph.adj_offset.empty()) throw std::invalid_argument("shortest_path_tree: adjacency not built");
    const auto n = static_cast<std::size_t>(graph.n);
    SsspTree tree;
    tree.source = source;
    tree.distance.assign(n, kUnreachable);
    tree.hops.assign(n, -1);
    tree.parent.assign(n, -1);
    tree.distance[static_cast<std::size_t>(source)] = 0.0;
    tree.hops[static_cast<std::size_t>(source)] = 0;

    using Item = std::tuple<double, std::int32_t, std::int32_t>; // dist, hops, vertex
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    heap.emplace(0.0, 0, source);
    std::vector<bool> settled(n, false);
    while (!heap.empty()) {
        const auto [dist, hops, v] = heap.top();
        heap.pop();
        const auto vi = static_cast<std::size_t>(v);
        if (settled[vi]) continue;
        if (dist != tree.distance[vi] || hops != tree.hops[vi]) continue;
        settled[vi] = true;
        for (std::int64_t e = graph.adj_offset[vi]; e < graph.adj_offset[vi + 1]; ++e) {
            const auto w = graph.adj_vertex[static_cast<std::size_t>(e)];
            const auto wi = static_cast<std::size_t>(w);
            if (settled[wi]) continue;
            const double cand = dist + graph.adj_weight[static_cast<std::size_t>(e)];
            const std::int32_t cand_hops = hops + 1;
            bool better = cand < tree.distance[wi];
            if (!better && cand == tree.distance[wi]) {
                better = cand_hops < tree.hops[wi] ||
                         (cand_hops == tree.hops[wi] && v < tree.parent[wi]);
            }
            if (better) {
                tree.distance[wi] = cand;
                tree.hops[wi] = cand_hops;
                tree.parent[wi] = v;
                heap.emplace(cand, cand_hops, w);
            }
        }
    }
    return tree;
}

PathResult path_between(const SsspTree& tree, std::int32_t target) {
    if (target < 0 || target >= static_cast<std::int32_t>(tree.distance.size()))
        throw std::invalid_argument("path_between: target out of range");
    const auto ti = static_cast<std::size_t>(target);
    if (tree.distance[ti] == kUnreachable) return PathResult{};
    return PathResult{true, tree.distance[ti], tree.hops[ti]};
}

WeightedPath shortest_weight_path(const WeightedGraph& graph, std::int32_t x, std::int32_t y) {
    if (x == y) throw std::invalid_argument("shortest_weight_path: endpoints must differ");
    if (y < 0 || y >= graph.n) throw std::invalid_argument("shortest_weight_path: target out of range");
    const SsspTree tree = shortest_path_tree(graph, x);
    WeightedPath out;
    const auto yi = static_cast<std::size_t>(y);
    if (tree.distance[yi] == kUnreachable) return out;
    out.connected = true;
    out.weight = tree.distance[yi];
    out.hopcount = tree.hops[yi];
    for (std::int32_t v = y; v != -1; v = tree.parent[static_cast<std::size_t>(v)])
        out.path.push_back(v);
    std::reverse(out.path.begin(), out.path.end());
    return out;
}

std::vector<std::int32_t> bfs_hops(const WeightedGraph& graph, std::int32_t source) {
    if (graph.adj_offset.empty() && graph.n > 0)
        throw std::runtime_error("bfs_hops: adjacency not built");
    if (source < 0 || source >= graph.n) throw std::out_of_range("bfs_hops: source out of range");
    std::vector<std::int32_t> hops(static_cast<std::size_t>(graph.n), -1);
    std::vector<std::int32_t> frontier = {source};
    hops[static_cast<std::size_t>(source)] = 0;
    while (!frontier.empty()) {
        std::vector<std::int32_t> next;
        for (std::int32_t v : frontier) {
            const auto vi = static_cast<std::size_t>(v);
            for (std::int64_t e = graph.adj_offset[vi]; e < graph.adj_offset[vi + 1]; ++e) {
                const std::int32_t w = graph.adj_vertex[static_cast<std::size_t>(e)];
                if (hops[static_cast<std::size_t>(w)] < 0) {
                    hops[static_cast<std::size_t>(w)] = hops[vi] + 1;
                    next.push_back(w);
                }
            }
        }
        frontier = std::move(next);
    }
    return hops;
}

std::vector<WettingEvent> flooding_order(const SsspTree& tree, std::int64_t k) {
    if (k < 0) throw std::invalid_argument("flooding_order: k must be nonnegative");
    std::vector<WettingEvent> events;
    for (std::size_t v = 0; v < tree.distance.size(); ++v)
        if (tree.distance[v] != kUnreachable)
            events.push_back(WettingEvent{static_cast<std::int32_t>(v), tree.distance[v]});
    if (static_cast<std::size_t>(k) > events.size())
        throw std::invalid_argument("flooding_order: component smaller than k");
    std::sort(events.begin(), events.end(), [](const WettingEvent& a, const WettingEvent& b) {
        if (a.time != b.time) return a.time < b.time;
        return a.vertex < b.vertex;
    });
    events.resize(static_cast<std::size_t>(k));
    return events;
}

} // namespace fppihrg
