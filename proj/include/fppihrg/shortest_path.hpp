#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "fppihrg/graph.hpp"

namespace fppihrg {

constexpr double kUnreachable = std::numeric_limits<double>::infinity();

struct SsspTree {
    std::int32_t source = 0;
    std::vector<double> distance;       // kUnreachable outside the source component
    std::vector<std::int32_t> hops;     // -1 outside the source component
    std::vector<std::int32_t> parent;   // -1 for source and unreachable vertices
};

// Dijkstra from source. Equal-weight paths resolve to fewer hops, then to the
// smaller parent index, which pins the tree uniquely.
SsspTree shortest_path_tree(const WeightedGraph& graph, std::int32_t source);

struct PathResult {
    bool connected = false;
    double weight = kUnreachable;
    std::int32_t hopcount = -1;
};

PathResult path_between(const SsspTree& tree, std::int32_t target);

struct WeightedPath {
    bool connected = false;
    double weight = kUnreachable;
    std::int32_t hopcount = -1;
    std::vector<std::int32_t> path; // x..y when connected, empty otherwise
};

// Throws when x == y; disconnected pairs come back with infinite weight.
WeightedPath shortest_weight_path(const WeightedGraph& graph, std::int32_t x, std::int32_t y);

// Unweighted hop distances from source; -1 outside its component.
std::vector<std::int32_t> bfs_hops(const WeightedGraph& graph, std::int32_t source);

struct WettingEvent {
    std::int32_t vertex = 0;
    double time = 0.0;
};

// First k wetted vertices in order of distance from the source (the source
// itself is first at time 0); ties break by vertex index.
std::vector<WettingEvent> flooding_order(const SsspTree& tree, std::int64_t k);

} // namespace fppihrg
