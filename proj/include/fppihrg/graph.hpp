#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fppihrg/kernel.hpp"
#include "fppihrg/rng.hpp"

namespace fppihrg {

// Deterministic type counts for n vertices: floor(n*mu) plus largest-remainder
// distribution of the leftover, ties broken toward lower type index.
std::vector<std::int64_t> type_counts(const std::vector<double>& mu, std::int64_t n);

struct TypedVertexSet {
    std::int64_t n = 0;
    std::vector<std::int32_t> type_of;   // per vertex
    std::vector<std::int64_t> counts;    // per type
};

// Counts by largest remainder, then a seeded shuffle of the type labels.
TypedVertexSet sample_vertices(const KernelModel& model, std::int64_t n, Rng& rng);

struct Edge {
    std::int32_t u = 0;
    std::int32_t v = 0;
    double weight = 0.0;
};

struct WeightedGraph {
    std::int64_t n = 0;
    TypedVertexSet vertices;
    std::vector<Edge> edges;
    std::uint64_t seed = 0;

    // CSR adjacency, built lazily by build_adjacency.
    std::vector<std::int64_t> adj_offset;
    std::vector<std::int32_t> adj_vertex;
    std::vector<double> adj_weight;
};

void build_adjacency(WeightedGraph& graph);

// Inhomogeneous random graph: edge {i,j} present with probability
// min(kappa(type_i,type_j)/n, 1), weight unit exponential. Full pair scan up
// to 20000 vertices, per-type-block geometric gap sampling above.
WeightedGraph sample_graph(const KernelModel& model, const TypedVertexSet& vertices, Rng& rng,
                           std::uint64_t seed_tag = 0);

struct ComponentInfo {
    std::vector<std::int32_t> component_of;
    std::vector<std::int64_t> sizes;    // by component id
    std::int64_t largest_size = 0;
    double largest_fraction = 0.0;
};

ComponentInfo components(const WeightedGraph& graph);

// Uniform ordered pair of distinct vertices conditioned on lying in one
// component, by rejection. Throws if no component has two vertices.
std::pair<std::int32_t, std::int32_t> sample_connected_pair(const ComponentInfo& info,
                                                            std::int64_t n, Rng& rng);

// "# n r seed" header, then one "u v weight" line per edge, lexicographic.
std::string dump_graph(const WeightedGraph& graph);

} // namespace fppihrg
