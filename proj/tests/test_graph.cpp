#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fppihrg/graph.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

using namespace fppihrg;

namespace {

KernelModel er(double c) { return make_kernel_model(FiniteKernel{{1.0}, {{c}}}); }

KernelModel two_type() {
    return make_kernel_model(FiniteKernel{{0.5, 0.5}, {{1.0, 3.0}, {3.0, 1.0}}});
}

WeightedGraph hand_graph() {
    WeightedGraph g;
    g.n = 6;
    g.vertices.n = 6;
    g.vertices.type_of.assign(6, 0);
    g.vertices.counts = {6};
    g.edges = {{0, 1, 1.0}, {1, 2, 2.0}, {3, 4, 0.5}};
    return g;
}

} // namespace

TEST_CASE("type counts follow the largest remainder with ties to lower index") {
    CHECK(type_counts({0.5, 0.5}, 5) == std::vector<std::int64_t>{3, 2});
    CHECK(type_counts({1.0 / 3, 1.0 / 3, 1.0 / 3}, 7) == std::vector<std::int64_t>{3, 2, 2});
    CHECK(type_counts({0.2, 0.8}, 7) == std::vector<std::int64_t>{1, 6});
    CHECK(type_counts({1.0}, 9) == std::vector<std::int64_t>{9});
    CHECK(type_counts({0.5, 0.5}, 0) == std::vector<std::int64_t>{0, 0});
}

TEST_CASE("vertex sampling keeps exact counts and is seed-deterministic") {
    const auto model = two_type();
    Rng a(5);
    const auto va = sample_vertices(model, 101, a);
    CHECK(va.n == 101);
    CHECK(va.counts == std::vector<std::int64_t>{51, 50});
    std::int64_t zeros = 0;
    for (auto t : va.type_of) {
        CHECK(t >= 0);
        CHECK(t < 2);
        zeros += (t == 0);
    }
    CHECK(zeros == 51);

    Rng b(5);
    const auto vb = sample_vertices(model, 101, b);
    CHECK(vb.type_of == va.type_of);

    Rng c(6);
    CHECK_THROWS_AS(sample_vertices(model, 1, c), std::invalid_argument);
}

TEST_CASE("edge probability clamps to one and produces the complete graph") {
    const auto model = er(10.0); // p = min(10/6, 1) = 1
    Rng rng(1);
    const auto verts = sample_vertices(model, 6, rng);
    const auto g = sample_graph(model, verts, rng);
    CHECK(g.edges.size() == 15);
    std::set<std::pair<int, int>> seen;
    for (const Edge& e : g.edges) {
        CHECK(e.u < e.v);
        CHECK(e.weight > 0.0);
        CHECK(seen.emplace(e.u, e.v).second);
    }
}

TEST_CASE("zero kernel produces no edges") {
    const auto model = make_kernel_model(FiniteKernel{{1.0}, {{0.0}}});
    Rng rng(2);
    const auto verts = sample_vertices(model, 50, rng);
    CHECK(sample_graph(model, verts, rng).edges.empty());
}

TEST_CASE("graph sampling is reproducible from the stream state") {
    const auto model = two_type();
    Rng a(7);
    const auto va = sample_vertices(model, 200, a);
    const auto ga = sample_graph(model, va, a, 9);
    Rng b(7);
    const auto vb = sample_vertices(model, 200, b);
    const auto gb = sample_graph(model, vb, b, 9);
    CHECK(dump_graph(ga) == dump_graph(gb));
    CHECK(ga.seed == 9);
}

TEST_CASE("golden dump of a tiny sparse graph") {
    const auto model = er(2.0);
    Rng g(5);
    const auto verts = sample_vertices(model, 6, g);
    const auto graph = sample_graph(model, verts, g, 3);
    CHECK(dump_graph(graph) ==
          "# 6 1 3\n"
          "1 3 0.1343882193972589\n"
          "3 4 0.78694825648988043\n"
          "3 5 0.012614179214577284\n"
          "4 5 0.132786077432577\n");
}

TEST_CASE("gap sampler above the pair-scan cutoff stays unbiased and duplicate-free") {
    const auto model = er(2.0);
    Rng rng(31);
    const auto verts = sample_vertices(model, 20001, rng);
    auto g = sample_graph(model, verts, rng);
    // Binomial(n(n-1)/2, 2/n) edge count: mean ~ 20000, sd ~ 141
    CHECK(g.edges.size() > 20000 - 600);
    CHECK(g.edges.size() < 20000 + 600);
    std::set<std::pair<int, int>> seen;
    for (const Edge& e : g.edges) {
        CHECK(e.u < e.v);
        CHECK(seen.emplace(e.u, e.v).second);
    }
}

TEST_CASE("two-type gap sampler emits within- and cross-block edges") {
    const auto model = two_type();
    Rng rng(33);
    const auto verts = sample_vertices(model, 20002, rng);
    const auto g = sample_graph(model, verts, rng);
    std::int64_t same = 0;
    std::int64_t cross = 0;
    std::set<std::pair<int, int>> seen;
    for (const Edge& e : g.edges) {
        CHECK(e.u < e.v);
        CHECK(seen.emplace(e.u, e.v).second);
        const auto tu = verts.type_of[static_cast<std::size_t>(e.u)];
        const auto tv = verts.type_of[static_cast<std::size_t>(e.v)];
        (tu == tv ? same : cross) += 1;
    }
    // expected same ~ n/4 * 1 * 2 = 5000, cross ~ 15000
    CHECK(same > 4000);
    CHECK(same < 6000);
    CHECK(cross > 13500);
    CHECK(cross < 16500);
}

TEST_CASE("adjacency is a symmetric csr image of the edge list") {
    auto g = hand_graph();
    build_adjacency(g);
    REQUIRE(g.adj_offset.size() == 7);
    CHECK(g.adj_offset[6] == 6); // 2 slots per edge
    auto degree = [&](int v) { return g.adj_offset[static_cast<std::size_t>(v) + 1] -
                                      g.adj_offset[static_cast<std::size_t>(v)]; };
    CHECK(degree(0) == 1);
    CHECK(degree(1) == 2);
    CHECK(degree(2) == 1);
    CHECK(degree(3) == 1);
    CHECK(degree(4) == 1);
    CHECK(degree(5) == 0);
    // neighbor of 0 is 1 with the edge weight
    CHECK(g.adj_vertex[static_cast<std::size_t>(g.adj_offset[0])] == 1);
    CHECK(g.adj_weight[static_cast<std::size_t>(g.adj_offset[0])] == 1.0);
}

TEST_CASE("connected components with sizes") {
    const auto g = hand_graph();
    const auto info = components(g);
    CHECK(info.largest_size == 3);
    CHECK(info.largest_fraction == doctest::Approx(0.5));
    CHECK(info.component_of[0] == info.component_of[1]);
    CHECK(info.component_of[1] == info.component_of[2]);
    CHECK(info.component_of[3] == info.component_of[4]);
    CHECK(info.component_of[0] != info.component_of[3]);
    CHECK(info.component_of[5] != info.component_of[0]);
    CHECK(info.component_of[5] != info.component_of[3]);
    std::int64_t total = 0;
    for (auto s : info.sizes) total += s;
    CHECK(total == 6);
}

TEST_CASE("connected pair sampling respects components") {
    const auto g = hand_graph();
    const auto info = components(g);
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        const auto [u, v] = sample_connected_pair(info, g.n, rng);
        CHECK(u != v);
        CHECK(info.component_of[static_cast<std::size_t>(u)] ==
              info.component_of[static_cast<std::size_t>(v)]);
    }

    WeightedGraph isolated;
    isolated.n = 4;
    const auto none = components(isolated);
    CHECK_THROWS_AS(sample_connected_pair(none, 4, rng), std::invalid_argument);
}
