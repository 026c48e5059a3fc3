#include <functional>

#include "doctest.h"
#include "hcube/matching.hpp"
#include "hcube/oracles.hpp"
#include "hcube/random_models.hpp"

using namespace hcube;

namespace {

// Plain augmenting-path matching over the parity bipartition.
std::size_t kuhnMatching(const SubgraphQn& g) {
    std::vector<long long> mate(g.order(), -1);
    std::size_t size = 0;
    for (Vertex v = 0; v < g.order(); ++v) {
        if (parity(v)) continue;
        std::vector<char> used(g.order(), 0);
        std::function<bool(Vertex)> aug = [&](Vertex a) {
            for (int d = 0; d < g.dim(); ++d) {
                if (!g.has(a, d)) continue;
                Vertex b = a ^ bit(d);
                if (used[b]) continue;
                used[b] = 1;
                if (mate[b] < 0 || aug(static_cast<Vertex>(mate[b]))) {
                    mate[b] = static_cast<long long>(a);
                    return true;
                }
            }
            return false;
        };
        size += aug(v);
    }
    return size;
}

Graph randomGraph(int n, double p, std::uint64_t seed) {
    Graph g(n);
    Rng rng(seed, "oracle-graph");
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
            if (rng.bernoulli(p)) g.addEdge(a, b);
    return g;
}

}  // namespace

TEST_CASE("Hamilton cycles in full cubes") {
    for (int n = 2; n <= 6; ++n) {
        auto r = exactHamiltonCycle(SubgraphQn::full(n));
        CHECK(r.outcome == Outcome::Found);
        CHECK(r.cycle.size() == (std::size_t{1} << n));
        CHECK(verifyHamiltonCycle(SubgraphQn::full(n), r.cycle));
    }
    auto q2 = exactHamiltonCycle(SubgraphQn::full(2));
    CHECK(q2.cycle.size() == 4);
}

TEST_CASE("Hamilton UNSAT cases") {
    auto g = SubgraphQn::full(4);
    g.remove(0, 0);
    g.remove(0, 1);
    g.remove(0, 2);
    CHECK(exactHamiltonCycle(g).outcome == Outcome::Unsat);
    CHECK(exactHamiltonCycle(SubgraphQn::full(1)).outcome == Outcome::Unsat);
    // Two 4-cycles joined by a single edge pair through a cut vertex.
    Graph bow(5);
    bow.addEdge(0, 1);
    bow.addEdge(1, 2);
    bow.addEdge(2, 0);
    bow.addEdge(2, 3);
    bow.addEdge(3, 4);
    bow.addEdge(4, 2);
    CHECK(exactHamiltonCycle(bow).outcome == Outcome::Unsat);
}

TEST_CASE("Hamilton search agrees with subset DP") {
    int disagreements = 0, found = 0;
    for (int seed = 0; seed < 400; ++seed) {
        int n = 4 + seed % 9;
        auto g = randomGraph(n, 0.3 + 0.05 * (seed % 8), seed);
        auto r = exactHamiltonCycle(g);
        REQUIRE(r.outcome != Outcome::Timeout);
        bool ham = r.outcome == Outcome::Found;
        found += ham;
        disagreements += ham != hamiltonianByDP(g);
    }
    CHECK(disagreements == 0);
    CHECK(found > 50);
    for (int seed = 0; seed < 300; ++seed) {
        auto g = sampleBinomial(4, 0.75, seed);
        auto r = exactHamiltonCycle(g);
        CHECK((r.outcome == Outcome::Found) == hamiltonianByDP(toGraph(g)));
    }
}

TEST_CASE("Hamilton search budget") {
    auto r = exactHamiltonCycle(SubgraphQn::full(6), Budget{3, 0});
    CHECK(r.outcome == Outcome::Timeout);
}

TEST_CASE("perfect matchings") {
    auto pm = exactPerfectMatching(SubgraphQn::full(5));
    REQUIRE(pm.has_value());
    CHECK(pm->size() == 16);
    SubgraphQn iso = SubgraphQn::full(4);
    for (int d = 0; d < 4; ++d) iso.remove(5, d);
    CHECK_FALSE(exactPerfectMatching(iso).has_value());
    for (int seed = 0; seed < 100; ++seed) {
        auto g = sampleBinomial(5, 0.6, seed);
        CHECK(maximumMatchingSize(g) == kuhnMatching(g));
        auto m = exactPerfectMatching(g);
        CHECK(m.has_value() == (kuhnMatching(g) == 16));
        if (m) {
            std::vector<char> seen(32, 0);
            for (const Edge& e : *m) {
                CHECK(g.has(e));
                CHECK_FALSE(seen[e.v]);
                CHECK_FALSE(seen[e.other()]);
                seen[e.v] = seen[e.other()] = 1;
            }
        }
    }
}

TEST_CASE("Hall violators") {
    BipartiteGraph b(3, 3);
    b.addEdge(0, 0);
    b.addEdge(1, 0);
    b.addEdge(2, 1);
    b.addEdge(2, 2);
    auto m = hopcroftKarp(b);
    CHECK(m.size == 2);
    CHECK(isValidMatching(b, m));
    auto S = hallViolator(b, m);
    std::vector<char> nb(3, 0);
    for (int l : S)
        for (int r : b.adj[l]) nb[r] = 1;
    int nsize = nb[0] + nb[1] + nb[2];
    CHECK(nsize < static_cast<int>(S.size()));
}
