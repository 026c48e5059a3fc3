#include <set>
#include <sstream>

#include "doctest.h"
#include "hcube/cube.hpp"
#include "hcube/rng.hpp"

using namespace hcube;

namespace {

SubgraphQn randomGraph(int n, double p, std::uint64_t seed) {
    SubgraphQn g(n);
    Rng rng(seed, "test-graph");
    for (Vertex v = 0; v < g.order(); ++v)
        for (int d = 0; d < n; ++d)
            if (!((v >> d) & 1) && rng.bernoulli(p)) g.add(v, d);
    return g;
}

// Independent count: test every direction set of size l containing v edge by edge.
std::uint64_t bruteCubesAt(const SubgraphQn& g, Vertex v, int l) {
    std::uint64_t count = 0;
    int n = g.dim();
    for (DirMask dirs = 0; dirs < (DirMask{1} << n); ++dirs) {
        if (std::popcount(dirs) != l) continue;
        Vertex base = v & ~dirs;
        bool ok = true;
        for (DirMask sub = 0; sub < (DirMask{1} << n) && ok; ++sub) {
            if (sub & ~dirs) continue;
            Vertex w = base | sub;
            for (int d = 0; d < n; ++d)
                if (((dirs >> d) & 1) && !g.hasEdge(w, w ^ bit(d))) ok = false;
        }
        count += ok;
    }
    return count;
}

}  // namespace

TEST_CASE("distance and differing directions") {
    CHECK(distance(0b000, 0b111, 3) == 3);
    CHECK(distance(0b101, 0b101, 3) == 0);
    CHECK(distance(0b0101, 0b0110, 4) == 2);
    CHECK(differingDirections(0b000, 0b110, 3) == 0b110);
    CHECK(differingDirections(0b011, 0b011, 3) == 0);
    CHECK_THROWS_AS(distance(0b1000, 0b0001, 3), std::invalid_argument);
    Rng rng(1, "dist");
    for (int i = 0; i < 1000; ++i) {
        Vertex u = rng.below(1 << 10), v = rng.below(1 << 10), w = rng.below(1 << 10);
        CHECK(distance(u, v, 10) == std::popcount(differingDirections(u, v, 10)));
        CHECK(distance(u, v, 10) == distance(v, u, 10));
        CHECK(distance(u, w, 10) <= distance(u, v, 10) + distance(v, w, 10));
        CHECK((parity(u) != parity(v)) == (distance(u, v, 10) % 2 == 1));
        Subcube c = spannedSubcube(u, v);
        CHECK(c.contains(u));
        CHECK(c.contains(v));
        CHECK(c.dim() == distance(u, v, 10));
    }
}

TEST_CASE("subcube vertices") {
    CHECK(subcubeVertices({0, 0}) == std::vector<Vertex>{0});
    CHECK(subcubeVertices({0, 0b110}) == std::vector<Vertex>{0b000, 0b010, 0b100, 0b110});
    CHECK_THROWS_AS(subcubeVertices({0b010, 0b110}), std::invalid_argument);
    Rng rng(2, "sub");
    for (int i = 0; i < 200; ++i) {
        DirMask dirs = rng.below(1 << 8);
        Subcube c = subcubeAt(rng.below(1 << 8), dirs);
        auto vs = subcubeVertices(c);
        std::set<Vertex> s(vs.begin(), vs.end());
        CHECK(s.size() == (std::size_t{1} << std::popcount(dirs)));
        for (Vertex v : vs) {
            CHECK(c.contains(v));
            for (int d : directionsOf(dirs)) CHECK(s.count(v ^ bit(d)) == 1);
        }
    }
}

TEST_CASE("subcube disjointness agrees with vertex sets") {
    Rng rng(3, "disj");
    for (int i = 0; i < 500; ++i) {
        Subcube a = subcubeAt(rng.below(64), rng.below(64));
        Subcube b = subcubeAt(rng.below(64), rng.below(64));
        auto va = subcubeVertices(a), vb = subcubeVertices(b);
        std::set<Vertex> sa(va.begin(), va.end());
        bool meet = false;
        for (Vertex v : vb) meet |= sa.count(v) > 0;
        CHECK(disjoint(a, b) == !meet);
    }
}

TEST_CASE("subgraph basics") {
    SubgraphQn g(4);
    CHECK(g.edgeCount() == 0);
    g.add(0b0000, 0);
    g.add(0b0110, 3);
    CHECK(g.edgeCount() == 2);
    CHECK(g.hasEdge(0b0001, 0b0000));
    CHECK(g.hasEdge(0b1110, 0b0110));
    CHECK(g.symmetric());
    g.remove(0b0001, 0);
    CHECK(g.edgeCount() == 1);
    CHECK(SubgraphQn::full(5).edgeCount() == 5 * 16);
    CHECK(SubgraphQn::full(5).minDegree() == 5);
    auto r = randomGraph(9, 0.4, 7);
    std::uint64_t sum = 0;
    for (Vertex v = 0; v < r.order(); ++v) sum += r.degree(v);
    CHECK(r.edgeCount() * 2 == sum);
    CHECK(r.edges().size() == r.edgeCount());
    CHECK(r.symmetric());
}

TEST_CASE("graph file round trip") {
    auto g = randomGraph(7, 0.5, 11);
    std::stringstream ss;
    writeGraph(ss, g);
    CHECK(readGraph(ss) == g);
    std::stringstream bad("qn 3 1\n1 1\n");
    CHECK_THROWS(readGraph(bad));
    std::stringstream ok("qn 3 1\n0 1\n");
    auto h = readGraph(ok);
    CHECK(h.hasEdge(0, 1));
    std::stringstream trunc("qn 3 2\n0 1\n");
    CHECK_THROWS(readGraph(trunc));
}

TEST_CASE("balls") {
    auto q4 = SubgraphQn::full(4);
    CHECK(ball(q4, 5, 0) == std::vector<Vertex>{5});
    CHECK(ball(q4, 0, 1).size() == 5);
    CHECK(ball(SubgraphQn::full(5), 3, 2).size() == 16);
    CHECK(ballFull(5, 3, 2).size() == 16);
    for (int r = 0; r <= 6; ++r) {
        std::uint64_t expect = 0;
        for (int i = 0; i <= r; ++i) expect += binomial(6, i);
        CHECK(ballFull(6, 9, r).size() == expect);
        CHECK(ball(SubgraphQn::full(6), 9, r) == ballFull(6, 9, r));
    }
    // Graph metric: a path graph maps balls to intervals.
    SubgraphQn path(3);
    path.add(0b000, 0);
    path.add(0b001, 1);
    CHECK(ball(path, 0, 1) == std::vector<Vertex>{0b000, 0b001});
    CHECK(ball(path, 0, 2) == std::vector<Vertex>{0b000, 0b001, 0b011});
}

TEST_CASE("subcube counts at a vertex") {
    CHECK(countSubcubesAt(SubgraphQn::full(4), 6, 2) == 6);
    CHECK(countSubcubesAt(SubgraphQn(4), 6, 1) == 0);
    for (int i = 0; i < 6; ++i) {
        auto g = randomGraph(6, 0.7, 100 + i);
        for (Vertex v = 0; v < g.order(); v += 7)
            for (int l = 0; l <= 3; ++l) {
                auto c = countSubcubesAt(g, v, l);
                CHECK(c == bruteCubesAt(g, v, l));
                CHECK(c <= binomial(6, l));
                CHECK(c == subcubesAt(g, v, l).size());
            }
    }
}

TEST_CASE("subcube count sum identity") {
    for (int n = 1; n <= 6; ++n)
        for (int l = 0; l <= std::min(n, 3); ++l) {
            auto g = SubgraphQn::full(n);
            std::uint64_t total = 0;
            for (Vertex v = 0; v < g.order(); ++v) total += countSubcubesAt(g, v, l);
            CHECK(total == (std::uint64_t{1} << l) * binomial(n, l) * (std::uint64_t{1} << (n - l)));
        }
}

TEST_CASE("subcube counts at a pair") {
    auto q5 = SubgraphQn::full(5);
    CHECK(countSubcubesAtPair(q5, 0b00000, 0b00111, 2) == 0);
    CHECK(countSubcubesAtPair(q5, 0b00000, 0b00011, 2) == 1);
    CHECK(countSubcubesAtPair(q5, 0b00000, 0b00001, 2) == 4);
    auto g = randomGraph(6, 0.75, 5);
    for (Vertex u = 0; u < 64; u += 5)
        for (Vertex v = 0; v < 64; v += 3)
            for (int l = 1; l <= 3; ++l) {
                std::uint64_t brute = 0;
                for (const Subcube& c : subcubesAt(g, u, l)) brute += c.contains(v);
                int d = distance(u, v);
                CHECK(countSubcubesAtPair(g, u, v, l) == brute);
                CHECK(brute <= (d > l ? 0 : binomial(6 - d, l - d)));
            }
}

TEST_CASE("layer decomposition") {
    LayerDecomposition L(7, 3, 4);
    CHECK(L.layers() == 8);
    CHECK(L.t() == 2);
    for (int i = 0; i < L.layers(); ++i) {
        CHECK(std::popcount(L.prefix(i) ^ L.prefix(L.next(i))) == 1);
        CHECK(bit(L.crossingDir(i)) == (L.prefix(i) ^ L.prefix(L.next(i))));
    }
    for (Vertex x = 0; x < 16; ++x)
        for (int i = 0; i < 8; ++i) {
            Vertex v = L.clone(x, i);
            CHECK(L.layerOf(v) == i);
            CHECK(L.project(v) == x);
        }
    std::vector<int> sliceSizes(L.t());
    for (int i = 0; i < 8; ++i) ++sliceSizes[L.sliceOf(i)];
    CHECK(sliceSizes == std::vector<int>{4, 4});
    CHECK_THROWS(LayerDecomposition(4, 4, 1));
    CHECK_THROWS(LayerDecomposition(6, 2, 3));
}

TEST_CASE("intersection and union graphs") {
    LayerDecomposition L(8, 2, 4);
    CHECK(intersectionGraph(L, SubgraphQn::full(8)) == SubgraphQn::full(6));
    SubgraphQn g = SubgraphQn::full(8);
    Edge e{0b000100, 0};
    g.remove(L.clone(e.v, 2), L.lift(e.dir));
    auto I = intersectionGraph(L, g);
    auto U = unionGraph(L, g);
    CHECK_FALSE(I.has(e));
    CHECK(U.has(e));
    CHECK(I.edgeCount() == SubgraphQn::full(6).edgeCount() - 1);
    for (int trial = 0; trial < 4; ++trial) {
        auto r = randomGraph(8, 0.8, 40 + trial);
        auto Ir = intersectionGraph(L, r), Ur = unionGraph(L, r);
        for (int i = 0; i < L.layers(); ++i) {
            auto Li = layerGraph(L, r, i);
            CHECK(isSubgraph(Ir, Li));
            CHECK(isSubgraph(Li, Ur));
        }
        // Independent recount of the intersection rule.
        for (Vertex x = 0; x < 64; ++x)
            for (int d = 0; d < 6; ++d) {
                bool all = true, any = false;
                for (int i = 0; i < 4; ++i) {
                    bool h = r.has(L.clone(x, i), L.lift(d));
                    all &= h;
                    any |= h;
                }
                CHECK(Ir.has(x, d) == all);
                CHECK(Ur.has(x, d) == any);
            }
        CHECK(Ir.symmetric());
    }
    auto H = randomGraph(6, 0.5, 9);
    CHECK(intersectionGraph(L, cloneGraph(L, H)) == H);
}

TEST_CASE("bondedness") {
    LayerDecomposition L(7, 2, 4);
    Subcube c = {0, 0b111};
    auto full = SubgraphQn::full(7);
    CHECK(defaultBondThreshold(3) == 2);
    CHECK(defaultBondThreshold(2) == 1);
    CHECK(defaultBondThreshold(12) == 100);
    CHECK(isBonded(L, full, c, 4));
    for (const BondCount& bc : bondCounts(L, full, c)) {
        CHECK(bc.even == 4);
        CHECK(bc.odd == 4);
    }
    CHECK_THROWS_AS(isBonded(L, full, c, 5), std::invalid_argument);
    SubgraphQn cut = full;
    int d = L.crossingDir(2);
    for (Vertex x : subcubeVertices(c)) cut.remove(L.clone(x, 2) & ~bit(d), d);
    CHECK_FALSE(isBonded(L, cut, c, 1));
}
