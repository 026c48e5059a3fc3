#include <algorithm>
#include <set>

#include "doctest.h"
#include "hcube/tree.hpp"

using namespace hcube;

namespace {

// Existence of a monotone lo->hi path by a forward sweep over the interval.
bool monotoneReachable(const SubgraphQn& g, Vertex lo, Vertex hi, Vertex root) {
    std::set<Vertex> frontier{lo};
    while (!frontier.empty()) {
        if (frontier.count(hi)) return true;
        std::set<Vertex> next;
        for (Vertex v : frontier)
            for (int d : directionsOf((hi ^ v) & ((hi ^ root) & ~(v ^ root))))
                if (g.has(v, d)) next.insert(v ^ bit(d));
        frontier = std::move(next);
    }
    return false;
}

bool isMonotoneChain(const std::vector<Vertex>& c, Vertex root) {
    for (std::size_t i = 0; i + 1 < c.size(); ++i) {
        if (distance(c[i], c[i + 1]) != 1) return false;
        if (std::popcount(c[i + 1] ^ root) != std::popcount(c[i] ^ root) + 1) return false;
    }
    return true;
}

VertexMask maskOf(std::size_t order, const std::vector<Vertex>& vs) {
    VertexMask m(order, 0);
    for (Vertex v : vs) m[v] = 1;
    return m;
}

}  // namespace

TEST_CASE("tree predicate and BFS spanning tree") {
    SubgraphQn full = SubgraphQn::full(5);
    VertexMask all(32, 1);
    VertexTree t = spanningTreeOf(full, all, 0);
    CHECK(isTree(t));
    CHECK(t.vertexCount() == 32);
    VertexTree bad = t;
    bad.graph.add(0, 0);
    bad.graph.add(1, 1);
    bad.graph.add(2, 0);
    bad.graph.add(0, 1);
    CHECK_FALSE(isTree(bad));
    VertexTree single{SubgraphQn(3), maskOf(8, {5})};
    CHECK(isTree(single));
    VertexTree empty{SubgraphQn(3), VertexMask(8, 0)};
    CHECK_FALSE(isTree(empty));
    CHECK_THROWS(spanningTreeOf(full, VertexMask(32, 0), 0));
}

TEST_CASE("triples satisfy separation, avoidance and nesting") {
    int n = 12;
    Rng rng(3, "triple-test");
    VertexMask avoid = ballMask(n, {0b101010101010}, 1);
    std::size_t complete = 0, total = 0;
    for (int trial = 0; trial < 200; ++trial) {
        Vertex root = trial % 2 ? 0 : lowMask(n);
        Vertex y;
        do {
            y = rng.below(Vertex{1} << n);
        } while (std::popcount(y ^ root) < 6 || std::popcount(y ^ root) > 10);
        for (const VertexMask* av : std::vector<const VertexMask*>{nullptr, &avoid}) {
            TripleSet ts = buildTriples(n, y, root, av, 0.25, trial, 8);
            std::string why;
            REQUIRE_MESSAGE(verifyTriples(n, ts, av, &why), why);
            complete += ts.complete;
            ++total;
        }
    }
    CHECK(complete * 10 >= total * 9);
    CHECK_THROWS(buildTriples(n, 7, 7, nullptr, 0.25, 0));
}

TEST_CASE("chain search agrees with monotone reachability") {
    int n = 9;
    Rng rng(8, "chain-test");
    for (int trial = 0; trial < 300; ++trial) {
        SubgraphQn g = sampleBinomial(n, 0.45, trial);
        Vertex root = rng.below(Vertex{1} << n);
        DirMask hiRel = rng.below(Vertex{1} << n);
        DirMask loRel = hiRel & rng.below(Vertex{1} << n);
        Vertex lo = root ^ loRel, hi = root ^ hiRel;
        auto c = findChain(g, lo, hi, root, nullptr, rng);
        REQUIRE(c.has_value() == monotoneReachable(g, lo, hi, root));
        if (c) {
            CHECK(c->front() == lo);
            CHECK(c->back() == hi);
            CHECK(isMonotoneChain(*c, root));
            for (std::size_t i = 0; i + 1 < c->size(); ++i) CHECK(g.hasEdge((*c)[i], (*c)[i + 1]));
        }
    }
    CHECK_THROWS(findChain(SubgraphQn::full(4), 0b11, 0b01, 0, nullptr, rng));
}

TEST_CASE("chain forest on full and edgeless cubes") {
    int n = 10;
    ChainForestParams p;
    RootedForest full = growChainForest(SubgraphQn::full(n), 0, nullptr, p);
    CHECK(full.targets > 0);
    CHECK(full.uncoveredTargets == 0);
    CHECK(full.chainsMissing == 0);
    CHECK(isRootedForest(full));
    for (const TargetCoverage& tc : full.coverage) CHECK(tc.covered >= tc.chains);
    RootedForest none = growChainForest(SubgraphQn(n), lowMask(n), nullptr, p);
    CHECK(none.uncoveredTargets == none.targets);
    CHECK(std::count(none.vertices.begin(), none.vertices.end(), 1) == 0);
}

TEST_CASE("chain forest on percolation respects degree bound") {
    int n = 12;
    ProbVector pvec = solveFeasibleTuple(n, 1, 1.0, false).pvec;
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        for (Vertex corner : treeCorners(n)) {
            VertexMask blocked(std::size_t{1} << n, 0);
            SubgraphQn P = cornerPercolation(SubgraphQn::full(n), pvec, 1, 8, corner, blocked, seed);
            for (Vertex v = 0; v < P.order(); ++v) REQUIRE(std::popcount(P.adj(v) & ~(v ^ corner)) <= 8);
            ChainForestParams cp;
            cp.seed = seed;
            RootedForest F = growChainForest(P, corner, nullptr, cp);
            REQUIRE(isRootedForest(F));
            for (Vertex v = 0; v < P.order(); ++v) REQUIRE(F.edges.degree(v) <= 8 + 1);
            CHECK(isSubgraph(F.edges, P));
        }
    }
}

TEST_CASE("L1-L2 connecting cycle") {
    int n = 8;
    SubgraphQn full = SubgraphQn::full(n);
    LevelCycle c = connectL1L2(full, {}, 0);
    REQUIRE(c.outcome == Outcome::Found);
    CHECK(c.cycle.size() == 2 * n);
    CHECK(c.auxEdges == binomial(n, 2));
    CHECK(verifyLevelCycle(full, {}, 0, c.cycle));
    VertexMask R(std::size_t{1} << n, 0);
    for (Vertex v = 0; v < R.size(); ++v) R[v] = std::popcount(v) == 2;
    CHECK(connectL1L2(full, R, 0).outcome == Outcome::Unsat);
    R.assign(R.size(), 0);
    for (int d = 0; d < n - 2; ++d) R[bit(d)] = 1;
    CHECK_THROWS(connectL1L2(full, R, 0));

    int found = 0;
    for (std::uint64_t seed = 0; seed < 80; ++seed) {
        int m = 10;
        SubgraphQn g = sampleBinomial(m, seed < 40 ? 0.4 : 0.8, seed);
        VertexMask res(std::size_t{1} << m, 0);
        for (Vertex v : sampleReservoir(m, 0.05, seed)) res[v] = 1;
        Vertex root = seed % 2 ? 0 : lowMask(m);
        LevelCycle lc = connectL1L2(g, res, root);
        // Independent count of auxiliary edges.
        std::size_t aux = 0;
        for (int a = 0; a < m; ++a)
            for (int b = a + 1; b < m; ++b) {
                Vertex x = root ^ bit(a), y = root ^ bit(b), z = root ^ bit(a) ^ bit(b);
                aux += !res[x] && !res[y] && !res[z] && g.hasEdge(x, z) && g.hasEdge(y, z);
            }
        CHECK(lc.auxEdges == aux);
        REQUIRE(lc.outcome != Outcome::Timeout);
        if (lc.outcome == Outcome::Found) {
            ++found;
            CHECK(verifyLevelCycle(g, res, root, lc.cycle));
        }
    }
    CHECK(found > 0);
}

TEST_CASE("near-spanning tree on the full cube spans everything") {
    NearSpanningParams p;
    TreeResult r = buildNearSpanningTree(SubgraphQn::full(10), {}, {}, p);
    REQUIRE(r.ok);
    CHECK(isTree(r.tree));
    CHECK(r.tree.vertexCount() == 1024);
    CHECK(r.minCoverage == 1.0);
    CHECK(r.tree.maxDegree() <= r.degreeCap);
    for (const CornerReport& c : r.corners) CHECK(c.cycleOutcome == Outcome::Found);
}

TEST_CASE("near-spanning tree preconditions") {
    NearSpanningParams p;
    p.gamma = 0.5;
    CHECK_THROWS(buildNearSpanningTree(SubgraphQn::full(10), {}, {0b0000111100, 0b0000111111}, p));
    p.gamma = 0;
    p.k = 1;
    CHECK_THROWS(buildNearSpanningTree(SubgraphQn::full(10), {}, {0b11}, p));
}

TEST_CASE("near-spanning tree structural invariants over seeds") {
    int n = 10;
    Vertex a = 0b0110011000;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        SubgraphQn g = sampleBinomial(n, 0.75, seed);
        VertexMask R(std::size_t{1} << n, 0);
        for (Vertex v : sampleReservoir(n, 0.02, seed)) R[v] = 1;
        NearSpanningParams p;
        p.seed = seed;
        p.k = 1;
        std::vector<Vertex> A;
        if (seed % 2) A.push_back(a);
        TreeResult r = buildNearSpanningTree(g, R, A, p);
        if (!r.ok) {
            // Only the connecting-cycle stage may fail, and it must say so.
            CHECK(r.failure.find("cycle") != std::string::npos);
            continue;
        }
        REQUIRE(isTree(r.tree));
        CHECK(isSubgraph(r.tree.graph, g));
        CHECK(r.tree.maxDegree() <= r.degreeCap);
        for (Vertex v = 0; v < g.order(); ++v)
            if (r.tree.vertices[v]) {
                REQUIRE_FALSE(R[v]);
                REQUIRE_FALSE(r.avoided[v]);
            }
        CHECK(r.minCoverage >= 0.0);
        CHECK(r.meanCoverage > 0.8);
    }
}

TEST_CASE("tree extension by deficiency matching") {
    int n = 10;
    SubgraphQn full = SubgraphQn::full(n);
    VertexMask all(std::size_t{1} << n, 1);
    VertexTree T = spanningTreeOf(full, all, 0);
    ExtendParams ep;
    ExtendResult same = extendTree(T, {}, {}, {}, full, ep);
    CHECK(same.added.empty());
    CHECK(same.tree.graph == T.graph);

    // Remove a sparse set of leaves-to-be: keep a tree on the even-distance
    // vertices plus a spanning structure, then extend in the full cube.
    VertexMask part(all.size(), 0);
    for (Vertex v = 0; v < part.size(); ++v) part[v] = (v % 7) != 3;
    VertexTree T2 = spanningTreeOf(full, part, 0);
    REQUIRE(isTree(T2));
    ep.checkZBound = false;
    ExtendResult ext = extendTree(T2, {}, {}, {}, full, ep);
    CHECK(ext.uncovered.empty());
    CHECK(isTree(ext.tree));
    CHECK(ext.tree.maxDegree() <= T2.maxDegree() + 1);

    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        int m = 12;
        SubgraphQn host = sampleBinomial(m, 0.8, seed);
        VertexMask R(std::size_t{1} << m, 0);
        for (Vertex v : sampleReservoir(m, 0.1, seed)) R[v] = 1;
        NearSpanningParams np;
        np.seed = seed;
        TreeResult base = buildNearSpanningTree(host, R, {}, np);
        if (!base.ok) continue;
        SubgraphQn Geps = sampleBinomial(m, 0.5, seed + 100);
        ExtendParams xp;
        xp.checkZBound = false;
        xp.eps = 0.5;
        xp.seed = seed;
        ExtendResult e = extendTree(base.tree, {}, {}, {}, Geps, xp);
        REQUIRE(isTree(e.tree));
        CHECK(e.tree.maxDegree() <= base.tree.maxDegree() + 1);
        std::set<Vertex> treeEnds, newEnds;
        for (const Edge& ed : e.added) {
            Vertex nv = base.tree.vertices[ed.v] ? ed.other() : ed.v;
            Vertex tv = ed.v ^ ed.other() ^ nv;
            REQUIRE(base.tree.vertices[tv]);
            REQUIRE_FALSE(base.tree.vertices[nv]);
            CHECK(treeEnds.insert(tv).second);
            CHECK(newEnds.insert(nv).second);
            CHECK(Geps.hasEdge(nv, tv));
            CHECK(e.tree.graph.degree(nv) == 1);
        }
        CHECK(e.uncovered.size() + e.tree.vertexCount() == host.order());
    }
    VertexTree tiny{SubgraphQn(6), maskOf(64, {0})};
    CHECK_THROWS(extendTree(tiny, {}, {}, {}, SubgraphQn::full(6), ExtendParams{}));
    CHECK_THROWS(extendTree(tiny, maskOf(64, {0}), {}, {}, SubgraphQn::full(6), ep));
}

TEST_CASE("repatching through length-four paths") {
    int n = 14;
    Vertex x = 0b10110010011001;
    auto makeInstance = [&](Rng& rng, std::vector<std::pair<Vertex, Vertex>>& C, std::vector<std::vector<Vertex>>& B) {
        C.clear();
        B.clear();
        for (int i = 0; i + 1 < n; i += 2) {
            Vertex y = x ^ bit(i), z = x ^ bit(i + 1);
            C.push_back({y, z});
            std::vector<Vertex> b;
            std::vector<int> dirs;
            for (int d = 0; d < n; ++d)
                if (d != i && d != i + 1) dirs.push_back(d);
            rng.shuffle(dirs);
            for (int t = 0; t < 3; ++t) b.push_back(y ^ bit(dirs[t]));
            for (int t = 3; t < 5; ++t) b.push_back(z ^ bit(dirs[t]));
            B.push_back(b);
        }
    };
    Rng rng(4, "repatch-test");
    std::vector<std::pair<Vertex, Vertex>> C;
    std::vector<std::vector<Vertex>> B;
    makeInstance(rng, C, B);
    RepatchParams rp;
    SubgraphQn full = SubgraphQn::full(n);
    RepatchResult r = repatch(n, x, C, B, {}, full, rp);
    REQUIRE(r.ok);
    CHECK(r.pair == 0);
    REQUIRE(r.paths.size() == 2 + 1);
    for (const auto& path : r.paths) {
        CHECK(path.size() == 5);
        CHECK(std::set<Vertex>(path.begin(), path.end()).size() == 5);
    }

    VertexSet F;
    for (Vertex v : ballFull(n, x, 4))
        if (v != x) F.insert(v);
    CHECK_FALSE(repatch(n, x, C, B, F, full, rp).ok);

    int ok = 0;
    for (int inst = 0; inst < 100; ++inst) {
        makeInstance(rng, C, B);
        SubgraphQn g = sampleBinomial(n, 0.4, inst);
        VertexSet Fi;
        for (int t = 0; t < 6; ++t) Fi.insert(x ^ rng.below(Vertex{1} << n));
        RepatchResult res = repatch(n, x, C, B, Fi, g, rp);
        if (!res.ok) {
            CHECK(res.diagnostics.size() == C.size());
            continue;
        }
        ++ok;
        const auto& b = B[res.pair];
        std::vector<Vertex> ny, nz;
        for (Vertex v : b) {
            if (distance(v, res.y) == 1) ny.push_back(v);
            if (distance(v, res.z) == 1) nz.push_back(v);
        }
        CHECK(connectedIn(res.edges, ny));
        CHECK(connectedIn(res.edges, nz));
        CHECK(static_cast<int>(res.vertices.size()) < 5 * rp.D);
        for (Vertex v : res.vertices) {
            CHECK(v != res.y);
            CHECK(v != res.z);
            CHECK_FALSE(Fi.count(v));
        }
        for (const Edge& e : res.edges) CHECK(g.has(e));
    }
    CHECK(ok > 0);
    std::vector<std::vector<Vertex>> big = B;
    big[0].assign(8, C[0].first ^ bit(5));
    CHECK_THROWS(repatch(n, x, C, big, {}, full, rp));
}
