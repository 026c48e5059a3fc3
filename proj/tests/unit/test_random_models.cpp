#include <cmath>

#include "doctest.h"
#include "hcube/random_models.hpp"

using namespace hcube;

TEST_CASE("binomial subgraphs") {
    CHECK(sampleBinomial(6, 1.0, 3) == SubgraphQn::full(6));
    CHECK(sampleBinomial(6, 0.0, 3).edgeCount() == 0);
    CHECK(sampleBinomial(8, 0.3, 9) == sampleBinomial(8, 0.3, 9));
    CHECK_FALSE(sampleBinomial(8, 0.3, 9) == sampleBinomial(8, 0.3, 10));
    double sum = 0;
    const int trials = 1000;
    for (int s = 0; s < trials; ++s) sum += static_cast<double>(sampleBinomial(10, 0.5, s).edgeCount());
    double se = std::sqrt(5120 * 0.25 / trials);
    CHECK(std::abs(sum / trials - 2560.0) < 4 * se);
}

TEST_CASE("reservoirs") {
    CHECK(sampleReservoir(8, 0.0, 1).empty());
    CHECK(sampleReservoir(8, 1.0, 1).size() == 256);
    double total = 0;
    for (int s = 0; s < 50; ++s) total += static_cast<double>(sampleReservoir(12, 0.1, s).size()) / 4096.0;
    CHECK(std::abs(total / 50 - 0.1) < 4 * std::sqrt(0.09 / 4096 / 50));
}

TEST_CASE("level-biased subgraphs") {
    ProbVector only0(7, 0.0);
    only0[0] = 1.0;
    auto g = sampleLevelBiased(7, only0, 0b0010110, 4);
    CHECK(g.edgeCount() == 7);
    CHECK(g.degree(0b0010110) == 7);
    // Constant probability: per-edge marginal equals the binomial model.
    int n = 8;
    double present = 0;
    const int trials = 200;
    for (int s = 0; s < trials; ++s) present += static_cast<double>(sampleLevelBiased(n, ProbVector(n, 0.37), 5, s).edgeCount());
    double N = n * 128.0 * trials;
    CHECK(std::abs(present / N - 0.37) < 4 * std::sqrt(0.37 * 0.63 / N));
    // Per-level densities.
    auto tup = solveFeasibleTuple(20, 2, 0.5, false);
    ProbVector pv(8);
    for (int i = 0; i < 8; ++i) pv[i] = 0.1 + 0.1 * i;
    std::vector<double> hit(8), tot(8);
    for (int s = 0; s < 300; ++s) {
        auto w = sampleLevelBiased(8, pv, 0, 1000 + s);
        for (Vertex v = 0; v < 256; ++v)
            for (int d = 0; d < 8; ++d)
                if (!((v >> d) & 1)) {
                    int lv = std::popcount(v);
                    tot[lv] += 1;
                    hit[lv] += w.has(v, d);
                }
    }
    for (int i = 0; i < 8; ++i) CHECK(std::abs(hit[i] / tot[i] - pv[i]) < 4 * std::sqrt(pv[i] * (1 - pv[i]) / tot[i]));
    CHECK(tup.pvec.size() == 20);
}

TEST_CASE("percolation structure") {
    int n = 9;
    ProbVector pv(n, 0.6);
    for (int seed = 0; seed < 10; ++seed) {
        auto s = samplePercolation(n, pv, 3, seed, 0b101);
        CHECK(isSubgraph(s.WPrime, s.W));
        CHECK(isSubgraph(s.P, s.WPrime));
        for (Vertex v = 0; v < s.W.order(); ++v) {
            int up = std::popcount(s.WPrime.adj(v) & upDirections(v, 0b101, n));
            CHECK((up == 0 || up == 3));
            int wup = std::popcount(s.W.adj(v) & upDirections(v, 0b101, n));
            CHECK((up == 3) == (wup >= 3));
        }
        for (Vertex r : s.R) CHECK(s.P.degree(r) == 0);
    }
    CHECK(samplePercolation(n, pv, n + 1, 1).WPrime.edgeCount() == 0);
    auto one = samplePercolation(6, ProbVector(6, 1.0), 1, 2);
    for (Vertex v = 0; v < 63; ++v) CHECK(std::popcount(one.WPrime.adj(v) & ~v) == 1);
    // Dense sample agrees with local queries.
    PercolationModel model(n, pv, 3, 0b101, 7);
    auto s = samplePercolation(n, pv, 3, 7, 0b101);
    for (const Edge& e : SubgraphQn::full(n).edges()) {
        CHECK(s.W.has(e) == model.inW(e));
        CHECK(s.WPrime.has(e) == model.inWPrime(e));
        CHECK(s.P.has(e) == model.inP(e));
    }
}

TEST_CASE("level function and percolation marginals") {
    CHECK(fLevel(3, 0.0, 20, 4) == 0.0);
    CHECK(fLevel(3, 1.0, 20, 4) == doctest::Approx(0.9801 * 4 / 17).epsilon(1e-14));
    CHECK_THROWS(fLevel(17, 0.5, 20, 4));
    double prev = 0;
    for (int k = 0; k <= 100; ++k) {
        double f = fLevel(5, k / 100.0, 30, 3);
        CHECK(f >= prev);
        prev = f;
    }
    // Monte Carlo against the local model at a level-4 edge.
    int n = 14, M = 3;
    ProbVector pv(n, 0.35);
    Edge e{0b0000000001111, 5};
    int hits = 0;
    const int trials = 20000;
    for (int seed = 0; seed < trials; ++seed) hits += PercolationModel(n, pv, M, 0, seed).inP(e);
    double f = fLevel(4, 0.35, n, M);
    CHECK(std::abs(hits / double(trials) - f) < 4 * std::sqrt(f * (1 - f) / trials));
}

TEST_CASE("feasible tuple solver") {
    auto t = solveFeasibleTuple(40, 3, 0.3, false);
    CHECK(t.m == doctest::Approx(t.t / 40));
    for (int i = 0; i <= lastFeasibleLevel(40); ++i) {
        CHECK(std::abs(fLevel(i, t.pvec[i], 40, 3) - t.m) <= 1e-12);
        CHECK(t.pvec[i] > 0.0);
        CHECK(t.pvec[i] <= 0.3);
    }
    for (int i = lastFeasibleLevel(40) + 1; i < 40; ++i) CHECK(t.pvec[i] == 0.0);
    CHECK_THROWS_AS(solveFeasibleTuple(200, 1601, 0.05, true), FeasibilityError);
    CHECK_THROWS_AS(solveFeasibleTuple(40, 3, 0.3, false, {std::nullopt, 1.0}), FeasibilityError);
}

TEST_CASE("chain enumeration") {
    auto q = SubgraphQn::full(6);
    CHECK(enumerateChains(6, 0, 0b111, 0, nullptr).count == 6);
    CHECK(enumerateChains(6, 0b100, 0b100, 0, nullptr).count == 1);
    CHECK_THROWS(enumerateChains(6, 0b1, 0b10, 0, nullptr));
    auto fam = enumerateChains(6, 0b000001, 0b111101, 0, &q);
    CHECK(fam.count == 24);
    for (const auto& c : fam.chains) {
        CHECK(c.size() == 5);
        for (std::size_t k = 0; k + 1 < c.size(); ++k) {
            CHECK(distance(c[k], c[k + 1]) == 1);
            CHECK(levelFrom(c[k + 1], 0) == levelFrom(c[k], 0) + 1);
        }
    }
    // Avoiding an interior vertex removes a!b! chains.
    Vertex x = 0, y = 0b111111, mid = 0b000111;
    CHECK(enumerateChains(6, x, y, 0, nullptr, {mid}).count == factorial(6) - factorial(3) * factorial(3));
    CHECK(enumerateChains(6, x, y, 0, nullptr, {mid}, false).count == factorial(6) - factorial(3) * factorial(3));
    CHECK(enumerateChains(6, x, y, 0, nullptr, {x}).count == 0);
    // Re-basing: translating everything by z preserves counts.
    auto g = sampleBinomial(7, 0.7, 3);
    Vertex z = 0b1010011;
    SubgraphQn gz(7);
    for (const Edge& e : g.edges()) gz.add(edgeBetween(e.v ^ z, e.other() ^ z));
    for (Vertex a = 0; a < 128; a += 9) {
        Vertex b = a | 0b0110110;
        auto c1 = enumerateChains(7, a, b, 0, &g);
        auto c2 = enumerateChains(7, a ^ z, b ^ z, z, &gz);
        CHECK(c1.count == c2.count);
        CHECK(c1.count == enumerateChains(7, a, b, 0, &g, {}, false).count);
    }
}

TEST_CASE("chains disjoint from a second family") {
    auto g = sampleBinomial(8, 0.8, 17);
    int checked = 0;
    for (Vertex x = 0; x < 256; x += 13)
        for (Vertex xp = 0; xp < 256; xp += 29) {
            Vertex y = x | 0b11110000, yp = xp | 0b00111100;
            auto A = enumerateChains(8, x, y, 0, &g);
            auto B = enumerateChains(8, xp, yp, 0, &g);
            VertexSet onB;
            for (const auto& c : B.chains) onB.insert(c.begin(), c.end());
            std::uint64_t clean = 0;
            for (const auto& c : A.chains) {
                bool meet = false;
                for (Vertex v : c) meet |= onB.count(v) > 0;
                clean += !meet;
            }
            CHECK(chainsDisjointFrom(8, x, y, xp, yp, 0, &g) == clean);
            CHECK(clean <= A.count);
            ++checked;
        }
    CHECK(checked > 100);
    CHECK(chainsDisjointFrom(8, 0, 0b1111, 0, 0b1111, 0, nullptr) == 0);
    // x u x' not inside y n y': whole family survives.
    CHECK(chainsDisjointFrom(8, 0b1, 0b1111, 0b10000, 0b110000, 0, nullptr) == 6);
}

TEST_CASE("level intersection counts") {
    CHECK(levelIntersectionCount(2, 7, 3, 3) == factorial(4));
    CHECK(levelIntersectionCount(2, 7, 3, 2) == 0);
    // x, x' at level m, distance 2; count chains through L_i within the span of
    // x u x' and y n y'.
    int n = 10;
    Vertex x = 0b0000000011, xp = 0b0000000101;
    Vertex y = 0b0011111111, yp = 0b1100111111;
    int m = 2, mp = 8;
    Vertex lo = x | xp, hi = y & yp;
    int b = std::popcount(hi);
    auto fam = enumerateChains(n, x, y, 0, nullptr);
    std::uint64_t sumLevels = 0;
    for (int i = m + 1; i <= b; ++i) {
        std::uint64_t brute = 0;
        for (const auto& c : fam.chains) {
            bool meets = false;
            for (Vertex v : c) meets |= std::popcount(v) == i && (v & lo) == lo && (v & ~hi) == 0;
            brute += meets;
        }
        CHECK(levelIntersectionCount(m, mp, b, i) == brute);
        sumLevels += brute;
    }
    CHECK(sumLevels >= fam.count - chainsDisjointFrom(n, x, y, xp, yp, 0, nullptr));
}

TEST_CASE("admissible patterns") {
    CHECK(admissiblePatternCount(1, 2, 1, 5) == 2);
    CHECK(admissiblePatternCount(3, 0, 0, 5) == 1);
    for (int k = 3; k <= 16; ++k)
        for (int i = 0; i <= k - 2; ++i)
            for (int l = 0; l <= k - 2; ++l)
                for (int s = 0; s <= k - 2; ++s) CHECK(admissiblePatternCountBrute(i, l, s, k) == admissiblePatternCountDP(i, l, s, k));
    for (int k = 3; k <= 40; ++k)
        for (int i = 0; i <= k - 3; ++i) {
            std::uint64_t sum = 0;
            for (int l = 0; l <= k - 2; ++l)
                for (int s = 0; s <= k - 2; ++s) sum += admissiblePatternCountDP(i, l, s, k);
            CHECK(sum == binomial(k - 2, i));
        }
}
