#ifndef HCUBE_TREE_HPP
#define HCUBE_TREE_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hcube/cube.hpp"
#include "hcube/oracles.hpp"
#include "hcube/random_models.hpp"
#include "hcube/rng.hpp"

namespace hcube {

using VertexMask = std::vector<char>;

// A subgraph of Q^n on an explicit vertex set (single vertices allowed).
struct VertexTree {
    SubgraphQn graph;
    VertexMask vertices;

    std::size_t vertexCount() const;
    int maxDegree() const;
};

bool isTree(const VertexTree& t);
// BFS spanning tree of the component of h[vertices] containing start.
VertexTree spanningTreeOf(const SubgraphQn& h, const VertexMask& vertices, Vertex start);

VertexMask ballMask(int n, const std::vector<Vertex>& centres, int r);

// a = root + one direction, c, b neighbour of y; a <= c <= b relative to root.
struct Triple {
    Vertex a = 0;
    Vertex c = 0;
    Vertex b = 0;
};

struct TripleSet {
    Vertex y = 0;
    Vertex root = 0;
    std::vector<Triple> triples;
    int attempts = 0;
    bool complete = false;  // reached (1-eta)n triples
};

double tripleSeparation(int n, int s);
TripleSet buildTriples(int n, Vertex y, Vertex root, const VertexMask* avoid, double eta, std::uint64_t seed, int budget = 8);
// Checks separation, avoidance and nesting; why receives the first failure.
bool verifyTriples(int n, const TripleSet& ts, const VertexMask* avoid, std::string* why = nullptr);

// Monotone path from lo up to hi (lo below hi relative to root) inside g.
std::optional<std::vector<Vertex>> findChain(const SubgraphQn& g, Vertex lo, Vertex hi, Vertex root,
                                             const VertexMask* blocked, Rng& rng);

struct ChainForestParams {
    double eta = 0.25;
    int tripleBudget = 8;
    std::optional<int> lowLevel;   // default ceil(n/2)
    std::optional<int> highLevel;  // default floor(9n/10)
    bool preferDisjoint = true;
    std::uint64_t seed = 0;
};

struct TargetCoverage {
    Vertex y = 0;
    int triples = 0;
    int chains = 0;
    int covered = 0;  // |N(y) n V(F)|
};

struct RootedForest {
    int n = 0;
    Vertex corner = 0;
    SubgraphQn edges;
    VertexMask vertices;
    std::size_t targets = 0;
    std::size_t uncoveredTargets = 0;
    std::size_t tripleShortfalls = 0;
    std::size_t chainsFound = 0;
    std::size_t chainsMissing = 0;
    std::size_t disjointFallbacks = 0;
    std::vector<TargetCoverage> coverage;
};

RootedForest growChainForest(const SubgraphQn& P, Vertex corner, const VertexMask* avoid, const ChainForestParams& p);
// Acyclic, every vertex except those in L_1(corner) has exactly one down-edge,
// and vertices of L_1(corner) have none.
bool isRootedForest(const RootedForest& f);
int downDegree(const SubgraphQn& g, Vertex v, Vertex root);

struct LevelCycle {
    Outcome outcome = Outcome::Unsat;
    std::vector<Vertex> cycle;  // alternates L_1 and L_2
    std::size_t auxVertices = 0;
    std::size_t auxEdges = 0;
};

LevelCycle connectL1L2(const SubgraphQn& G, const VertexMask& R, Vertex root, const Budget& budget = {0, 2000});
bool verifyLevelCycle(const SubgraphQn& G, const VertexMask& R, Vertex root, const std::vector<Vertex>& cycle);

std::array<Vertex, 4> treeCorners(int n);

struct NearSpanningParams {
    int M = 1;
    int C = 16;
    double pmax = 1.0;  // eps handed to the feasible-tuple solver
    std::optional<ProbVector> pvec;
    int k = 0;           // avoid radius around the set A
    double gamma = 0.0;  // A must be pairwise at distance >= gamma n
    int degreeCap = 0;   // 0: 4CM+6
    ChainForestParams chain;
    Budget cycleBudget{0, 2000};
    int cycleRetries = 2;
    std::uint64_t seed = 0;
};

struct CornerReport {
    Vertex corner = 0;
    std::size_t forestVertices = 0;
    std::size_t targets = 0;
    std::size_t uncoveredTargets = 0;
    std::size_t tripleShortfalls = 0;
    Outcome cycleOutcome = Outcome::Unsat;
    std::size_t cycleLength = 0;
    int cycleAttempts = 0;
};

struct TreeResult {
    bool ok = false;
    std::string failure;
    VertexTree tree;
    VertexMask reservoir;
    VertexMask avoided;
    int degreeCap = 0;
    double minCoverage = 0;   // min |N(x) n V(T)|/n over x outside the avoided ball
    double meanCoverage = 0;
    std::size_t droppedVertices = 0;  // vertices of H outside the kept component
    std::vector<CornerReport> corners;
};

// Percolation graph rooted at corner: union of C samples of W', then
// intersected with G and stripped of blocked vertices.
SubgraphQn cornerPercolation(const SubgraphQn& G, const ProbVector& pvec, int M, int C, Vertex corner,
                             const VertexMask& blocked, std::uint64_t seed);

TreeResult buildNearSpanningTree(const SubgraphQn& G, const VertexMask& R, const std::vector<Vertex>& A,
                                 const NearSpanningParams& p);

struct ExtendParams {
    double eps = 0;  // density of Geps; 0 measures it
    bool removeOutliers = true;
    int ballRadius = 1;
    bool checkZBound = true;
    std::uint64_t seed = 0;
};

struct ExtendResult {
    VertexTree tree;
    std::vector<Edge> added;
    std::vector<Vertex> uncovered;
    std::size_t outliers = 0;
    int maxBallResidual = 0;
    double residualThreshold = 0;  // n^{3/4}
};

// Z[x] is a direction mask: Z(x) = {x + e_d : d in Z[x]}. An empty Z means
// Z(x) = N(x) n V(T') for every x.
ExtendResult extendTree(const VertexTree& Tp, const VertexMask& R, const VertexMask& W, const std::vector<DirMask>& Z,
                        const SubgraphQn& Geps, const ExtendParams& p);

struct RepatchParams {
    int D = 8;
    std::uint64_t seed = 0;
};

struct RepatchResult {
    bool ok = false;
    std::size_t pair = 0;
    Vertex y = 0;
    Vertex z = 0;
    std::vector<Edge> edges;
    std::vector<std::vector<Vertex>> paths;
    std::vector<Vertex> vertices;
    std::vector<std::string> diagnostics;
};

RepatchResult repatch(int n, Vertex x, const std::vector<std::pair<Vertex, Vertex>>& C,
                      const std::vector<std::vector<Vertex>>& B, const VertexSet& F, const SubgraphQn& Geps,
                      const RepatchParams& p);
// Connectivity of S inside the graph formed by edges.
bool connectedIn(const std::vector<Edge>& edges, const std::vector<Vertex>& S);

}  // namespace hcube

#endif
