#ifndef HCUBE_ABSORBER_HPP
#define HCUBE_ABSORBER_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hcube/cube.hpp"
#include "hcube/matching.hpp"
#include "hcube/rng.hpp"

namespace hcube {

struct CheckReport {
    std::vector<std::string> violations;

    bool ok() const { return violations.empty(); }
    void add(std::string s) { violations.push_back(std::move(s)); }
};

// Two l-cubes that let a cycle through the edge {zPrime, z} pick up x and
// its left tip y: the edge is replaced by zPrime - y - x - z.
struct AbsorberPair {
    Subcube left;
    Subcube right;
    Vertex x = 0;
    Vertex y = 0;       // left tip, the neighbour of x in left
    Vertex z = 0;       // right tip, the neighbour of x in right
    Vertex zPrime = 0;  // neighbour of y in right
    Edge el;            // x - y
    Edge er;            // x - z
    Edge e;             // y - zPrime

    Edge absorbedEdge() const { return edgeBetween(zPrime, z); }
};

// Pair with y = x + dl, z = x + dr, left spanned by leftDirs at y and right
// spanned by rightDirs at z. Empty when the geometry breaks (AP1)-(AP4) or
// the cubes meet.
std::optional<AbsorberPair> makeAbsorberPair(Vertex x, int dl, int dr, DirMask leftDirs, DirMask rightDirs);

// (AP1)-(AP4), disjointness, edge and cube presence in G, and the cached
// tips against the values recomputed from the cubes.
CheckReport validateAbsorberPair(const AbsorberPair& p, const SubgraphQn& G);

// Replaces the absorbed edge of p in a cyclic vertex sequence. Throws
// std::invalid_argument when the edge is not on the cycle or x, y already are.
std::vector<Vertex> spliceAbsorber(const std::vector<Vertex>& cycle, const AbsorberPair& p);

// Absorbing pairs for x in G whose cubes avoid the blocked vertices, with
// cube directions drawn from allowedDirs. At most limit results, in random
// order of (dl, dr).
std::vector<AbsorberPair> findAbsorberPairs(const SubgraphQn& G, Vertex x, int ell, DirMask allowedDirs,
                                            const std::vector<Vertex>& blocked, std::size_t limit, Rng& rng);

// Graph on A joining x, y when |N_G1(x) & N_G2(y)| >= beta |B| in either
// orientation. G1 and G2 share parts (left = A, right = B).
struct GammaGraph {
    int beta_num = 0;  // threshold as a count: ceil(beta |B|)
    std::vector<std::vector<int>> adj;

    int size() const { return static_cast<int>(adj.size()); }
    bool hasEdge(int x, int y) const;
};

GammaGraph gammaGraph(const BipartiteGraph& G1, const BipartiteGraph& G2, double beta);

struct ParityMatchResult {
    std::optional<std::vector<std::pair<int, int>>> matching;  // (side-0, side-1)
    std::vector<int> deficient;  // side-0 vertices whose neighbourhood is too small
    std::vector<int> balance;    // clustered mode: the D-set, by vertex
    bool balancedRoute = false;  // clustered mode: the balance-set route alone succeeded
    std::string failure;         // set when the balance-set route failed
};

// Perfect matching of Gamma - S between side 0 and side 1. In clustered mode
// cluster[v] in [0, t) and every edge joins consecutive clusters (cyclic);
// the per-cluster balance sets are built first and each cluster is then
// matched on its own. If that fails, one matching restricted to such edges
// is tried over the whole graph. Throws std::invalid_argument when |S| > d, S is not
// balanced, or (clustered) some cluster is not balanced by side.
ParityMatchResult robustParityMatch(const GammaGraph& gamma, const std::vector<int>& side,
                                    const std::vector<int>& S, int d, const std::vector<int>* cluster = nullptr);

struct DigraphMatchResult {
    std::vector<std::pair<int, int>> arcs;
    bool hypothesisIn = false;   // in-degree sums over large sets
    bool hypothesisOut = false;  // out-degree sums over small sets
    bool sizeAsserted = false;
    double bound = 0;  // c alpha n / (2C)
};

// Greedy maximal matching in a loopless digraph given by out-lists. The
// hypotheses are decided exactly by sorting degrees; when both hold the
// size bound is checked and a violation throws std::logic_error.
DigraphMatchResult digraphMatching(const std::vector<std::vector<int>>& out, double c, double C, double alpha);

struct RainbowResult {
    std::optional<std::vector<int>> choice;  // edge index per colour
    bool preconditionsHold = false;
    int resamples = 0;
};

// One edge per colour, pairwise disjoint. colours[i] lists the edges of
// colour i, each a set of r vertex ids. Random initial choice, then
// conflicting colours are resampled until none remain or the budget ends.
RainbowResult rainbowMatching(const std::vector<std::vector<std::vector<int>>>& colours, int m, int r, Rng& rng,
                              int maxResamples = 100000);

enum class AbsorberType { I, II, III };

const char* absorberTypeName(AbsorberType t);

struct SpecialAbsorber {
    AbsorberType type = AbsorberType::I;
    Vertex x = 0;
    int a = 0;
    int b = 0;
    std::vector<int> dirs;  // (c,d,d1..d4), (d1,d2) or (d1,d2,d3)
    std::vector<std::vector<Vertex>> paths;
    std::vector<Subcube> cubes;  // empty for a bare consistent system

    std::vector<Vertex> ends() const;       // first and last vertex of every path
    DirMask usedDirections() const;         // dirs plus a and b
};

// Pairs layers (0,1), (2,3), ... by the crossing direction between them.
Vertex layerPartner(const LayerDecomposition& L, Vertex y);

// Type from whether x+a and x+b stay in the layer of x; a and b swap for
// Type III when only x+a stays. Throws std::invalid_argument on a direction
// collision or a tuple of the wrong size.
SpecialAbsorber buildConsistentSystem(const LayerDecomposition& L, Vertex x, int a, int b,
                                      const std::vector<int>& dirs);
AbsorberType absorberTypeFor(const LayerDecomposition& L, Vertex x, int a, int b);
// Number of direction parameters each type takes.
int absorberDirCount(AbsorberType t);

// The projections to Q^{n-s} of the path ends.
std::vector<Vertex> endMolecules(const LayerDecomposition& L, const SpecialAbsorber& cs);

// Chooses the cubes: for each linked pair the first candidate at the
// designated end vertex that avoids usedDirections(), lies in G together
// with its linked image, and misses the paths and the cubes chosen so far.
// candidates[i] is the list for ends()[i]; empty lists fall back to every
// l-cube of G there. Empty result when some pair has no admissible choice.
std::optional<SpecialAbsorber> extendToSpecialAbsorber(const LayerDecomposition& L, const SpecialAbsorber& cs,
                                                       const SubgraphQn& G, int ell,
                                                       const std::vector<std::vector<Subcube>>& candidates = {});

// Path formulas vertex by vertex, path edges in G plus {x,x+a},{x,x+b}, and
// with cubes present: counts, layer laws, linking laws, end containment,
// direction avoidance, disjointness and (AS).
CheckReport validateSpecialAbsorber(const LayerDecomposition& L, const SpecialAbsorber& sa, const SubgraphQn& G,
                                    int ell);

struct RobustParams {
    int ell = 2;
    double eps1 = 0.1;
    double eps2 = 0.5;
    double gamma = 0.05;
    int familyThreshold = 0;  // 0: ceil(gamma n)
};

struct RobustReport {
    bool r1 = true, r2 = true, r3 = true, r4 = true, r5 = true;
    std::vector<Vertex> missingFromU;       // (R1)
    std::vector<Vertex> lowDegreeNearU;     // (R2)
    std::vector<std::pair<Vertex, Vertex>> closePairs;  // (R3)
    int minFamily = -1;                     // (R4) smallest outer family over x in U and (a,b)
    int crossFamilyOverlaps = 0;            // (R4) directions reused across inner families
    std::vector<Vertex> nearCorners;        // (R5)
    int threshold = 0;

    bool ok() const { return r1 && r2 && r3 && r4 && r5; }
};

RobustReport checkRobust(const SubgraphQn& G, const LayerDecomposition& L, const std::vector<Vertex>& U,
                         const RobustParams& p);

// Size of the largest outer family of (R4) for one (x,a,b), each member
// carrying an inner family of at least innerThreshold tuples.
int consistentFamilySize(const SubgraphQn& G, const LayerDecomposition& L, Vertex x, int a, int b,
                         int innerThreshold, int* overlaps = nullptr);

struct GoodReport {
    bool good = true;
    int worst = 0;  // largest per-direction count seen
    Vertex worstVertex = 0;
    int worstDir = -1;
};

// For every x in U and every non-layer direction d, the edges of F of
// direction d meeting N(x) number at most n / ell.
GoodReport isGood(const SubgraphQn& F, const std::vector<Vertex>& U, int ell, int s);

}  // namespace hcube

#endif
