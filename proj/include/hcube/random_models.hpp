#ifndef HCUBE_RANDOM_MODELS_HPP
#define HCUBE_RANDOM_MODELS_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <unordered_set>
#include <utility>
#include <vector>

#include "hcube/cube.hpp"
#include "hcube/rng.hpp"

namespace hcube {

using ProbVector = std::vector<double>;
using VertexSet = std::unordered_set<Vertex>;

// Uniform draw attached to an edge; independent of enumeration order.
inline double edgeUniform(std::uint64_t seed, std::uint64_t purpose, const Edge& e) {
    return uniformAt(seed, mix64(purpose + static_cast<std::uint64_t>(e.dir)), e.v);
}

inline double vertexUniform(std::uint64_t seed, std::uint64_t purpose, Vertex v) { return uniformAt(seed, purpose, v); }

// Level of v measured from root; up-directions at v are those that move away
// from root.
inline int levelFrom(Vertex v, Vertex root) { return std::popcount(v ^ root); }
inline DirMask upDirections(Vertex v, Vertex root, int n) { return ~(v ^ root) & lowMask(n); }
// Endpoint of e closer to root.
inline Vertex lowerEnd(const Edge& e, Vertex root) { return ((e.v ^ root) >> e.dir) & 1 ? e.other() : e.v; }

SubgraphQn sampleBinomial(int n, double p, std::uint64_t seed);
bool inReservoir(double delta, std::uint64_t seed, Vertex v);
std::vector<Vertex> sampleReservoir(int n, double delta, std::uint64_t seed);
SubgraphQn sampleLevelBiased(int n, const ProbVector& pvec, Vertex root, std::uint64_t seed);

void checkProbVector(const ProbVector& pvec, int n);

// The percolation construction, queryable edge by edge without materializing
// Q^n, so large n can be probed locally.
class PercolationModel {
public:
    PercolationModel(int n, ProbVector pvec, int M, Vertex root, std::uint64_t seed, double reservoirDelta = 0.01);

    int n() const { return n_; }
    int M() const { return M_; }
    Vertex root() const { return root_; }

    bool inW(const Edge& e) const;
    DirMask upW(Vertex x) const;
    // Directions of B(x): a uniform M-subset of the W-up-neighbours, or empty.
    DirMask chosen(Vertex x) const;
    bool inWPrime(const Edge& e) const;
    bool inR(Vertex v) const;
    bool inP(const Edge& e) const;

private:
    int n_;
    ProbVector pvec_;
    int M_;
    Vertex root_;
    std::uint64_t seed_;
    double delta_;
};

struct PercolationSample {
    SubgraphQn W;
    SubgraphQn WPrime;
    std::vector<Vertex> R;
    SubgraphQn P;
};

PercolationSample samplePercolation(int n, const ProbVector& pvec, int M, std::uint64_t seed, Vertex root = 0,
                                    double reservoirDelta = 0.01);

class FeasibilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// (99/100)^2 * M/(n-i) * P[Bin(n-i, y) >= M].
double fLevel(int i, double y, int n, int M);
// P[Bin(trials, y) >= k], summed in log space over the smaller side.
double binomialUpperTail(int trials, double y, int k);

struct FeasibleTuple {
    int n = 0;
    int M = 0;
    double eps = 0;
    double t = 0;
    double m = 0;
    ProbVector pvec;
};

struct FeasibilityBounds {
    std::optional<double> tLow;
    std::optional<double> tHigh;
};

inline int lastFeasibleLevel(int n) { return (9 * n) / 10; }

FeasibleTuple solveFeasibleTuple(int n, int M, double eps, bool strict, const FeasibilityBounds& bounds = {});

struct ChainFamily {
    Vertex x = 0;
    Vertex y = 0;
    Vertex root = 0;
    std::uint64_t count = 0;
    bool listed = false;
    std::vector<std::vector<Vertex>> chains;
};

inline constexpr int kChainListCap = 10;
inline constexpr int kChainCountCap = 20;

// Monotone x-y paths (w.r.t. root) in G, or in full Q^n when G is null,
// avoiding every vertex of avoid (endpoints included).
ChainFamily enumerateChains(int n, Vertex x, Vertex y, Vertex root, const SubgraphQn* G, const VertexSet& avoid = {},
                            bool wantList = true);

// Vertices lying on at least one x-y chain in G (full Q^n when null).
VertexSet chainVertices(int n, Vertex x, Vertex y, Vertex root, const SubgraphQn* G);

std::uint64_t chainsDisjointFrom(int n, Vertex x, Vertex y, Vertex xp, Vertex yp, Vertex root, const SubgraphQn* G);

std::uint64_t factorial(int k);
// binom(b-m-1, i-m-1) (m'-i)! (i-m)!, zero outside m < i <= b <= m'.
std::uint64_t levelIntersectionCount(int m, int mPrime, int b, int i);

// Number of A in [k-2] with |A| = i whose complement has longest run l and s
// runs; an empty complement counts only for (l, s) = (0, 0).
std::uint64_t admissiblePatternCount(int i, int l, int s, int k);
std::uint64_t admissiblePatternCountBrute(int i, int l, int s, int k);
std::uint64_t admissiblePatternCountDP(int i, int l, int s, int k);

}  // namespace hcube

#endif
