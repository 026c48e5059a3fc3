#ifndef HCUBE_CUBE_HPP
#define HCUBE_CUBE_HPP

#include <bit>
#include <compare>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

namespace hcube {

// A vertex of Q^n is an n-bit word; bit d is direction d (0-based internally,
// 1-based in every external format).
using Vertex = std::uint64_t;
using DirMask = std::uint64_t;

inline constexpr int kMaxDim = 62;
// Dense per-vertex storage needs 2^n masks.
inline constexpr int kMaxDenseDim = 26;

constexpr DirMask bit(int d) { return DirMask{1} << d; }
constexpr DirMask lowMask(int n) { return n >= 64 ? ~DirMask{0} : (DirMask{1} << n) - 1; }
constexpr int parity(Vertex v) { return std::popcount(v) & 1; }
constexpr bool sameParity(Vertex a, Vertex b) { return parity(a) == parity(b); }
constexpr int level(Vertex v) { return std::popcount(v); }

void checkDim(int n);
void checkVertex(Vertex v, int n);

int distance(Vertex u, Vertex v, int n);
constexpr int distance(Vertex u, Vertex v) { return std::popcount(u ^ v); }
DirMask differingDirections(Vertex u, Vertex v, int n);

std::vector<int> directionsOf(DirMask m);

// Calls f(sub) for every k-element subset of mask, in lexicographic order of
// direction indices. Returns false if f asked to stop by returning false.
template <class F>
bool forEachSubsetOfSize(DirMask mask, int k, F&& f) {
    std::vector<int> dirs = directionsOf(mask);
    int m = static_cast<int>(dirs.size());
    if (k < 0 || k > m) return true;
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = i;
    while (true) {
        DirMask sub = 0;
        for (int i : idx) sub |= DirMask{1} << dirs[i];
        if (!f(sub)) return false;
        int i = k - 1;
        while (i >= 0 && idx[i] == m - k + i) --i;
        if (i < 0) return true;
        ++idx[i];
        for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

struct Subcube {
    Vertex base = 0;
    DirMask dirs = 0;

    int dim() const { return std::popcount(dirs); }
    bool contains(Vertex v) const { return ((v ^ base) & ~dirs) == 0; }
    bool canonical() const { return (base & dirs) == 0; }
    std::size_t size() const { return std::size_t{1} << dim(); }

    auto operator<=>(const Subcube&) const = default;
};

// Smallest subcube containing v with free directions dirs, in canonical form.
constexpr Subcube subcubeAt(Vertex v, DirMask dirs) { return {v & ~dirs, dirs}; }
Subcube spannedSubcube(Vertex u, Vertex v);
std::vector<Vertex> subcubeVertices(const Subcube& c);
bool disjoint(const Subcube& a, const Subcube& b);

struct Edge {
    Vertex v = 0;  // endpoint with bit dir cleared
    int dir = 0;

    Vertex other() const { return v | bit(dir); }
    auto operator<=>(const Edge&) const = default;
};

Edge edgeBetween(Vertex a, Vertex b);

class SubgraphQn {
public:
    SubgraphQn() = default;
    explicit SubgraphQn(int n);
    static SubgraphQn full(int n);

    int dim() const { return n_; }
    std::size_t order() const { return adj_.size(); }

    DirMask adj(Vertex v) const { return adj_[v]; }
    bool has(Vertex v, int d) const { return (adj_[v] >> d) & 1; }
    bool has(const Edge& e) const { return has(e.v, e.dir); }
    bool hasEdge(Vertex a, Vertex b) const;
    int degree(Vertex v) const { return std::popcount(adj_[v]); }

    void add(Vertex v, int d);
    void add(const Edge& e) { add(e.v, e.dir); }
    void remove(Vertex v, int d);
    void remove(const Edge& e) { remove(e.v, e.dir); }

    std::uint64_t edgeCount() const;
    int minDegree() const;
    std::vector<Edge> edges() const;
    bool symmetric() const;

    std::span<const DirMask> masks() const { return adj_; }

    // Raw replacement of the mask table; caller guarantees symmetry.
    static SubgraphQn fromMasks(int n, std::vector<DirMask> masks);

    bool operator==(const SubgraphQn&) const = default;

private:
    int n_ = 0;
    std::vector<DirMask> adj_;
};

SubgraphQn graphIntersection(const SubgraphQn& a, const SubgraphQn& b);
SubgraphQn graphUnion(const SubgraphQn& a, const SubgraphQn& b);
SubgraphQn graphDifference(const SubgraphQn& a, const SubgraphQn& b);
bool isSubgraph(const SubgraphQn& a, const SubgraphQn& b);

// Balls are taken in the graph metric of g.
std::vector<Vertex> ball(const SubgraphQn& g, Vertex center, int r);
std::vector<Vertex> ballFull(int n, Vertex center, int r);

bool cubePresent(const SubgraphQn& g, const Subcube& c);
std::uint64_t countSubcubesAt(const SubgraphQn& g, Vertex v, int l);
std::uint64_t countSubcubesAtPair(const SubgraphQn& g, Vertex u, Vertex v, int l);
std::vector<Subcube> subcubesAt(const SubgraphQn& g, Vertex v, int l);

std::uint64_t binomial(int n, int k);

// Layers are indexed 0..2^s-1 in cyclic Gray order; the s-bit layer prefix
// occupies bits 0..s-1, so clones of x form a contiguous block of 2^s words.
class LayerDecomposition {
public:
    LayerDecomposition(int n, int s, int q);

    int n() const { return n_; }
    int s() const { return s_; }
    int q() const { return q_; }
    int t() const { return t_; }
    int layers() const { return 1 << s_; }
    int innerDim() const { return n_ - s_; }

    Vertex prefix(int i) const { return order_[i]; }
    int layerOf(Vertex v) const { return pos_[v & lowMask(s_)]; }
    Vertex project(Vertex v) const { return v >> s_; }
    Vertex clone(Vertex x, int layer) const { return (x << s_) | order_[layer]; }
    // Direction (in Q^n) of the edges between layer i and layer i+1 mod 2^s.
    int crossingDir(int i) const;
    int lift(int innerDir) const { return innerDir + s_; }
    int next(int i) const { return (i + 1) % layers(); }
    int prev(int i) const { return (i + layers() - 1) % layers(); }
    int sliceOf(int layer) const { return layer / q_; }

    std::vector<Vertex> clones(Vertex x) const;
    std::vector<Vertex> moleculeVertices(const Subcube& c) const;
    std::vector<Vertex> atomVertices(const Subcube& c, int layer) const;

private:
    int n_, s_, q_, t_;
    std::vector<Vertex> order_;
    std::vector<int> pos_;
};

SubgraphQn layerGraph(const LayerDecomposition& L, const SubgraphQn& g, int layer);
SubgraphQn intersectionGraph(const LayerDecomposition& L, const SubgraphQn& g);
SubgraphQn unionGraph(const LayerDecomposition& L, const SubgraphQn& g);
// Graph on Q^n containing every clone of every edge of h (h lives on Q^{n-s}).
SubgraphQn cloneGraph(const LayerDecomposition& L, const SubgraphQn& h);

int defaultBondThreshold(int l);

struct BondCount {
    int even = 0;
    int odd = 0;
};

std::vector<BondCount> bondCounts(const LayerDecomposition& L, const SubgraphQn& g, const Subcube& c);
bool isBonded(const LayerDecomposition& L, const SubgraphQn& g, const Subcube& c, int b);

// Graph file: "qn <n> <edge-count>" then "<v> <dir>" per edge, dir 1-based.
void writeGraph(std::ostream& os, const SubgraphQn& g);
SubgraphQn readGraph(std::istream& is);

}  // namespace hcube

#endif
