#include "hcube/cube.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "hcube/kernels.hpp"

namespace hcube {

void checkDim(int n) {
    if (n < 0 || n > kMaxDim) throw std::invalid_argument("dimension out of range: " + std::to_string(n));
}

void checkVertex(Vertex v, int n) {
    checkDim(n);
    if ((v & ~lowMask(n)) != 0) throw std::invalid_argument("vertex " + std::to_string(v) + " has bits above dimension " + std::to_string(n));
}

int distance(Vertex u, Vertex v, int n) {
    checkVertex(u, n);
    checkVertex(v, n);
    return std::popcount(u ^ v);
}

DirMask differingDirections(Vertex u, Vertex v, int n) {
    checkVertex(u, n);
    checkVertex(v, n);
    return u ^ v;
}

std::vector<int> directionsOf(DirMask m) {
    std::vector<int> out;
    out.reserve(std::popcount(m));
    while (m) {
        out.push_back(std::countr_zero(m));
        m &= m - 1;
    }
    return out;
}

Subcube spannedSubcube(Vertex u, Vertex v) { return subcubeAt(u, u ^ v); }

std::vector<Vertex> subcubeVertices(const Subcube& c) {
    if (!c.canonical()) throw std::invalid_argument("subcube base has bits on free directions");
    std::vector<Vertex> out;
    out.reserve(c.size());
    // Enumerate submasks of dirs in increasing order.
    DirMask sub = 0;
    do {
        out.push_back(c.base | sub);
        sub = (sub - c.dirs) & c.dirs;
    } while (sub != 0);
    return out;
}

bool disjoint(const Subcube& a, const Subcube& b) {
    DirMask fixedBoth = ~a.dirs & ~b.dirs;
    return ((a.base ^ b.base) & fixedBoth) != 0;
}

Edge edgeBetween(Vertex a, Vertex b) {
    Vertex x = a ^ b;
    if (std::popcount(x) != 1) throw std::invalid_argument("vertices are not adjacent");
    return {a & ~x, std::countr_zero(x)};
}

SubgraphQn::SubgraphQn(int n) : n_(n) {
    checkDim(n);
    if (n > kMaxDenseDim) throw std::invalid_argument("dimension too large for dense storage: " + std::to_string(n));
    adj_.assign(std::size_t{1} << n, 0);
}

SubgraphQn SubgraphQn::full(int n) {
    SubgraphQn g(n);
    std::fill(g.adj_.begin(), g.adj_.end(), lowMask(n));
    return g;
}

SubgraphQn SubgraphQn::fromMasks(int n, std::vector<DirMask> masks) {
    SubgraphQn g(n);
    if (masks.size() != g.adj_.size()) throw std::invalid_argument("mask table has wrong size");
    DirMask allowed = lowMask(n);
    for (DirMask m : masks)
        if (m & ~allowed) throw std::invalid_argument("mask has directions above dimension");
    g.adj_ = std::move(masks);
    return g;
}

bool SubgraphQn::hasEdge(Vertex a, Vertex b) const {
    Vertex x = a ^ b;
    return std::popcount(x) == 1 && (adj_[a] & x) != 0;
}

void SubgraphQn::add(Vertex v, int d) {
    adj_[v] |= bit(d);
    adj_[v ^ bit(d)] |= bit(d);
}

void SubgraphQn::remove(Vertex v, int d) {
    adj_[v] &= ~bit(d);
    adj_[v ^ bit(d)] &= ~bit(d);
}

std::uint64_t SubgraphQn::edgeCount() const { return kernels::popcountSum(adj_.data(), adj_.size()) / 2; }

int SubgraphQn::minDegree() const { return adj_.empty() ? 0 : kernels::minPopcount(adj_.data(), adj_.size()); }

std::vector<Edge> SubgraphQn::edges() const {
    std::vector<Edge> out;
    out.reserve(edgeCount());
    for (Vertex v = 0; v < adj_.size(); ++v) {
        DirMask up = adj_[v] & ~v;
        while (up) {
            int d = std::countr_zero(up);
            out.push_back({v, d});
            up &= up - 1;
        }
    }
    return out;
}

bool SubgraphQn::symmetric() const {
    for (Vertex v = 0; v < adj_.size(); ++v) {
        DirMask m = adj_[v];
        while (m) {
            int d = std::countr_zero(m);
            if (!((adj_[v ^ bit(d)] >> d) & 1)) return false;
            m &= m - 1;
        }
    }
    return true;
}

namespace {

void sameDim(const SubgraphQn& a, const SubgraphQn& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("dimension mismatch");
}

template <class Op>
SubgraphQn combine(const SubgraphQn& a, const SubgraphQn& b, Op op) {
    sameDim(a, b);
    std::vector<DirMask> m(a.order());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = op(a.adj(i), b.adj(i));
    return SubgraphQn::fromMasks(a.dim(), std::move(m));
}

}  // namespace

SubgraphQn graphIntersection(const SubgraphQn& a, const SubgraphQn& b) {
    return combine(a, b, [](DirMask x, DirMask y) { return x & y; });
}

SubgraphQn graphUnion(const SubgraphQn& a, const SubgraphQn& b) {
    return combine(a, b, [](DirMask x, DirMask y) { return x | y; });
}

SubgraphQn graphDifference(const SubgraphQn& a, const SubgraphQn& b) {
    return combine(a, b, [](DirMask x, DirMask y) { return x & ~y; });
}

bool isSubgraph(const SubgraphQn& a, const SubgraphQn& b) {
    sameDim(a, b);
    for (std::size_t i = 0; i < a.order(); ++i)
        if (a.adj(i) & ~b.adj(i)) return false;
    return true;
}

std::vector<Vertex> ball(const SubgraphQn& g, Vertex center, int r) {
    checkVertex(center, g.dim());
    std::vector<int> dist(g.order(), -1);
    std::vector<Vertex> out{center};
    dist[center] = 0;
    for (std::size_t head = 0; head < out.size(); ++head) {
        Vertex v = out[head];
        if (dist[v] == r) continue;
        DirMask m = g.adj(v);
        while (m) {
            Vertex w = v ^ bit(std::countr_zero(m));
            m &= m - 1;
            if (dist[w] < 0) {
                dist[w] = dist[v] + 1;
                out.push_back(w);
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<Vertex> ballFull(int n, Vertex center, int r) {
    checkVertex(center, n);
    std::vector<Vertex> out;
    for (int k = 0; k <= std::min(r, n); ++k)
        forEachSubsetOfSize(lowMask(n), k, [&](DirMask sub) {
            out.push_back(center ^ sub);
            return true;
        });
    std::sort(out.begin(), out.end());
    return out;
}

bool cubePresent(const SubgraphQn& g, const Subcube& c) {
    if ((c.base | c.dirs) & ~lowMask(g.dim())) return false;
    Subcube canon = subcubeAt(c.base, c.dirs);
    DirMask sub = 0;
    do {
        if ((g.adj(canon.base | sub) & c.dirs) != c.dirs) return false;
        sub = (sub - c.dirs) & c.dirs;
    } while (sub != 0);
    return true;
}

std::vector<Subcube> subcubesAt(const SubgraphQn& g, Vertex v, int l) {
    std::vector<Subcube> out;
    forEachSubsetOfSize(g.adj(v), l, [&](DirMask dirs) {
        Subcube c = subcubeAt(v, dirs);
        if (cubePresent(g, c)) out.push_back(c);
        return true;
    });
    return out;
}

std::uint64_t countSubcubesAt(const SubgraphQn& g, Vertex v, int l) {
    if (l < 0 || l > g.dim()) throw std::invalid_argument("cube dimension out of range");
    checkVertex(v, g.dim());
    std::uint64_t count = 0;
    forEachSubsetOfSize(g.adj(v), l, [&](DirMask dirs) {
        count += cubePresent(g, subcubeAt(v, dirs));
        return true;
    });
    return count;
}

std::uint64_t countSubcubesAtPair(const SubgraphQn& g, Vertex u, Vertex v, int l) {
    if (l < 0 || l > g.dim()) throw std::invalid_argument("cube dimension out of range");
    checkVertex(u, g.dim());
    checkVertex(v, g.dim());
    DirMask diff = u ^ v;
    int k = l - std::popcount(diff);
    if (k < 0 || (g.adj(u) & diff) != diff) return 0;
    std::uint64_t count = 0;
    forEachSubsetOfSize(g.adj(u) & ~diff, k, [&](DirMask extra) {
        count += cubePresent(g, subcubeAt(u, diff | extra));
        return true;
    });
    return count;
}

std::uint64_t binomial(int n, int k) {
    if (k < 0 || n < 0 || k > n) return 0;
    k = std::min(k, n - k);
    unsigned __int128 r = 1;
    for (int i = 0; i < k; ++i) r = r * static_cast<unsigned>(n - i) / static_cast<unsigned>(i + 1);
    return static_cast<std::uint64_t>(r);
}

LayerDecomposition::LayerDecomposition(int n, int s, int q) : n_(n), s_(s), q_(q) {
    checkDim(n);
    if (s < 1 || s >= n) throw std::invalid_argument("layer exponent s must satisfy 1 <= s < n");
    if (s > 20) throw std::invalid_argument("layer exponent too large");
    int layers = 1 << s;
    if (q < 1 || layers % q != 0) throw std::invalid_argument("slice length q must divide 2^s");
    t_ = layers / q;
    order_.resize(layers);
    pos_.assign(layers, -1);
    for (int i = 0; i < layers; ++i) {
        order_[i] = static_cast<Vertex>(i ^ (i >> 1));
        pos_[order_[i]] = i;
    }
}

int LayerDecomposition::crossingDir(int i) const {
    return std::countr_zero(order_[i] ^ order_[next(i)]);
}

std::vector<Vertex> LayerDecomposition::clones(Vertex x) const {
    std::vector<Vertex> out(layers());
    for (int i = 0; i < layers(); ++i) out[i] = clone(x, i);
    return out;
}

std::vector<Vertex> LayerDecomposition::moleculeVertices(const Subcube& c) const {
    std::vector<Vertex> out;
    for (Vertex x : subcubeVertices(c))
        for (int i = 0; i < layers(); ++i) out.push_back(clone(x, i));
    return out;
}

std::vector<Vertex> LayerDecomposition::atomVertices(const Subcube& c, int layer) const {
    std::vector<Vertex> out;
    for (Vertex x : subcubeVertices(c)) out.push_back(clone(x, layer));
    return out;
}

namespace {

void checkLayered(const LayerDecomposition& L, const SubgraphQn& g) {
    if (g.dim() != L.n()) throw std::invalid_argument("graph dimension does not match layer decomposition");
}

}  // namespace

SubgraphQn layerGraph(const LayerDecomposition& L, const SubgraphQn& g, int layer) {
    checkLayered(L, g);
    std::size_t m = std::size_t{1} << L.innerDim();
    std::vector<DirMask> out(m);
    for (Vertex x = 0; x < m; ++x) out[x] = g.adj(L.clone(x, layer)) >> L.s();
    return SubgraphQn::fromMasks(L.innerDim(), std::move(out));
}

SubgraphQn intersectionGraph(const LayerDecomposition& L, const SubgraphQn& g) {
    checkLayered(L, g);
    std::size_t m = std::size_t{1} << L.innerDim();
    std::vector<DirMask> out(m);
    kernels::andReduceBlocks(g.masks().data(), m, static_cast<std::size_t>(L.layers()), out.data());
    for (auto& w : out) w >>= L.s();
    return SubgraphQn::fromMasks(L.innerDim(), std::move(out));
}

SubgraphQn unionGraph(const LayerDecomposition& L, const SubgraphQn& g) {
    checkLayered(L, g);
    std::size_t m = std::size_t{1} << L.innerDim();
    std::vector<DirMask> out(m);
    kernels::orReduceBlocks(g.masks().data(), m, static_cast<std::size_t>(L.layers()), out.data());
    for (auto& w : out) w >>= L.s();
    return SubgraphQn::fromMasks(L.innerDim(), std::move(out));
}

SubgraphQn cloneGraph(const LayerDecomposition& L, const SubgraphQn& h) {
    if (h.dim() != L.innerDim()) throw std::invalid_argument("inner graph dimension mismatch");
    std::vector<DirMask> out(std::size_t{1} << L.n());
    for (Vertex v = 0; v < out.size(); ++v) out[v] = h.adj(L.project(v)) << L.s();
    return SubgraphQn::fromMasks(L.n(), std::move(out));
}

int defaultBondThreshold(int l) {
    if (l < 2) return 1;
    long long b = 1LL << std::min(l - 2, 10);
    return static_cast<int>(std::min<long long>(100, std::max<long long>(1, b)));
}

std::vector<BondCount> bondCounts(const LayerDecomposition& L, const SubgraphQn& g, const Subcube& c) {
    checkLayered(L, g);
    std::vector<Vertex> atom = subcubeVertices(c);
    std::vector<BondCount> out(L.layers());
    for (int i = 0; i < L.layers(); ++i) {
        int d = L.crossingDir(i);
        for (Vertex x : atom) {
            Vertex u = L.clone(x, i);
            if (!g.has(u, d)) continue;
            if (parity(u)) ++out[i].odd;
            else ++out[i].even;
        }
    }
    return out;
}

bool isBonded(const LayerDecomposition& L, const SubgraphQn& g, const Subcube& c, int b) {
    int l = c.dim();
    if (b < 1) throw std::invalid_argument("bond threshold must be positive");
    if (l < 1 || b > (1 << (l - 1))) throw std::invalid_argument("bond threshold exceeds 2^(l-1); no molecule can be bonded");
    for (const BondCount& bc : bondCounts(L, g, c))
        if (bc.even < b || bc.odd < b) return false;
    return true;
}

void writeGraph(std::ostream& os, const SubgraphQn& g) {
    os << "qn " << g.dim() << ' ' << g.edgeCount() << '\n';
    for (const Edge& e : g.edges()) os << e.v << ' ' << (e.dir + 1) << '\n';
}

SubgraphQn readGraph(std::istream& is) {
    std::string word;
    long long n = -1, m = -1;
    if (!(is >> word >> n >> m) || word != "qn") throw std::runtime_error("graph file: bad header");
    if (n < 0 || n > kMaxDenseDim || m < 0) throw std::runtime_error("graph file: bad dimension or edge count");
    SubgraphQn g(static_cast<int>(n));
    for (long long i = 0; i < m; ++i) {
        unsigned long long v;
        long long d;
        if (!(is >> v >> d)) throw std::runtime_error("graph file: truncated at edge " + std::to_string(i));
        if (d < 1 || d > n) throw std::runtime_error("graph file: direction out of range at edge " + std::to_string(i));
        if (v >= g.order()) throw std::runtime_error("graph file: vertex out of range at edge " + std::to_string(i));
        int dir = static_cast<int>(d - 1);
        if ((v >> dir) & 1) throw std::runtime_error("graph file: non-canonical endpoint at edge " + std::to_string(i));
        if (g.has(v, dir)) throw std::runtime_error("graph file: duplicate edge at edge " + std::to_string(i));
        g.add(v, dir);
    }
    return g;
}

}  // namespace hcube
