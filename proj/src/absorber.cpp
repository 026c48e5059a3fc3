#include "hcube/absorber.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace hcube {

namespace {

int distToCube(Vertex v, const Subcube& c) { return std::popcount((v ^ c.base) & ~c.dirs); }

// Closest vertex of c to v.
Vertex projectOnto(Vertex v, const Subcube& c) { return (v & c.dirs) | (c.base & ~c.dirs); }

// Neighbours of v (in Q^n) that lie in c.
int neighboursIn(Vertex v, const Subcube& c) {
    int dist = distToCube(v, c);
    if (dist == 0) return c.dim();
    return dist == 1 ? 1 : 0;
}

std::string vstr(Vertex v) { return std::to_string(v); }

}  // namespace

std::optional<AbsorberPair> makeAbsorberPair(Vertex x, int dl, int dr, DirMask leftDirs, DirMask rightDirs) {
    if (dl == dr || dl < 0 || dr < 0 || dl >= kMaxDim || dr >= kMaxDim) return std::nullopt;
    AbsorberPair p;
    p.x = x;
    p.y = x ^ bit(dl);
    p.z = x ^ bit(dr);
    p.left = subcubeAt(p.y, leftDirs);
    p.right = subcubeAt(p.z, rightDirs);
    if (neighboursIn(x, p.left) != 1 || neighboursIn(x, p.right) != 1) return std::nullopt;
    if (distToCube(p.y, p.right) != 1 || !disjoint(p.left, p.right)) return std::nullopt;
    p.zPrime = projectOnto(p.y, p.right);
    if (distance(p.zPrime, p.z) != 1) return std::nullopt;
    p.el = edgeBetween(x, p.y);
    p.er = edgeBetween(x, p.z);
    p.e = edgeBetween(p.y, p.zPrime);
    return p;
}

CheckReport validateAbsorberPair(const AbsorberPair& p, const SubgraphQn& G) {
    CheckReport r;
    const int n = G.dim();
    if (((p.x | p.left.base | p.left.dirs | p.right.base | p.right.dirs) & ~lowMask(n)) != 0) {
        r.add("vertex or cube outside Q^" + std::to_string(n));
        return r;
    }
    if (p.left.dim() != p.right.dim()) r.add("cube dimensions differ");
    if (p.left.contains(p.x) || p.right.contains(p.x)) r.add("x lies in an absorption cube");
    if (neighboursIn(p.x, p.left) != 1) r.add("(AP1) x has " + std::to_string(neighboursIn(p.x, p.left)) +
                                              " neighbours in the left cube");
    if (neighboursIn(p.x, p.right) != 1) r.add("(AP1) x has " + std::to_string(neighboursIn(p.x, p.right)) +
                                               " neighbours in the right cube");
    if (!disjoint(p.left, p.right)) r.add("absorption cubes intersect");
    if (!r.ok()) return r;

    const Vertex y = projectOnto(p.x, p.left);
    const Vertex z = projectOnto(p.x, p.right);
    if (y != p.y) r.add("left tip is " + vstr(p.y) + ", expected " + vstr(y));
    if (z != p.z) r.add("right tip is " + vstr(p.z) + ", expected " + vstr(z));
    if (p.el != edgeBetween(p.x, y) || !G.has(p.el)) r.add("(AP2) edge x-y missing or mislabelled");
    if (p.er != edgeBetween(p.x, z) || !G.has(p.er)) r.add("(AP2) edge x-z missing or mislabelled");
    if (distToCube(y, p.right) != 1) {
        r.add("(AP3) dist(y, right cube) = " + std::to_string(distToCube(y, p.right)));
    } else {
        const Vertex zp = projectOnto(y, p.right);
        if (zp != p.zPrime) r.add("third vertex is " + vstr(p.zPrime) + ", expected " + vstr(zp));
        if (p.e != edgeBetween(y, zp) || !G.has(p.e)) r.add("(AP4) edge y-z' missing or mislabelled");
        if (distance(zp, z) != 1) r.add("z' and z are not adjacent");
    }
    if (!cubePresent(G, p.left)) r.add("left cube not in G");
    if (!cubePresent(G, p.right)) r.add("right cube not in G");
    return r;
}

std::vector<Vertex> spliceAbsorber(const std::vector<Vertex>& cycle, const AbsorberPair& p) {
    const std::size_t N = cycle.size();
    for (Vertex v : cycle)
        if (v == p.x || v == p.y) throw std::invalid_argument("splice: x or its tip already on the cycle");
    for (std::size_t i = 0; i < N; ++i) {
        const Vertex a = cycle[i], b = cycle[(i + 1) % N];
        const bool forward = a == p.zPrime && b == p.z;
        const bool backward = a == p.z && b == p.zPrime;
        if (!forward && !backward) continue;
        std::vector<Vertex> out;
        out.reserve(N + 2);
        out.insert(out.end(), cycle.begin(), cycle.begin() + static_cast<std::ptrdiff_t>(i) + 1);
        if (forward) {
            out.push_back(p.y);
            out.push_back(p.x);
        } else {
            out.push_back(p.x);
            out.push_back(p.y);
        }
        out.insert(out.end(), cycle.begin() + static_cast<std::ptrdiff_t>(i) + 1, cycle.end());
        return out;
    }
    throw std::invalid_argument("splice: absorbed edge " + vstr(p.zPrime) + "-" + vstr(p.z) + " not on the cycle");
}

std::vector<AbsorberPair> findAbsorberPairs(const SubgraphQn& G, Vertex x, int ell, DirMask allowedDirs,
                                            const std::vector<Vertex>& blocked, std::size_t limit, Rng& rng) {
    std::vector<AbsorberPair> out;
    std::unordered_set<Vertex> block(blocked.begin(), blocked.end());
    auto clear = [&](const Subcube& c) {
        if (block.size() < c.size()) {
            for (Vertex b : block)
                if (c.contains(b)) return false;
            return true;
        }
        for (Vertex v : subcubeVertices(c))
            if (block.count(v)) return false;
        return true;
    };
    std::vector<std::pair<int, int>> choices;
    for (int dl : directionsOf(G.adj(x)))
        for (int dr : directionsOf(G.adj(x)))
            if (dl != dr && G.has(x ^ bit(dl), dr)) choices.push_back({dl, dr});
    rng.shuffle(choices);
    for (auto [dl, dr] : choices) {
        if (out.size() >= limit) break;
        const Vertex y = x ^ bit(dl), z = x ^ bit(dr);
        if (block.count(y) || block.count(z) || block.count(y ^ bit(dr))) continue;
        std::vector<Subcube> lefts, rights;
        for (const Subcube& c : subcubesAt(G, y, ell))
            if ((c.dirs & ~allowedDirs) == 0 && !(c.dirs & (bit(dl) | bit(dr))) && clear(c)) lefts.push_back(c);
        if (lefts.empty()) continue;
        for (const Subcube& c : subcubesAt(G, z, ell))
            if ((c.dirs & ~allowedDirs) == 0 && (c.dirs & bit(dl)) && !(c.dirs & bit(dr)) && clear(c))
                rights.push_back(c);
        if (rights.empty()) continue;
        rng.shuffle(lefts);
        rng.shuffle(rights);
        bool done = false;
        for (const Subcube& cl : lefts) {
            for (const Subcube& cr : rights) {
                auto p = makeAbsorberPair(x, dl, dr, cl.dirs, cr.dirs);
                if (p && validateAbsorberPair(*p, G).ok()) {
                    out.push_back(*p);
                    done = true;
                    break;
                }
            }
            if (done) break;
        }
    }
    return out;
}

bool GammaGraph::hasEdge(int x, int y) const {
    const auto& a = adj[static_cast<std::size_t>(x)];
    return std::binary_search(a.begin(), a.end(), y);
}

GammaGraph gammaGraph(const BipartiteGraph& G1, const BipartiteGraph& G2, double beta) {
    if (G1.nLeft != G2.nLeft || G1.nRight != G2.nRight) throw std::invalid_argument("gammaGraph: parts differ");
    const int nA = G1.nLeft, nB = G1.nRight;
    const std::size_t words = (static_cast<std::size_t>(nB) + 63) / 64;
    auto rows = [&](const BipartiteGraph& g) {
        std::vector<std::vector<std::uint64_t>> r(static_cast<std::size_t>(nA), std::vector<std::uint64_t>(words, 0));
        for (int x = 0; x < nA; ++x)
            for (int b : g.adj[static_cast<std::size_t>(x)])
                r[static_cast<std::size_t>(x)][static_cast<std::size_t>(b) / 64] |= std::uint64_t{1} << (b % 64);
        return r;
    };
    const auto r1 = rows(G1), r2 = rows(G2);
    GammaGraph g;
    g.beta_num = static_cast<int>(std::ceil(beta * nB - 1e-9));
    g.adj.assign(static_cast<std::size_t>(nA), {});
    auto common = [&](int x, int y) {
        int c = 0;
        for (std::size_t w = 0; w < words; ++w)
            c += std::popcount(r1[static_cast<std::size_t>(x)][w] & r2[static_cast<std::size_t>(y)][w]);
        return c;
    };
    for (int x = 0; x < nA; ++x)
        for (int y = x + 1; y < nA; ++y)
            if (common(x, y) >= g.beta_num || common(y, x) >= g.beta_num) {
                g.adj[static_cast<std::size_t>(x)].push_back(y);
                g.adj[static_cast<std::size_t>(y)].push_back(x);
            }
    for (auto& a : g.adj) std::sort(a.begin(), a.end());
    return g;
}

namespace {

// Perfect matching between the side-0 and side-1 members of verts.
bool matchWithin(const GammaGraph& gamma, const std::vector<int>& side, const std::vector<int>& verts,
                 std::vector<std::pair<int, int>>& out, std::vector<int>& deficient,
                 const std::function<bool(int, int)>& allowed = {}) {
    std::vector<int> left, right;
    for (int v : verts) (side[static_cast<std::size_t>(v)] == 0 ? left : right).push_back(v);
    if (left.size() != right.size()) {
        deficient = left;
        return false;
    }
    std::unordered_map<int, int> rightIdx;
    for (std::size_t i = 0; i < right.size(); ++i) rightIdx[right[i]] = static_cast<int>(i);
    BipartiteGraph bg(static_cast<int>(left.size()), static_cast<int>(right.size()));
    for (std::size_t i = 0; i < left.size(); ++i)
        for (int w : gamma.adj[static_cast<std::size_t>(left[i])]) {
            auto it = rightIdx.find(w);
            if (it != rightIdx.end() && (!allowed || allowed(left[i], w))) bg.addEdge(static_cast<int>(i), it->second);
        }
    Matching m = hopcroftKarp(bg);
    if (m.size != bg.nLeft) {
        for (int l : hallViolator(bg, m)) deficient.push_back(left[static_cast<std::size_t>(l)]);
        return false;
    }
    for (std::size_t i = 0; i < left.size(); ++i)
        out.push_back({left[i], right[static_cast<std::size_t>(m.left[i])]});
    return true;
}

}  // namespace

ParityMatchResult robustParityMatch(const GammaGraph& gamma, const std::vector<int>& side, const std::vector<int>& S,
                                    int d, const std::vector<int>* cluster) {
    const int N = gamma.size();
    if (static_cast<int>(side.size()) != N) throw std::invalid_argument("robustParityMatch: side size mismatch");
    if (static_cast<int>(S.size()) > d) throw std::invalid_argument("robustParityMatch: |S| exceeds d");
    std::vector<char> removed(static_cast<std::size_t>(N), 0);
    int sBalance = 0;
    for (int v : S) {
        if (v < 0 || v >= N || removed[static_cast<std::size_t>(v)])
            throw std::invalid_argument("robustParityMatch: bad removed set");
        removed[static_cast<std::size_t>(v)] = 1;
        sBalance += side[static_cast<std::size_t>(v)] == 0 ? 1 : -1;
    }
    int balance = 0;
    for (int v = 0; v < N; ++v) balance += side[static_cast<std::size_t>(v)] == 0 ? 1 : -1;
    if (balance - sBalance != 0) throw std::invalid_argument("robustParityMatch: sides unbalanced after removal");

    ParityMatchResult res;
    std::vector<std::pair<int, int>> matching;
    if (!cluster) {
        std::vector<int> verts;
        for (int v = 0; v < N; ++v)
            if (!removed[static_cast<std::size_t>(v)]) verts.push_back(v);
        if (!matchWithin(gamma, side, verts, matching, res.deficient)) {
            res.failure = "Hall violation";
            return res;
        }
        res.matching = std::move(matching);
        return res;
    }

    if (static_cast<int>(cluster->size()) != N) throw std::invalid_argument("robustParityMatch: cluster size mismatch");
    int t = 0;
    for (int c : *cluster) {
        if (c < 0) throw std::invalid_argument("robustParityMatch: negative cluster id");
        t = std::max(t, c + 1);
    }
    std::vector<std::vector<int>> members(static_cast<std::size_t>(t));
    for (int v = 0; v < N; ++v) members[static_cast<std::size_t>((*cluster)[static_cast<std::size_t>(v)])].push_back(v);
    for (int i = 0; i < t; ++i) {
        int bal = 0;
        for (int v : members[static_cast<std::size_t>(i)]) bal += side[static_cast<std::size_t>(v)] == 0 ? 1 : -1;
        if (bal != 0) throw std::invalid_argument("robustParityMatch: cluster " + std::to_string(i) + " unbalanced");
    }
    auto prevOf = [&](int i) { return (i + t - 1) % t; };
    auto nextOf = [&](int i) { return (i + 1) % t; };
    // D_{t-1} is empty; D_i balances cluster i against what D_{i+1} pushes
    // into it and what S removes from it.
    std::vector<std::vector<int>> D(static_cast<std::size_t>(t));
    std::vector<char> inD(static_cast<std::size_t>(N), 0);
    for (int i = t - 2; i >= 0; --i) {
        int cntA = 0, cntB = 0;  // |D_{i+1}^A| + |S_i^B| and |D_{i+1}^B| + |S_i^A|
        for (int v : D[static_cast<std::size_t>(i + 1)]) (side[static_cast<std::size_t>(v)] == 0 ? cntA : cntB)++;
        for (int v : members[static_cast<std::size_t>(i)])
            if (removed[static_cast<std::size_t>(v)]) (side[static_cast<std::size_t>(v)] == 0 ? cntB : cntA)++;
        const int need = std::abs(cntA - cntB);
        const int wantSide = cntA > cntB ? 0 : 1;
        if (need == 0) continue;
        std::vector<std::pair<int, int>> cand;  // (-degree into previous cluster, v)
        for (int v : members[static_cast<std::size_t>(i)]) {
            if (removed[static_cast<std::size_t>(v)] || side[static_cast<std::size_t>(v)] != wantSide) continue;
            int deg = 0;
            for (int w : gamma.adj[static_cast<std::size_t>(v)])
                deg += (*cluster)[static_cast<std::size_t>(w)] == prevOf(i) && !removed[static_cast<std::size_t>(w)];
            cand.push_back({-deg, v});
        }
        if (static_cast<int>(cand.size()) < need) {
            res.failure = "cluster " + std::to_string(i) + " cannot supply a balance set of size " +
                          std::to_string(need);
            return res;
        }
        std::sort(cand.begin(), cand.end());
        for (int q = 0; q < need; ++q) {
            D[static_cast<std::size_t>(i)].push_back(cand[static_cast<std::size_t>(q)].second);
            inD[static_cast<std::size_t>(cand[static_cast<std::size_t>(q)].second)] = 1;
        }
    }
    for (const auto& Di : D) res.balance.insert(res.balance.end(), Di.begin(), Di.end());
    for (int i = 0; i < t; ++i) {
        std::vector<int> verts;
        for (int v : members[static_cast<std::size_t>(i)])
            if (!removed[static_cast<std::size_t>(v)] && !inD[static_cast<std::size_t>(v)]) verts.push_back(v);
        if (t > 1)
            for (int v : D[static_cast<std::size_t>(nextOf(i))]) verts.push_back(v);
        if (!matchWithin(gamma, side, verts, matching, res.deficient)) {
            res.failure = "Hall violation in cluster " + std::to_string(i);
            break;
        }
    }
    if (res.failure.empty()) {
        res.balancedRoute = true;
        res.matching = std::move(matching);
        return res;
    }
    // One matching over all clusters, edges restricted to equal or
    // cyclically adjacent clusters.
    std::vector<int> verts;
    for (int v = 0; v < N; ++v)
        if (!removed[static_cast<std::size_t>(v)]) verts.push_back(v);
    auto adjacentClusters = [&](int u, int w) {
        const int dc = ((*cluster)[static_cast<std::size_t>(u)] - (*cluster)[static_cast<std::size_t>(w)] + t) % t;
        return dc == 0 || dc == 1 || dc == t - 1;
    };
    std::vector<std::pair<int, int>> global;
    std::vector<int> deficient;
    if (matchWithin(gamma, side, verts, global, deficient, adjacentClusters)) {
        res.matching = std::move(global);
        res.deficient.clear();
    } else {
        res.failure += "; no cluster-respecting matching";
        res.deficient = std::move(deficient);
    }
    return res;
}

DigraphMatchResult digraphMatching(const std::vector<std::vector<int>>& out, double c, double C, double alpha) {
    const int n = static_cast<int>(out.size());
    std::vector<int> indeg(static_cast<std::size_t>(n), 0), outdeg(static_cast<std::size_t>(n), 0);
    for (int v = 0; v < n; ++v)
        for (int w : out[static_cast<std::size_t>(v)]) {
            if (w == v) throw std::invalid_argument("digraphMatching: loop at " + std::to_string(v));
            if (w < 0 || w >= n) throw std::invalid_argument("digraphMatching: arc target out of range");
            ++outdeg[static_cast<std::size_t>(v)];
            ++indeg[static_cast<std::size_t>(w)];
        }
    DigraphMatchResult res;
    const double can = c * alpha * n;
    res.bound = can / (2 * C);
    const bool alphaOk = alpha > 0 && alpha < 1 / (1 + c / C);
    // Smallest in-degree sum over sets of size ceil(alpha n), largest
    // out-degree sum over sets of size floor(c alpha n / C).
    std::sort(indeg.begin(), indeg.end());
    std::sort(outdeg.begin(), outdeg.end(), std::greater<>());
    const auto kA = static_cast<std::size_t>(std::ceil(alpha * n - 1e-9));
    const auto kB = static_cast<std::size_t>(std::floor(can / C + 1e-9));
    if (kA > indeg.size()) {
        res.hypothesisIn = true;
    } else {
        long long sum = std::accumulate(indeg.begin(), indeg.begin() + static_cast<std::ptrdiff_t>(kA), 0LL);
        res.hypothesisIn = sum >= can - 1e-9;
    }
    {
        const std::size_t k = std::min(kB, outdeg.size());
        long long sum = std::accumulate(outdeg.begin(), outdeg.begin() + static_cast<std::ptrdiff_t>(k), 0LL);
        res.hypothesisOut = sum <= can + 1e-9;
    }
    std::vector<char> used(static_cast<std::size_t>(n), 0);
    for (int v = 0; v < n; ++v)
        for (int w : out[static_cast<std::size_t>(v)])
            if (!used[static_cast<std::size_t>(v)] && !used[static_cast<std::size_t>(w)]) {
                used[static_cast<std::size_t>(v)] = used[static_cast<std::size_t>(w)] = 1;
                res.arcs.push_back({v, w});
            }
    if (alphaOk && res.hypothesisIn && res.hypothesisOut) {
        res.sizeAsserted = true;
        if (static_cast<double>(res.arcs.size()) <= res.bound)
            throw std::logic_error("digraphMatching: maximal matching below the guaranteed size");
    }
    return res;
}

RainbowResult rainbowMatching(const std::vector<std::vector<std::vector<int>>>& colours, int m, int r, Rng& rng,
                              int maxResamples) {
    RainbowResult res;
    std::unordered_map<int, int> load;
    bool enough = m >= 10, uniform = true;
    for (const auto& col : colours) {
        enough &= static_cast<int>(col.size()) >= m;
        for (const auto& e : col) {
            uniform &= static_cast<int>(e.size()) == r;
            for (int v : e) ++load[v];
        }
    }
    int maxLoad = 0;
    for (auto& [v, l] : load) maxLoad = std::max(maxLoad, l);
    res.preconditionsHold = enough && uniform && 6.0 * r * maxLoad <= m;
    for (const auto& col : colours)
        if (col.empty()) return res;

    const std::size_t N = colours.size();
    std::vector<int> choice(N);
    for (std::size_t i = 0; i < N; ++i) choice[i] = static_cast<int>(rng.below(colours[i].size()));
    std::unordered_map<int, int> owner;
    while (true) {
        owner.clear();
        std::optional<std::pair<std::size_t, std::size_t>> clash;
        for (std::size_t i = 0; i < N && !clash; ++i)
            for (int v : colours[i][static_cast<std::size_t>(choice[i])]) {
                auto [it, fresh] = owner.emplace(v, static_cast<int>(i));
                if (!fresh && it->second != static_cast<int>(i)) {
                    clash = {static_cast<std::size_t>(it->second), i};
                    break;
                }
            }
        if (!clash) {
            res.choice = choice;
            return res;
        }
        if (res.resamples >= maxResamples) return res;
        ++res.resamples;
        for (std::size_t i : {clash->first, clash->second})
            choice[i] = static_cast<int>(rng.below(colours[i].size()));
    }
}

const char* absorberTypeName(AbsorberType t) {
    switch (t) {
        case AbsorberType::I: return "I";
        case AbsorberType::II: return "II";
        case AbsorberType::III: return "III";
    }
    return "?";
}

std::vector<Vertex> SpecialAbsorber::ends() const {
    std::vector<Vertex> e;
    for (const auto& p : paths) {
        e.push_back(p.front());
        e.push_back(p.back());
    }
    return e;
}

DirMask SpecialAbsorber::usedDirections() const {
    DirMask m = bit(a) | bit(b);
    for (int d : dirs) m |= bit(d);
    return m;
}

Vertex layerPartner(const LayerDecomposition& L, Vertex y) {
    const int j = L.layerOf(y);
    return y ^ bit(L.crossingDir(j % 2 == 0 ? j : j - 1));
}

AbsorberType absorberTypeFor(const LayerDecomposition& L, Vertex, int a, int b) {
    const bool ina = a >= L.s(), inb = b >= L.s();
    if (ina && inb) return AbsorberType::I;
    if (!ina && !inb) return AbsorberType::II;
    return AbsorberType::III;
}

int absorberDirCount(AbsorberType t) {
    switch (t) {
        case AbsorberType::I: return 6;
        case AbsorberType::II: return 2;
        case AbsorberType::III: return 3;
    }
    return 0;
}

SpecialAbsorber buildConsistentSystem(const LayerDecomposition& L, Vertex x, int a, int b,
                                      const std::vector<int>& dirs) {
    const int n = L.n(), s = L.s();
    checkVertex(x, n);
    if (a == b || a < 0 || b < 0 || a >= n || b >= n) throw std::invalid_argument("consistent system: bad a, b");
    SpecialAbsorber cs;
    cs.type = absorberTypeFor(L, x, a, b);
    if (cs.type == AbsorberType::III && a >= s) std::swap(a, b);
    cs.x = x;
    cs.a = a;
    cs.b = b;
    cs.dirs = dirs;
    if (static_cast<int>(dirs.size()) != absorberDirCount(cs.type))
        throw std::invalid_argument("consistent system: type " + std::string(absorberTypeName(cs.type)) + " takes " +
                                    std::to_string(absorberDirCount(cs.type)) + " directions");
    DirMask seen = 0;
    for (int d : dirs) {
        if (d < s || d >= n) throw std::invalid_argument("consistent system: direction " + std::to_string(d) +
                                                         " is not a layer direction");
        if (seen & bit(d)) throw std::invalid_argument("consistent system: repeated direction");
        seen |= bit(d);
    }
    if (cs.type == AbsorberType::I && (seen & (bit(a) | bit(b))))
        throw std::invalid_argument("consistent system: direction collides with a or b");
    if (cs.type == AbsorberType::III && (seen & bit(b)))
        throw std::invalid_argument("consistent system: direction collides with b");

    auto at = [&](std::initializer_list<int> ds) {
        Vertex v = x;
        for (int d : ds) v ^= bit(d);
        return v;
    };
    switch (cs.type) {
        case AbsorberType::I: {
            const int c = dirs[0], d = dirs[1], d1 = dirs[2], d2 = dirs[3], d3 = dirs[4], d4 = dirs[5];
            auto f = [&](Vertex y) { return layerPartner(L, y); };
            cs.paths = {
                {at({a, d1}), at({a}), x, at({b}), at({b, d2})},
                {f(at({b, d2})), f(at({b})), f(at({b, c}))},
                {at({c, b}), at({c}), at({c, d3})},
                {f(at({c, d3})), f(at({c})), f(x), f(at({d})), f(at({d, d4}))},
                {at({d, d4}), at({d}), at({d, a})},
                {f(at({a, d})), f(at({a})), f(at({a, d1}))},
            };
            break;
        }
        case AbsorberType::II: {
            const int d1 = dirs[0], d2 = dirs[1];
            cs.paths = {
                {at({a, d1}), at({a}), x, at({b}), at({b, d2})},
                {at({a, b, d2}), at({a, b}), at({a, b, d1})},
            };
            break;
        }
        case AbsorberType::III: {
            const int d1 = dirs[0], d2 = dirs[1], d3 = dirs[2];
            auto f = [&](Vertex y) { return y ^ bit(a); };
            cs.paths = {
                {f(at({d1, d2})), f(at({d1})), f(x), x, at({b}), at({b, d3})},
                {f(at({b, d3})), f(at({b})), f(at({b, d1}))},
                {at({d1, b}), at({d1}), at({d1, d2})},
            };
            break;
        }
    }
    return cs;
}

std::vector<Vertex> endMolecules(const LayerDecomposition& L, const SpecialAbsorber& cs) {
    std::vector<Vertex> out;
    for (Vertex v : cs.ends()) out.push_back(L.project(v));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace {

struct CubeLink {
    int from = 0;
    int to = 0;
    Vertex shift = 0;  // 0: the layer partner map
};

// The linked cube pairs of each type (0-based cube indices).
std::vector<CubeLink> cubeLinks(const SpecialAbsorber& sa) {
    switch (sa.type) {
        case AbsorberType::I:
            return {{1, 2, 0}, {3, 4, 0}, {5, 6, 0}, {7, 8, 0}, {9, 10, 0}, {11, 0, 0}};
        case AbsorberType::II:
            return {{0, 3, bit(sa.b)}, {1, 2, bit(sa.a)}};
        case AbsorberType::III:
            return {{1, 2, bit(sa.a)}, {3, 4, bit(sa.a)}, {5, 0, bit(sa.a)}};
    }
    return {};
}

Subcube linkImage(const LayerDecomposition& L, const CubeLink& k, const Subcube& c) {
    const Vertex base = k.shift ? (c.base ^ k.shift) : layerPartner(L, c.base);
    return subcubeAt(base, c.dirs);
}

bool cubeInLayer(const LayerDecomposition& L, const Subcube& c, int layer) {
    return (c.dirs & lowMask(L.s())) == 0 && L.layerOf(c.base) == layer;
}

}  // namespace

std::optional<SpecialAbsorber> extendToSpecialAbsorber(const LayerDecomposition& L, const SpecialAbsorber& cs,
                                                       const SubgraphQn& G, int ell,
                                                       const std::vector<std::vector<Subcube>>& candidates) {
    SpecialAbsorber sa = cs;
    const std::vector<Vertex> ends = cs.ends();
    sa.cubes.assign(ends.size(), Subcube{});
    std::vector<Vertex> pathVerts;
    for (const auto& p : cs.paths) pathVerts.insert(pathVerts.end(), p.begin(), p.end());
    const DirMask forbidden = cs.usedDirections() | lowMask(L.s());
    std::vector<Subcube> chosen;
    auto admissible = [&](const Subcube& c, Vertex own) {
        if (c.dim() != ell || !c.contains(own) || (c.dirs & forbidden) || !cubePresent(G, c)) return false;
        for (Vertex v : pathVerts)
            if (v != own && c.contains(v)) return false;
        for (const Subcube& o : chosen)
            if (!disjoint(o, c)) return false;
        return true;
    };
    for (const CubeLink& link : cubeLinks(cs)) {
        std::vector<Subcube> pool;
        if (static_cast<std::size_t>(link.from) < candidates.size() && !candidates[static_cast<std::size_t>(link.from)].empty())
            pool = candidates[static_cast<std::size_t>(link.from)];
        else
            pool = subcubesAt(G, ends[static_cast<std::size_t>(link.from)], ell);
        bool found = false;
        for (const Subcube& c : pool) {
            const Subcube img = linkImage(L, link, c);
            if (!admissible(c, ends[static_cast<std::size_t>(link.from)])) continue;
            if (!disjoint(c, img) || !admissible(img, ends[static_cast<std::size_t>(link.to)])) continue;
            sa.cubes[static_cast<std::size_t>(link.from)] = c;
            sa.cubes[static_cast<std::size_t>(link.to)] = img;
            chosen.push_back(c);
            chosen.push_back(img);
            found = true;
            break;
        }
        if (!found) return std::nullopt;
    }
    return sa;
}

CheckReport validateSpecialAbsorber(const LayerDecomposition& L, const SpecialAbsorber& sa, const SubgraphQn& G,
                                    int ell) {
    CheckReport r;
    SpecialAbsorber ref;
    try {
        ref = buildConsistentSystem(L, sa.x, sa.a, sa.b, sa.dirs);
    } catch (const std::invalid_argument& e) {
        r.add(e.what());
        return r;
    }
    if (ref.type != sa.type) r.add("type mismatch");
    if (ref.a != sa.a || ref.b != sa.b) r.add("a and b not in canonical order");
    if (sa.paths.size() != ref.paths.size()) {
        r.add("path count " + std::to_string(sa.paths.size()) + ", expected " + std::to_string(ref.paths.size()));
        return r;
    }
    for (std::size_t i = 0; i < ref.paths.size(); ++i) {
        if (sa.paths[i].size() != ref.paths[i].size()) {
            r.add("P" + std::to_string(i + 1) + " has wrong length");
            continue;
        }
        for (std::size_t k = 0; k < ref.paths[i].size(); ++k)
            if (sa.paths[i][k] != ref.paths[i][k])
                r.add("P" + std::to_string(i + 1) + " vertex " + std::to_string(k + 1) + " is " +
                      vstr(sa.paths[i][k]) + ", expected " + vstr(ref.paths[i][k]));
    }
    if (!r.ok()) return r;

    const Edge ea = edgeBetween(sa.x, sa.x ^ bit(sa.a)), eb = edgeBetween(sa.x, sa.x ^ bit(sa.b));
    std::unordered_set<Vertex> onPaths;
    for (std::size_t i = 0; i < sa.paths.size(); ++i) {
        const auto& p = sa.paths[i];
        for (std::size_t k = 0; k < p.size(); ++k) {
            if (!onPaths.insert(p[k]).second) r.add("vertex " + vstr(p[k]) + " repeated across paths");
            if (k + 1 < p.size()) {
                if (distance(p[k], p[k + 1]) != 1) {
                    r.add("P" + std::to_string(i + 1) + " step " + std::to_string(k + 1) + " is not an edge");
                    continue;
                }
                const Edge e = edgeBetween(p[k], p[k + 1]);
                if (e != ea && e != eb && !G.has(e))
                    r.add("P" + std::to_string(i + 1) + " edge " + vstr(p[k]) + "-" + vstr(p[k + 1]) + " not in G");
            }
        }
    }
    if (sa.cubes.empty()) return r;

    const std::vector<Vertex> ends = sa.ends();
    if (sa.cubes.size() != ends.size()) {
        r.add("cube count " + std::to_string(sa.cubes.size()) + ", expected " + std::to_string(ends.size()));
        return r;
    }
    const int layerX = L.layerOf(sa.x);
    const DirMask forbidden = sa.usedDirections();
    for (std::size_t i = 0; i < sa.cubes.size(); ++i) {
        const Subcube& c = sa.cubes[i];
        const std::string tag = "C" + std::to_string(i + 1) + ": ";
        if (c.dim() != ell) r.add(tag + "dimension " + std::to_string(c.dim()));
        if (!cubePresent(G, c)) r.add(tag + "not in G");
        if (!c.contains(ends[i])) r.add(tag + "misses its end vertex " + vstr(ends[i]));
        if (c.dirs & forbidden) r.add(tag + "uses a direction of the path system");
        for (Vertex v : onPaths)
            if (v != ends[i] && c.contains(v)) r.add(tag + "meets path vertex " + vstr(v));
        for (std::size_t j = i + 1; j < sa.cubes.size(); ++j)
            if (!disjoint(c, sa.cubes[j])) r.add(tag + "meets C" + std::to_string(j + 1));
        switch (sa.type) {
            case AbsorberType::I:
                if (!cubeInLayer(L, c, layerX) && !cubeInLayer(L, c, L.layerOf(layerPartner(L, sa.x))))
                    r.add(tag + "(PI.1) not inside L or f(L)");
                break;
            case AbsorberType::II: {
                const Vertex pick[4] = {sa.x ^ bit(sa.a), sa.x ^ bit(sa.b), sa.x ^ bit(sa.a) ^ bit(sa.b),
                                        sa.x ^ bit(sa.a) ^ bit(sa.b)};
                if (!cubeInLayer(L, c, L.layerOf(pick[i]))) r.add(tag + "(PII.1) wrong layer");
                break;
            }
            case AbsorberType::III:
                if (!cubeInLayer(L, c, layerX) && !cubeInLayer(L, c, L.layerOf(sa.x ^ bit(sa.a))))
                    r.add(tag + "(PIII.1) not inside L or f(L)");
                break;
        }
    }
    const char* law = sa.type == AbsorberType::I ? "(PI.2)" : sa.type == AbsorberType::II ? "(PII.2)" : "(PIII.2)";
    for (const CubeLink& link : cubeLinks(sa))
        if (linkImage(L, link, sa.cubes[static_cast<std::size_t>(link.from)]) != sa.cubes[static_cast<std::size_t>(link.to)])
            r.add(std::string(law) + " C" + std::to_string(link.to + 1) + " is not the image of C" +
                  std::to_string(link.from + 1));
    return r;
}

namespace {

// Largest k with k disjoint tuples, role r drawing from ok[r]; the tuples
// themselves go to out when given.
int packTuples(const std::vector<DirMask>& ok, DirMask pool, std::vector<std::vector<int>>* out = nullptr) {
    const int roles = static_cast<int>(ok.size());
    const std::vector<int> dirs = directionsOf(pool);
    if (roles == 0 || dirs.empty()) return 0;
    int best = 0;
    Matching bestM;
    BipartiteGraph bestG;
    for (int k = 1; k * roles <= static_cast<int>(dirs.size()); ++k) {
        BipartiteGraph g(k * roles, static_cast<int>(dirs.size()));
        for (int copy = 0; copy < k; ++copy)
            for (int r = 0; r < roles; ++r)
                for (std::size_t j = 0; j < dirs.size(); ++j)
                    if (ok[static_cast<std::size_t>(r)] & bit(dirs[j])) g.addEdge(copy * roles + r, static_cast<int>(j));
        Matching m = hopcroftKarp(g);
        if (m.size != k * roles) break;
        best = k;
        bestM = std::move(m);
    }
    if (out) {
        out->assign(static_cast<std::size_t>(best), std::vector<int>(static_cast<std::size_t>(roles)));
        for (int copy = 0; copy < best; ++copy)
            for (int r = 0; r < roles; ++r)
                (*out)[static_cast<std::size_t>(copy)][static_cast<std::size_t>(r)] =
                    dirs[static_cast<std::size_t>(bestM.left[static_cast<std::size_t>(copy * roles + r)])];
    }
    return best;
}

// Maximum matching in a graph on at most 64 directions; exact by memoised
// search when small, greedy otherwise.
int maxPairs(const std::vector<DirMask>& nbr, DirMask verts, std::vector<std::pair<int, int>>* out) {
    if (std::popcount(verts) <= 24) {
        std::unordered_map<DirMask, int> memo;
        auto solve = [&](auto&& self, DirMask rest) -> int {
            if (std::popcount(rest) < 2) return 0;
            auto it = memo.find(rest);
            if (it != memo.end()) return it->second;
            const int v = std::countr_zero(rest);
            const DirMask without = rest & ~bit(v);
            int best = self(self, without);
            for (int w : directionsOf(nbr[static_cast<std::size_t>(v)] & without))
                best = std::max(best, 1 + self(self, without & ~bit(w)));
            memo[rest] = best;
            return best;
        };
        const int best = solve(solve, verts);
        if (out) {
            DirMask rest = verts;
            while (std::popcount(rest) >= 2) {
                const int v = std::countr_zero(rest);
                const DirMask without = rest & ~bit(v);
                const int here = solve(solve, rest);
                if (solve(solve, without) == here) {
                    rest = without;
                    continue;
                }
                for (int w : directionsOf(nbr[static_cast<std::size_t>(v)] & without))
                    if (1 + solve(solve, without & ~bit(w)) == here) {
                        out->push_back({v, w});
                        rest = without & ~bit(w);
                        break;
                    }
            }
        }
        return best;
    }
    int count = 0;
    DirMask rest = verts;
    for (int v : directionsOf(verts)) {
        if (!(rest & bit(v))) continue;
        const DirMask cand = nbr[static_cast<std::size_t>(v)] & rest & ~bit(v);
        if (!cand) continue;
        const int w = std::countr_zero(cand);
        rest &= ~(bit(v) | bit(w));
        if (out) out->push_back({v, w});
        ++count;
    }
    return count;
}

int overlapCount(const std::vector<std::vector<std::vector<int>>>& families) {
    std::unordered_map<int, int> uses;
    for (const auto& fam : families)
        for (const auto& tuple : fam) {
            std::unordered_set<int> inFam;
            for (int d : tuple) inFam.insert(d);
            for (int d : inFam) ++uses[d];
        }
    int over = 0;
    for (auto& [d, u] : uses) over += std::max(0, u - 1);
    return over;
}

}  // namespace

int consistentFamilySize(const SubgraphQn& G, const LayerDecomposition& L, Vertex x, int a, int b,
                         int innerThreshold, int* overlaps) {
    const int n = L.n(), s = L.s();
    const AbsorberType type = absorberTypeFor(L, x, a, b);
    if (type == AbsorberType::III && a >= s) std::swap(a, b);
    const Vertex xa = x ^ bit(a), xb = x ^ bit(b);
    auto e = [&](Vertex u, Vertex v) {
        if ((u == x && (v == xa || v == xb)) || (v == x && (u == xa || u == xb))) return true;
        return G.hasEdge(u, v);
    };
    auto dirSet = [&](DirMask pool, auto&& pred) {
        DirMask m = 0;
        for (int d : directionsOf(pool))
            if (pred(d)) m |= bit(d);
        return m;
    };
    const DirMask W = lowMask(n) & ~lowMask(s);
    if (overlaps) *overlaps = 0;
    auto B = [](int d) { return bit(d); };

    switch (type) {
        case AbsorberType::II: {
            const Vertex xab = xa ^ B(b);
            const DirMask ok1 = dirSet(W, [&](int d) { return e(xa, xa ^ B(d)) && e(xab, xab ^ B(d)); });
            const DirMask ok2 = dirSet(W, [&](int d) { return e(xb, xb ^ B(d)) && e(xab, xab ^ B(d)); });
            return packTuples({ok1, ok2}, W);
        }
        case AbsorberType::III: {
            auto f = [&](Vertex y) { return y ^ B(a); };
            const DirMask pool = W & ~B(b);
            std::vector<std::vector<std::vector<int>>> families;
            int count = 0;
            for (int d1 : directionsOf(pool)) {
                const Vertex x1 = x ^ B(d1);
                if (!e(f(x), f(x1)) || !e(f(xb), f(xb ^ B(d1))) || !e(x1, x1 ^ B(b))) continue;
                const DirMask rest = pool & ~B(d1);
                const DirMask ok2 = dirSet(rest, [&](int d) { return e(f(x1), f(x1 ^ B(d))) && e(x1, x1 ^ B(d)); });
                const DirMask ok3 = dirSet(rest, [&](int d) { return e(xb, xb ^ B(d)) && e(f(xb), f(xb ^ B(d))); });
                std::vector<std::vector<int>> fam;
                if (packTuples({ok2, ok3}, rest, &fam) >= innerThreshold) {
                    ++count;
                    families.push_back(std::move(fam));
                }
            }
            if (overlaps) *overlaps = overlapCount(families);
            return count;
        }
        case AbsorberType::I: {
            auto f = [&](Vertex y) { return layerPartner(L, y); };
            const DirMask pool = W & ~(B(a) | B(b));
            const DirMask okC = dirSet(pool, [&](int c) {
                const Vertex xc = x ^ B(c);
                return e(f(xb), f(xb ^ B(c))) && e(xc, xc ^ B(b)) && e(f(xc), f(x));
            });
            const DirMask okD = dirSet(pool, [&](int d) {
                const Vertex xd = x ^ B(d);
                return e(f(x), f(xd)) && e(xd, xd ^ B(a)) && e(f(xa ^ B(d)), f(xa));
            });
            const DirMask ok1 = dirSet(pool, [&](int d) { return e(xa, xa ^ B(d)) && e(f(xa), f(xa ^ B(d))); });
            const DirMask ok2 = dirSet(pool, [&](int d) { return e(xb, xb ^ B(d)) && e(f(xb), f(xb ^ B(d))); });
            auto inner = [&](int c, int d, std::vector<std::vector<int>>* fam) {
                const Vertex xc = x ^ B(c), xd = x ^ B(d);
                const DirMask rest = pool & ~(B(c) | B(d));
                const DirMask ok3 = dirSet(rest, [&](int q) { return e(xc, xc ^ B(q)) && e(f(xc), f(xc ^ B(q))); });
                const DirMask ok4 = dirSet(rest, [&](int q) { return e(xd, xd ^ B(q)) && e(f(xd), f(xd ^ B(q))); });
                return packTuples({ok1 & rest, ok2 & rest, ok3, ok4}, rest, fam);
            };
            // Outer pairs are unordered for disjointness; an edge {c,d} is
            // usable when either orientation qualifies.
            std::vector<DirMask> nbr(64, 0);
            std::vector<std::vector<char>> orient(64, std::vector<char>(64, 0));
            for (int c : directionsOf(okC))
                for (int d : directionsOf(okD & ~B(c)))
                    if (inner(c, d, nullptr) >= innerThreshold) {
                        nbr[static_cast<std::size_t>(c)] |= B(d);
                        nbr[static_cast<std::size_t>(d)] |= B(c);
                        orient[static_cast<std::size_t>(c)][static_cast<std::size_t>(d)] = 1;
                    }
            std::vector<std::pair<int, int>> chosen;
            const int size = maxPairs(nbr, pool, overlaps ? &chosen : nullptr);
            if (overlaps) {
                std::vector<std::vector<std::vector<int>>> families;
                for (auto [u, v] : chosen) {
                    const bool fwd = orient[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)];
                    std::vector<std::vector<int>> fam;
                    inner(fwd ? u : v, fwd ? v : u, &fam);
                    families.push_back(std::move(fam));
                }
                *overlaps = overlapCount(families);
            }
            return size;
        }
    }
    return 0;
}

RobustReport checkRobust(const SubgraphQn& G, const LayerDecomposition& L, const std::vector<Vertex>& U,
                         const RobustParams& p) {
    const int n = G.dim(), s = L.s();
    RobustReport rep;
    rep.threshold = p.familyThreshold > 0 ? p.familyThreshold : static_cast<int>(std::ceil(p.gamma * n - 1e-9));
    std::unordered_set<Vertex> inU(U.begin(), U.end());
    for (Vertex v = 0; v < G.order(); ++v)
        if (G.degree(v) < p.eps1 * n && !inU.count(v)) rep.missingFromU.push_back(v);
    rep.r1 = rep.missingFromU.empty();

    const double floorDeg = p.gamma * n;
    std::unordered_set<Vertex> low;
    for (Vertex x : U)
        for (Vertex y : ballFull(n, x, s + 5 * p.ell))
            if (y != x && G.degree(y) < floorDeg) low.insert(y);
    rep.lowDegreeNearU.assign(low.begin(), low.end());
    std::sort(rep.lowDegreeNearU.begin(), rep.lowDegreeNearU.end());
    rep.r2 = rep.lowDegreeNearU.empty();

    // Two vertices share a ball of radius r exactly when they are within 2r.
    const int radius = static_cast<int>(std::floor(p.gamma * n + 1e-9));
    for (std::size_t i = 0; i < U.size(); ++i)
        for (std::size_t j = i + 1; j < U.size(); ++j)
            if (distance(U[i], U[j]) <= 2 * radius) rep.closePairs.push_back({U[i], U[j]});
    rep.r3 = rep.closePairs.empty();

    for (Vertex x : U)
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                if (a == b) continue;
                int over = 0;
                const int size = consistentFamilySize(G, L, x, a, b, rep.threshold, &over);
                rep.crossFamilyOverlaps += over;
                if (rep.minFamily < 0 || size < rep.minFamily) rep.minFamily = size;
            }
    rep.r4 = U.empty() || rep.minFamily >= rep.threshold;

    const int half = (n + 1) / 2;
    const Vertex corners[4] = {0, lowMask(n), lowMask(half), lowMask(n) & ~lowMask(half)};
    for (Vertex x : U)
        for (Vertex c : corners)
            if (distance(x, c) <= s + p.ell) {
                rep.nearCorners.push_back(x);
                break;
            }
    rep.r5 = rep.nearCorners.empty();
    return rep;
}

GoodReport isGood(const SubgraphQn& F, const std::vector<Vertex>& U, int ell, int s) {
    const int n = F.dim();
    GoodReport rep;
    std::vector<int> count(static_cast<std::size_t>(n));
    for (Vertex x : U) {
        std::fill(count.begin(), count.end(), 0);
        for (int i = 0; i < n; ++i) {
            const Vertex y = x ^ bit(i);
            for (int d : directionsOf(F.adj(y)))
                if (d >= s) ++count[static_cast<std::size_t>(d)];
        }
        for (int d = s; d < n; ++d) {
            const int c = count[static_cast<std::size_t>(d)];
            if (c > rep.worst) {
                rep.worst = c;
                rep.worstVertex = x;
                rep.worstDir = d;
            }
            if (c * ell > n) rep.good = false;
        }
    }
    return rep;
}

}  // namespace hcube
