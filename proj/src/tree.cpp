#include "hcube/tree.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "hcube/matching.hpp"

namespace hcube {

namespace {

int relLevel(Vertex v, Vertex root) { return std::popcount(v ^ root); }

DirMask randomSubset(const std::vector<int>& dirs, int size, Rng& rng) {
    std::vector<int> pool = dirs;
    DirMask out = 0;
    for (int i = 0; i < size; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
        std::swap(pool[i], pool[j]);
        out |= bit(pool[i]);
    }
    return out;
}

}  // namespace

std::size_t VertexTree::vertexCount() const {
    return static_cast<std::size_t>(std::count(vertices.begin(), vertices.end(), 1));
}

int VertexTree::maxDegree() const {
    int best = 0;
    for (Vertex v = 0; v < vertices.size(); ++v)
        if (vertices[v]) best = std::max(best, graph.degree(v));
    return best;
}

bool isTree(const VertexTree& t) {
    std::size_t count = 0;
    Vertex start = 0;
    for (Vertex v = 0; v < t.vertices.size(); ++v) {
        DirMask a = t.graph.adj(v);
        if (!t.vertices[v]) {
            if (a) return false;
            continue;
        }
        if (count++ == 0) start = v;
    }
    if (count == 0 || t.graph.edgeCount() != count - 1) return false;
    std::vector<char> seen(t.vertices.size(), 0);
    std::vector<Vertex> stack{start};
    seen[start] = 1;
    std::size_t reached = 1;
    while (!stack.empty()) {
        Vertex v = stack.back();
        stack.pop_back();
        for (DirMask a = t.graph.adj(v); a; a &= a - 1) {
            Vertex w = v ^ (a & -a);
            if (!seen[w]) {
                seen[w] = 1;
                ++reached;
                stack.push_back(w);
            }
        }
    }
    return reached == count;
}

VertexTree spanningTreeOf(const SubgraphQn& h, const VertexMask& vertices, Vertex start) {
    if (!vertices[start]) throw std::invalid_argument("spanning tree start outside vertex set");
    VertexTree t{SubgraphQn(h.dim()), VertexMask(vertices.size(), 0)};
    std::deque<Vertex> queue{start};
    t.vertices[start] = 1;
    while (!queue.empty()) {
        Vertex v = queue.front();
        queue.pop_front();
        for (DirMask a = h.adj(v); a; a &= a - 1) {
            int d = std::countr_zero(a);
            Vertex w = v ^ bit(d);
            if (!vertices[w] || t.vertices[w]) continue;
            t.vertices[w] = 1;
            t.graph.add(v, d);
            queue.push_back(w);
        }
    }
    return t;
}

VertexMask ballMask(int n, const std::vector<Vertex>& centres, int r) {
    VertexMask mask(std::size_t{1} << n, 0);
    if (r < 0) return mask;
    for (Vertex c : centres)
        for (Vertex v : ballFull(n, c, r)) mask[v] = 1;
    return mask;
}

double tripleSeparation(int n, int s) { return 9.0 * s * s / (10.0 * n); }

TripleSet buildTriples(int n, Vertex y, Vertex root, const VertexMask* avoid, double eta, std::uint64_t seed, int budget) {
    Vertex u = y ^ root;
    int k = std::popcount(u);
    if (k < 1) throw std::invalid_argument("triple target must differ from the root");
    int s = (k + 1) / 2;
    std::vector<int> inY = directionsOf(u);
    std::vector<int> outY = directionsOf(lowMask(n) & ~u);
    std::size_t target = static_cast<std::size_t>(std::ceil((1.0 - eta) * n - 1e-9));
    double sep = tripleSeparation(n, s);
    auto blocked = [&](Vertex v) { return avoid && (*avoid)[v]; };

    TripleSet best{y, root, {}, 0, false};
    Rng rng(seed, mix64(tag("triples") ^ y ^ mix64(root)));
    for (int attempt = 0; attempt < std::max(budget, 1); ++attempt) {
        std::vector<Triple> cand;
        // c_1..c_k inside y, matched to elements of y and to down-neighbours of y.
        std::vector<DirMask> cs(k);
        for (DirMask& c : cs) c = randomSubset(inY, s, rng);
        BipartiteGraph up(k, k), down(k, k);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) {
                if ((cs[i] >> inY[j]) & 1)
                    up.addEdge(i, j);
                else
                    down.addEdge(i, j);
            }
        Matching mu = hopcroftKarp(up);
        Matching md = hopcroftKarp(down);
        for (int i = 0; i < k; ++i)
            if (mu.left[i] >= 0 && md.left[i] >= 0)
                cand.push_back({root ^ bit(inY[mu.left[i]]), root ^ cs[i], root ^ (u & ~bit(inY[md.left[i]]))});
        // One triple per element outside y, through the matching up-neighbour.
        for (int a : outY) {
            DirMask c = randomSubset(inY, s - 1, rng) | bit(a);
            cand.push_back({root ^ bit(a), root ^ c, root ^ (u | bit(a))});
        }
        std::vector<Triple> kept;
        for (const Triple& t : cand) {
            if (blocked(t.a) || blocked(t.b) || blocked(t.c)) continue;
            bool far = std::all_of(kept.begin(), kept.end(), [&](const Triple& o) { return distance(o.c, t.c) >= sep; });
            if (far) kept.push_back(t);
        }
        if (best.attempts == 0 || kept.size() > best.triples.size()) best.triples = std::move(kept);
        best.attempts = attempt + 1;
        if (best.triples.size() >= target) break;
    }
    best.complete = best.triples.size() >= target;
    return best;
}

bool verifyTriples(int n, const TripleSet& ts, const VertexMask* avoid, std::string* why) {
    auto fail = [&](const std::string& m) {
        if (why) *why = m;
        return false;
    };
    Vertex u = ts.y ^ ts.root;
    int s = (std::popcount(u) + 1) / 2;
    double sep = tripleSeparation(n, s);
    std::unordered_set<Vertex> as, bs;
    for (std::size_t i = 0; i < ts.triples.size(); ++i) {
        const Triple& t = ts.triples[i];
        Vertex a = t.a ^ ts.root, c = t.c ^ ts.root, b = t.b ^ ts.root;
        if (std::popcount(a) != 1) return fail("a not in L_1");
        if (std::popcount(c) != s) return fail("c not in L_s");
        if (distance(t.b, ts.y) != 1) return fail("b not a neighbour of y");
        if ((a & ~c) || (c & ~b)) return fail("nesting a <= c <= b violated");
        if (avoid && (*avoid)[t.c]) return fail("c inside avoided ball");
        if (!as.insert(t.a).second || !bs.insert(t.b).second) return fail("repeated a or b");
        for (std::size_t j = 0; j < i; ++j)
            if (distance(ts.triples[j].c, t.c) < sep) return fail("c vertices too close");
    }
    return true;
}

std::optional<std::vector<Vertex>> findChain(const SubgraphQn& g, Vertex lo, Vertex hi, Vertex root,
                                             const VertexMask* blocked, Rng& rng) {
    if (((lo ^ root) & ~(hi ^ root)) != 0) throw std::invalid_argument("chain endpoints not nested");
    auto isBlocked = [&](Vertex v) { return blocked && (*blocked)[v]; };
    if (isBlocked(lo) || isBlocked(hi)) return std::nullopt;
    std::vector<Vertex> path{lo};
    std::unordered_set<Vertex> dead;
    std::function<bool(Vertex)> rec = [&](Vertex v) {
        if (v == hi) return true;
        std::vector<int> dirs = directionsOf((hi ^ v) & g.adj(v));
        rng.shuffle(dirs);
        for (int d : dirs) {
            Vertex w = v ^ bit(d);
            if (isBlocked(w) || dead.count(w)) continue;
            path.push_back(w);
            if (rec(w)) return true;
            path.pop_back();
            dead.insert(w);
        }
        return false;
    };
    if (!rec(lo)) return std::nullopt;
    return path;
}

int downDegree(const SubgraphQn& g, Vertex v, Vertex root) { return std::popcount(g.adj(v) & (v ^ root)); }

RootedForest growChainForest(const SubgraphQn& P, Vertex corner, const VertexMask* avoid, const ChainForestParams& p) {
    int n = P.dim();
    int lo = p.lowLevel.value_or((n + 1) / 2);
    int hi = p.highLevel.value_or(9 * n / 10);
    RootedForest F;
    F.n = n;
    F.corner = corner;
    F.edges = SubgraphQn(n);
    F.vertices.assign(P.order(), 0);
    VertexMask block = avoid ? *avoid : VertexMask(P.order(), 0);
    Rng rng(p.seed, mix64(tag("chain-forest") ^ corner));

    auto chainFor = [&](const Triple& t, const VertexMask* bl) -> std::optional<std::vector<Vertex>> {
        auto low = findChain(P, t.a, t.c, corner, bl, rng);
        if (!low) return std::nullopt;
        auto high = findChain(P, t.c, t.b, corner, bl, rng);
        if (!high) return std::nullopt;
        low->insert(low->end(), high->begin() + 1, high->end());
        return low;
    };

    for (Vertex y = 0; y < P.order(); ++y) {
        int lvl = relLevel(y, corner);
        if (lvl < lo || lvl > hi) continue;
        if (avoid && (*avoid)[y]) continue;
        ++F.targets;
        TripleSet ts = buildTriples(n, y, corner, avoid, p.eta, mix64(p.seed ^ mix64(y)), p.tripleBudget);
        if (!ts.complete) ++F.tripleShortfalls;
        TargetCoverage tc{y, static_cast<int>(ts.triples.size()), 0, 0};
        std::vector<Vertex> marked;
        for (const Triple& t : ts.triples) {
            std::optional<std::vector<Vertex>> chain;
            if (p.preferDisjoint) chain = chainFor(t, &block);
            if (!chain) {
                chain = chainFor(t, avoid);
                if (chain && p.preferDisjoint) ++F.disjointFallbacks;
            }
            if (!chain) {
                ++F.chainsMissing;
                continue;
            }
            ++F.chainsFound;
            ++tc.chains;
            for (std::size_t i = 0; i < chain->size(); ++i) {
                Vertex w = (*chain)[i];
                F.vertices[w] = 1;
                if (i + 1 < chain->size()) F.edges.add(edgeBetween(w, (*chain)[i + 1]));
                if (!block[w]) {
                    block[w] = 1;
                    marked.push_back(w);
                }
            }
        }
        for (Vertex w : marked) block[w] = 0;
        if (tc.chains == 0) ++F.uncoveredTargets;
        F.coverage.push_back(tc);
    }
    for (TargetCoverage& tc : F.coverage)
        for (int d = 0; d < n; ++d) tc.covered += F.vertices[tc.y ^ bit(d)];
    // Keep one down-edge per vertex.
    for (Vertex v = 0; v < P.order(); ++v) {
        DirMask down = F.edges.adj(v) & (v ^ corner);
        if (std::popcount(down) <= 1) continue;
        down &= down - 1;
        for (; down; down &= down - 1) F.edges.remove(v, std::countr_zero(down));
    }
    return F;
}

bool isRootedForest(const RootedForest& f) {
    if (f.vertices[f.corner]) return false;
    for (Vertex v = 0; v < f.vertices.size(); ++v) {
        DirMask a = f.edges.adj(v);
        if (!f.vertices[v]) {
            if (a) return false;
            continue;
        }
        for (DirMask m = a; m; m &= m - 1)
            if (!f.vertices[v ^ (m & -m)]) return false;
        int want = relLevel(v, f.corner) == 1 ? 0 : 1;
        if (downDegree(f.edges, v, f.corner) != want) return false;
    }
    return true;
}

LevelCycle connectL1L2(const SubgraphQn& G, const VertexMask& R, Vertex root, const Budget& budget) {
    int n = G.dim();
    auto inR = [&](Vertex v) { return !R.empty() && R[v]; };
    std::vector<Vertex> L;
    for (int d = 0; d < n; ++d)
        if (!inR(root ^ bit(d))) L.push_back(root ^ bit(d));
    if (L.size() < 3) throw std::invalid_argument("fewer than three usable L_1 vertices");
    LevelCycle out;
    out.auxVertices = L.size();
    Graph H(static_cast<int>(L.size()));
    auto join = [&](std::size_t i, std::size_t j) { return L[i] ^ L[j] ^ root; };
    for (std::size_t i = 0; i < L.size(); ++i)
        for (std::size_t j = i + 1; j < L.size(); ++j) {
            Vertex z = join(i, j);
            if (inR(z) || !G.hasEdge(L[i], z) || !G.hasEdge(L[j], z)) continue;
            H.addEdge(static_cast<int>(i), static_cast<int>(j));
            ++out.auxEdges;
        }
    HamiltonResult hc = exactHamiltonCycle(H, budget);
    out.outcome = hc.outcome;
    if (hc.outcome != Outcome::Found) return out;
    for (std::size_t t = 0; t < hc.cycle.size(); ++t) {
        std::size_t i = hc.cycle[t], j = hc.cycle[(t + 1) % hc.cycle.size()];
        out.cycle.push_back(L[i]);
        out.cycle.push_back(join(i, j));
    }
    return out;
}

bool verifyLevelCycle(const SubgraphQn& G, const VertexMask& R, Vertex root, const std::vector<Vertex>& cycle) {
    auto inR = [&](Vertex v) { return !R.empty() && R[v]; };
    std::size_t want = 0;
    for (int d = 0; d < G.dim(); ++d) want += !inR(root ^ bit(d));
    if (cycle.size() != 2 * want || cycle.size() < 6) return false;
    std::unordered_set<Vertex> seen;
    for (std::size_t t = 0; t < cycle.size(); ++t) {
        Vertex v = cycle[t];
        if (inR(v) || !seen.insert(v).second) return false;
        if (relLevel(v, root) != (t % 2 == 0 ? 1 : 2)) return false;
        if (!G.hasEdge(v, cycle[(t + 1) % cycle.size()])) return false;
    }
    return true;
}

std::array<Vertex, 4> treeCorners(int n) {
    Vertex half = lowMask((n + 1) / 2);
    return {Vertex{0}, half, lowMask(n) & ~half, lowMask(n)};
}

SubgraphQn cornerPercolation(const SubgraphQn& G, const ProbVector& pvec, int M, int C, Vertex corner,
                             const VertexMask& blocked, std::uint64_t seed) {
    int n = G.dim();
    SubgraphQn P(n);
    for (int i = 0; i < C; ++i) {
        PercolationModel model(n, pvec, M, corner, mix64(seed ^ mix64(static_cast<std::uint64_t>(i) + 1)));
        for (Vertex x = 0; x < G.order(); ++x) {
            if (blocked[x]) continue;
            for (DirMask ch = model.chosen(x); ch; ch &= ch - 1) {
                int d = std::countr_zero(ch);
                if (!blocked[x ^ bit(d)] && G.has(x, d)) P.add(x, d);
            }
        }
    }
    return P;
}

TreeResult buildNearSpanningTree(const SubgraphQn& G, const VertexMask& R, const std::vector<Vertex>& A,
                                 const NearSpanningParams& p) {
    int n = G.dim();
    for (std::size_t i = 0; i < A.size(); ++i)
        for (std::size_t j = i + 1; j < A.size(); ++j)
            if (distance(A[i], A[j]) < p.gamma * n) throw std::invalid_argument("avoided set violates pairwise distance");
    auto corners = treeCorners(n);
    VertexMask wide = ballMask(n, A, p.k + 2);
    for (Vertex c : corners)
        if (wide[c]) throw std::invalid_argument("avoided ball reaches a tree corner");

    TreeResult res;
    res.reservoir = R.empty() ? VertexMask(G.order(), 0) : R;
    res.avoided = ballMask(n, A, p.k);
    res.degreeCap = p.degreeCap > 0 ? p.degreeCap : 4 * p.C * p.M + 6;
    ProbVector pvec = p.pvec ? *p.pvec : solveFeasibleTuple(n, p.M, p.pmax, false).pvec;
    VertexMask blocked(G.order(), 0);
    for (Vertex v = 0; v < G.order(); ++v) blocked[v] = res.reservoir[v] || res.avoided[v];

    SubgraphQn H(n);
    VertexMask inH(G.order(), 0);
    Vertex start = 0;
    for (int j = 0; j < 4; ++j) {
        Vertex corner = corners[j];
        CornerReport rep;
        rep.corner = corner;
        SubgraphQn P = cornerPercolation(G, pvec, p.M, p.C, corner, blocked, mix64(p.seed ^ mix64(j + 17)));
        ChainForestParams cp = p.chain;
        cp.seed = mix64(p.chain.seed ^ mix64(p.seed + 31 * j));
        RootedForest F = growChainForest(P, corner, &res.avoided, cp);
        rep.forestVertices = static_cast<std::size_t>(std::count(F.vertices.begin(), F.vertices.end(), 1));
        rep.targets = F.targets;
        rep.uncoveredTargets = F.uncoveredTargets;
        rep.tripleShortfalls = F.tripleShortfalls;
        H = graphUnion(H, F.edges);
        for (Vertex v = 0; v < G.order(); ++v) inH[v] |= F.vertices[v];

        Budget b = p.cycleBudget;
        LevelCycle cyc;
        for (int attempt = 0; attempt <= p.cycleRetries; ++attempt) {
            rep.cycleAttempts = attempt + 1;
            cyc = connectL1L2(G, res.reservoir, corner, b);
            if (cyc.outcome != Outcome::Timeout) break;
            b.timeoutMs *= 2;
            b.maxNodes *= 2;
        }
        rep.cycleOutcome = cyc.outcome;
        rep.cycleLength = cyc.cycle.size();
        res.corners.push_back(rep);
        if (cyc.outcome != Outcome::Found) {
            res.failure = "L1-L2 cycle at corner " + std::to_string(j + 1) + ": " + outcomeName(cyc.outcome);
            return res;
        }
        for (std::size_t t = 0; t < cyc.cycle.size(); ++t) {
            Vertex v = cyc.cycle[t];
            inH[v] = 1;
            H.add(edgeBetween(v, cyc.cycle[(t + 1) % cyc.cycle.size()]));
        }
        if (j == 0) start = cyc.cycle.front();
    }

    res.tree = spanningTreeOf(H, inH, start);
    res.droppedVertices = static_cast<std::size_t>(std::count(inH.begin(), inH.end(), 1)) - res.tree.vertexCount();
    if (!isTree(res.tree)) throw std::logic_error("near-spanning tree is not a tree");
    if (!isSubgraph(res.tree.graph, G)) throw std::logic_error("near-spanning tree leaves the host");
    for (Vertex v = 0; v < G.order(); ++v)
        if (res.tree.vertices[v] && blocked[v]) throw std::logic_error("near-spanning tree meets reservoir or avoided ball");

    double sum = 0;
    std::size_t count = 0;
    res.minCoverage = 1.0;
    for (Vertex x = 0; x < G.order(); ++x) {
        if (res.avoided[x]) continue;
        int c = 0;
        for (int d = 0; d < n; ++d) c += res.tree.vertices[x ^ bit(d)];
        double f = static_cast<double>(c) / n;
        res.minCoverage = std::min(res.minCoverage, f);
        sum += f;
        ++count;
    }
    res.meanCoverage = count ? sum / count : 0.0;
    if (res.tree.maxDegree() > res.degreeCap) {
        res.failure = "degree cap exceeded: " + std::to_string(res.tree.maxDegree()) + " > " + std::to_string(res.degreeCap);
        return res;
    }
    res.ok = true;
    return res;
}

ExtendResult extendTree(const VertexTree& Tp, const VertexMask& R, const VertexMask& W, const std::vector<DirMask>& Z,
                        const SubgraphQn& Geps, const ExtendParams& p) {
    int n = Geps.dim();
    std::size_t N = Geps.order();
    auto inR = [&](Vertex v) { return !R.empty() && R[v]; };
    auto inW = [&](Vertex v) { return !W.empty() && W[v]; };
    for (Vertex v = 0; v < N; ++v)
        if (Tp.vertices[v] && (inR(v) || inW(v))) throw std::invalid_argument("initial tree meets R or W");
    auto treeNbrs = [&](Vertex x) {
        DirMask m = 0;
        for (int d = 0; d < n; ++d)
            if (Tp.vertices[x ^ bit(d)]) m |= bit(d);
        return m;
    };
    std::vector<DirMask> Zx(N);
    for (Vertex x = 0; x < N; ++x) {
        Zx[x] = Z.empty() ? treeNbrs(x) : (Z[x] & treeNbrs(x));
        if (p.checkZBound && !inW(x) && 4 * std::popcount(Zx[x]) < 3 * n)
            throw std::invalid_argument("Z(x) smaller than 3n/4");
    }
    double eps = p.eps > 0 ? p.eps : static_cast<double>(Geps.edgeCount()) / (static_cast<double>(n) * (N / 2));
    VertexMask outlier(N, 0);
    ExtendResult out;
    if (p.removeOutliers)
        for (Vertex x = 0; x < N; ++x) {
            bool s1 = Geps.degree(x) > 1.1 * eps * n;
            bool s2 = !inW(x) && std::popcount(Geps.adj(x) & Zx[x]) < 2.0 * eps * n / 3.0;
            outlier[x] = s1 || s2;
            out.outliers += outlier[x];
        }

    std::vector<Vertex> left;
    std::unordered_map<Vertex, int> rightIndex;
    std::vector<Vertex> right;
    for (Vertex x = 0; x < N; ++x) {
        if (outlier[x]) continue;
        if (Tp.vertices[x]) {
            rightIndex[x] = static_cast<int>(right.size());
            right.push_back(x);
        } else if (!inW(x)) {
            left.push_back(x);
        }
    }
    Rng rng(p.seed, "tree-extension");
    BipartiteGraph H(static_cast<int>(left.size()), static_cast<int>(right.size()));
    for (std::size_t i = 0; i < left.size(); ++i) {
        Vertex b = left[i];
        for (DirMask m = Geps.adj(b) & Zx[b]; m; m &= m - 1) {
            auto it = rightIndex.find(b ^ (m & -m));
            if (it != rightIndex.end()) H.addEdge(static_cast<int>(i), it->second);
        }
        rng.shuffle(H.adj[i]);
    }
    Matching mt = hopcroftKarp(H);
    out.tree = Tp;
    for (std::size_t i = 0; i < left.size(); ++i) {
        if (mt.left[i] < 0) continue;
        Edge e = edgeBetween(left[i], right[mt.left[i]]);
        out.tree.graph.add(e);
        out.tree.vertices[left[i]] = 1;
        out.added.push_back(e);
    }
    for (Vertex x = 0; x < N; ++x)
        if (!out.tree.vertices[x] && !inW(x)) out.uncovered.push_back(x);
    for (Vertex x = 0; x < N; ++x) {
        int miss = 0;
        for (Vertex v : ballFull(n, x, p.ballRadius)) miss += !out.tree.vertices[v] && !inW(v);
        out.maxBallResidual = std::max(out.maxBallResidual, miss);
    }
    out.residualThreshold = std::pow(static_cast<double>(n), 0.75);
    return out;
}

bool connectedIn(const std::vector<Edge>& edges, const std::vector<Vertex>& S) {
    if (S.size() <= 1) return true;
    std::unordered_map<Vertex, Vertex> parent;
    std::function<Vertex(Vertex)> find = [&](Vertex v) {
        auto it = parent.find(v);
        if (it == parent.end()) {
            parent[v] = v;
            return v;
        }
        if (it->second == v) return v;
        Vertex r = find(it->second);
        parent[v] = r;
        return r;
    };
    for (const Edge& e : edges) parent[find(e.v)] = find(e.other());
    Vertex r = find(S.front());
    return std::all_of(S.begin(), S.end(), [&](Vertex v) { return find(v) == r; });
}

RepatchResult repatch(int n, Vertex x, const std::vector<std::pair<Vertex, Vertex>>& C,
                      const std::vector<std::vector<Vertex>>& B, const VertexSet& F, const SubgraphQn& Geps,
                      const RepatchParams& p) {
    if (B.size() != C.size()) throw std::invalid_argument("one B set per pair required");
    std::unordered_set<Vertex> endpoints;
    for (std::size_t i = 0; i < C.size(); ++i) {
        auto [y, z] = C[i];
        if (distance(x, y, n) != 1 || distance(x, z, n) != 1) throw std::invalid_argument("pair outside N(x)");
        if (!endpoints.insert(y).second || (z != y && !endpoints.insert(z).second))
            throw std::invalid_argument("pairs are not disjoint");
        if (static_cast<int>(B[i].size()) >= p.D) throw std::invalid_argument("|B(y,z)| must be below D");
        for (Vertex b : B[i])
            if (b == x || (distance(b, y) != 1 && distance(b, z) != 1))
                throw std::invalid_argument("B(y,z) outside the neighbourhoods of y and z");
    }
    RepatchResult res;
    Rng rng(p.seed, "repatch");
    for (std::size_t idx = 0; idx < C.size(); ++idx) {
        auto [y, z] = C[idx];
        std::string tagStr = "pair " + std::to_string(idx) + ": ";
        if (F.count(y) || F.count(z)) {
            res.diagnostics.push_back(tagStr + "endpoint forbidden");
            continue;
        }
        if (std::any_of(B[idx].begin(), B[idx].end(), [&](Vertex b) { return F.count(b) > 0; })) {
            res.diagnostics.push_back(tagStr + "B meets forbidden set");
            continue;
        }
        auto usable = [&](Vertex v) { return v != y && v != z && !F.count(v); };
        std::vector<Edge> edges;
        std::vector<std::vector<Vertex>> paths;
        bool ok = true;
        std::vector<Vertex> ws{y};
        if (z != y) ws.push_back(z);
        for (Vertex w : ws) {
            std::vector<Vertex> Aw;
            for (Vertex b : B[idx])
                if (distance(b, w) == 1) Aw.push_back(b);
            std::sort(Aw.begin(), Aw.end());
            Vertex rw = w ^ x;
            for (std::size_t i = 0; ok && i + 1 < Aw.size(); ++i) {
                Vertex xi = Aw[i], xj = Aw[i + 1];
                Vertex v2 = (xj ^ x) & ~rw;
                std::vector<int> dirs = directionsOf(lowMask(n) & ~((xi ^ x) | (xj ^ x)));
                rng.shuffle(dirs);
                bool found = false;
                for (int d : dirs) {
                    std::array<Vertex, 5> path{xi, xi ^ bit(d), xi ^ bit(d) ^ v2, xj ^ bit(d), xj};
                    bool good = true;
                    for (int t = 1; t < 4 && good; ++t) good = usable(path[t]);
                    for (int t = 0; t < 4 && good; ++t) good = Geps.hasEdge(path[t], path[t + 1]);
                    if (!good) continue;
                    for (int t = 0; t < 4; ++t) edges.push_back(edgeBetween(path[t], path[t + 1]));
                    paths.emplace_back(path.begin(), path.end());
                    found = true;
                    break;
                }
                if (!found) {
                    ok = false;
                    res.diagnostics.push_back(tagStr + "no connecting path between consecutive B vertices");
                }
            }
            if (!ok) break;
        }
        if (!ok) continue;
        std::sort(edges.begin(), edges.end());
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
        std::unordered_set<Vertex> vs(B[idx].begin(), B[idx].end());
        for (const Edge& e : edges) {
            vs.insert(e.v);
            vs.insert(e.other());
        }
        if (static_cast<int>(vs.size()) >= 5 * p.D) {
            res.diagnostics.push_back(tagStr + "patch too large");
            continue;
        }
        res.ok = true;
        res.pair = idx;
        res.y = y;
        res.z = z;
        res.edges = std::move(edges);
        res.paths = std::move(paths);
        res.vertices.assign(vs.begin(), vs.end());
        std::sort(res.vertices.begin(), res.vertices.end());
        return res;
    }
    return res;
}

}  // namespace hcube
