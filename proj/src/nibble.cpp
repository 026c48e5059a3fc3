#include "hcube/nibble.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hcube/rng.hpp"

namespace hcube {

namespace {

constexpr std::uint64_t kNibbleTag = tag("nibble-edge");

bool allActive(const Subcube& c, const std::vector<char>& active) {
    DirMask sub = 0;
    do {
        if (!active[c.base | sub]) return false;
        sub = (sub - c.dirs) & c.dirs;
    } while (sub != 0);
    return true;
}

template <class F>
void forEachVertex(const Subcube& c, F&& f) {
    DirMask sub = 0;
    do {
        f(c.base | sub);
        sub = (sub - c.dirs) & c.dirs;
    } while (sub != 0);
}

}  // namespace

CubeHypergraph::CubeHypergraph(int n, int l, std::vector<Subcube> edges, std::vector<char> active)
    : n_(n), l_(l), edges_(std::move(edges)), active_(std::move(active)) {}

std::size_t CubeHypergraph::activeCount() const {
    return static_cast<std::size_t>(std::count(active_.begin(), active_.end(), 1));
}

std::vector<std::uint32_t> CubeHypergraph::degrees() const {
    std::vector<std::uint32_t> deg(active_.size(), 0);
    for (const Subcube& c : edges_) forEachVertex(c, [&](Vertex v) { ++deg[v]; });
    return deg;
}

double CubeHypergraph::meanDegree() const {
    std::size_t act = activeCount();
    if (act == 0) return 0.0;
    return static_cast<double>(edges_.size()) * static_cast<double>(std::size_t{1} << l_) / static_cast<double>(act);
}

CubeHypergraph CubeHypergraph::induced(const std::vector<char>& keep) const {
    std::vector<char> act(active_.size());
    for (std::size_t v = 0; v < act.size(); ++v) act[v] = active_[v] && keep[v];
    std::vector<Subcube> kept;
    for (const Subcube& c : edges_)
        if (allActive(c, act)) kept.push_back(c);
    return CubeHypergraph(n_, l_, std::move(kept), std::move(act));
}

CubeHypergraph buildCubeHypergraph(const SubgraphQn& g, int l) {
    return buildCubeHypergraph(g, l, kHypergraphMaxDim, kHypergraphMaxEll);
}

CubeHypergraph buildCubeHypergraph(const SubgraphQn& g, int l, int maxDim, int maxEll) {
    if (g.dim() > maxDim || l > maxEll) throw std::invalid_argument("cube hypergraph enumeration cap exceeded");
    if (l < 1 || l > g.dim()) throw std::invalid_argument("cube dimension out of range");
    std::vector<Subcube> edges;
    for (Vertex v = 0; v < g.order(); ++v)
        forEachSubsetOfSize(g.adj(v) & ~v, l, [&](DirMask dirs) {
            Subcube c{v, dirs};
            if (cubePresent(g, c)) edges.push_back(c);
            return true;
        });
    return CubeHypergraph(g.dim(), l, std::move(edges), std::vector<char>(g.order(), 1));
}

std::uint64_t significance(const std::vector<Subcube>& E, DirMask S) {
    std::uint64_t total = 0;
    for (const Subcube& e : E) total += significance(e, S);
    return total;
}

std::vector<Subcube> sigmaFilter(const std::vector<Subcube>& E, DirMask S, int t) {
    std::vector<Subcube> out;
    for (const Subcube& e : E)
        if (significance(e, S) >= t) out.push_back(e);
    return out;
}

int sqrtThreshold(int l) {
    int r = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(l))));
    while (r * r < l) ++r;
    while (r > 0 && (r - 1) * (r - 1) >= l) --r;
    return r;
}

NibbleRoundResult nibbleRound(const CubeHypergraph& H, double eps, double D, std::uint64_t seed, std::uint64_t round) {
    if (!(D > 0.0)) throw std::invalid_argument("nibble degree parameter must be positive");
    double rate = eps / D;
    if (!(rate >= 0.0 && rate <= 1.0 + 1e-12)) throw std::invalid_argument("eps/D must lie in [0,1]");
    NibbleRoundResult out;
    std::uint64_t purpose = mix64(kNibbleTag ^ mix64(round));
    for (const Subcube& c : H.edges())
        if (uniformAt(seed, mix64(purpose ^ c.dirs), c.base) < rate) out.sampled.push_back(c);
    std::vector<std::uint32_t> hits(H.active().size(), 0);
    for (const Subcube& c : out.sampled) forEachVertex(c, [&](Vertex v) { ++hits[v]; });
    std::vector<char> keep(H.active().size(), 1);
    for (const Subcube& c : out.sampled) {
        bool alone = true;
        forEachVertex(c, [&](Vertex v) {
            alone &= hits[v] == 1;
            keep[v] = 0;
        });
        if (alone) out.isolated.push_back(c);
    }
    out.remaining = H.induced(keep);
    return out;
}

CubeTiling nibbleTiling(const SubgraphQn& g, const NibbleParams& p, NibbleTrace* trace) {
    return nibbleTiling(buildCubeHypergraph(g, p.ell), p, trace);
}

CubeTiling nibbleTiling(const CubeHypergraph& H0, const NibbleParams& p, NibbleTrace* trace) {
    if (p.rounds < 1) throw std::invalid_argument("nibble needs at least one round");
    if (p.schedule == DSchedule::Supplied && static_cast<int>(p.supplied.size()) < p.rounds)
        throw std::invalid_argument("supplied D schedule shorter than round count");
    CubeTiling C{H0.dim(), H0.ell(), {}};
    CubeHypergraph H = H0;
    double D = H.meanDegree();
    double ratio = std::exp(-(std::ldexp(1.0, H0.ell()) - 1.0) * p.eps);
    std::size_t covered = 0;
    for (int r = 0; r < p.rounds; ++r) {
        double Dr = D;
        if (p.schedule == DSchedule::Measured) Dr = H.meanDegree();
        if (p.schedule == DSchedule::Supplied) Dr = p.supplied[r];
        if (trace) trace->D.push_back(Dr);
        if (H.edges().empty() || !(Dr > 0.0)) {
            if (trace) trace->covered.push_back(covered);
            continue;
        }
        double DrUsed = std::max(Dr, p.eps);
        NibbleRoundResult res = nibbleRound(H, p.eps, DrUsed, p.seed, static_cast<std::uint64_t>(r));
        for (const Subcube& c : res.isolated) C.cubes.push_back(c);
        covered += res.isolated.size() << H0.ell();
        if (trace) trace->covered.push_back(covered);
        H = std::move(res.remaining);
        D *= ratio;
    }
    return C;
}

std::vector<char> coveredMask(const CubeTiling& C) {
    std::vector<char> mark(std::size_t{1} << C.n, 0);
    for (const Subcube& c : C.cubes) forEachVertex(c, [&](Vertex v) { mark[v] = 1; });
    return mark;
}

TilingViolations checkTiling(const CubeTiling& C, const SubgraphQn& host) {
    TilingViolations out;
    std::vector<char> mark(host.order(), 0);
    for (const Subcube& c : C.cubes) {
        if (c.dim() != C.ell) ++out.wrongDimension;
        if (!c.canonical()) ++out.nonCanonical;
        if (!cubePresent(host, c)) {
            ++out.missingInHost;
            continue;
        }
        bool overlap = false;
        forEachVertex(subcubeAt(c.base, c.dirs), [&](Vertex v) {
            overlap |= mark[v] != 0;
            mark[v] = 1;
        });
        out.overlaps += overlap;
    }
    return out;
}

TilingReport validateTiling(const CubeTiling& C, const TilingReportParams& p) {
    int n = C.n;
    std::vector<int> owner(std::size_t{1} << n, -1);
    for (std::size_t k = 0; k < C.cubes.size(); ++k)
        forEachVertex(C.cubes[k], [&](Vertex v) { owner[v] = static_cast<int>(k); });
    std::vector<Vertex> xs = p.xs;
    if (xs.empty())
        for (Vertex v = 0; v < owner.size(); ++v) xs.push_back(v);
    int t = sqrtThreshold(C.ell);
    TilingReport rep;
    rep.minM1 = n;
    std::vector<DirMask> sets{lowMask(n)};
    sets.insert(sets.end(), p.A.begin(), p.A.end());
    for (Vertex x : xs) {
        VertexTilingReport vr;
        vr.x = x;
        // Cubes at distance one from x, with the directions through which x sees them.
        std::vector<std::pair<int, DirMask>> near;
        for (int d = 0; d < n; ++d) {
            int k = owner[x ^ bit(d)];
            if (k < 0) continue;
            ++vr.m1;
            if (owner[x] == k) continue;
            bool found = false;
            for (auto& [id, seen] : near)
                if (id == k) {
                    seen |= bit(d);
                    found = true;
                }
            if (!found) near.push_back({k, bit(d)});
        }
        // The cube containing x is at distance 0 and so is not part of C_x.
        vr.nearCubes = static_cast<int>(near.size());
        for (int d = 0; d < n; ++d) {
            int cnt = 0;
            for (auto& [id, seen] : near) cnt += (C.cubes[id].dirs >> d) & 1;
            vr.m2 = std::max(vr.m2, cnt);
        }
        vr.m3.assign(sets.size(), {});
        for (std::size_t i = 0; i < sets.size(); ++i) {
            for (DirMask S : p.S) {
                int cnt = 0;
                for (auto& [id, seen] : near)
                    if ((seen & sets[i]) && significance(C.cubes[id], S) >= t) ++cnt;
                vr.m3[i].push_back(cnt);
                int size = std::popcount(S);
                if (size >= p.alpha * n / 2 && size <= p.alpha * n) {
                    ++rep.m3Evaluated;
                    if (cnt < std::popcount(sets[i]) / p.m3Divisor) rep.m3Pass = false;
                }
            }
        }
        rep.minM1 = std::min(rep.minM1, vr.m1);
        rep.maxM2 = std::max(rep.maxM2, vr.m2);
        if (vr.m1 < (1.0 - p.delta) * n) rep.m1Pass = false;
        if (p.m2Threshold && vr.m2 > *p.m2Threshold) rep.m2Pass = false;
        rep.perVertex.push_back(std::move(vr));
    }
    return rep;
}

std::optional<CubeTiling> tileWithRetry(const SubgraphQn& g, NibbleParams p, int attempts,
                                        const std::function<bool(const CubeTiling&)>& accept, int* usedAttempt) {
    CubeHypergraph H = buildCubeHypergraph(g, p.ell);
    std::uint64_t base = p.seed;
    for (int a = 0; a < attempts; ++a) {
        p.seed = a == 0 ? base : mix64(base ^ mix64(static_cast<std::uint64_t>(a)));
        CubeTiling C = nibbleTiling(H, p);
        if (accept(C)) {
            if (usedAttempt) *usedAttempt = a;
            return C;
        }
    }
    return std::nullopt;
}

std::size_t extendTilingGreedily(CubeTiling& C, const SubgraphQn& host, std::uint64_t seed) {
    std::vector<char> used = coveredMask(C);
    std::vector<Subcube> pool;
    for (Vertex v = 0; v < host.order(); ++v) {
        if (used[v]) continue;
        forEachSubsetOfSize(host.adj(v) & ~v, C.ell, [&](DirMask dirs) {
            Subcube c{v, dirs};
            if (cubePresent(host, c)) pool.push_back(c);
            return true;
        });
    }
    Rng rng(seed, "tiling-extension");
    rng.shuffle(pool);
    std::size_t added = 0;
    for (const Subcube& c : pool) {
        bool free = true;
        forEachVertex(c, [&](Vertex v) { free &= !used[v]; });
        if (!free) continue;
        forEachVertex(c, [&](Vertex v) { used[v] = 1; });
        C.cubes.push_back(c);
        ++added;
    }
    return added;
}

}  // namespace hcube
