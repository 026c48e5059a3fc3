#include "hcube/pathcover.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace hcube {

const char* coverModeName(CoverMode m) {
    switch (m) {
        case CoverMode::OppositeParity: return "opposite-parity";
        case CoverMode::AvoidVertex: return "avoid-vertex";
        case CoverMode::SameParityPairs: return "same-parity-two-pairs";
    }
    return "?";
}

std::size_t PathSystem::vertexCount() const {
    std::size_t c = 0;
    for (const auto& p : paths) c += p.size();
    return c;
}

namespace {

bool fail(std::string* why, const std::string& msg) {
    if (why) *why = msg;
    return false;
}

Vertex pdep(Vertex local, DirMask dirs) {
    Vertex out = 0;
    int i = 0;
    for (int d : directionsOf(dirs)) {
        if ((local >> i) & 1) out |= bit(d);
        ++i;
    }
    return out;
}

Vertex pext(Vertex v, DirMask dirs) {
    Vertex out = 0;
    int i = 0;
    for (int d : directionsOf(dirs)) {
        if ((v >> d) & 1) out |= Vertex{1} << i;
        ++i;
    }
    return out;
}

}  // namespace

bool requestValid(const EndpointRequest& req, int ell, std::string* why) {
    if (ell < 1 || ell > kMaxDim) return fail(why, "dimension out of range");
    const Vertex N = Vertex{1} << ell;
    if (req.pairs.empty()) return fail(why, "no pairs");
    std::unordered_set<Vertex> seen;
    for (const auto& [u, v] : req.pairs) {
        if (u >= N || v >= N) return fail(why, "endpoint outside the cube");
        if (!seen.insert(u).second || !seen.insert(v).second) return fail(why, "pairs not disjoint");
    }
    if (req.avoid && (*req.avoid >= N || seen.count(*req.avoid))) return fail(why, "avoided vertex invalid");
    const auto m = req.pairs.size();
    switch (req.mode) {
        case CoverMode::OppositeParity:
            if (req.avoid) return fail(why, "opposite-parity mode takes no avoided vertex");
            for (const auto& [u, v] : req.pairs)
                if (sameParity(u, v)) return fail(why, "pair of equal parity");
            return true;
        case CoverMode::AvoidVertex: {
            if (!req.avoid) return fail(why, "avoid-vertex mode needs a vertex");
            const Vertex x = *req.avoid;
            const auto& [u1, v1] = req.pairs[0];
            if (sameParity(u1, x) || sameParity(v1, x)) return fail(why, "first pair must differ in parity from x");
            for (std::size_t r = 1; r < m; ++r)
                if (sameParity(req.pairs[r].first, req.pairs[r].second)) return fail(why, "pair of equal parity");
            return true;
        }
        case CoverMode::SameParityPairs: {
            if (req.avoid) return fail(why, "same-parity mode takes no avoided vertex");
            if (m != 2) return fail(why, "same-parity mode needs exactly two pairs");
            const auto& [u1, v1] = req.pairs[0];
            const auto& [u2, v2] = req.pairs[1];
            if (!sameParity(u1, v1) || !sameParity(u2, v2)) return fail(why, "pairs must have equal parity");
            if (sameParity(u1, u2)) return fail(why, "the two pairs must differ in parity");
            return true;
        }
    }
    return fail(why, "unknown mode");
}

std::optional<EndpointRequest> classifyRequest(std::vector<VertexPair> pairs, std::optional<Vertex> avoid) {
    std::vector<std::size_t> same;
    for (std::size_t r = 0; r < pairs.size(); ++r)
        if (sameParity(pairs[r].first, pairs[r].second)) same.push_back(r);
    EndpointRequest req;
    req.avoid = avoid;
    if (avoid) {
        if (same.size() != 1 || sameParity(pairs[same[0]].first, *avoid)) return std::nullopt;
        std::swap(pairs[0], pairs[same[0]]);
        req.mode = CoverMode::AvoidVertex;
    } else if (same.empty()) {
        req.mode = CoverMode::OppositeParity;
    } else if (same.size() == 2 && pairs.size() == 2 && !sameParity(pairs[0].first, pairs[1].first)) {
        req.mode = CoverMode::SameParityPairs;
    } else {
        return std::nullopt;
    }
    req.pairs = std::move(pairs);
    return req;
}

PathSystemCheck checkPathSystem(const PathSystem& ps, const std::vector<VertexPair>& pairs,
                                const std::vector<Vertex>& cover, const EdgePredicate& edgeOk) {
    PathSystemCheck c;
    auto bad = [&](std::string s) { c.violations.push_back(std::move(s)); };
    if (ps.paths.size() != pairs.size()) {
        bad("path count " + std::to_string(ps.paths.size()) + " != pair count " + std::to_string(pairs.size()));
        return c;
    }
    std::unordered_set<Vertex> seen;
    for (std::size_t r = 0; r < pairs.size(); ++r) {
        const auto& p = ps.paths[r];
        const std::string tagR = "path " + std::to_string(r) + ": ";
        if (p.empty()) {
            bad(tagR + "empty");
            continue;
        }
        if (p.front() != pairs[r].first || p.back() != pairs[r].second) bad(tagR + "wrong endpoints");
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (!seen.insert(p[i]).second) bad(tagR + "vertex " + std::to_string(p[i]) + " repeated");
            if (i + 1 < p.size()) {
                if (sameParity(p[i], p[i + 1])) bad(tagR + "parity does not alternate at " + std::to_string(i));
                if (!edgeOk(p[i], p[i + 1]))
                    bad(tagR + "non-edge " + std::to_string(p[i]) + "-" + std::to_string(p[i + 1]));
            }
        }
    }
    std::unordered_set<Vertex> want(cover.begin(), cover.end());
    for (Vertex v : seen)
        if (!want.count(v)) bad("vertex " + std::to_string(v) + " outside the cover set");
    for (Vertex v : want)
        if (!seen.count(v)) bad("vertex " + std::to_string(v) + " not covered");
    return c;
}

PathSystemCheck checkPathSystem(const PathSystem& ps, int ell, const EndpointRequest& req) {
    const Vertex N = Vertex{1} << ell;
    std::vector<Vertex> cover;
    for (Vertex v = 0; v < N; ++v)
        if (!req.avoid || v != *req.avoid) cover.push_back(v);
    return checkPathSystem(ps, req.pairs, cover,
                           [N](Vertex a, Vertex b) { return a < N && b < N && distance(a, b) == 1; });
}

bool containsEdge(const PathSystem& ps, Vertex a, Vertex b) {
    for (const auto& p : ps.paths)
        for (std::size_t i = 0; i + 1 < p.size(); ++i)
            if ((p[i] == a && p[i + 1] == b) || (p[i] == b && p[i + 1] == a)) return true;
    return false;
}

namespace {

class PathSearch {
public:
    PathSearch(int ell, const EndpointRequest& req, const Budget& budget)
        : N_(1 << ell), m_(static_cast<int>(req.pairs.size())), budget_(budget) {
        full_ = N_ == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << N_) - 1;
        for (int v = 0; v < N_; ++v) {
            std::uint64_t nb = 0;
            for (int d = 0; d < ell; ++d) nb |= std::uint64_t{1} << (v ^ (1 << d));
            nb_[v] = nb;
        }
        for (const auto& [a, b] : req.pairs) {
            u_.push_back(static_cast<int>(a));
            v_.push_back(static_cast<int>(b));
        }
        std::uint64_t endpoints = 0;
        for (int r = 0; r < m_; ++r) endpoints |= one(u_[r]) | one(v_[r]);
        free_ = full_ & ~endpoints;
        if (req.avoid) free_ &= ~one(static_cast<int>(*req.avoid));
        future_.assign(m_ + 1, 0);
        for (int r = m_ - 1; r >= 0; --r) future_[r] = future_[r + 1] | (r + 1 < m_ ? one(u_[r + 1]) | one(v_[r + 1]) : 0);
        paths_.resize(m_);
        start_ = std::chrono::steady_clock::now();
    }

    PathSystemResult run() {
        PathSystemResult res;
        if (!parityBalanced()) {
            res.outcome = Outcome::Unsat;
            return res;
        }
        paths_[0].push_back(u_[0]);
        bool found = feasible(0, u_[0]) && dfs(0, u_[0]);
        res.nodes = nodes_;
        if (found) {
            res.outcome = Outcome::Found;
            for (auto& p : paths_) res.system.paths.emplace_back(p.begin(), p.end());
        } else {
            res.outcome = timedOut_ ? Outcome::Timeout : Outcome::Unsat;
        }
        return res;
    }

private:
    static std::uint64_t one(int v) { return std::uint64_t{1} << v; }

    // Interiors of equal-parity pairs carry one extra vertex of the parity
    // opposite to their endpoints; all other interiors are balanced.
    bool parityBalanced() const {
        int odd = 0, even = 0;
        for (std::uint64_t f = free_; f; f &= f - 1) (parity(std::countr_zero(f)) ? odd : even)++;
        int need = 0;
        for (int r = 0; r < m_; ++r)
            if (sameParity(u_[r], v_[r])) need += parity(u_[r]) ? -1 : 1;
        return odd - even == need;
    }

    bool feasible(int r, int head) const {
        const std::uint64_t term = one(head) | one(v_[r]) | future_[r];
        const std::uint64_t avail = free_ | term;
        for (std::uint64_t f = free_; f; f &= f - 1)
            if (std::popcount(nb_[std::countr_zero(f)] & avail) < 2) return false;
        bool headReachesTarget = (nb_[head] >> v_[r]) & 1;
        std::uint64_t left = free_;
        while (left) {
            std::uint64_t comp = left & (~left + 1), frontier = comp;
            while (frontier) {
                std::uint64_t grow = 0;
                for (std::uint64_t f = frontier; f; f &= f - 1) grow |= nb_[std::countr_zero(f)];
                grow &= left & ~comp;
                comp |= grow;
                frontier = grow;
            }
            left &= ~comp;
            std::uint64_t touch = 0;
            for (std::uint64_t f = comp; f; f &= f - 1) touch |= nb_[std::countr_zero(f)];
            touch &= term;
            if (std::popcount(touch) < 2) return false;
            if ((touch >> head & 1) && (touch >> v_[r] & 1)) headReachesTarget = true;
        }
        return headReachesTarget;
    }

    bool outOfBudget() {
        ++nodes_;
        if (budget_.maxNodes && nodes_ > budget_.maxNodes) timedOut_ = true;
        if (!timedOut_ && budget_.timeoutMs > 0 && (nodes_ & 1023) == 0) {
            double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
            if (ms > budget_.timeoutMs) timedOut_ = true;
        }
        return timedOut_;
    }

    bool finish(int r) {
        paths_[r].push_back(v_[r]);
        if (r + 1 == m_) {
            if (free_ == 0) return true;
        } else {
            paths_[r + 1].push_back(u_[r + 1]);
            if (feasible(r + 1, u_[r + 1]) && dfs(r + 1, u_[r + 1])) return true;
            paths_[r + 1].pop_back();
        }
        paths_[r].pop_back();
        return false;
    }

    bool dfs(int r, int head) {
        if (outOfBudget()) return false;
        const bool canFinish = (nb_[head] >> v_[r]) & 1;
        std::uint64_t cand = nb_[head] & free_;
        if (!cand) return canFinish && finish(r);
        const std::uint64_t term = one(v_[r]) | future_[r];
        std::array<std::pair<int, int>, 64> order{};
        int k = 0;
        for (std::uint64_t c = cand; c; c &= c - 1) {
            int w = std::countr_zero(c);
            order[k++] = {std::popcount(nb_[w] & (free_ | term)), w};
        }
        std::sort(order.begin(), order.begin() + k);
        for (int i = 0; i < k; ++i) {
            int w = order[i].second;
            free_ &= ~one(w);
            paths_[r].push_back(w);
            if (feasible(r, w) && dfs(r, w)) return true;
            paths_[r].pop_back();
            free_ |= one(w);
            if (timedOut_) return false;
        }
        return canFinish && finish(r);
    }

    int N_;
    int m_;
    Budget budget_;
    std::uint64_t full_ = 0;
    std::array<std::uint64_t, 64> nb_{};
    std::vector<int> u_, v_;
    std::vector<std::uint64_t> future_;
    std::uint64_t free_ = 0;
    std::vector<std::vector<int>> paths_;
    std::uint64_t nodes_ = 0;
    bool timedOut_ = false;
    std::chrono::steady_clock::time_point start_;
};

}  // namespace

PathSystemResult solvePathSystem(int ell, const EndpointRequest& req, const Budget& budget) {
    if (ell < 1 || ell > kPathSolverMaxEll) throw std::invalid_argument("solvePathSystem: dimension outside 1..6");
    if (req.pairs.size() > static_cast<std::size_t>(kPathSolverMaxPairs))
        throw std::invalid_argument("solvePathSystem: more than 6 pairs");
    std::string why;
    if (!requestValid(req, ell, &why)) throw std::invalid_argument("solvePathSystem: " + why);
    PathSystemResult res = PathSearch(ell, req, budget).run();
    if (res.outcome == Outcome::Found) {
        auto check = checkPathSystem(res.system, ell, req);
        if (!check.ok()) throw std::logic_error("solvePathSystem: invalid system: " + check.violations.front());
    }
    return res;
}

PathSystemResult solvePathSystem(const Subcube& host, const EndpointRequest& req, const Budget& budget) {
    if (!host.canonical()) throw std::invalid_argument("solvePathSystem: non-canonical host");
    auto toLocal = [&](Vertex v) {
        if (!host.contains(v)) throw std::invalid_argument("solvePathSystem: vertex outside the host cube");
        return pext(v, host.dirs);
    };
    EndpointRequest local;
    local.mode = req.mode;
    for (const auto& [a, b] : req.pairs) local.pairs.emplace_back(toLocal(a), toLocal(b));
    if (req.avoid) local.avoid = toLocal(*req.avoid);
    PathSystemResult res = solvePathSystem(host.dim(), local, budget);
    for (auto& p : res.system.paths)
        for (auto& v : p) v = host.base | pdep(v, host.dirs);
    return res;
}

// ---------------------------------------------------------------- slices

Slice::Slice(const LayerDecomposition& L, const Subcube& cube, int firstLayer, int length)
    : n_(L.n()), s_(L.s()), cube_(cube) {
    if (!cube.canonical() || (cube.base | cube.dirs) >> L.innerDim())
        throw std::invalid_argument("Slice: cube must be canonical in Q^{n-s}");
    if (length < 1 || length > L.layers()) throw std::invalid_argument("Slice: length outside 1..2^s");
    if (firstLayer < 0 || firstLayer >= L.layers()) throw std::invalid_argument("Slice: first layer out of range");
    for (int k = 0; k < length; ++k) {
        int layer = (firstLayer + k) % L.layers();
        layers_.push_back(layer);
        prefixes_.push_back(L.prefix(layer));
    }
}

Subcube Slice::atomCube(int k) const { return {(cube_.base << s_) | prefixes_.at(k), cube_.dirs << s_}; }

Vertex Slice::vertex(int k, Vertex local) const {
    return ((cube_.base | pdep(local, cube_.dirs)) << s_) | prefixes_.at(k);
}

std::vector<Vertex> Slice::atomVertices(int k) const {
    std::vector<Vertex> out;
    for (Vertex x = 0; x < cube_.size(); ++x) out.push_back(vertex(k, x));
    return out;
}

std::vector<Vertex> Slice::vertices() const {
    std::vector<Vertex> out;
    for (int k = 0; k < length(); ++k)
        for (Vertex x = 0; x < cube_.size(); ++x) out.push_back(vertex(k, x));
    return out;
}

std::optional<int> Slice::atomOf(Vertex v) const {
    if (v >> n_) return std::nullopt;
    if (!cube_.contains(v >> s_)) return std::nullopt;
    const Vertex pre = v & lowMask(s_);
    for (int k = 0; k < length(); ++k)
        if (prefixes_[k] == pre) return k;
    return std::nullopt;
}

Vertex Slice::localOf(Vertex v) const { return pext(v >> s_, cube_.dirs); }

Slice Slice::reversed() const {
    Slice r;
    r.n_ = n_;
    r.s_ = s_;
    r.cube_ = cube_;
    r.layers_.assign(layers_.rbegin(), layers_.rend());
    r.prefixes_.assign(prefixes_.rbegin(), prefixes_.rend());
    return r;
}

bool Slice::edgeAllowed(const SubgraphQn& G, Vertex a, Vertex b) const {
    auto ka = atomOf(a), kb = atomOf(b);
    if (!ka || !kb || distance(a, b) != 1) return false;
    if (*ka == *kb) return true;
    return std::abs(*ka - *kb) == 1 && G.hasEdge(a, b);
}

BondCount Slice::gapBond(const SubgraphQn& G, int k) const {
    BondCount c;
    for (Vertex x = 0; x < cube_.size(); ++x) {
        Vertex a = vertex(k, x), b = vertex(k + 1, x);
        if (G.hasEdge(a, b)) (parity(a) ? c.odd : c.even)++;
    }
    return c;
}

bool Slice::bonded(const SubgraphQn& G, int b) const {
    for (int k = 0; k + 1 < length(); ++k) {
        BondCount c = gapBond(G, k);
        if (c.even < b || c.odd < b) return false;
    }
    return true;
}

// ------------------------------------------------- alternating sequences

namespace {

// R grouped by atom; throws unless each group is an adjacent pair.
std::map<int, VertexPair> groupPairs(const Slice& slice, const std::vector<Vertex>& R) {
    std::map<int, std::vector<Vertex>> by;
    for (Vertex v : R) {
        auto k = slice.atomOf(v);
        if (!k) throw std::invalid_argument("R vertex outside the slice");
        by[*k].push_back(v);
    }
    std::map<int, VertexPair> out;
    for (auto& [k, vs] : by) {
        if (vs.size() != 2 || distance(vs[0], vs[1]) != 1)
            throw std::invalid_argument("R must meet atom " + std::to_string(k) + " in an adjacent pair");
        out[k] = {vs[0], vs[1]};
    }
    return out;
}

// (w, z) with w !=_p u.
VertexPair orient(const VertexPair& p, Vertex u) { return sameParity(p.first, u) ? VertexPair{p.second, p.first} : p; }

}  // namespace

AltParityResult buildAltParitySeq(const Slice& slice, const SubgraphQn& G, Vertex u, int j,
                                  const std::vector<Vertex>& F, const std::vector<Vertex>& R, Rng& rng) {
    auto ku = slice.atomOf(u);
    if (!ku) throw std::invalid_argument("buildAltParitySeq: start outside the slice");
    if (j < 0 || j >= slice.length()) throw std::invalid_argument("buildAltParitySeq: end atom out of range");
    const auto rp = groupPairs(slice, R);
    std::unordered_set<Vertex> blocked(F.begin(), F.end());
    blocked.insert(R.begin(), R.end());

    AltParityResult res;
    AltParitySeq seq;
    seq.from = *ku;
    seq.to = j;
    Vertex u0 = u;
    if (std::count(R.begin(), R.end(), u)) {
        const auto& pr = rp.at(*ku);
        u0 = pr.first == u ? pr.second : pr.first;
    }
    seq.vertices.push_back(u0);
    std::unordered_set<Vertex> used{u0};
    const int dir = j >= *ku ? 1 : -1;
    for (int k = *ku; k != j; k += dir) {
        const int next = k + dir;
        std::vector<Vertex> ok;
        int forbidden = 0;
        for (Vertex x = 0; x < slice.cube().size(); ++x) {
            Vertex v = slice.vertex(k, x), w = slice.vertex(next, x);
            if (sameParity(v, u) || !G.hasEdge(v, w)) continue;
            if (blocked.count(v) || blocked.count(w) || used.count(v) || used.count(w))
                ++forbidden;
            else
                ok.push_back(v);
        }
        seq.maxForbidden = std::max(seq.maxForbidden, forbidden);
        if (ok.empty()) {
            res.failedGap = std::min(k, next);
            res.failure = "no admissible crossing edge between atoms " + std::to_string(k) + " and " +
                          std::to_string(next);
            return res;
        }
        Vertex v = rng.pick(ok), w = slice.moveTo(v, next);
        seq.vertices.push_back(v);
        seq.vertices.push_back(w);
        used.insert(v);
        used.insert(w);
        if (auto it = rp.find(next); it != rp.end()) {
            auto [wk, zk] = orient(it->second, u);
            seq.vertices.push_back(wk);
            seq.vertices.push_back(zk);
            used.insert(wk);
            used.insert(zk);
            seq.spliceAtoms.push_back(next);
        }
    }
    res.seq = std::move(seq);
    return res;
}

std::vector<std::string> checkAltParitySeq(const Slice& slice, const SubgraphQn& G, const AltParitySeq& seq, Vertex u,
                                           int j, const std::vector<Vertex>& F, const std::vector<Vertex>& R) {
    std::vector<std::string> bad;
    auto ku = slice.atomOf(u);
    if (!ku) return {"start outside the slice"};
    const auto rp = groupPairs(slice, R);
    std::unordered_set<Vertex> blocked(F.begin(), F.end());
    blocked.insert(R.begin(), R.end());
    const auto& s = seq.vertices;
    if (s.empty()) return {"empty sequence"};
    Vertex u0 = u;
    if (std::count(R.begin(), R.end(), u)) {
        const auto& pr = rp.at(*ku);
        u0 = pr.first == u ? pr.second : pr.first;
    }
    if (s[0] != u0) bad.push_back("(P0) wrong initial vertex");
    std::unordered_set<Vertex> seen;
    for (Vertex v : s)
        if (!seen.insert(v).second) bad.push_back("vertex " + std::to_string(v) + " repeated");
    const int dir = j >= *ku ? 1 : -1;
    std::size_t pos = 1;
    for (int k = *ku + dir, step = 1; k != j + dir; k += dir, ++step) {
        const std::string at = " at step " + std::to_string(step);
        if (pos + 1 >= s.size()) {
            bad.push_back("sequence too short" + at);
            return bad;
        }
        Vertex vk = s[pos], uk = s[pos + 1];
        if (slice.atomOf(vk) != k - dir || slice.atomOf(uk) != k) bad.push_back("(P2) atoms wrong" + at);
        if (!G.hasEdge(vk, uk)) bad.push_back("(P2) crossing pair not an edge of G" + at);
        if (!sameParity(uk, u)) bad.push_back("(P1) u_k parity" + at);
        if (blocked.count(vk) || blocked.count(uk)) bad.push_back("(P3) meets F or R" + at);
        pos += 2;
        if (auto it = rp.find(k); it != rp.end()) {
            auto [wk, zk] = orient(it->second, u);
            if (pos + 1 >= s.size() || s[pos] != wk || s[pos + 1] != zk)
                bad.push_back("missing splice" + at);
            pos += 2;
        }
    }
    if (pos != s.size()) bad.push_back("trailing vertices");
    return bad;
}

// ---------------------------------------------------------- slice covers

namespace {

struct Instance {
    const Slice* slice = nullptr;
    const SubgraphQn* G = nullptr;
    std::vector<VertexPair> pairs;  // oriented, pair 0 is the distinguished first pair
    std::vector<int> origin;
    std::vector<char> flipped;
    std::vector<Vertex> L;  // x first
    std::vector<Vertex> R;
    std::map<int, VertexPair> rpairs;
    std::unordered_set<Vertex> rset;

    int atom(Vertex v) const { return *slice->atomOf(v); }
    bool inR(Vertex v) const { return rset.count(v) > 0; }
    Vertex partner(Vertex v) const {
        const auto& p = rpairs.at(atom(v));
        return p.first == v ? p.second : p.first;
    }
    std::vector<Vertex> rIn(int k) const {
        auto it = rpairs.find(k);
        if (it == rpairs.end()) return {};
        return {it->second.first, it->second.second};
    }
};

struct Builder {
    const Instance& in;
    Rng& rng;
    std::vector<Vertex> F;
    int maxForbidden = 0;
    std::string failure;

    std::optional<std::vector<Vertex>> seq(Vertex u, int j, const std::vector<Vertex>& R) {
        AltParityResult r = buildAltParitySeq(*in.slice, *in.G, u, j, F, R, rng);
        if (!r.seq) {
            failure = r.failure;
            return std::nullopt;
        }
        maxForbidden = std::max(maxForbidden, r.seq->maxForbidden);
        return r.seq->vertices;
    }
    void forbid(const std::vector<Vertex>& vs) { F.insert(F.end(), vs.begin(), vs.end()); }
    Vertex pickIn(int k, int par) {
        std::vector<Vertex> c;
        for (Vertex v : in.slice->atomVertices(k))
            if (parity(v) == par) c.push_back(v);
        return rng.pick(c);
    }
};

void appendTail(std::vector<Vertex>& list, const std::vector<Vertex>& s) { list.insert(list.end(), s.begin() + 1, s.end()); }

void validateCommon(const Slice& slice, const SliceCoverInput& in, const SliceCoverParams& p, int& bond) {
    const int t = slice.length();
    if (t < std::max(3, p.minLength)) throw std::invalid_argument("slice shorter than the minimum length");
    const int ell = slice.ell();
    bond = p.bond > 0 ? p.bond : defaultBondThreshold(ell);
    if (bond > (1 << (ell - 1))) throw std::invalid_argument("bond threshold exceeds 2^{l-1}");
    auto at = [&](Vertex v, const char* what) {
        auto k = slice.atomOf(v);
        if (!k) throw std::invalid_argument(std::string(what) + " vertex outside the slice");
        return *k;
    };
    if (in.L.size() != 0 && in.L.size() != 2) throw std::invalid_argument("(C1) |L| must be 0 or 2");
    std::set<int> latoms;
    for (Vertex v : in.L) latoms.insert(at(v, "L"));
    if (in.L.size() == 2 && (latoms.size() != 2 || sameParity(in.L[0], in.L[1])))
        throw std::invalid_argument("(C1) L needs opposite parities in distinct atoms");
    if (in.R.size() > 10) throw std::invalid_argument("(C2) |R| > 10");
    std::unordered_set<Vertex> rs(in.R.begin(), in.R.end());
    if (rs.size() != in.R.size()) throw std::invalid_argument("(C2) repeated R vertex");
    for (Vertex v : in.R) {
        if (std::count(in.L.begin(), in.L.end(), v)) throw std::invalid_argument("(C2) R meets L");
        if (latoms.count(at(v, "R"))) throw std::invalid_argument("(C2) R pair in an atom of L");
    }
    groupPairs(slice, in.R);
    std::unordered_set<Vertex> ends;
    for (const auto& [u, v] : in.pairs) {
        at(u, "pair");
        at(v, "pair");
        if (!ends.insert(u).second || !ends.insert(v).second) throw std::invalid_argument("(C3) pairs not disjoint");
        if (std::count(in.L.begin(), in.L.end(), u) || std::count(in.L.begin(), in.L.end(), v))
            throw std::invalid_argument("(C3) pair meets L");
    }
}

Instance makeInstance(const Slice& slice, const SubgraphQn& G, const SliceCoverInput& in, int first) {
    Instance I;
    I.slice = &slice;
    I.G = &G;
    const int m = static_cast<int>(in.pairs.size());
    for (int q = 0; q < m; ++q) {
        int r = (first + q) % m;
        I.pairs.push_back(in.pairs[r]);
        I.origin.push_back(r);
        I.flipped.push_back(0);
    }
    I.L = in.L;
    I.R = in.R;
    I.rpairs = groupPairs(slice, in.R);
    I.rset.insert(in.R.begin(), in.R.end());
    return I;
}

struct AtomWork {
    std::vector<VertexPair> pairs;
    std::optional<Vertex> avoid;
};

// Solves every atom on the matchable pairs of the lists and concatenates.
bool finishCover(const Instance& I, const std::vector<std::vector<Vertex>>& lists, const Budget& budget,
                 SliceCoverResult& res) {
    const Slice& S = *I.slice;
    std::vector<AtomWork> work(S.length());
    for (const auto& list : lists) {
        if (list.size() % 2) throw std::logic_error("skeleton of odd length");
        for (std::size_t h = 0; h < list.size(); h += 2) {
            int k = I.atom(list[h]);
            if (I.atom(list[h + 1]) != k) throw std::logic_error("matchable pair split across atoms");
            work[k].pairs.emplace_back(list[h], list[h + 1]);
        }
    }
    for (Vertex x : I.L) work[I.atom(x)].avoid = x;
    for (const auto& [u, v] : I.pairs) {
        if (I.inR(u)) work[I.atom(u)].avoid = u;
        if (I.inR(v)) work[I.atom(v)].avoid = v;
    }
    std::map<VertexPair, std::vector<Vertex>> pieces;
    res.atoms.clear();
    for (int k = 0; k < S.length(); ++k) {
        AtomCover ac;
        ac.atom = k;
        auto req = classifyRequest(work[k].pairs, work[k].avoid);
        if (!req) {
            res.failure = "atom " + std::to_string(k) + ": parity pattern fits no connecting mode";
            return false;
        }
        if (req->pairs.size() > static_cast<std::size_t>(kPathSolverMaxPairs) ||
            2 * req->pairs.size() + (req->avoid ? 1 : 0) > S.cube().size()) {
            res.failure = "atom " + std::to_string(k) + ": too many matchable pairs";
            return false;
        }
        ac.request = *req;
        PathSystemResult pr = solvePathSystem(S.atomCube(k), *req, budget);
        ac.outcome = pr.outcome;
        res.atoms.push_back(ac);
        if (pr.outcome != Outcome::Found) {
            res.failure = "atom " + std::to_string(k) + ": path system " + outcomeName(pr.outcome);
            return false;
        }
        for (std::size_t q = 0; q < req->pairs.size(); ++q) pieces[req->pairs[q]] = pr.system.paths[q];
    }
    res.system.paths.assign(I.pairs.size(), {});
    for (std::size_t r = 0; r < lists.size(); ++r) {
        std::vector<Vertex> path;
        const auto& [u, v] = I.pairs[r];
        if (I.inR(u)) path.push_back(u);
        for (std::size_t h = 0; h < lists[r].size(); h += 2) {
            const auto& piece = pieces.at({lists[r][h], lists[r][h + 1]});
            path.insert(path.end(), piece.begin(), piece.end());
        }
        if (I.inR(v)) path.push_back(v);
        if (I.flipped[r]) std::reverse(path.begin(), path.end());
        res.system.paths[I.origin[r]] = std::move(path);
    }
    res.skeletons = lists;
    return true;
}

std::optional<std::vector<std::vector<Vertex>>> buildLists(const Instance& I, Builder& B) {
    const Slice& S = *I.slice;
    const int t = S.length();
    const int m = static_cast<int>(I.pairs.size());
    std::set<int> IR;
    for (const auto& [u, v] : I.pairs) {
        if (I.inR(u)) IR.insert(I.atom(u));
        if (I.inR(v)) IR.insert(I.atom(v));
    }
    auto rStarIn = [&](int k) { return IR.count(k) ? std::vector<Vertex>{} : I.rIn(k); };
    std::vector<Vertex> rStar;
    for (const auto& [k, pr] : I.rpairs)
        if (!IR.count(k)) {
            rStar.push_back(pr.first);
            rStar.push_back(pr.second);
        }
    B.forbid(I.L);
    B.forbid(I.R);
    for (const auto& [u, v] : I.pairs) B.forbid({u, v});

    const auto [u1, v1] = I.pairs[0];
    const int i1 = I.atom(u1), j1 = I.atom(v1);
    const bool u1R = I.inR(u1);
    std::vector<Vertex> L1;
    if (i1 == 0 && !rStarIn(0).empty()) {
        auto [w, z] = orient(I.rpairs.at(0), u1);
        L1 = {u1, w, z};
    } else if (i1 == 0 && u1R) {
        L1 = {u1};
    } else {
        auto r = I.rIn(i1);
        auto r0 = rStarIn(0);
        r.insert(r.end(), r0.begin(), r0.end());
        auto s1 = B.seq(u1, 0, r);
        if (!s1) return std::nullopt;
        L1 = *s1;
    }
    B.forbid(L1);
    const bool replace = i1 == 0 && u1R;
    std::vector<Vertex> rDiamond = rStar;
    if (replace) {
        auto r0 = I.rIn(0);
        rDiamond.insert(rDiamond.end(), r0.begin(), r0.end());
    }
    auto extend = [&](const std::vector<Vertex>& s) {
        appendTail(L1, s);
        B.forbid(L1);
    };
    auto firstLeg = [&](int to) {
        auto s2 = B.seq(L1.back(), to, rDiamond);
        if (!s2) return false;
        if (replace)
            L1 = *s2;
        else
            appendTail(L1, *s2);
        B.forbid(L1);
        return true;
    };
    if (I.L.empty()) {
        if (!firstLeg(t - 1)) return std::nullopt;
    } else {
        const Vertex x = I.L[0];
        const int i = I.atom(I.L[0]), j = I.atom(I.L[1]);
        if (!sameParity(x, u1)) {
            if (!firstLeg(i)) return std::nullopt;
            auto s3 = B.seq(B.pickIn(i, 1 - parity(u1)), j, rDiamond);
            if (!s3) return std::nullopt;
            extend(*s3);
            auto s4 = B.seq(B.pickIn(j, parity(u1)), t - 1, rDiamond);
            if (!s4) return std::nullopt;
            extend(*s4);
        } else {
            if (!firstLeg(j)) return std::nullopt;
            auto s3 = B.seq(B.pickIn(j, 1 - parity(u1)), i, {});
            if (!s3) return std::nullopt;
            extend(*s3);
            std::vector<Vertex> upper;
            for (Vertex v : rStar)
                if (I.atom(v) > j) upper.push_back(v);
            auto s4 = B.seq(B.pickIn(i, parity(u1)), t - 1, upper);
            if (!s4) return std::nullopt;
            extend(*s4);
        }
    }
    auto s5 = B.seq(L1.back(), j1, {});
    if (!s5) return std::nullopt;
    extend(*s5);
    L1.push_back(I.inR(v1) ? I.partner(v1) : v1);
    B.forbid(L1);

    std::vector<std::vector<Vertex>> lists{L1};
    for (int r = 1; r < m; ++r) {
        const auto [ur, vr] = I.pairs[r];
        auto sr = B.seq(ur, I.atom(vr), I.rIn(I.atom(ur)));
        if (!sr) return std::nullopt;
        std::vector<Vertex> Lr = *sr;
        Lr.push_back(I.inR(vr) ? I.partner(vr) : vr);
        B.forbid(Lr);
        lists.push_back(std::move(Lr));
    }
    return lists;
}

std::optional<std::vector<std::vector<Vertex>>> buildSameParityLists(const Instance& I, Builder& B, int& tstar) {
    const Slice& S = *I.slice;
    const int t = S.length();
    const auto [u1, v1] = I.pairs[0];
    const auto [u2, v2] = I.pairs[1];
    std::set<int> IR;
    for (Vertex v : {u1, v1, u2, v2})
        if (I.inR(v)) IR.insert(I.atom(v));
    std::vector<Vertex> rStar;
    std::set<int> rStarAtoms;
    for (const auto& [k, pr] : I.rpairs)
        if (!IR.count(k)) {
            rStar.push_back(pr.first);
            rStar.push_back(pr.second);
            rStarAtoms.insert(k);
        }
    std::vector<int> cand;
    for (int k = 1; k + 1 < t; ++k)
        if (!rStarAtoms.count(k)) cand.push_back(k);
    if (cand.empty()) {
        B.failure = "no atom free for the parity switch";
        return std::nullopt;
    }
    tstar = B.rng.pick(cand);
    int t1 = tstar, t2 = tstar;
    if (!I.L.empty()) {
        // x is the vertex of L whose parity differs from u1.
        const bool swapped = sameParity(I.L[0], u1);
        t1 = I.atom(I.L[swapped ? 1 : 0]);
        t2 = I.atom(I.L[swapped ? 0 : 1]);
    }
    B.forbid(I.L);
    B.forbid(I.R);
    B.forbid({u1, v1, u2, v2});

    std::vector<Vertex> L1{u1};
    if (rStarAtoms.count(0)) {
        auto [w, z] = orient(I.rpairs.at(0), u1);
        L1 = {u1, w, z};
    }
    auto s1 = B.seq(u1, t1, I.R);
    if (!s1) return std::nullopt;
    if (I.inR(u1))
        L1 = *s1;
    else
        appendTail(L1, *s1);
    B.forbid(L1);
    auto s2 = B.seq(B.pickIn(t1, 1 - parity(u1)), t - 1, rStar);
    if (!s2) return std::nullopt;
    appendTail(L1, *s2);
    L1.push_back(I.inR(v1) ? I.partner(v1) : v1);
    B.forbid(L1);

    auto s3 = B.seq(u2, t2, I.rIn(0));
    if (!s3) return std::nullopt;
    std::vector<Vertex> L2 = *s3;
    B.forbid(L2);
    auto s4 = B.seq(B.pickIn(t2, 1 - parity(u2)), t - 1, {});
    if (!s4) return std::nullopt;
    appendTail(L2, *s4);
    L2.push_back(I.inR(v2) ? I.partner(v2) : v2);
    return std::vector<std::vector<Vertex>>{L1, L2};
}

template <class BuildFn>
SliceCoverResult runVariants(const Slice& slice, const SubgraphQn& G, const SliceCoverInput& in,
                             const SliceCoverParams& p, int bond, int variants, std::uint64_t purpose,
                             BuildFn&& build) {
    const Slice rev = slice.reversed();
    SliceCoverResult res;
    Rng root(p.seed, purpose);
    for (int a = 0; a < std::max(1, p.attempts); ++a) {
        const int variant = a % variants;
        const bool reflect = variant % 2 == 1;
        const Slice& S = reflect ? rev : slice;
        SliceCoverInput local = in;
        if (local.L.size() == 2 && S.atomOf(local.L[0]) > S.atomOf(local.L[1])) std::swap(local.L[0], local.L[1]);
        Instance I = makeInstance(S, G, local, variant / 2);
        for (std::size_t r = 0; r < I.pairs.size(); ++r) {
            auto& pr = I.pairs[r];
            if (I.atom(pr.first) > I.atom(pr.second)) {
                std::swap(pr.first, pr.second);
                I.flipped[r] = 1;
            }
        }
        Rng rng = root.split(a);
        Builder B{I, rng, {}, 0, {}};
        int special = -1;
        auto lists = build(I, B, special);
        res.attemptsUsed = a + 1;
        res.maxForbidden = std::max(res.maxForbidden, B.maxForbidden);
        if (!lists) {
            res.failure = B.failure;
            res.attemptFailures.push_back(res.failure);
            continue;
        }
        if (!finishCover(I, *lists, p.atomBudget, res)) {
            res.attemptFailures.push_back(res.failure);
            continue;
        }
        auto check = checkSliceCover(slice, G, in, res.system);
        if (!check.ok()) throw std::logic_error("slice cover invalid: " + check.violations.front());
        const int t = slice.length();
        if (reflect) {
            for (auto& ac : res.atoms) ac.atom = t - 1 - ac.atom;
            std::sort(res.atoms.begin(), res.atoms.end(),
                      [](const AtomCover& x, const AtomCover& y) { return x.atom < y.atom; });
            if (special >= 0) special = t - 1 - special;
        }
        res.ok = true;
        res.failure.clear();
        res.variant = variant;
        res.specialAtom = special;
        res.maxForbidden = B.maxForbidden;
        res.bondGuarantee = bond >= res.maxForbidden + 1;
        return res;
    }
    res.system.paths.clear();
    res.bondGuarantee = bond >= res.maxForbidden + 1;
    return res;
}

}  // namespace

SliceCoverResult coverSlice(const Slice& slice, const SubgraphQn& G, const SliceCoverInput& in,
                            const SliceCoverParams& p) {
    int bond = 0;
    validateCommon(slice, in, p, bond);
    if (in.pairs.empty() || in.pairs.size() > 14) throw std::invalid_argument("(C3) need 1..14 pairs");
    std::unordered_set<Vertex> rs(in.R.begin(), in.R.end());
    std::map<int, int> hits;
    for (const auto& [u, v] : in.pairs) {
        if (sameParity(u, v)) throw std::invalid_argument("(C3) pair of equal parity");
        if (rs.count(u)) ++hits[*slice.atomOf(u)];
        if (rs.count(v)) ++hits[*slice.atomOf(v)];
    }
    for (const auto& [k, c] : hits)
        if (c > 1) throw std::invalid_argument("(C3) two endpoints in R within one atom");
    if (!slice.bonded(G, bond)) throw std::invalid_argument("molecule slice not bonded at the threshold");
    const int variants = 2 * static_cast<int>(in.pairs.size());
    return runVariants(slice, G, in, p, bond, variants, tag("slice-cover"),
                       [](const Instance& I, Builder& B, int&) { return buildLists(I, B); });
}

SliceCoverResult coverSliceSameParity(const Slice& slice, const SubgraphQn& G, const SliceCoverInput& in,
                                      const SliceCoverParams& p) {
    int bond = 0;
    validateCommon(slice, in, p, bond);
    if (in.pairs.size() != 2) throw std::invalid_argument("(C'3) exactly two pairs");
    const auto [u1, v1] = in.pairs[0];
    const auto [u2, v2] = in.pairs[1];
    const int t = slice.length();
    if (slice.atomOf(u1) != 0 || slice.atomOf(u2) != 0 || slice.atomOf(v1) != t - 1 || slice.atomOf(v2) != t - 1)
        throw std::invalid_argument("(C'3) u in the first atom and v in the last");
    if (sameParity(u1, u2) || sameParity(v1, v2) || !sameParity(u1, v1))
        throw std::invalid_argument("(C'3) parity pattern");
    std::unordered_set<Vertex> rs(in.R.begin(), in.R.end());
    if (rs.count(u1) + rs.count(u2) > 1 || rs.count(v1) + rs.count(v2) > 1)
        throw std::invalid_argument("(C'3) two endpoints in R within one atom");
    if (!slice.bonded(G, bond)) throw std::invalid_argument("molecule slice not bonded at the threshold");
    // Reflection swaps the roles of u and v, so flip every pair with it.
    return runVariants(slice, G, in, p, bond, 4, tag("slice-cover-same-parity"),
                       [](const Instance& I, Builder& B, int& special) { return buildSameParityLists(I, B, special); });
}

PathSystemCheck checkSliceCover(const Slice& slice, const SubgraphQn& G, const SliceCoverInput& in,
                                const PathSystem& ps) {
    std::unordered_set<Vertex> lset(in.L.begin(), in.L.end());
    std::vector<Vertex> cover;
    for (Vertex v : slice.vertices())
        if (!lset.count(v)) cover.push_back(v);
    PathSystemCheck c =
        checkPathSystem(ps, in.pairs, cover, [&](Vertex a, Vertex b) { return slice.edgeAllowed(G, a, b); });
    for (const auto& [k, pr] : groupPairs(slice, in.R))
        if (!containsEdge(ps, pr.first, pr.second))
            c.violations.push_back("R pair in atom " + std::to_string(k) + " is not a path edge");
    return c;
}

}  // namespace hcube

namespace hcube {

std::optional<SliceCoverInput> randomSliceInput(const Slice& slice, int m, int lSize, int rPairs, bool twoEnds,
                                                Rng& rng) {
    const int t = slice.length();
    const Vertex N = slice.cube().size();
    SliceCoverInput in;
    std::unordered_set<Vertex> used;
    std::set<int> lAtoms;
    auto randomIn = [&](int k) { return slice.vertex(k, rng.below(N)); };
    if (lSize == 2) {
        int i = static_cast<int>(rng.below(t));
        int j = static_cast<int>(rng.below(t - 1));
        if (j >= i) ++j;
        Vertex x = randomIn(i), y = randomIn(j);
        while (sameParity(x, y)) y = randomIn(j);
        in.L = {x, y};
        used.insert({x, y});
        lAtoms = {i, j};
    }
    std::vector<int> free;
    for (int k = 0; k < t; ++k)
        if (!lAtoms.count(k)) free.push_back(k);
    rng.shuffle(free);
    if (rPairs > static_cast<int>(free.size())) return std::nullopt;
    for (int q = 0; q < rPairs; ++q) {
        Vertex w = randomIn(free[q]);
        Vertex z = slice.vertex(free[q], slice.localOf(w) ^ (Vertex{1} << rng.below(slice.ell())));
        in.R.push_back(w);
        in.R.push_back(z);
    }
    std::unordered_set<Vertex> rs(in.R.begin(), in.R.end());
    std::map<int, int> rHits;
    auto admissible = [&](Vertex v) {
        if (used.count(v)) return false;
        if (rs.count(v) && rHits[*slice.atomOf(v)] > 0) return false;
        return true;
    };
    auto take = [&](Vertex v) {
        used.insert(v);
        if (rs.count(v)) ++rHits[*slice.atomOf(v)];
    };
    for (int tries = 0; static_cast<int>(in.pairs.size()) < m; ++tries) {
        if (tries > 1000) return std::nullopt;
        Vertex u, v;
        if (twoEnds) {
            u = randomIn(0);
            v = randomIn(t - 1);
            if (!in.pairs.empty()) {
                const auto& [u1, v1] = in.pairs[0];
                if (sameParity(u, u1) || sameParity(v, v1)) continue;
                if (rs.count(u) && rs.count(u1)) continue;
                if (rs.count(v) && rs.count(v1)) continue;
            } else if (!sameParity(u, v)) {
                continue;
            }
        } else {
            u = randomIn(static_cast<int>(rng.below(t)));
            v = randomIn(static_cast<int>(rng.below(t)));
            if (sameParity(u, v)) continue;
        }
        if (u == v || !admissible(u)) continue;
        take(u);
        if (!admissible(v)) {
            used.erase(u);
            if (rs.count(u)) --rHits[*slice.atomOf(u)];
            continue;
        }
        take(v);
        in.pairs.emplace_back(u, v);
    }
    return in;
}

}  // namespace hcube

namespace hcube {

namespace {

struct ExactCover {
    int N = 0;
    std::vector<std::uint64_t> adj;
    std::vector<int> partner;  // R partner or -1
    std::vector<std::pair<int, int>> pairs;
    std::uint64_t cover = 0;      // vertices that must be visited
    std::uint64_t endpoints = 0;  // all pair endpoints
    std::uint64_t evenMask = 0;
    Budget budget;
    std::chrono::steady_clock::time_point start;
    std::uint64_t nodes = 0;
    bool timedOut = false;
    std::vector<std::vector<int>> paths;

    bool overBudget() {
        if (budget.maxNodes && nodes >= budget.maxNodes) return timedOut = true;
        if (budget.timeoutMs > 0 && (nodes & 1023) == 0) {
            double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
            if (ms > budget.timeoutMs) return timedOut = true;
        }
        return false;
    }

    static int balance(bool aEven, bool bEven) { return int(aEven) + int(bEven) - 1; }

    // Necessary conditions on the unvisited part.
    bool viable(std::uint64_t used, int r, int cur) const {
        const std::uint64_t free = cover & ~used;
        const int target = pairs[r].second;
        std::uint64_t future = 0;
        for (std::size_t k = r + 1; k < pairs.size(); ++k)
            future |= (std::uint64_t{1} << pairs[k].first) | (std::uint64_t{1} << pairs[k].second);
        const std::uint64_t curBit = std::uint64_t{1} << cur;
        // Degree: interior vertices need two usable neighbours, endpoints one.
        for (std::uint64_t m = free; m; m &= m - 1) {
            int v = std::countr_zero(m);
            int deg = std::popcount(adj[v] & (free | curBit));
            bool end = ((future >> v) & 1) || v == target;
            if (deg < (end ? 1 : 2)) return false;
        }
        // Parity: each remaining path shifts even-minus-odd by a known amount.
        int want = std::popcount(free & evenMask) - std::popcount(free & ~evenMask);
        int have = 0;
        if (cur != target) have += balance(!((evenMask >> cur) & 1), (evenMask >> target) & 1);
        for (std::size_t k = r + 1; k < pairs.size(); ++k)
            have += balance((evenMask >> pairs[k].first) & 1, (evenMask >> pairs[k].second) & 1);
        if (want != have) return false;
        // Connectivity: the target is reachable from cur avoiding other
        // endpoints, and every component of the free vertices holds a future
        // endpoint or touches cur.
        const std::uint64_t otherEnds = future & ~(std::uint64_t{1} << target);
        if (cur != target) {
            std::uint64_t seen = adj[cur] & free & ~otherEnds;
            std::uint64_t frontier = seen;
            while (frontier && !((seen >> target) & 1)) {
                std::uint64_t next = 0;
                for (std::uint64_t m = frontier; m; m &= m - 1) next |= adj[std::countr_zero(m)];
                frontier = next & free & ~otherEnds & ~seen;
                seen |= frontier;
            }
            if (!((seen >> target) & 1)) return false;
        }
        std::uint64_t rest = free;
        while (rest) {
            std::uint64_t comp = rest & (~rest + 1);
            std::uint64_t grow = comp;
            while (grow) {
                std::uint64_t next = 0;
                for (std::uint64_t m = grow; m; m &= m - 1) next |= adj[std::countr_zero(m)];
                grow = next & rest & ~comp;
                comp |= grow;
            }
            if (!(comp & future) && !(cur != target && (adj[cur] & comp))) return false;
            rest &= ~comp;
        }
        return true;
    }

    bool extend(std::uint64_t used, int r, int cur, int prev) {
        ++nodes;
        if (overBudget()) return false;
        const int target = pairs[r].second;
        if (cur == target) {
            if (r + 1 == static_cast<int>(pairs.size())) return (used & cover) == cover;
            int s = pairs[r + 1].first;
            paths.emplace_back(1, s);
            if (viable(used | (std::uint64_t{1} << s), r + 1, s) &&
                extend(used | (std::uint64_t{1} << s), r + 1, s, -1))
                return true;
            paths.pop_back();
            return false;
        }
        int forced = -1;
        if (partner[cur] >= 0 && partner[cur] != prev) forced = partner[cur];
        std::uint64_t free = cover & ~used;
        std::uint64_t otherEnds = endpoints & ~(std::uint64_t{1} << target);
        std::uint64_t cand = adj[cur] & free & ~otherEnds;
        if (forced >= 0) cand &= std::uint64_t{1} << forced;
        if (partner[target] >= 0 && partner[target] != cur) cand &= ~(std::uint64_t{1} << target);
        std::vector<std::pair<int, int>> order;
        for (std::uint64_t m = cand; m; m &= m - 1) {
            int v = std::countr_zero(m);
            order.push_back({v == target ? -1 : std::popcount(adj[v] & free), v});
        }
        std::sort(order.begin(), order.end());
        for (auto [score, v] : order) {
            (void)score;
            std::uint64_t nu = used | (std::uint64_t{1} << v);
            paths.back().push_back(v);
            if (viable(nu, r, v) && extend(nu, r, v, cur)) return true;
            paths.back().pop_back();
            if (timedOut) return false;
        }
        return false;
    }
};

}  // namespace

PathSystemResult coverSliceExact(const Slice& slice, const SubgraphQn& G, const SliceCoverInput& in,
                                 const Budget& budget) {
    const std::vector<Vertex> verts = slice.vertices();
    if (verts.size() > 64) throw std::invalid_argument("coverSliceExact: slice larger than 64 vertices");
    std::unordered_map<Vertex, int> index;
    for (std::size_t i = 0; i < verts.size(); ++i) index[verts[i]] = static_cast<int>(i);
    auto idx = [&](Vertex v) {
        auto it = index.find(v);
        if (it == index.end()) throw std::invalid_argument("coverSliceExact: vertex outside the slice");
        return it->second;
    };
    ExactCover S;
    S.N = static_cast<int>(verts.size());
    S.adj.assign(S.N, 0);
    S.partner.assign(S.N, -1);
    for (int a = 0; a < S.N; ++a) {
        if (!parity(verts[a])) S.evenMask |= std::uint64_t{1} << a;
        for (int b = a + 1; b < S.N; ++b)
            if (slice.edgeAllowed(G, verts[a], verts[b])) {
                S.adj[a] |= std::uint64_t{1} << b;
                S.adj[b] |= std::uint64_t{1} << a;
            }
    }
    S.cover = lowMask(S.N);
    for (Vertex v : in.L) S.cover &= ~(std::uint64_t{1} << idx(v));
    for (const auto& [k, pr] : groupPairs(slice, in.R)) {
        (void)k;
        int a = idx(pr.first), b = idx(pr.second);
        S.partner[a] = b;
        S.partner[b] = a;
    }
    PathSystemResult res;
    for (const auto& [u, v] : in.pairs) {
        int a = idx(u), b = idx(v);
        std::uint64_t m = (std::uint64_t{1} << a) | (std::uint64_t{1} << b);
        if (a == b || (S.endpoints & m) || (m & ~S.cover))
            throw std::invalid_argument("coverSliceExact: endpoints must be distinct and outside L");
        S.endpoints |= m;
        S.pairs.push_back({a, b});
    }
    if (S.pairs.empty()) {
        res.outcome = S.cover ? Outcome::Unsat : Outcome::Found;
        return res;
    }
    S.budget = budget;
    S.start = std::chrono::steady_clock::now();
    int s0 = S.pairs[0].first;
    S.paths.emplace_back(1, s0);
    bool ok = S.viable(std::uint64_t{1} << s0, 0, s0) && S.extend(std::uint64_t{1} << s0, 0, s0, -1);
    res.nodes = S.nodes;
    if (ok) {
        res.outcome = Outcome::Found;
        for (const auto& p : S.paths) {
            std::vector<Vertex> path;
            for (int i : p) path.push_back(verts[i]);
            res.system.paths.push_back(std::move(path));
        }
    } else {
        res.outcome = S.timedOut ? Outcome::Timeout : Outcome::Unsat;
    }
    return res;
}

}  // namespace hcube
