#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_set>

#include "hcube/pipeline.hpp"
#include "hcube/rng.hpp"

namespace hcube {

bool validConnection(const ConnectionSequence& c, int delta, std::string* why) {
    auto fail = [&](const char* msg) {
        if (why) *why = msg;
        return false;
    };
    std::set<Vertex> distinct{c.x, c.y, c.xh, c.yh};
    if (distinct.size() != 4) return fail("vertices not distinct");
    if (sameParity(c.x, c.y) == (delta % 2 == 0)) return fail("(V1) parity of x, y against Delta");
    if (sameParity(c.xh, c.x)) return fail("(V2) xh and x share parity");
    if (sameParity(c.yh, c.y)) return fail("(V3) yh and y share parity");
    return true;
}

namespace {

int firstLayerOf(const LayerDecomposition& L, int slice) { return slice * L.q(); }
int lastLayerOf(const LayerDecomposition& L, int slice) { return slice * L.q() + L.q() - 1; }

// Clones of a vertex of I inside one slice.
std::vector<Vertex> slicesClones(const LayerDecomposition& L, Vertex v, int slice) {
    std::vector<Vertex> out;
    for (int layer = firstLayerOf(L, slice); layer <= lastLayerOf(L, slice); ++layer) out.push_back(L.clone(v, layer));
    return out;
}

int sliceOfVertex(const LayerDecomposition& L, Vertex v) { return L.sliceOf(L.layerOf(v)); }

// Slice in which child k (0-based) of node i attaches.
int childSlice(const ContractionTree& tau, int i, int k) {
    const TreeNode& v = tau.nodes[i];
    return v.atomic() ? (v.input + k) % tau.t : v.input;
}

struct EsBuilder {
    const ContractionTree& tau;
    const LayerDecomposition& L;
    const SubgraphQn& Gp;
    const VertexMask* reservoir;
    std::unordered_set<Vertex> reserved;
    const SkeletonParams& p;
    const NodeCheck& check;
    Rng rng;
    ExternalSkeletonResult res;
    int budget;

    EsBuilder(const ContractionTree& tau_, const LayerDecomposition& L_, const SubgraphQn& Gp_, const VertexMask* R,
              const std::vector<Vertex>& reserved_, const SkeletonParams& p_, const NodeCheck& check_)
        : tau(tau_), L(L_), Gp(Gp_), reservoir(R), reserved(reserved_.begin(), reserved_.end()), p(p_),
          check(check_), rng(p_.seed, "external-skeleton") {
        budget = p.budget > 0 ? p.budget : 64 * std::max(1, tau.size());
        res.es.plan.assign(tau.size(), {});
    }

    bool blocked(Vertex v) const {
        if (reserved.count(v)) return true;
        return reservoir && (*reservoir)[L.project(v)];
    }

    void noteFailure(int i, int slice, std::string why) {
        if (res.failedNode < 0 || res.failure.empty()) {
            res.failedNode = i;
            res.failedSlice = slice;
            res.failure = std::move(why);
        }
    }

    // Attachment quadruples (z, w, zh, wh) for child k of atomic node i.
    std::vector<ConnectionSequence> atomicOptions(int i, int k, int pw, const std::vector<Vertex>& own) {
        const TreeNode& v = tau.nodes[i];
        const TreeNode& c = tau.nodes[v.children[k]];
        const int slice = childSlice(tau, i, k);
        std::vector<Vertex> pool;
        for (Vertex x : slicesClones(L, v.attach[k], slice))
            if (!blocked(x) && std::find(own.begin(), own.end(), x) == own.end()) pool.push_back(x);
        const bool evenDelta = c.delta % 2 == 0;
        std::vector<ConnectionSequence> out;
        for (Vertex z : pool) {
            if (parity(z) == pw) continue;
            for (Vertex zh : pool) {
                if (zh == z || sameParity(zh, z)) continue;
                for (Vertex w : pool) {
                    if (w == z || w == zh || sameParity(w, z) != !evenDelta) continue;
                    for (Vertex wh : pool) {
                        if (wh == z || wh == zh || wh == w || sameParity(wh, w)) continue;
                        out.push_back({z, w, zh, wh});
                    }
                }
            }
        }
        rng.shuffle(out);
        if (static_cast<int>(out.size()) > p.candidatesPerNode) out.resize(p.candidatesPerNode);
        if (out.empty()) noteFailure(i, slice, "no admissible attachment vertices for child " + std::to_string(k));
        return out;
    }

    void setChildren(int i) {
        const TreeNode& v = tau.nodes[i];
        for (int k = 0; k < v.p(); ++k)
            res.es.plan[v.children[k]].seq = res.es.plan[i].attach[k].shifted(L.lift(v.childDirs[k]));
    }

    bool runCheck(int i) {
        ++res.choicesTried;
        if (!check) return true;
        if (check(i, res.es)) return true;
        noteFailure(i, -1, "node check rejected the choice");
        return false;
    }

    // Iterates combinations of per-child options, first child fastest; a
    // child subtree failing for an option marks that option bad.
    bool solveCombos(int i, const std::vector<std::vector<ConnectionSequence>>& options) {
        const TreeNode& v = tau.nodes[i];
        const int pc = v.p();
        std::vector<std::vector<char>> bad(pc);
        std::uint64_t total = 1;
        for (int k = 0; k < pc; ++k) {
            bad[k].assign(options[k].size(), 0);
            total = std::min<std::uint64_t>(total * options[k].size(), std::uint64_t{1} << 40);
        }
        int tried = 0;
        std::vector<std::size_t> idx(pc);
        for (std::uint64_t code = 0; code < total && tried < p.candidatesPerNode; ++code) {
            std::uint64_t rest = code;
            bool skip = false;
            for (int k = 0; k < pc; ++k) {
                idx[k] = rest % options[k].size();
                rest /= options[k].size();
                skip = skip || bad[k][idx[k]];
            }
            if (skip) continue;
            if (res.choicesTried > budget) {
                noteFailure(i, -1, "choice budget exhausted");
                return false;
            }
            ++tried;
            auto& plan = res.es.plan[i];
            plan.attach.resize(pc);
            for (int k = 0; k < pc; ++k) plan.attach[k] = options[k][idx[k]];
            setChildren(i);
            if (!runCheck(i)) continue;
            bool ok = true;
            for (int k = 0; k < pc && ok; ++k)
                if (!solve(v.children[k])) {
                    bad[k][idx[k]] = 1;
                    ok = false;
                }
            if (ok) return true;
        }
        return false;
    }

    bool solveAtomic(int i, const std::vector<Vertex>& own, int pw0) {
        const TreeNode& v = tau.nodes[i];
        std::vector<std::vector<ConnectionSequence>> options(v.p());
        int pw = pw0;
        for (int k = 0; k < v.p(); ++k) {
            options[k] = atomicOptions(i, k, pw, own);
            if (options[k].empty()) return false;
            pw ^= tau.nodes[v.children[k]].delta & 1;  // P(w_k) = P(w_{k-1}) + Delta(u_k)
        }
        if (v.p() == 0) {
            res.es.plan[i].attach.clear();
            return runCheck(i);
        }
        return solveCombos(i, options);
    }

    bool solveInner(int i) {
        const TreeNode& v = tau.nodes[i];
        const ConnectionSequence& s = res.es.plan[i].seq;
        const int pc = v.p();
        std::vector<Vertex> pool;
        for (Vertex x : slicesClones(L, v.cube.base, v.input))
            if (!blocked(x) && x != s.x && x != s.y && x != s.xh && x != s.yh) pool.push_back(x);
        for (int attempt = 0; attempt < p.candidatesPerNode; ++attempt) {
            if (res.choicesTried > budget) {
                noteFailure(i, v.input, "choice budget exhausted");
                return false;
            }
            std::vector<Vertex> w{s.x}, wh{s.xh};
            std::vector<Vertex> left = pool;
            rng.shuffle(left);
            bool ok = true;
            for (int k = 1; k < pc && ok; ++k) {
                const bool evenDelta = tau.nodes[v.children[k - 1]].delta % 2 == 0;
                auto takeWith = [&](auto pred) -> std::optional<Vertex> {
                    for (std::size_t a = 0; a < left.size(); ++a)
                        if (pred(left[a])) {
                            Vertex x = left[a];
                            left.erase(left.begin() + a);
                            return x;
                        }
                    return std::nullopt;
                };
                auto wk = takeWith([&](Vertex x) { return sameParity(x, w.back()) != evenDelta; });
                if (!wk) {
                    ok = false;
                    break;
                }
                auto whk = takeWith([&](Vertex x) { return !sameParity(x, *wk); });
                if (!whk) {
                    ok = false;
                    break;
                }
                w.push_back(*wk);
                wh.push_back(*whk);
            }
            if (!ok) {
                noteFailure(i, v.input, "inner slice too small for " + std::to_string(2 * pc + 2) + " vertices");
                return false;
            }
            w.push_back(s.y);
            wh.push_back(s.yh);
            auto& plan = res.es.plan[i];
            plan.attach.assign(pc, {});
            for (int k = 0; k < pc; ++k) plan.attach[k] = {w[k], w[k + 1], wh[k], wh[k + 1]};
            setChildren(i);
            if (!runCheck(i)) continue;
            bool all = true;
            for (int c : v.children)
                if (!solve(c)) {
                    all = false;
                    break;
                }
            if (all) return true;
            if (pc <= 1) return false;  // no free choices to vary
        }
        return false;
    }

    bool solve(int i) {
        const TreeNode& v = tau.nodes[i];
        const ConnectionSequence& s = res.es.plan[i].seq;
        for (Vertex x : {s.x, s.y, s.xh, s.yh})
            if (blocked(x)) {
                noteFailure(i, v.input, "connection sequence meets a reserved vertex");
                return false;
            }
        if (!v.atomic()) return solveInner(i);
        return solveAtomic(i, {s.x, s.y, s.xh, s.yh}, parity(s.x));
    }

    bool solveRoot() {
        const TreeNode& r = tau.nodes[0];
        const int e = L.crossingDir(L.layers() - 1);
        std::vector<Vertex> atom;
        for (Vertex c : subcubeVertices(r.cube)) {
            // Clones of attachment vertices are reserved for the children.
            if (std::find(r.attach.begin(), r.attach.end(), c) != r.attach.end()) continue;
            Vertex x = L.clone(c, 0);
            if (!blocked(x) && !blocked(x ^ bit(e)) && Gp.hasEdge(x, x ^ bit(e))) atom.push_back(x);
        }
        std::vector<RootTie> ties;
        for (Vertex a : atom)
            for (Vertex b : atom)
                if (!sameParity(a, b)) ties.push_back({a, b, b ^ bit(e), a ^ bit(e)});
        rng.shuffle(ties);
        if (ties.empty()) {
            noteFailure(0, 0, "no admissible root tie in the first atom");
            return false;
        }
        for (std::size_t k = 0; k < ties.size() && static_cast<int>(k) < p.candidatesPerNode; ++k) {
            const RootTie& tie = ties[k];
            res.es.tie = tie;
            if (solveAtomic(0, {tie.x1, tie.x1h, tie.yt, tie.yth}, parity(tie.x1))) return true;
            if (res.choicesTried > budget) return false;
        }
        return false;
    }
};

}  // namespace

ExternalSkeletonResult buildExternalSkeleton(const ContractionTree& tau, const LayerDecomposition& L,
                                             const SubgraphQn& Gp, const VertexMask* reservoir,
                                             const std::vector<Vertex>& reserved, const SkeletonParams& p,
                                             const NodeCheck& check) {
    if (tau.nodes.empty()) throw std::invalid_argument("buildExternalSkeleton: empty tree");
    if (L.t() != tau.t || L.s() != tau.s || L.n() != tau.n)
        throw std::invalid_argument("buildExternalSkeleton: layer decomposition does not match the tree");
    EsBuilder B(tau, L, Gp, reservoir, reserved, p, check);
    if (!B.solveRoot()) {
        if (B.res.failure.empty()) B.res.failure = "no choice satisfied every node";
        return std::move(B.res);
    }
    ExternalSkeletonResult res = std::move(B.res);
    res.ok = true;
    res.failure.clear();
    res.failedNode = res.failedSlice = -1;
    std::set<Vertex> all;
    for (int i = 0; i < tau.size(); ++i) {
        const NodePlan& plan = res.es.plan[i];
        if (i > 0) all.insert({plan.seq.x, plan.seq.y, plan.seq.xh, plan.seq.yh});
        for (const auto& a : plan.attach) all.insert({a.x, a.y, a.xh, a.yh});
    }
    res.es.vertices.assign(all.begin(), all.end());
    return res;
}

CheckReport validateExternalSkeleton(const ContractionTree& tau, const LayerDecomposition& L,
                                     const ExternalSkeleton& es, const VertexMask* reservoir) {
    CheckReport rep;
    if (static_cast<int>(es.plan.size()) != tau.size()) {
        rep.add("plan size differs from the tree");
        return rep;
    }
    const int t = tau.t;
    auto inMolecule = [&](int i, Vertex x) { return tau.nodes[i].cube.contains(L.project(x)); };
    // Vertices each node contributes; ES4 compares them with es.vertices.
    std::map<Vertex, int> owner;
    auto own = [&](int i, Vertex x) {
        auto [it, fresh] = owner.emplace(x, i);
        if (!fresh && it->second != i) rep.add("vertex shared by v" + std::to_string(it->second) + " and v" + std::to_string(i));
    };
    const RootTie& tie = es.tie;
    const int e = L.crossingDir(L.layers() - 1);
    if (L.layerOf(tie.x1) != 0 || L.layerOf(tie.x1h) != 0 || !inMolecule(0, tie.x1) || !inMolecule(0, tie.x1h))
        rep.add("root tie starts outside the first atom of v0");
    if (sameParity(tie.x1, tie.x1h)) rep.add("root tie starting vertices share parity");
    if (tie.yt != (tie.x1h ^ bit(e)) || tie.yth != (tie.x1 ^ bit(e))) rep.add("root tie ends are not the crossing neighbours");
    for (int i = 0; i < tau.size(); ++i) {
        const TreeNode& v = tau.nodes[i];
        const NodePlan& plan = es.plan[i];
        const std::string at = " at v" + std::to_string(i);
        if (static_cast<int>(plan.attach.size()) != v.p()) {
            rep.add("attachment count differs from p" + at);
            continue;
        }
        std::vector<Vertex> mine;
        if (i > 0) {
            std::string why;
            if (!validConnection(plan.seq, v.delta, &why)) rep.add("invalid connection sequence" + at + ": " + why);
            for (Vertex x : {plan.seq.x, plan.seq.y, plan.seq.xh, plan.seq.yh}) {
                if (!inMolecule(i, x) || sliceOfVertex(L, x) != v.input) rep.add("connection vertex outside the input slice" + at);
                mine.push_back(x);
            }
        }
        Vertex prevW = i > 0 ? plan.seq.x : tie.x1;
        for (int k = 0; k < v.p(); ++k) {
            const ConnectionSequence& a = plan.attach[k];
            const int slice = childSlice(tau, i, k);
            const Vertex base = v.atomic() ? v.attach[k] : v.cube.base;
            for (Vertex x : {a.x, a.y, a.xh, a.yh}) {
                if (L.project(x) != base || sliceOfVertex(L, x) != slice)
                    rep.add("attachment vertex off its clone set" + at);
                mine.push_back(x);
            }
            const TreeNode& c = tau.nodes[v.children[k]];
            const ConnectionSequence want = a.shifted(L.lift(v.childDirs[k]));
            const ConnectionSequence& got = es.plan[v.children[k]].seq;
            if (want.x != got.x || want.y != got.y || want.xh != got.xh || want.yh != got.yh)
                rep.add("child connection is not the shifted attachment" + at);
            if (v.atomic()) {
                if (sameParity(a.x, prevW)) rep.add("z does not alternate with the previous w" + at);
                std::string why;
                if (!validConnection(a, c.delta, &why)) rep.add("attachment breaks the child's laws" + at + ": " + why);
                prevW = a.y;
            } else {
                Vertex wantFrom = k == 0 ? plan.seq.x : plan.attach[k - 1].y;
                Vertex wantFromH = k == 0 ? plan.seq.xh : plan.attach[k - 1].yh;
                if (a.x != wantFrom || a.xh != wantFromH) rep.add("inner chain broken" + at);
                if (k + 1 == v.p() && (a.y != plan.seq.y || a.yh != plan.seq.yh)) rep.add("inner chain does not end at y" + at);
            }
        }
        std::sort(mine.begin(), mine.end());
        mine.erase(std::unique(mine.begin(), mine.end()), mine.end());
        for (Vertex x : mine) own(i, x);
        if (!v.atomic()) {
            // ES1
            std::size_t want = v.p() == 0 ? 4 : static_cast<std::size_t>(2 * v.p() + 2);
            int even = 0;
            for (Vertex x : mine) even += parity(x) == 0;
            if (mine.size() != want) rep.add("(ES1) inner vertex uses " + std::to_string(mine.size()) + " vertices" + at);
            if (2 * even != static_cast<int>(mine.size())) rep.add("(ES1) inner parity halves differ" + at);
        } else if (i > 0) {
            // ES2
            std::size_t want = static_cast<std::size_t>(4 * v.p() + 4);
            if (mine.size() != want) rep.add("(ES2) atomic vertex uses " + std::to_string(mine.size()) + " vertices" + at);
            if (t > 1) {
                std::map<int, int> per;
                for (Vertex x : mine) ++per[sliceOfVertex(L, x)];
                for (auto [slice, count] : per) {
                    int expect = slice == v.input ? (v.leaf() ? 4 : 8) : 4;
                    if (count != expect) rep.add("(ES2) slice " + std::to_string(slice) + " holds " + std::to_string(count) + at);
                }
            }
        } else {
            // ES3
            if (mine.size() != static_cast<std::size_t>(4 * v.p())) rep.add("(ES3) root uses " + std::to_string(mine.size()) + " vertices");
            if (t > 1) {
                std::map<int, int> per;
                for (Vertex x : mine) ++per[sliceOfVertex(L, x)];
                for (auto [slice, count] : per)
                    if (count != 4 || slice >= v.p()) rep.add("(ES3) root slice " + std::to_string(slice) + " holds " + std::to_string(count));
            }
        }
    }
    // ES4
    std::set<Vertex> listed(es.vertices.begin(), es.vertices.end());
    if (listed.size() != es.vertices.size()) rep.add("(ES4) duplicate vertex in L");
    if (listed.size() != owner.size()) rep.add("(ES4) L differs from the union of the partial skeletons");
    else
        for (auto [x, i] : owner)
            if (!listed.count(x)) {
                rep.add("(ES4) vertex missing from L");
                break;
            }
    for (Vertex x : {tie.x1, tie.x1h, tie.yt, tie.yth})
        if (listed.count(x)) rep.add("root tie meets L");
    // ES5
    if (reservoir)
        for (Vertex x : es.vertices)
            if ((*reservoir)[L.project(x)]) {
                rep.add("(ES5) L meets the reservoir");
                break;
            }
    return rep;
}

std::array<std::vector<std::vector<Vertex>>, 2> nodeSegments(const ContractionTree& tau, [[maybe_unused]] const LayerDecomposition& L,
                                                             const ExternalSkeleton& es, int i) {
    const TreeNode& v = tau.nodes[i];
    const NodePlan& plan = es.plan[i];
    const int t = tau.t;
    std::array<std::vector<std::vector<Vertex>>, 2> out;
    for (int h = 0; h < 2; ++h) {
        auto pick = [h](const ConnectionSequence& c, bool end) { return h == 0 ? (end ? c.y : c.x) : (end ? c.yh : c.xh); };
        std::vector<std::vector<Vertex>> segs;
        if (!v.atomic()) {
            segs.push_back({pick(plan.seq, false)});
            for (int k = 0; k < v.p(); ++k) segs.push_back({pick(plan.attach[k], true)});
            out[h] = std::move(segs);
            continue;
        }
        const bool root = i == 0;
        const Vertex start = root ? (h == 0 ? es.tie.x1 : es.tie.x1h) : pick(plan.seq, false);
        const Vertex finish = root ? (h == 0 ? es.tie.yt : es.tie.yth) : pick(plan.seq, true);
        const auto& tr = plan.transitions[h];
        std::vector<Vertex> cur{start};
        if (t == 1) {
            for (int k = 0; k < v.p(); ++k) {
                cur.push_back(pick(plan.attach[k], false));
                segs.push_back(std::move(cur));
                cur = {pick(plan.attach[k], true)};
            }
            cur.push_back(finish);
            segs.push_back(std::move(cur));
            out[h] = std::move(segs);
            continue;
        }
        const int slices = root ? t - 1 : t;
        if (static_cast<int>(tr.size()) != 2 * slices)
            throw std::invalid_argument("nodeSegments: transitions missing at v" + std::to_string(i));
        for (int k = 0; k < slices; ++k) {
            if (k < v.p()) {
                cur.push_back(pick(plan.attach[k], false));
                segs.push_back(std::move(cur));
                cur = {pick(plan.attach[k], true)};
            }
            cur.push_back(tr[2 * k]);
            cur.push_back(tr[2 * k + 1]);
        }
        cur.push_back(finish);
        segs.push_back(std::move(cur));
        out[h] = std::move(segs);
    }
    return out;
}

std::vector<VertexPair> nodeSlicePairs(const ContractionTree& tau, const LayerDecomposition& L,
                                       const ExternalSkeleton& es, int i, int slice) {
    std::vector<VertexPair> out;
    if (!tau.nodes[i].atomic()) return out;
    auto segs = nodeSegments(tau, L, es, i);
    for (const auto& track : segs)
        for (const auto& seg : track)
            for (std::size_t j = 0; j + 1 < seg.size(); j += 2)
                if (sliceOfVertex(L, seg[j]) == slice && sliceOfVertex(L, seg[j + 1]) == slice)
                    out.push_back({seg[j], seg[j + 1]});
    return out;
}

namespace {

struct SkeletonWalker {
    const ContractionTree& tau;
    const LayerDecomposition& L;
    const ExternalSkeleton& es;
    Skeleton sk;
    std::vector<std::array<std::vector<std::vector<Vertex>>, 2>> segs;

    void push(Vertex x, int node, LinkKind toNext) {
        sk.list.push_back(x);
        sk.node.push_back(node);
        sk.slice.push_back(sliceOfVertex(L, x));
        sk.link.push_back(toNext);
    }

    void emitSegment(int i, const std::vector<Vertex>& seg) {
        for (std::size_t j = 0; j < seg.size(); ++j) {
            bool pathNext = j + 1 < seg.size() && j % 2 == 0;
            push(seg[j], i, pathNext ? LinkKind::Path : LinkKind::Edge);
        }
    }

    void track(int i, int h) {
        // Iterative over the tree: (node, next segment index).
        std::vector<std::pair<int, int>> stack{{i, 0}};
        while (!stack.empty()) {
            auto& [node, k] = stack.back();
            const auto& mine = segs[node][h];
            if (k == static_cast<int>(mine.size())) {
                stack.pop_back();
                continue;
            }
            emitSegment(node, mine[k]);
            int child = k < tau.nodes[node].p() ? tau.nodes[node].children[k] : -1;
            ++k;
            if (child >= 0) stack.push_back({child, 0});
        }
    }
};

struct TransitionPicker {
    const ContractionTree& tau;
    const LayerDecomposition& L;
    const SubgraphQn& Gp;
    std::unordered_set<Vertex> forbidden;
    Rng rng;

    // Transitions for one track of node i; used collects the molecule's skeleton vertices.
    bool pick(int i, int h, NodePlan& plan, const RootTie& tie, std::unordered_set<Vertex>& used) {
        const TreeNode& v = tau.nodes[i];
        const int t = tau.t;
        const bool root = i == 0;
        const int slices = root ? t - 1 : t;
        std::vector<Vertex> tr;
        Vertex x = root ? (h == 0 ? tie.x1 : tie.x1h) : (h == 0 ? plan.seq.x : plan.seq.xh);
        for (int k = 0; k < slices; ++k) {
            const int slice = root ? k : (v.input + k) % t;
            const int layer = lastLayerOf(L, slice);
            const int e = L.crossingDir(layer);
            Vertex ref = x;
            if (k < v.p()) ref = h == 0 ? plan.attach[k].y : plan.attach[k].yh;
            std::vector<Vertex> cand;
            for (Vertex c : subcubeVertices(v.cube)) {
                Vertex y = L.clone(c, layer);
                Vertex nx = y ^ bit(e);
                if (sameParity(y, ref) || forbidden.count(y) || forbidden.count(nx) || used.count(y) || used.count(nx)) continue;
                if (!Gp.hasEdge(y, nx)) continue;
                cand.push_back(y);
            }
            if (cand.empty()) return false;
            Vertex y = rng.pick(cand);
            Vertex nx = y ^ bit(e);
            used.insert(y);
            used.insert(nx);
            tr.push_back(y);
            tr.push_back(nx);
            x = nx;
        }
        plan.transitions[h] = std::move(tr);
        return true;
    }
};

}  // namespace

SkeletonResult buildSkeleton(const ContractionTree& tau, const LayerDecomposition& L, ExternalSkeleton& es,
                             const SubgraphQn& Gp, const std::vector<Vertex>& forbidden, const SkeletonParams& p,
                             const NodeCheck& check) {
    SkeletonResult res;
    if (static_cast<int>(es.plan.size()) != tau.size()) throw std::invalid_argument("buildSkeleton: plan size differs");
    if (tau.t > 1) {
        TransitionPicker T{tau, L, Gp, {forbidden.begin(), forbidden.end()}, Rng(p.seed, "skeleton")};
        T.forbidden.insert(es.vertices.begin(), es.vertices.end());
        for (Vertex x : {es.tie.x1, es.tie.x1h, es.tie.yt, es.tie.yth}) T.forbidden.insert(x);
        for (int i = 0; i < tau.size(); ++i) {
            if (!tau.nodes[i].atomic()) continue;
            bool done = false;
            for (int attempt = 0; attempt < std::max(1, p.candidatesPerNode) && !done; ++attempt) {
                std::unordered_set<Vertex> used;
                NodePlan& plan = es.plan[i];
                done = T.pick(i, 0, plan, es.tie, used) && T.pick(i, 1, plan, es.tie, used);
                if (done && check && !check(i, es)) done = false;
            }
            if (!done) {
                res.failedNode = i;
                res.failure = "no admissible crossing edges for the transitions of v" + std::to_string(i);
                return res;
            }
        }
    } else {
        for (auto& plan : es.plan) plan.transitions = {};
        if (check)
            for (int i = 0; i < tau.size(); ++i)
                if (tau.nodes[i].atomic() && !check(i, es)) {
                    res.failedNode = i;
                    res.failure = "node check rejected v" + std::to_string(i);
                    return res;
                }
    }
    SkeletonWalker W{tau, L, es, {}, {}};
    W.segs.reserve(tau.size());
    for (int i = 0; i < tau.size(); ++i) W.segs.push_back(nodeSegments(tau, L, es, i));
    W.track(0, 0);
    W.sk.break1 = W.sk.size() - 2;
    W.track(0, 1);
    W.sk.break2 = W.sk.size() - 2;
    res.skeleton = std::move(W.sk);
    res.ok = true;
    return res;
}

CheckReport validateSkeleton(const ContractionTree& tau, const LayerDecomposition& L, const Skeleton& sk,
                             const SubgraphQn& Gp, const SkeletonCheckInput& in) {
    CheckReport rep;
    const int r = sk.size();
    if (r < 2) {
        rep.add("skeleton shorter than two vertices");
        return rep;
    }
    if (static_cast<int>(sk.link.size()) != r) {
        rep.add("link annotation size differs");
        return rep;
    }
    auto atomicNode = [&](Vertex x) -> int {
        Vertex y = L.project(x);
        if (y >= tau.nodeOf.size()) return -1;
        int i = tau.nodeOf[y];
        return i >= 0 && tau.nodes[i].atomic() ? i : -1;
    };
    // S1
    std::unordered_set<Vertex> seen;
    for (Vertex x : sk.list)
        if (!seen.insert(x).second) {
            rep.add("(S1) repeated vertex " + std::to_string(x));
            break;
        }
    // S2
    if (sk.link[r - 1] != LinkKind::Edge || !Gp.hasEdge(sk.list[r - 1], sk.list[0])) rep.add("(S2) {x_1, x_r} is not an edge of G'");
    // S3 and the path-link rules.
    for (int k = 0; k < r; ++k) {
        Vertex a = sk.list[k], b = sk.list[(k + 1) % r];
        int na = atomicNode(a), nb = atomicNode(b);
        bool sameSlice = na >= 0 && na == nb && sliceOfVertex(L, a) == sliceOfVertex(L, b);
        if (sk.link[k] == LinkKind::Path) {
            if (!sameSlice) rep.add("(S3) path link at " + std::to_string(k) + " leaves its slice");
            if (sk.link[(k + r - 1) % r] == LinkKind::Path) rep.add("(S3.5) vertex on two path links at " + std::to_string(k));
        } else {
            if (!Gp.hasEdge(a, b)) rep.add("(S3) edge link at " + std::to_string(k) + " missing from G'");
            if (nb >= 0 && sk.link[(k + 1) % r] != LinkKind::Path)
                rep.add("(S3) entering a cube molecule at " + std::to_string(k + 1) + " without a slice pair");
        }
    }
    // S4
    std::map<std::pair<int, int>, int> counts;
    for (Vertex x : sk.list) {
        int i = atomicNode(x);
        if (i >= 0) ++counts[{i, sliceOfVertex(L, x)}];
    }
    for (int i = 0; i < tau.size(); ++i) {
        if (!tau.nodes[i].atomic()) continue;
        for (int j = 0; j < tau.t; ++j) {
            auto it = counts.find({i, j});
            int c = it == counts.end() ? 0 : it->second;
            if (c % 2 != 0 || c < 4 || c > in.s4Bound)
                rep.add("(S4) v" + std::to_string(i) + " slice " + std::to_string(j) + " holds " + std::to_string(c));
        }
    }
    if (tau.t > 1) {
        auto it = counts.find({0, tau.t - 1});
        if (it == counts.end() || it->second != 4) rep.add("(S4) last root slice does not hold exactly 4");
    }
    // S5
    std::vector<int> same;
    for (int k = 0; k < r; ++k)
        if (sameParity(sk.list[k], sk.list[(k + 1) % r])) same.push_back(k);
    if (same.size() != 0 && same.size() != 2) {
        rep.add("(S5) " + std::to_string(same.size()) + " same-parity neighbours");
    } else {
        std::vector<int> breaks = same;
        if (breaks.empty() && sk.break1 >= 0 && sk.break2 >= 0) breaks = {sk.break1, sk.break2};
        if (breaks.size() == 2) {
            const int last = tau.t - 1;
            for (int k : breaks) {
                Vertex a = sk.list[k], b = sk.list[(k + 1) % r];
                if (atomicNode(a) != 0 || atomicNode(b) != 0 || sliceOfVertex(L, a) != last || sliceOfVertex(L, b) != last)
                    rep.add("(S5) break at " + std::to_string(k) + " outside the last root slice");
                if (tau.t > 1 && (L.layerOf(a) != firstLayerOf(L, last) || L.layerOf(b) != lastLayerOf(L, last)))
                    rep.add("(S5) break at " + std::to_string(k) + " does not span the last root slice");
            }
            if (sameParity(sk.list[breaks[0]], sk.list[breaks[1]])) rep.add("(S5) the two breaks start with equal parity");
        }
    }
    // S6
    for (const auto* set : {in.leftTips, in.rightTips, in.absorbed}) {
        if (!set) continue;
        for (Vertex x : *set)
            if (seen.count(x)) {
                rep.add("(S6) skeleton meets a tip or absorbed vertex " + std::to_string(x));
                break;
            }
    }
    if (in.external)
        for (Vertex x : *in.external)
            if (!seen.count(x)) {
                rep.add("(S6) external skeleton vertex missing " + std::to_string(x));
                break;
            }
    return rep;
}

}  // namespace hcube
