#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

#include "hcube/pipeline.hpp"
#include "hcube/rng.hpp"

namespace hcube {

namespace {

enum class ChildKind { Cube, Point, Inner };

struct Candidate {
    Vertex a = 0;  // endpoint inside the parent molecule
    int d = 0;     // direction from a to u
    Vertex u = 0;
    ChildKind kind = ChildKind::Cube;
    int cube = -1;
    double urgency = 0;
};

struct GNode {
    TreeNode node;
    NodePlan plan;
};

struct BudgetExceeded {};

class Grower {
public:
    Grower(const SubgraphQn& T, const std::vector<Subcube>& cubes, const LayerDecomposition& L, const SubgraphQn& Gp,
           const VertexMask* reservoir, const std::function<bool(Vertex)>& pointLeaf, const SliceCheck& check,
           const GrowParams& p, std::uint64_t stream)
        : T_(T), cubes_(cubes), L_(L), Gp_(Gp), reservoir_(reservoir), pointLeaf_(pointLeaf), check_(check), p_(p),
          m_(T.dim()), rng_(p.seed, stream) {
        cubeOf_.assign(std::size_t{1} << m_, -1);
        for (std::size_t c = 0; c < cubes.size(); ++c)
            for (Vertex v : subcubeVertices(cubes[c])) cubeOf_[v] = static_cast<int>(c);
        owner_.assign(std::size_t{1} << m_, -1);
        budget_ = p.checkBudget > 0 ? static_cast<std::size_t>(p.checkBudget) : 4000 * std::max<std::size_t>(1, cubes.size());
    }

    GrowResult run(const std::vector<int>& rootOrder) {
        GrowResult res;
        try {
            bool rooted = false;
            for (int c : rootOrder)
                if (growRoot(c)) {
                    rooted = true;
                    break;
                }
            if (!rooted) {
                res.failure = "no root molecule admits a coverable first choice";
                res.checks = checks_;
                return res;
            }
            hanging_ = true;
            res.hung = hang();
            res.hung += extendPoints();
        } catch (const BudgetExceeded&) {
            res.failure = "cover-check budget exhausted";
            res.checks = checks_;
            return res;
        }
        finalize(res);
        res.checks = checks_;
        res.ok = true;
        return res;
    }

private:
    const SubgraphQn& T_;
    const std::vector<Subcube>& cubes_;
    const LayerDecomposition& L_;
    const SubgraphQn& Gp_;
    const VertexMask* reservoir_;
    const std::function<bool(Vertex)>& pointLeaf_;
    const SliceCheck& check_;
    const GrowParams& p_;
    int m_;
    Rng rng_;
    std::vector<int> cubeOf_;
    std::vector<int> owner_;
    std::vector<GNode> nodes_;
    std::vector<Vertex> trail_;
    RootTie tie_;
    std::size_t checks_ = 0;
    std::size_t budget_ = 0;
    std::map<std::pair<Subcube, std::vector<VertexPair>>, bool> memo_;
    bool hanging_ = false;
    bool rooting_ = false;  // the root's first child must not be a point
    std::size_t backtracks_ = 0;

    bool inReservoir(Vertex v) const { return reservoir_ && !reservoir_->empty() && (*reservoir_)[v]; }

    // The answer depends on the molecule and the pairs only, so it is memoised.
    bool covers(const Subcube& c, const std::vector<VertexPair>& pairs) {
        auto key = std::make_pair(c, pairs);
        if (auto it = memo_.find(key); it != memo_.end()) return it->second;
        if (++checks_ > budget_) throw BudgetExceeded{};
        bool ok = check_(c, pairs);
        memo_.emplace(std::move(key), ok);
        return ok;
    }

    // --- ownership with undo ---------------------------------------------

    struct Mark {
        std::size_t nodes, trail;
    };
    Mark mark() const { return {nodes_.size(), trail_.size()}; }
    void undo(Mark mk) {
        while (trail_.size() > mk.trail) {
            owner_[trail_.back()] = -1;
            trail_.pop_back();
        }
        nodes_.resize(mk.nodes);
    }
    void claim(int node, const Subcube& c) {
        for (Vertex v : subcubeVertices(c)) {
            owner_[v] = node;
            trail_.push_back(v);
        }
    }

    int freeNeighbours(Vertex u, const Subcube& except) const {
        int k = 0;
        for (int d = 0; d < m_; ++d) {
            Vertex w = u ^ bit(d);
            if (T_.hasEdge(u, w) && owner_[w] < 0 && !except.contains(w)) ++k;
        }
        return k;
    }

    std::vector<Candidate> candidates(const Subcube& c, const std::vector<Vertex>& excluded) const {
        std::vector<Candidate> out;
        auto push = [&](Candidate cd) {
            out.push_back(cd);
        };
        for (Vertex a : subcubeVertices(c)) {
            if (std::find(excluded.begin(), excluded.end(), a) != excluded.end()) continue;
            for (int d = 0; d < m_; ++d) {
                if ((c.dirs >> d) & 1) continue;
                Vertex u = a ^ bit(d);
                if (!T_.hasEdge(a, u) || owner_[u] >= 0 || inReservoir(u)) continue;
                Candidate cd{a, d, u, ChildKind::Cube, cubeOf_[u], 0};
                if (cd.cube >= 0) {
                    int f = 0;
                    for (Vertex w : subcubeVertices(cubes_[cd.cube])) f += freeNeighbours(w, cubes_[cd.cube]);
                    cd.urgency = 1.0 + 1.0 / (1.0 + f);
                    push(cd);
                    continue;
                }
                const int f = freeNeighbours(u, c);
                cd.urgency = 2.0 / (1.0 + f);
                if (pointLeaf_ && pointLeaf_(u) && !rooting_) {
                    // Terminal, so only urgent when nothing else can reach u.
                    Candidate pt = cd;
                    pt.kind = ChildKind::Point;
                    if (f > 0) pt.urgency = 0.2;
                    else pt.urgency = 3.0;
                    push(pt);
                }
                if (f > 0 && viable(u, {})) {
                    cd.kind = ChildKind::Inner;
                    push(cd);
                }
            }
        }
        return out;
    }

    // An inner vertex needs a continuation: a free molecule or a point leaf
    // next to it that is not among the blocked vertices.
    bool viable(Vertex u, const std::vector<Vertex>& blocked) const {
        for (int d = 0; d < m_; ++d) {
            const Vertex w = u ^ bit(d);
            if (!T_.hasEdge(u, w) || owner_[w] >= 0 || inReservoir(w)) continue;
            if (std::find(blocked.begin(), blocked.end(), w) != blocked.end()) continue;
            if (cubeOf_[w] >= 0 || (pointLeaf_ && pointLeaf_(w))) return true;
        }
        return false;
    }

    std::vector<Vertex> footprint(const Candidate& c) const {
        if (c.cube >= 0) return subcubeVertices(cubes_[c.cube]);
        return {c.u};
    }

    bool paired(Vertex a, Vertex b) const { return L_.layerOf(a) / 2 == L_.layerOf(b) / 2; }

    // (z, w, zh, wh) on the clones of a, with z of parity other than prevParity.
    std::vector<ConnectionSequence> quads(Vertex a, int prevParity) {
        std::vector<Vertex> cl = L_.clones(a);
        std::vector<ConnectionSequence> out;
        for (Vertex z : cl) {
            if (parity(z) == prevParity) continue;
            for (Vertex zh : cl) {
                if (sameParity(zh, z)) continue;
                for (Vertex w : cl) {
                    if (w == zh || sameParity(w, z)) continue;
                    if (p_.pairedLayers && !paired(z, w)) continue;
                    for (Vertex wh : cl)
                        if (wh != z && !sameParity(wh, w) && (!p_.pairedLayers || paired(zh, wh)))
                            out.push_back({z, w, zh, wh});
                }
            }
        }
        rng_.shuffle(out);
        return out;
    }

    static std::vector<VertexPair> pairsOf(Vertex x, Vertex y, Vertex xh, Vertex yh,
                                           const std::vector<ConnectionSequence>& attach) {
        std::vector<VertexPair> out;
        Vertex cur = x, curh = xh;
        for (const auto& q : attach) {
            out.push_back({cur, q.x});
            out.push_back({curh, q.xh});
            cur = q.y;
            curh = q.yh;
        }
        out.push_back({cur, y});
        out.push_back({curh, yh});
        return out;
    }

    std::vector<VertexPair> nodePairs(int i, const std::vector<ConnectionSequence>& attach) const {
        if (i == 0) return pairsOf(tie_.x1, tie_.yt, tie_.x1h, tie_.yth, attach);
        const auto& s = nodes_[i].plan.seq;
        return pairsOf(s.x, s.y, s.xh, s.yh, attach);
    }

    int startParity(int i) const { return parity(i == 0 ? tie_.x1 : nodes_[i].plan.seq.x); }

    // A child of kind Point must be coverable on its own column.
    bool childOk(const Candidate& c, const ConnectionSequence& q) {
        if (c.kind != ChildKind::Point) return true;
        ConnectionSequence s = q.shifted(L_.lift(c.d));
        return covers(Subcube{c.u, 0}, {{s.x, s.y}, {s.xh, s.yh}});
    }

    int addChild(int parent, const Candidate& c, const ConnectionSequence& q, int at) {
        GNode g;
        g.node.kind = c.kind == ChildKind::Inner ? NodeKind::Inner : NodeKind::Atomic;
        g.node.cube = c.kind == ChildKind::Cube ? cubes_[c.cube] : Subcube{c.u, 0};
        g.node.parent = parent;
        g.node.parentDir = c.d;
        g.node.parentAttach = c.u;
        g.plan.seq = q.shifted(L_.lift(c.d));
        const int id = static_cast<int>(nodes_.size());
        nodes_.push_back(std::move(g));
        TreeNode& pn = nodes_[parent].node;
        pn.children.insert(pn.children.begin() + at, id);
        pn.childDirs.insert(pn.childDirs.begin() + at, c.d);
        pn.attach.insert(pn.attach.begin() + at, c.a);
        auto& pa = nodes_[parent].plan.attach;
        pa.insert(pa.begin() + at, q);
        claim(id, nodes_[id].node.cube);
        return id;
    }

    bool growChildren(int i) {
        // Indices stay valid: children only ever get appended behind i.
        // Inner children first, so their continuation is still free.
        std::vector<int> kids = nodes_[i].node.children;
        std::stable_partition(kids.begin(), kids.end(), [&](int c) { return nodes_[c].node.kind == NodeKind::Inner; });
        for (int c : kids)
            if (!grow(c)) return false;
        return true;
    }

    // Choices for an atomic node whose own sequence is fixed.
    bool growAtomic(int i, int cap, const std::vector<Vertex>& excluded) {
        const Subcube cube = nodes_[i].node.cube;
        rooting_ = i == 0;
        std::vector<Candidate> cand = candidates(cube, excluded);
        rooting_ = false;
        using Set = std::vector<int>;
        std::vector<std::pair<double, Set>> sets;
        for (std::size_t a = 0; a < cand.size(); ++a) {
            if (cap >= 1) sets.push_back({cand[a].urgency, {static_cast<int>(a)}});
            if (cap < 2) continue;
            for (std::size_t b = 0; b < cand.size(); ++b) {
                const auto &A = cand[a], &B = cand[b];
                if (A.a == B.a || A.u == B.u || (A.cube >= 0 && A.cube == B.cube)) continue;
                sets.push_back({A.urgency + B.urgency + 4.0, {static_cast<int>(a), static_cast<int>(b)}});
            }
        }
        for (auto& s : sets) s.first += 0.5 * rng_.uniform();
        std::stable_sort(sets.begin(), sets.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
        sets.push_back({0, {}});

        const std::size_t start = checks_;
        int subtreeFailures = 0;
        for (const auto& [score, set] : sets) {
            if (!set.empty() && checks_ - start > static_cast<std::size_t>(p_.checksPerNode)) continue;
            // All quadruple combinations for this ordered child set.
            std::vector<std::vector<ConnectionSequence>> qs;
            std::vector<ConnectionSequence> chosen;
            bool found = false;
            auto search = [&](auto&& self, std::size_t k, int prev) -> void {
                if (found) return;
                if (k == set.size()) {
                    if (covers(cube, nodePairs(i, chosen))) found = true;
                    return;
                }
                for (const auto& q : quads(cand[set[k]].a, prev)) {
                    if (!childOk(cand[set[k]], q)) continue;
                    chosen.push_back(q);
                    self(self, k + 1, parity(q.y));
                    if (found) return;
                    chosen.pop_back();
                }
            };
            if (set.size() == 2) {
                const auto &A = cand[set[0]], &B = cand[set[1]];
                if (A.kind == ChildKind::Inner && !viable(A.u, footprint(B))) continue;
                if (B.kind == ChildKind::Inner && !viable(B.u, footprint(A))) continue;
            }
            search(search, 0, startParity(i));
            if (!found) continue;
            Mark mk = mark();
            for (std::size_t k = 0; k < set.size(); ++k) addChild(i, cand[set[k]], chosen[k], static_cast<int>(k));
            if (growChildren(i)) return true;
            undoChildren(i, mk);
            if (++subtreeFailures >= 3) return false;
        }
        return false;
    }

    void undoChildren(int i, Mark mk) {
        if (++backtracks_ > static_cast<std::size_t>(p_.maxBacktracks)) throw BudgetExceeded{};
        undo(mk);
        nodes_[i].node.children.clear();
        nodes_[i].node.childDirs.clear();
        nodes_[i].node.attach.clear();
        nodes_[i].plan.attach.clear();
    }

    bool growInner(int i) {
        const Subcube own = nodes_[i].node.cube;
        const ConnectionSequence q = nodes_[i].plan.seq;  // (w_0, w_1, wh_0, wh_1)
        std::vector<Candidate> cand = candidates(own, {});
        for (auto& c : cand) {
            c.urgency += c.kind == ChildKind::Cube ? 2.0 : c.kind == ChildKind::Point ? 1.0 : 0.0;
            c.urgency += 0.5 * rng_.uniform();
        }
        std::stable_sort(cand.begin(), cand.end(), [](const auto& x, const auto& y) { return x.urgency > y.urgency; });
        int failures = 0;
        for (const auto& c : cand) {
            if (c.kind == ChildKind::Inner && !viable(c.u, {})) continue;
            if (!childOk(c, q)) continue;
            Mark mk = mark();
            addChild(i, c, q, 0);
            if (growChildren(i)) return true;
            undoChildren(i, mk);
            if (++failures >= 3) return false;
        }
        return false;
    }

    bool grow(int i) {
        const TreeNode& v = nodes_[i].node;
        if (v.kind == NodeKind::Inner) return growInner(i);
        if (v.cube.dim() == 0) return true;  // point leaf, already checked
        return growAtomic(i, hanging_ ? p_.maxAtomicChildren : std::min(p_.maxAtomicChildren, p_.growChildren), {v.parentAttach});
    }

    bool growRoot(int c) {
        if (owner_[cubes_[c].base] >= 0) return false;
        const Subcube cube = cubes_[c];
        const int e = L_.crossingDir(L_.layers() - 1);
        std::vector<Vertex> verts = subcubeVertices(cube);
        std::vector<std::pair<Vertex, Vertex>> ties;  // columns of x1 and x1h
        for (Vertex a : verts)
            for (Vertex b : verts)
                if (a != b && distance(a, b) == 1 && !inReservoir(a) && !inReservoir(b)) ties.push_back({a, b});
        rng_.shuffle(ties);
        for (auto [a, b] : ties) {
            RootTie t{L_.clone(a, 0), L_.clone(b, 0), 0, 0};
            t.yt = t.x1h ^ bit(e);
            t.yth = t.x1 ^ bit(e);
            if (!Gp_.hasEdge(t.x1, t.yth) || !Gp_.hasEdge(t.x1h, t.yt)) continue;
            Mark mk = mark();
            GNode g;
            g.node.cube = cube;
            nodes_.push_back(std::move(g));
            claim(0, cube);
            tie_ = t;
            const bool grown = growAtomic(0, std::max(1, p_.maxRootChildren), {a, b}) && !nodes_[0].node.children.empty();
            if (grown) return true;
            undo(mk);
        }
        return false;
    }

    // Attaches unowned vertices to nodes with spare capacity.
    std::size_t hang() {
        std::size_t hung = 0;
        for (int round = 0; round < p_.hangRounds; ++round) {
            const std::size_t before = hung;
            std::vector<int> order(nodes_.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
            rng_.shuffle(order);
            for (int i : order) {
                TreeNode& v = nodes_[i].node;
                if (v.kind != NodeKind::Atomic || v.cube.dim() == 0) continue;
                const int cap = i == 0 ? std::max(1, p_.maxRootChildren) : p_.maxAtomicChildren;
                if (v.p() >= cap) continue;
                std::vector<Vertex> excluded = v.attach;
                if (i == 0) {
                    excluded.push_back(L_.project(tie_.x1));
                    excluded.push_back(L_.project(tie_.x1h));
                } else {
                    excluded.push_back(v.parentAttach);
                }
                const std::size_t claimed = trail_.size();
                if (hangAt(i, excluded)) hung += trail_.size() - claimed;
            }
            if (hung == before) break;
        }
        return hung;
    }

    // A point leaf next to an unowned vertex turns inner and grows on.
    std::size_t extendPoints() {
        std::size_t gained = 0;
        for (bool progress = true; progress;) {
            progress = false;
            for (Vertex w = 0; w < owner_.size(); ++w) {
                if (owner_[w] >= 0 || inReservoir(w)) continue;
                for (int d = 0; d < m_ && owner_[w] < 0; ++d) {
                    const Vertex u = w ^ bit(d);
                    if (!T_.hasEdge(u, w) || owner_[u] <= 0) continue;
                    const int j = owner_[u];
                    TreeNode& v = nodes_[j].node;
                    if (v.kind != NodeKind::Atomic || v.cube.dim() != 0) continue;
                    v.kind = NodeKind::Inner;
                    backtracks_ = 0;
                    const std::size_t claimed = trail_.size();
                    if (growInner(j)) {
                        gained += trail_.size() - claimed;
                        progress = true;
                    } else {
                        nodes_[j].node.kind = NodeKind::Atomic;
                    }
                }
            }
        }
        return gained;
    }

    bool hangAt(int i, const std::vector<Vertex>& excluded) {
        std::vector<Candidate> cand = candidates(nodes_[i].node.cube, excluded);
        std::sort(cand.begin(), cand.end(), [](const auto& x, const auto& y) { return x.urgency > y.urgency; });
        const Subcube cube = nodes_[i].node.cube;
        const std::size_t start = checks_;
        for (const auto& c : cand) {
            if (checks_ - start > static_cast<std::size_t>(p_.checksPerNode)) break;
            const int p = nodes_[i].node.p();
            for (int at = 0; at <= p; ++at) {
                std::vector<ConnectionSequence> att = nodes_[i].plan.attach;
                const int prev = at == 0 ? startParity(i) : parity(att[at - 1].y);
                for (const auto& q : quads(c.a, prev)) {
                    if (!childOk(c, q)) continue;
                    std::vector<ConnectionSequence> trial = att;
                    trial.insert(trial.begin() + at, q);
                    if (!covers(cube, nodePairs(i, trial))) continue;
                    Mark mk = mark();
                    const auto saved = nodes_[i];
                    int id = addChild(i, c, q, at);
                    if (grow(id)) return true;
                    undo(mk);
                    nodes_[i] = saved;
                }
            }
        }
        return false;
    }

    void finalize(GrowResult& res) {
        // Relabel in DFS preorder.
        std::vector<int> order, newId(nodes_.size(), -1);
        std::vector<int> stack{0};
        while (!stack.empty()) {
            int i = stack.back();
            stack.pop_back();
            newId[i] = static_cast<int>(order.size());
            order.push_back(i);
            const auto& ch = nodes_[i].node.children;
            for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
        }
        ContractionTree& tau = res.tree;
        tau.n = L_.n();
        tau.s = L_.s();
        tau.t = 1;
        tau.nodes.resize(order.size());
        res.es.plan.resize(order.size());
        tau.nodeOf.assign(std::size_t{1} << m_, -1);
        for (std::size_t k = 0; k < order.size(); ++k) {
            TreeNode v = nodes_[order[k]].node;
            if (v.parent >= 0) v.parent = newId[v.parent];
            for (int& c : v.children) c = newId[c];
            v.input = 0;
            for (Vertex x : subcubeVertices(v.cube)) tau.nodeOf[x] = static_cast<int>(k);
            if (v.kind == NodeKind::Atomic && v.cube.dim() == 0) ++res.pointLeaves;
            tau.nodes[k] = std::move(v);
            res.es.plan[k] = nodes_[order[k]].plan;
        }
        auto delta = deltaByRecursion(tau);
        for (int i = 0; i < tau.size(); ++i) tau.nodes[i].delta = delta[i];
        res.es.tie = tie_;
        std::set<Vertex> all;
        for (int i = 0; i < tau.size(); ++i) {
            const NodePlan& plan = res.es.plan[i];
            if (i > 0) all.insert({plan.seq.x, plan.seq.y, plan.seq.xh, plan.seq.yh});
            for (const auto& a : plan.attach) all.insert({a.x, a.y, a.xh, a.yh});
        }
        res.es.vertices.assign(all.begin(), all.end());
        for (int x : tau.nodeOf) res.unrepresented += x < 0;
    }
};

}  // namespace

GrowResult growTreeAndSkeleton(const SubgraphQn& Tstar, const std::vector<Subcube>& cubes, const LayerDecomposition& L,
                               const SubgraphQn& Gp, const VertexMask* reservoir,
                               const std::function<bool(Vertex)>& pointLeaf, const SliceCheck& check,
                               const GrowParams& p) {
    if (L.t() != 1) throw std::invalid_argument("growTreeAndSkeleton: needs one slice per molecule");
    if (Tstar.dim() != L.innerDim()) throw std::invalid_argument("growTreeAndSkeleton: T* lives on the wrong cube");
    if (!check) throw std::invalid_argument("growTreeAndSkeleton: a slice check is required");
    GrowResult best;
    best.failure = "no attempt";
    if (cubes.empty()) {
        best.failure = "no atomic root";
        return best;
    }
    std::size_t checks = 0;
    for (int a = 0; a < std::max(1, p.attempts); ++a) {
        Grower g(Tstar, cubes, L, Gp, reservoir, pointLeaf, check, p, tag("grow") + static_cast<std::uint64_t>(a));
        std::vector<int> roots(cubes.size());
        for (std::size_t c = 0; c < cubes.size(); ++c) roots[c] = static_cast<int>(c);
        Rng(p.seed, tag("grow-root") + static_cast<std::uint64_t>(a)).shuffle(roots);
        if (roots.size() > 8) roots.resize(8);
        GrowResult r = g.run(roots);
        checks += r.checks;
        r.attemptUsed = a;
        if (r.ok && (!best.ok || r.unrepresented < best.unrepresented)) best = std::move(r);
        else if (!best.ok) best.failure = r.failure;
        if (best.ok && best.unrepresented == 0) break;
    }
    best.checks = checks;
    return best;
}

}  // namespace hcube
