#include <algorithm>
#include <deque>
#include <stdexcept>

#include "hcube/pipeline.hpp"
#include "hcube/rng.hpp"

namespace hcube {

std::size_t ContractionTree::representedAtomic() const {
    std::size_t c = 0;
    for (const auto& v : nodes)
        if (v.atomic()) c += v.cube.size();
    return c;
}

namespace {

struct Contracted {
    int m = 0;                     // dimension of I
    std::vector<int> cubeOf;       // vertex -> cube index or -1
    std::vector<char> alive;       // vertex survives stripping and component filtering
    std::vector<int> group;        // vertex -> contracted id (cube id, or cubes + vertex)
    std::size_t stripped = 0;
    std::size_t droppedComponents = 0;
};

DirMask cubeDirsAt(const std::vector<Subcube>& cubes, const std::vector<int>& cubeOf, Vertex v) {
    int c = cubeOf[v];
    return c < 0 ? 0 : cubes[c].dirs;
}

Contracted prepare(const SubgraphQn& T, const std::vector<Subcube>& cubes, bool strip) {
    Contracted C;
    C.m = T.dim();
    const Vertex N = Vertex{1} << C.m;
    C.cubeOf.assign(N, -1);
    for (std::size_t i = 0; i < cubes.size(); ++i) {
        if (!cubes[i].canonical() || (cubes[i].base | cubes[i].dirs) >> C.m)
            throw std::invalid_argument("contractAndRoot: cube outside Q^{n-s}");
        for (Vertex v : subcubeVertices(cubes[i])) {
            if (C.cubeOf[v] >= 0) throw std::invalid_argument("contractAndRoot: cubes overlap");
            C.cubeOf[v] = static_cast<int>(i);
        }
    }
    auto nbrs = [&](Vertex v) { return T.adj(v) | cubeDirsAt(cubes, C.cubeOf, v); };
    C.alive.assign(N, 0);
    std::vector<int> deg(N, 0);
    for (Vertex v = 0; v < N; ++v) {
        deg[v] = std::popcount(nbrs(v));
        C.alive[v] = deg[v] > 0 || C.cubeOf[v] >= 0;
    }
    if (strip) {
        std::deque<Vertex> queue;
        for (Vertex v = 0; v < N; ++v)
            if (C.alive[v] && deg[v] <= 1) queue.push_back(v);
        while (!queue.empty()) {
            Vertex v = queue.front();
            queue.pop_front();
            if (!C.alive[v] || deg[v] > 1) continue;
            C.alive[v] = 0;
            ++C.stripped;
            for (int d : directionsOf(nbrs(v))) {
                Vertex u = v ^ bit(d);
                if (!C.alive[u]) continue;
                if (--deg[u] <= 1) queue.push_back(u);
            }
        }
    }
    // Components of what is left; keep those with a cube and something else.
    std::vector<int> comp(N, -1);
    int comps = 0;
    for (Vertex v = 0; v < N; ++v) {
        if (!C.alive[v] || comp[v] >= 0) continue;
        std::vector<Vertex> members{v};
        comp[v] = comps;
        for (std::size_t h = 0; h < members.size(); ++h) {
            Vertex x = members[h];
            for (int d : directionsOf(nbrs(x))) {
                Vertex u = x ^ bit(d);
                if (C.alive[u] && comp[u] < 0) {
                    comp[u] = comps;
                    members.push_back(u);
                }
            }
        }
        std::vector<int> in;
        bool loose = false;
        for (Vertex x : members) {
            if (C.cubeOf[x] < 0) loose = true;
            else if (std::find(in.begin(), in.end(), C.cubeOf[x]) == in.end()) in.push_back(C.cubeOf[x]);
        }
        bool keep = !in.empty() && (loose || in.size() > 1);
        if (!keep) {
            ++C.droppedComponents;
            for (Vertex x : members) C.alive[x] = 0;
        }
        ++comps;
    }
    C.group.assign(N, -1);
    const int nc = static_cast<int>(cubes.size());
    for (Vertex v = 0; v < N; ++v)
        if (C.alive[v]) C.group[v] = C.cubeOf[v] >= 0 ? C.cubeOf[v] : nc + static_cast<int>(v);
    return C;
}

// Working node before relabelling.
struct Work {
    NodeKind kind = NodeKind::Atomic;
    Subcube cube;
    int parent = -1;
    int parentDir = -1;
    Vertex parentAttach = 0;
    std::vector<int> children;
    std::vector<int> childDirs;
    std::vector<Vertex> attach;
    bool removed = false;
};

struct Builder {
    const SubgraphQn& T;
    const std::vector<Subcube>& cubes;
    const Contracted& C;
    const ContractParams& p;
    std::vector<Work> work;
    std::vector<int> workOf;  // contracted id -> work index
    int root = -1;

    Builder(const SubgraphQn& T_, const std::vector<Subcube>& cubes_, const Contracted& C_, const ContractParams& p_)
        : T(T_), cubes(cubes_), C(C_), p(p_) {}

    bool spareAdjacentPair(const Work& w, Vertex extra) const {
        std::vector<Vertex> spare;
        for (Vertex v : subcubeVertices(w.cube))
            if (v != extra && std::find(w.attach.begin(), w.attach.end(), v) == w.attach.end()) spare.push_back(v);
        for (std::size_t a = 0; a < spare.size(); ++a)
            for (std::size_t b = a + 1; b < spare.size(); ++b)
                if (distance(spare[a], spare[b]) == 1) return true;
        return false;
    }

    bool canTake(int wi, Vertex a) const {
        const Work& w = work[wi];
        int cap;
        if (w.kind == NodeKind::Inner) {
            cap = p.maxInnerChildren;
        } else {
            if (w.cube.dim() == 0) return false;  // point leaves stay leaves
            cap = wi == root ? p.maxRootChildren : p.maxAtomicChildren;
        }
        if (cap > 0 && static_cast<int>(w.children.size()) >= cap) return false;
        if (w.kind == NodeKind::Atomic && p.distinctAttach) {
            if (wi != root && a == w.parentAttach) return false;
            if (std::find(w.attach.begin(), w.attach.end(), a) != w.attach.end()) return false;
            if (wi == root && !spareAdjacentPair(w, a)) return false;
        }
        return true;
    }

    int nodeFor(int group, Vertex v) {
        int& slot = workOf[group];
        if (slot < 0) {
            Work w;
            if (C.cubeOf[v] >= 0) {
                w.cube = cubes[C.cubeOf[v]];
            } else {
                w.kind = NodeKind::Inner;
                w.cube = {v, 0};
            }
            slot = static_cast<int>(work.size());
            work.push_back(w);
        }
        return slot;
    }

    void link(int parent, int child, Vertex a, int dir) {
        work[parent].children.push_back(child);
        work[parent].childDirs.push_back(dir);
        work[parent].attach.push_back(a);
        work[child].parent = parent;
        work[child].parentDir = dir;
        work[child].parentAttach = a ^ bit(dir);
    }

    std::vector<std::pair<Vertex, int>> outEdges(const Work& w) const {
        std::vector<std::pair<Vertex, int>> out;
        for (Vertex a : subcubeVertices(w.cube))
            for (int d : directionsOf(T.adj(a))) {
                Vertex b = a ^ bit(d);
                if (C.alive[b] && C.group[b] != C.group[a]) out.push_back({a, d});
            }
        return out;
    }

    void dfs(Vertex rootVertex, Rng& rng) {
        workOf.assign(cubes.size() + (std::size_t{1} << C.m), -1);
        root = nodeFor(C.group[rootVertex], rootVertex);
        struct Frame {
            int node;
            std::vector<std::pair<Vertex, int>> edges;
            std::size_t next = 0;
        };
        std::vector<Frame> stack;
        auto push = [&](int wi) {
            Frame f{wi, outEdges(work[wi])};
            rng.shuffle(f.edges);
            stack.push_back(std::move(f));
        };
        push(root);
        while (!stack.empty()) {
            Frame& f = stack.back();
            if (f.next == f.edges.size()) {
                stack.pop_back();
                continue;
            }
            auto [a, d] = f.edges[f.next++];
            Vertex b = a ^ bit(d);
            if (workOf[C.group[b]] >= 0) continue;
            if (!canTake(f.node, a)) continue;
            int parent = f.node;
            int child = nodeFor(C.group[b], b);
            link(parent, child, a, d);
            push(child);
        }
    }

    void detach(int wi) {
        Work& w = work[wi];
        w.removed = true;
        Work& par = work[w.parent];
        for (std::size_t k = 0; k < par.children.size(); ++k)
            if (par.children[k] == wi) {
                par.children.erase(par.children.begin() + k);
                par.childDirs.erase(par.childDirs.begin() + k);
                par.attach.erase(par.attach.begin() + k);
                break;
            }
    }

    std::size_t finishLeaves(Rng& rng) {
        std::size_t points = 0;
        bool changed = true;
        while (changed) {
            changed = false;
            for (std::size_t i = 0; i < work.size(); ++i) {
                Work& w = work[i];
                if (w.removed || w.kind != NodeKind::Inner || !w.children.empty()) continue;
                if (p.pointLeaf && p.pointLeaf(w.cube.base)) {
                    w.kind = NodeKind::Atomic;
                    ++points;
                } else {
                    detach(static_cast<int>(i));
                    changed = true;
                }
            }
        }
        if (!p.pointLeaf) return points;
        std::vector<char> represented(std::size_t{1} << C.m, 0);
        for (const auto& w : work)
            if (!w.removed)
                for (Vertex v : subcubeVertices(w.cube)) represented[v] = 1;
        std::vector<int> owner(std::size_t{1} << C.m, -1);
        for (std::size_t i = 0; i < work.size(); ++i)
            if (!work[i].removed)
                for (Vertex v : subcubeVertices(work[i].cube)) owner[v] = static_cast<int>(i);
        std::vector<Vertex> loose;
        for (Vertex v = 0; v < represented.size(); ++v)
            if (!represented[v] && T.degree(v) > 0) loose.push_back(v);
        rng.shuffle(loose);
        for (Vertex v : loose) {
            std::vector<int> dirs = directionsOf(T.adj(v));
            rng.shuffle(dirs);
            for (int d : dirs) {
                Vertex u = v ^ bit(d);
                int wi = owner[u];
                if (wi < 0 || !canTake(wi, u) || !p.pointLeaf(v)) continue;
                Work leaf;
                leaf.cube = {v, 0};
                int li = static_cast<int>(work.size());
                work.push_back(leaf);
                link(wi, li, u, d);
                owner[v] = li;
                ++points;
                break;
            }
        }
        return points;
    }
};

ContractionTree relabel(const Builder& B, int n, int s, int t) {
    ContractionTree tau;
    tau.n = n;
    tau.s = s;
    tau.t = t;
    tau.nodeOf.assign(std::size_t{1} << (n - s), -1);
    std::vector<int> label(B.work.size(), -1);
    std::vector<int> order;
    std::vector<int> stack{B.root};
    while (!stack.empty()) {
        int w = stack.back();
        stack.pop_back();
        label[w] = static_cast<int>(order.size());
        order.push_back(w);
        const auto& ch = B.work[w].children;
        for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
    }
    for (int w : order) {
        const Work& src = B.work[w];
        TreeNode v;
        v.kind = src.kind;
        v.cube = src.cube;
        v.parent = src.parent < 0 ? -1 : label[src.parent];
        v.parentDir = src.parentDir;
        v.parentAttach = src.parentAttach;
        for (int c : src.children) v.children.push_back(label[c]);
        v.childDirs = src.childDirs;
        v.attach = src.attach;
        for (Vertex x : subcubeVertices(v.cube)) tau.nodeOf[x] = static_cast<int>(tau.nodes.size());
        tau.nodes.push_back(std::move(v));
    }
    auto delta = deltaByRecursion(tau);
    for (int i = 0; i < tau.size(); ++i) tau.nodes[i].delta = delta[i];
    for (int i = 0; i < tau.size(); ++i) {
        const TreeNode& v = tau.nodes[i];
        for (int k = 0; k < v.p(); ++k)
            tau.nodes[v.children[k]].input = v.atomic() ? (v.input + k) % t : v.input;
    }
    return tau;
}

}  // namespace

ContractResult contractAndRoot(const SubgraphQn& Tstar, const std::vector<Subcube>& cubes, int s,
                               const ContractParams& p) {
    ContractResult res;
    if (p.t < 1) throw std::invalid_argument("contractAndRoot: t must be positive");
    const int m = Tstar.dim();
    Contracted C = prepare(Tstar, cubes, p.stripLeaves);
    res.strippedVertices = C.stripped;
    res.droppedComponents = C.droppedComponents;

    // Root candidates: cubes of the component with most cubes.
    std::vector<Vertex> rootCandidates;
    if (p.root) {
        Vertex r = *p.root;
        if (r >> m || C.cubeOf[r] < 0 || !C.alive[r]) {
            res.failure = "requested root is not in a kept cube";
            return res;
        }
        rootCandidates.push_back(r);
    } else {
        std::vector<int> comp(std::size_t{1} << m, -1);
        std::vector<std::vector<Vertex>> compCubes;
        for (Vertex v = 0; v < comp.size(); ++v) {
            if (!C.alive[v] || comp[v] >= 0) continue;
            int id = static_cast<int>(compCubes.size());
            compCubes.emplace_back();
            std::vector<Vertex> members{v};
            comp[v] = id;
            for (std::size_t h = 0; h < members.size(); ++h) {
                Vertex x = members[h];
                if (C.cubeOf[x] >= 0 && cubes[C.cubeOf[x]].base == x) compCubes[id].push_back(x);
                for (int d : directionsOf(Tstar.adj(x) | cubeDirsAt(cubes, C.cubeOf, x))) {
                    Vertex u = x ^ bit(d);
                    if (C.alive[u] && comp[u] < 0) {
                        comp[u] = id;
                        members.push_back(u);
                    }
                }
            }
        }
        std::size_t best = 0;
        for (std::size_t i = 1; i < compCubes.size(); ++i)
            if (compCubes[i].size() > compCubes[best].size()) best = i;
        if (!compCubes.empty()) rootCandidates = compCubes[best];
    }
    if (rootCandidates.empty()) {
        res.failure = "no atomic vertex survives contraction";
        return res;
    }

    std::optional<ContractionTree> bestTree;
    std::size_t bestScore = 0;
    for (int r = 0; r < std::max(1, p.restarts); ++r) {
        Rng rng(p.seed, tag("contract") + static_cast<std::uint64_t>(r));
        Builder B(Tstar, cubes, C, p);
        Vertex rv = rootCandidates[rng.below(rootCandidates.size())];
        B.dfs(rv, rng);
        std::size_t points = B.finishLeaves(rng);
        ContractionTree tau = relabel(B, m + s, s, p.t);
        std::size_t score = tau.representedAtomic();
        if (!bestTree || score > bestScore) {
            bestTree = std::move(tau);
            bestScore = score;
            res.restartUsed = r;
            res.pointLeaves = points;
        }
    }
    res.tree = std::move(*bestTree);
    res.ok = true;
    return res;
}

std::vector<int> deltaByRecursion(const ContractionTree& tau) {
    std::vector<int> delta(tau.size(), 0);
    // Labels are a DFS preorder, so children carry larger labels.
    for (int i = tau.size() - 1; i >= 0; --i) {
        const TreeNode& v = tau.nodes[i];
        int sum = 0;
        for (int c : v.children) sum += delta[c];
        delta[i] = v.atomic() ? sum : v.p() + 1 + sum;
    }
    return delta;
}

std::vector<int> deltaByTraversal(const ContractionTree& tau) {
    std::vector<int> delta(tau.size(), 0);
    if (tau.nodes.empty()) return delta;
    std::vector<int> entry(tau.size(), 0);
    int visits = 0;
    struct Frame {
        int node;
        std::size_t next;
    };
    std::vector<Frame> stack{{0, 0}};
    entry[0] = visits;
    if (!tau.nodes[0].atomic()) ++visits;
    while (!stack.empty()) {
        Frame& f = stack.back();
        const TreeNode& v = tau.nodes[f.node];
        if (f.next < v.children.size()) {
            int c = v.children[f.next++];
            entry[c] = visits;
            if (!tau.nodes[c].atomic()) ++visits;
            stack.push_back({c, 0});
            continue;
        }
        delta[f.node] = visits - entry[f.node];
        stack.pop_back();
        if (!stack.empty() && !tau.nodes[stack.back().node].atomic()) ++visits;  // back at an inner vertex
    }
    return delta;
}

CheckReport validateContractionTree(const ContractionTree& tau, int innerDegreeCap) {
    CheckReport rep;
    if (tau.nodes.empty()) {
        rep.add("empty tree");
        return rep;
    }
    const TreeNode& root = tau.nodes[0];
    if (root.parent != -1) rep.add("root has a parent");
    if (!root.atomic() || root.cube.dim() == 0) rep.add("root is not a cube");
    // Preorder check.
    std::vector<int> order;
    std::vector<int> stack{0};
    std::vector<char> seen(tau.size(), 0);
    while (!stack.empty()) {
        int i = stack.back();
        stack.pop_back();
        if (i < 0 || i >= tau.size() || seen[i]) {
            rep.add("child lists do not form a tree");
            return rep;
        }
        seen[i] = 1;
        order.push_back(i);
        const auto& ch = tau.nodes[i].children;
        for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
    }
    if (static_cast<int>(order.size()) != tau.size()) rep.add("tree does not reach every node");
    for (int i = 0; i < static_cast<int>(order.size()); ++i)
        if (order[i] != i) {
            rep.add("labels are not in DFS discovery order at " + std::to_string(i));
            break;
        }
    auto delta = deltaByRecursion(tau);
    std::vector<int> owner(std::size_t{1} << (tau.n - tau.s), -1);
    for (int i = 0; i < tau.size(); ++i) {
        const TreeNode& v = tau.nodes[i];
        const std::string at = " at v" + std::to_string(i);
        if (v.childDirs.size() != v.children.size() || v.attach.size() != v.children.size())
            rep.add("child bookkeeping sizes differ" + at);
        if (!v.atomic() && v.cube.dim() != 0) rep.add("inner vertex with a cube" + at);
        if (v.leaf() && !v.atomic()) rep.add("inner leaf" + at);
        if (v.delta != delta[i]) rep.add("Delta differs from the recursion" + at);
        for (Vertex x : subcubeVertices(v.cube)) {
            if (owner[x] >= 0) rep.add("vertex represented twice" + at);
            owner[x] = i;
            if (tau.nodeOf.size() > x && tau.nodeOf[x] != i) rep.add("nodeOf disagrees" + at);
        }
        if (!v.atomic() && innerDegreeCap > 0 && v.p() + 1 > innerDegreeCap) rep.add("inner degree above cap" + at);
        if (i == 0 && v.input != 0) rep.add("root input slice is not the first");
        for (int k = 0; k < v.p() && k < static_cast<int>(v.attach.size()); ++k) {
            int c = v.children[k];
            const TreeNode& u = tau.nodes[c];
            if (u.parent != i) rep.add("parent back-reference broken" + at);
            int f = v.childDirs[k];
            Vertex a = v.attach[k];
            if (!v.cube.contains(a)) rep.add("attachment outside C(v)" + at);
            if (u.parentDir != f || u.parentAttach != (a ^ bit(f))) rep.add("child edge mismatch" + at);
            if (!u.cube.contains(a ^ bit(f))) rep.add("child endpoint outside its node" + at);
            int want = v.atomic() ? (v.input + k) % tau.t : v.input;
            if (u.input != want) rep.add("b(i) law fails at child " + std::to_string(c));
        }
    }
    return rep;
}

}  // namespace hcube
