#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <chrono>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "hcube/pipeline.hpp"
#include "hcube/random_models.hpp"
#include "hcube/rng.hpp"

namespace hcube {

// ---------------------------------------------------------------------------
// Assembly and absorption

AssemblyResult assembleCycle(const Skeleton& sk, const std::vector<SliceCoverRecord>& covers) {
    AssemblyResult res;
    const int r = sk.size();
    if (r == 0) {
        res.failure = "empty skeleton";
        return res;
    }
    // Unordered endpoint pair -> path.
    std::map<std::pair<Vertex, Vertex>, const std::vector<Vertex>*> byPair;
    for (const auto& rec : covers) {
        if (rec.system.paths.size() != rec.input.pairs.size())
            throw std::logic_error("assembleCycle: cover of v" + std::to_string(rec.node) + " has the wrong path count");
        for (std::size_t k = 0; k < rec.input.pairs.size(); ++k) {
            auto [a, b] = rec.input.pairs[k];
            byPair[{std::min(a, b), std::max(a, b)}] = &rec.system.paths[k];
        }
    }
    std::vector<Vertex>& out = res.cycle;
    for (int k = 0; k < r; ++k) {
        Vertex a = sk.list[k], b = sk.list[(k + 1) % r];
        out.push_back(a);
        if (sk.link[k] != LinkKind::Path) continue;
        auto it = byPair.find({std::min(a, b), std::max(a, b)});
        if (it == byPair.end()) {
            res.failure = "no cover path for the slice pair at position " + std::to_string(k);
            return res;
        }
        const auto& path = *it->second;
        if (path.size() < 2) throw std::logic_error("assembleCycle: degenerate path at position " + std::to_string(k));
        if (path.front() == a && path.back() == b) {
            out.insert(out.end(), path.begin() + 1, path.end() - 1);
        } else if (path.front() == b && path.back() == a) {
            out.insert(out.end(), path.rbegin() + 1, path.rend() - 1);
        } else {
            throw std::logic_error("assembleCycle: endpoint mismatch at position " + std::to_string(k));
        }
    }
    std::unordered_set<Vertex> seen;
    for (Vertex v : out)
        if (!seen.insert(v).second) {
            res.failure = "assembled walk repeats vertex " + std::to_string(v);
            return res;
        }
    res.ok = true;
    return res;
}

CheckReport validateAlmostCycle(int n, const std::vector<Vertex>& cycle, const SubgraphQn& Gp,
                                const std::vector<Absorber>& absorbers) {
    CheckReport rep;
    const std::size_t N = std::size_t{1} << n;
    std::vector<char> mark(N, 0);
    for (Vertex v : cycle) {
        if (v >= N) {
            rep.add("(HC1) vertex outside Q^n");
            return rep;
        }
        if (mark[v]) rep.add("(HC1) repeated vertex " + std::to_string(v));
        mark[v] = 1;
    }
    if (cycle.size() >= 3) {
        for (std::size_t k = 0; k < cycle.size(); ++k)
            if (!Gp.hasEdge(cycle[k], cycle[(k + 1) % cycle.size()])) {
                rep.add("(HC1) step " + std::to_string(k) + " is not an edge of G'");
                break;
            }
    } else {
        rep.add("(HC1) fewer than three vertices");
    }
    std::size_t outside = 0;
    for (const auto& a : absorbers) {
        for (Vertex v : {a.u, a.pair.y}) {
            if (v >= N || mark[v]) rep.add("(HC2) absorbed vertex or tip " + std::to_string(v) + " meets the cycle or repeats");
            else mark[v] = 2;
            ++outside;
        }
    }
    if (cycle.size() + outside != N) rep.add("(HC2) cycle, tips and absorbed vertices do not partition Q^n");
    std::unordered_map<Vertex, std::size_t> pos;
    for (std::size_t k = 0; k < cycle.size(); ++k) pos[cycle[k]] = k;
    for (const auto& a : absorbers) {
        auto i = pos.find(a.pair.zPrime), j = pos.find(a.pair.z);
        bool on = i != pos.end() && j != pos.end();
        if (on) {
            std::size_t d = i->second > j->second ? i->second - j->second : j->second - i->second;
            on = d == 1 || d == cycle.size() - 1;
        }
        if (!on) rep.add("(HC3) absorbed edge of " + std::to_string(a.u) + " not on the cycle");
    }
    return rep;
}

std::vector<Vertex> absorbAll(const std::vector<Vertex>& cycle, const std::vector<Absorber>& absorbers) {
    std::set<std::pair<Vertex, Vertex>> edges;
    for (const auto& a : absorbers) {
        Edge e = a.pair.absorbedEdge();
        if (!edges.insert({e.v, static_cast<Vertex>(e.dir)}).second)
            throw std::invalid_argument("absorbAll: two absorbers share the edge at " + std::to_string(e.v));
    }
    std::vector<Vertex> out = cycle;
    for (const auto& a : absorbers) out = spliceAbsorber(out, a.pair);
    return out;
}

// ---------------------------------------------------------------------------
// Parameters and inputs

const char* pipelineModeName(PipelineMode m) { return m == PipelineMode::Dense ? "dense" : "hitting"; }

const char* stageName(Stage s) {
    switch (s) {
        case Stage::Input: return "input";
        case Stage::Tree: return "tree";
        case Stage::Tiling: return "tiling";
        case Stage::Bondedness: return "bondedness";
        case Stage::Contraction: return "contraction";
        case Stage::ExternalSkeleton: return "external-skeleton";
        case Stage::Absorbers: return "absorbers";
        case Stage::Skeleton: return "skeleton";
        case Stage::Covers: return "covers";
        case Stage::Assembly: return "assembly";
        case Stage::Absorption: return "absorption";
        case Stage::Verification: return "verification";
        case Stage::Done: return "done";
    }
    return "?";
}

std::vector<std::string> PipelineParams::warnings() const {
    std::vector<std::string> w;
    const int q = sliceLength();
    const int t = (1 << s) / std::max(1, q);
    if (t < 10) w.push_back("t = " + std::to_string(t) + " is below the slice-cover minimum 10; slice covers use exhaustive search");
    if (q < 20) w.push_back("q = " + std::to_string(q) + " is below 20; inner vertices take at most " +
                            std::to_string(std::max(0, (q - 2) / 2)) + " children");
    if (t == 1) w.push_back("t = 1: every molecule is one slice, children share it and no slice transitions are made");
    if (ell < 100) w.push_back("ell = " + std::to_string(ell) + ": atom path systems come from the exact solver");
    if (mode == PipelineMode::Hitting) w.push_back("hitting mode reports U, robustness and goodness and then runs the dense stages");
    return w;
}

SubgraphQn PipelineInput::all() const {
    SubgraphQn g = H;
    for (const auto& part : G) g = graphUnion(g, part);
    return g;
}

PipelineInput samplePipelineInput(int n, double p, std::uint64_t seed) {
    PipelineInput in;
    in.H = sampleBinomial(n, p, seed);
    in.G.push_back(in.H);
    return in;
}

// ---------------------------------------------------------------------------
// End-to-end

namespace {

using Clock = std::chrono::steady_clock;

struct SliceKey {
    int node;
    int slice;
    auto operator<=>(const SliceKey&) const = default;
};

struct AbsorberState {
    std::map<SliceKey, std::vector<Vertex>> tips;
    std::map<SliceKey, std::vector<Vertex>> rpairs;  // flat, two per atom at most
    std::set<std::pair<int, int>> atomsWithR;        // (node, layer)
    std::vector<char> used;                          // tips and R-pair vertices
};

class Pipeline {
public:
    Pipeline(const PipelineInput& in, const PipelineParams& p) : in_(in), p_(p) {}

    PipelineResult run();

private:
    const PipelineInput& in_;
    const PipelineParams& p_;
    PipelineResult res_;
    Clock::time_point stageStart_;

    std::optional<LayerDecomposition> L_;
    SubgraphQn all_;
    VertexMask reservoir_;
    SubgraphQn Tstar_;
    std::vector<Subcube> cubes_;
    ContractionTree tau_;
    ExternalSkeleton es_;
    std::vector<char> skeletonMark_;
    AbsorberState abs_;
    std::vector<Absorber> absorbers_;
    std::vector<Vertex> Vabs_;
    Skeleton sk_;
    std::map<SliceKey, PathSystem> coverCache_;
    std::vector<SliceCoverRecord> covers_;

    void begin() { stageStart_ = Clock::now(); }

    bool finish(Stage s, bool ok, std::string detail) {
        double ms = std::chrono::duration<double, std::milli>(Clock::now() - stageStart_).count();
        res_.stages.push_back({s, ok, detail, ms});
        if (!ok) {
            res_.failedStage = s;
            res_.failure = std::string(stageName(s)) + ": " + detail;
        }
        return ok;
    }

    std::uint64_t seedFor(std::string_view purpose) const { return streamKey(p_.seed, tag(purpose)); }

    const LayerDecomposition& L() const { return *L_; }

    Slice sliceOf(int node, int slice) const {
        return Slice(L(), tau_.nodes[node].cube, slice * L().q(), L().q());
    }

    SliceCoverInput coverInput(int node, int slice) const {
        SliceCoverInput ci;
        ci.pairs = nodeSlicePairs(tau_, L(), es_, node, slice);
        if (auto it = abs_.tips.find({node, slice}); it != abs_.tips.end()) ci.L = it->second;
        if (auto it = abs_.rpairs.find({node, slice}); it != abs_.rpairs.end()) ci.R = it->second;
        return ci;
    }

    // Exact cover of one slice of an atomic molecule under the current plan.
    bool coverable(int node, int slice, bool cache) {
        SliceCoverInput ci = coverInput(node, slice);
        Slice sl = sliceOf(node, slice);
        ++res_.stats.coverCalls;
        PathSystemResult r;
        try {
            r = coverSliceExact(sl, all_, ci, p_.coverBudget);
        } catch (const std::invalid_argument&) {
            return false;
        }
        if (r.outcome != Outcome::Found) {
            return false;
        }
        if (cache) coverCache_[{node, slice}] = std::move(r.system);
        return true;
    }

    bool nodeCoverable(int node, bool cache) {
        if (!tau_.nodes[node].atomic()) return true;
        for (int j = 0; j < tau_.t; ++j)
            if (!coverable(node, j, cache)) return false;
        return true;
    }

    bool pointLeafAllowed(Vertex v) const {
        if (!reservoir_.empty() && reservoir_[v]) return false;
        const int layers = L().layers();
        const int mid = layers / 2 - 1;
        for (int i = 0; i + 1 < layers; ++i) {
            if (i == mid) continue;
            if (!all_.hasEdge(L().clone(v, i), L().clone(v, i + 1))) return false;
        }
        return true;
    }

    bool stageInput();
    bool stageTree();
    bool stageTiling();
    bool stageBondedness();
    bool stageContraction();
    bool stageGrowth();
    void markSkeleton() {
        skeletonMark_.assign(std::size_t{1} << p_.n, 0);
        for (Vertex x : es_.vertices) skeletonMark_[x] = 1;
        for (Vertex x : {es_.tie.x1, es_.tie.x1h, es_.tie.yt, es_.tie.yth}) skeletonMark_[x] = 1;
    }
    bool stageExternalSkeleton();
    bool stageAbsorbers();
    bool stageSkeleton();
    bool stageCovers();
    bool stageAssembly();
    bool absorbGroup(Vertex v, const std::vector<Vertex>& clones, Rng& rng);
    bool feasible(const std::vector<int>& nodes, const std::vector<int>& slices);
    void hittingReport();

    std::string hittingDetail_;
    bool grown_ = false;
};

void Pipeline::hittingReport() {
    std::vector<Vertex> U;
    RobustParams rp;
    rp.ell = p_.ell;
    for (Vertex v = 0; v < in_.H.order(); ++v)
        if (in_.H.degree(v) < rp.eps1 * p_.n) U.push_back(v);
    std::ostringstream d;
    d << "U=" << U.size();
    if (U.size() <= 32) {
        RobustReport rr = checkRobust(in_.H, L(), U, rp);
        d << " robust=" << (rr.ok() ? "yes" : "no") << " (R1-R5 " << rr.r1 << rr.r2 << rr.r3 << rr.r4 << rr.r5 << ")";
    } else {
        d << " robust=skipped";
    }
    GoodReport gr = isGood(graphDifference(SubgraphQn::full(p_.n), all_), U, p_.ell, p_.s);
    d << " good=" << (gr.good ? "yes" : "no");
    hittingDetail_ = d.str();
}

bool Pipeline::stageInput() {
    begin();
    const int n = p_.n;
    std::ostringstream why;
    if (n < 2 || n > kMaxDenseDim) why << "n = " << n << " outside 2.." << kMaxDenseDim;
    else if (p_.s < 1 || p_.s >= n) why << "s = " << p_.s << " outside 1..n-1";
    else if (p_.ell < 1 || p_.ell > n - p_.s) why << "ell = " << p_.ell << " outside 1..n-s";
    else if (p_.sliceLength() < 1 || ((1 << p_.s) % p_.sliceLength()) != 0) why << "q = " << p_.sliceLength() << " does not divide 2^s";
    else if (p_.D < 1) why << "D must be positive";
    else if (in_.H.dim() != n) why << "H lives on Q^" << in_.H.dim() << ", expected Q^" << n;
    else if (in_.G.empty()) why << "no G parts";
    else
        for (const auto& g : in_.G)
            if (g.dim() != n) {
                why << "a G part lives on Q^" << g.dim();
                break;
            }
    if (!why.str().empty()) return finish(Stage::Input, false, why.str());
    L_.emplace(n, p_.s, p_.sliceLength());
    all_ = in_.all();
    res_.warnings = p_.warnings();
    if (p_.mode == PipelineMode::Hitting) hittingReport();
    std::ostringstream d;
    d << "n=" << n << " s=" << p_.s << " ell=" << p_.ell << " q=" << L().q() << " t=" << L().t()
      << " mode=" << pipelineModeName(p_.mode) << " edges=" << all_.edgeCount();
    if (!hittingDetail_.empty()) d << " " << hittingDetail_;
    return finish(Stage::Input, true, d.str());
}

bool Pipeline::stageTree() {
    begin();
    const int m = p_.n - p_.s;
    SubgraphQn I1 = intersectionGraph(L(), in_.part(1));
    reservoir_.assign(std::size_t{1} << m, 0);
    if (p_.reservoirDensity > 0)
        for (Vertex v : sampleReservoir(m, p_.reservoirDensity, seedFor("reservoir"))) reservoir_[v] = 1;
    Tstar_ = I1;
    for (const Edge& e : I1.edges())
        if (reservoir_[e.v] || reservoir_[e.other()]) Tstar_.remove(e);
    std::size_t inTree = 0;
    for (Vertex v = 0; v < Tstar_.order(); ++v) inTree += Tstar_.degree(v) > 0;
    res_.stats.treeVertices = inTree;
    if (Tstar_.edgeCount() == 0) return finish(Stage::Tree, false, "I(G_1) - R has no edges");
    // (TR2) as a measurement: the smallest share of neighbours on the tree graph.
    int worst = m;
    for (Vertex v = 0; v < Tstar_.order(); ++v) {
        int c = 0;
        for (int d = 0; d < m; ++d) c += Tstar_.degree(v ^ bit(d)) > 0;
        worst = std::min(worst, c);
    }
    std::ostringstream d;
    d << "vertices=" << inTree << "/" << Tstar_.order() << " edges=" << Tstar_.edgeCount()
      << " min-neighbours-on-tree=" << worst << "/" << m;
    return finish(Stage::Tree, true, d.str());
}

bool Pipeline::stageTiling() {
    begin();
    SubgraphQn I2 = intersectionGraph(L(), in_.part(2));
    NibbleParams np = p_.nibble;
    np.ell = p_.ell;
    np.seed = seedFor("nibble");
    CubeTiling C = nibbleTiling(I2, np);
    std::size_t nibbleCubes = C.cubes.size();
    if (p_.greedyTiling) extendTilingGreedily(C, I2, seedFor("greedy-tiling"));
    cubes_ = C.cubes;
    res_.stats.cubes = cubes_.size();
    res_.stats.coveredVertices = cubes_.size() << p_.ell;
    std::ostringstream d;
    d << "cubes=" << cubes_.size() << " (nibble " << nibbleCubes << ") covered=" << res_.stats.coveredVertices << "/"
      << (std::size_t{1} << (p_.n - p_.s));
    if (cubes_.empty()) return finish(Stage::Tiling, false, "empty tiling; " + d.str());
    return finish(Stage::Tiling, true, d.str());
}

bool Pipeline::stageBondedness() {
    begin();
    const SubgraphQn& G5 = in_.part(5);
    std::vector<Subcube> kept;
    for (const auto& c : cubes_)
        if (isBonded(L(), G5, c, p_.bond)) kept.push_back(c);
    std::ostringstream d;
    d << "bonded=" << kept.size() << "/" << cubes_.size() << " at b=" << p_.bond;
    cubes_ = std::move(kept);
    res_.stats.bondedCubes = cubes_.size();
    if (cubes_.empty()) return finish(Stage::Bondedness, false, "no bonded molecule; " + d.str());
    return finish(Stage::Bondedness, true, d.str());
}

bool Pipeline::stageGrowth() {
    begin();
    GrowParams gp = p_.grow;
    gp.maxAtomicChildren = p_.maxAtomicChildren;
    gp.maxRootChildren = p_.maxRootChildren;
    gp.seed = seedFor("growth");
    std::function<bool(Vertex)> leaf;
    if (p_.pointLeaves) leaf = [this](Vertex v) { return pointLeafAllowed(v); };
    SliceCheck check = [this](const Subcube& c, const std::vector<VertexPair>& pairs) {
        SliceCoverInput ci;
        ci.pairs = pairs;
        ++res_.stats.coverCalls;
        try {
            return coverSliceExact(Slice(L(), c, 0, L().q()), all_, ci, p_.coverBudget).outcome == Outcome::Found;
        } catch (const std::invalid_argument&) {
            return false;
        }
    };
    GrowResult gr = growTreeAndSkeleton(Tstar_, cubes_, L(), all_, &reservoir_, leaf, check, gp);
    if (!gr.ok) return finish(Stage::Contraction, false, "joint growth: " + gr.failure);
    tau_ = std::move(gr.tree);
    es_ = std::move(gr.es);
    grown_ = true;
    CheckReport rep = validateContractionTree(tau_, 12 * p_.D);
    if (!rep.ok()) return finish(Stage::Contraction, false, "tree invalid: " + rep.violations.front());
    auto viaTour = deltaByTraversal(tau_);
    for (int i = 0; i < tau_.size(); ++i)
        if (viaTour[i] != tau_.nodes[i].delta) return finish(Stage::Contraction, false, "Delta recount disagrees at v" + std::to_string(i));
    for (const auto& v : tau_.nodes) {
        if (v.atomic()) ++res_.stats.atomicNodes;
        else ++res_.stats.innerNodes;
    }
    res_.stats.nodes = tau_.nodes.size();
    res_.stats.pointLeaves = gr.pointLeaves;
    std::ostringstream d;
    d << "grown nodes=" << tau_.size() << " atomic=" << res_.stats.atomicNodes << " inner=" << res_.stats.innerNodes
      << " point-leaves=" << gr.pointLeaves << " represented=" << tau_.representedAtomic() << " unrepresented="
      << gr.unrepresented << " hung=" << gr.hung << " attempt=" << gr.attemptUsed << " checks=" << gr.checks;
    return finish(Stage::Contraction, true, d.str());
}

bool Pipeline::stageContraction() {
    if (p_.growTree && L().t() == 1) return stageGrowth();
    begin();
    const int t = L().t(), q = L().q();
    ContractParams cp;
    cp.t = t;
    cp.maxAtomicChildren = t == 1 ? p_.maxAtomicChildren : t;
    cp.maxRootChildren = t == 1 ? p_.maxRootChildren : t - 1;
    cp.maxInnerChildren = std::max(0, std::min(12 * p_.D - 1, (q - 2) / 2));
    cp.distinctAttach = true;
    if (p_.pointLeaves && t == 1) cp.pointLeaf = [this](Vertex v) { return pointLeafAllowed(v); };
    cp.seed = seedFor("contraction");
    cp.restarts = p_.contractRestarts;
    if (cp.maxInnerChildren == 0) return finish(Stage::Contraction, false, "slices of " + std::to_string(q) + " layers leave no room for inner vertices");
    ContractResult cr = contractAndRoot(Tstar_, cubes_, p_.s, cp);
    if (!cr.ok) return finish(Stage::Contraction, false, cr.failure);
    tau_ = std::move(cr.tree);
    CheckReport rep = validateContractionTree(tau_, 12 * p_.D);
    if (!rep.ok()) return finish(Stage::Contraction, false, "tree invalid: " + rep.violations.front());
    auto viaTour = deltaByTraversal(tau_);
    for (int i = 0; i < tau_.size(); ++i)
        if (viaTour[i] != tau_.nodes[i].delta) return finish(Stage::Contraction, false, "Delta recount disagrees at v" + std::to_string(i));
    for (const auto& v : tau_.nodes) {
        if (v.atomic()) ++res_.stats.atomicNodes;
        else ++res_.stats.innerNodes;
    }
    res_.stats.nodes = tau_.nodes.size();
    res_.stats.pointLeaves = cr.pointLeaves;
    std::ostringstream d;
    d << "nodes=" << tau_.size() << " atomic=" << res_.stats.atomicNodes << " inner=" << res_.stats.innerNodes
      << " point-leaves=" << cr.pointLeaves << " represented=" << tau_.representedAtomic() << " stripped="
      << cr.strippedVertices << " dropped-components=" << cr.droppedComponents << " restart=" << cr.restartUsed
      << " Delta(v0)=" << tau_.nodes[0].delta;
    return finish(Stage::Contraction, true, d.str());
}

bool Pipeline::stageExternalSkeleton() {
    begin();
    if (grown_) {
        CheckReport rep = validateExternalSkeleton(tau_, L(), es_, &reservoir_);
        if (!rep.ok()) return finish(Stage::ExternalSkeleton, false, "validator: " + rep.violations.front());
        markSkeleton();
        return finish(Stage::ExternalSkeleton, true, "|L|=" + std::to_string(es_.vertices.size()) + " (grown)");
    }
    NodeCheck check;
    if (L().t() == 1)
        check = [this](int i, const ExternalSkeleton& es) {
            es_ = es;  // coverInput reads the plan from es_
            return nodeCoverable(i, false);
        };
    SkeletonParams sp = p_.skeleton;
    sp.seed = seedFor("external-skeleton");
    ExternalSkeletonResult er = buildExternalSkeleton(tau_, L(), all_, &reservoir_, {}, sp, check);
    if (!er.ok) {
        std::ostringstream d;
        d << er.failure << " (v" << er.failedNode;
        if (er.failedSlice >= 0) d << ", slice " << er.failedSlice;
        d << ", " << er.choicesTried << " choices)";
        return finish(Stage::ExternalSkeleton, false, d.str());
    }
    es_ = std::move(er.es);
    CheckReport rep = validateExternalSkeleton(tau_, L(), es_, &reservoir_);
    if (!rep.ok()) return finish(Stage::ExternalSkeleton, false, "validator: " + rep.violations.front());
    markSkeleton();
    std::ostringstream d;
    d << "|L|=" << es_.vertices.size() << " choices=" << er.choicesTried;
    return finish(Stage::ExternalSkeleton, true, d.str());
}

bool Pipeline::feasible(const std::vector<int>& nodes, const std::vector<int>& slices) {
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const SliceKey key{nodes[k], slices[k]};
        if (L().t() == 1) {
            if (!coverable(key.node, key.slice, false)) return false;
            continue;
        }
        // Without transitions yet: a slice hosts two tips or at most two R pairs, never both.
        std::size_t tips = abs_.tips.count(key) ? abs_.tips.at(key).size() : 0;
        std::size_t rv = abs_.rpairs.count(key) ? abs_.rpairs.at(key).size() : 0;
        if (tips > 2 || rv > 4 || (tips > 0 && rv > 0)) return false;
    }
    return true;
}

bool Pipeline::absorbGroup(Vertex v, const std::vector<Vertex>& clones, Rng& rng) {
    const int m = p_.n - p_.s;
    const int s = p_.s;
    std::vector<Vertex> even, odd;
    for (Vertex u : clones) (parity(u) == 0 ? even : odd).push_back(u);
    if (even.size() != odd.size()) return false;
    auto cubeNode = [&](Vertex x) -> int {
        int i = tau_.nodeOf[x];
        return i >= 0 && tau_.nodes[i].atomic() && tau_.nodes[i].cube.dim() == p_.ell ? i : -1;
    };
    auto freeVertex = [&](Vertex x) { return !skeletonMark_[x] && !abs_.used[x]; };
    auto sliceOfV = [&](Vertex x) { return L().sliceOf(L().layerOf(x)); };

    struct Right {
        int node;
        int dr;
        AbsorberPair pair;
    };
    // Right cubes for u with left direction d.
    auto rights = [&](Vertex u, int d, int leftNode) {
        std::vector<Right> out;
        Vertex y = u ^ bit(L().lift(d));
        for (int dr = 0; dr < m; ++dr) {
            if (dr == d) continue;
            int B = cubeNode(v ^ bit(dr));
            if (B < 0 || !((tau_.nodes[B].cube.dirs >> d) & 1)) continue;
            Vertex z = u ^ bit(L().lift(dr));
            Vertex zp = z ^ bit(L().lift(d));
            if (!freeVertex(z) || abs_.used[zp]) continue;
            if (abs_.atomsWithR.count({B, L().layerOf(z)})) continue;
            if (!all_.hasEdge(u, z) || !all_.hasEdge(y, zp)) continue;
            auto pair = makeAbsorberPair(u, L().lift(d), L().lift(dr), tau_.nodes[leftNode].cube.dirs << s,
                                         tau_.nodes[B].cube.dirs << s);
            if (!pair || !validateAbsorberPair(*pair, all_).ok()) continue;
            out.push_back({B, dr, *pair});
        }
        rng.shuffle(out);
        return out;
    };
    auto apply = [&](const Absorber& a, bool on) {
        const SliceKey lk{a.leftNode, sliceOfV(a.pair.y)}, rk{a.rightNode, sliceOfV(a.pair.z)};
        const int layer = L().layerOf(a.pair.z);
        if (on) {
            abs_.tips[lk].push_back(a.pair.y);
            abs_.rpairs[rk].push_back(a.pair.zPrime);
            abs_.rpairs[rk].push_back(a.pair.z);
            abs_.atomsWithR.insert({a.rightNode, layer});
            abs_.used[a.pair.y] = abs_.used[a.pair.z] = abs_.used[a.pair.zPrime] = 1;
        } else {
            auto& tv = abs_.tips[lk];
            tv.erase(std::find(tv.begin(), tv.end(), a.pair.y));
            auto& rv = abs_.rpairs[rk];
            rv.erase(std::find(rv.begin(), rv.end(), a.pair.zPrime));
            rv.erase(std::find(rv.begin(), rv.end(), a.pair.z));
            abs_.atomsWithR.erase({a.rightNode, layer});
            abs_.used[a.pair.y] = abs_.used[a.pair.z] = abs_.used[a.pair.zPrime] = 0;
        }
    };

    std::vector<std::vector<std::pair<Vertex, Vertex>>> pairings;
    {
        std::vector<Vertex> perm = odd;
        std::sort(perm.begin(), perm.end());
        do {
            std::vector<std::pair<Vertex, Vertex>> pr;
            for (std::size_t k = 0; k < even.size(); ++k) pr.push_back({even[k], perm[k]});
            pairings.push_back(std::move(pr));
        } while (std::next_permutation(perm.begin(), perm.end()) && pairings.size() < 24);
        rng.shuffle(pairings);
    }
    int budget = p_.absorberCandidates;
    for (const auto& pairing : pairings) {
        std::vector<Absorber> chosen;
        bool ok = true;
        for (auto [ua, ub] : pairing) {
            bool placed = false;
            std::vector<int> dirs;
            for (int d = 0; d < m; ++d) dirs.push_back(d);
            rng.shuffle(dirs);
            for (int d : dirs) {
                int A = cubeNode(v ^ bit(d));
                if (A < 0) continue;
                Vertex ya = ua ^ bit(L().lift(d)), yb = ub ^ bit(L().lift(d));
                if (!freeVertex(ya) || !freeVertex(yb) || !all_.hasEdge(ua, ya) || !all_.hasEdge(ub, yb)) continue;
                auto ra = rights(ua, d, A), rb = rights(ub, d, A);
                for (const auto& x : ra) {
                    for (const auto& y : rb) {
                        if (budget-- <= 0) break;
                        if (x.pair.z == y.pair.z || x.pair.zPrime == y.pair.zPrime || x.pair.z == y.pair.zPrime ||
                            x.pair.zPrime == y.pair.z)
                            continue;
                        if (x.node == y.node && L().layerOf(x.pair.z) == L().layerOf(y.pair.z)) continue;
                        Absorber a1{ua, x.pair, A, x.node}, a2{ub, y.pair, A, y.node};
                        apply(a1, true);
                        apply(a2, true);
                        if (feasible({A, x.node, y.node}, {sliceOfV(ya), sliceOfV(x.pair.z), sliceOfV(y.pair.z)})) {
                            chosen.push_back(a1);
                            chosen.push_back(a2);
                            placed = true;
                            break;
                        }
                        apply(a2, false);
                        apply(a1, false);
                    }
                    if (placed || budget <= 0) break;
                }
                if (placed || budget <= 0) break;
            }
            if (!placed) {
                ok = false;
                break;
            }
        }
        if (ok) {
            absorbers_.insert(absorbers_.end(), chosen.begin(), chosen.end());
            return true;
        }
        for (auto it = chosen.rbegin(); it != chosen.rend(); ++it) apply(*it, false);
        if (budget <= 0) break;
    }
    return false;
}

bool Pipeline::stageAbsorbers() {
    begin();
    const int m = p_.n - p_.s;
    abs_ = {};
    abs_.used.assign(std::size_t{1} << p_.n, 0);
    // V^abs: clones of unrepresented vertices and unused clones of inner vertices.
    std::map<Vertex, std::vector<Vertex>> groups;
    for (Vertex v = 0; v < (Vertex{1} << m); ++v) {
        int i = tau_.nodeOf[v];
        if (i >= 0 && tau_.nodes[i].atomic()) continue;
        for (Vertex u : L().clones(v))
            if (i < 0 || !skeletonMark_[u]) groups[v].push_back(u);
    }
    Vabs_.clear();
    for (auto& [v, us] : groups) Vabs_.insert(Vabs_.end(), us.begin(), us.end());
    res_.stats.absorbedVertices = Vabs_.size();
    std::vector<Vertex> order;
    for (auto& [v, us] : groups) order.push_back(v);
    Rng rng(p_.seed, "absorbers");
    rng.shuffle(order);
    for (Vertex v : order)
        if (!absorbGroup(v, groups[v], rng)) {
            std::ostringstream d;
            d << "no absorbing pairs for the clones of " << v << " (" << absorbers_.size() << " of " << Vabs_.size()
              << " placed)";
            return finish(Stage::Absorbers, false, d.str());
        }
    std::ostringstream d;
    d << "|V^abs|=" << Vabs_.size() << " absorbers=" << absorbers_.size();
    return finish(Stage::Absorbers, true, d.str());
}

bool Pipeline::stageSkeleton() {
    begin();
    std::vector<Vertex> forbidden;
    for (const auto& a : absorbers_) {
        forbidden.push_back(a.pair.y);
        forbidden.push_back(a.pair.z);
        forbidden.push_back(a.pair.zPrime);
    }
    NodeCheck check;
    if (L().t() > 1)
        check = [this](int i, const ExternalSkeleton& es) {
            es_ = es;
            return nodeCoverable(i, false);
        };
    SkeletonParams sp = p_.skeleton;
    sp.seed = seedFor("skeleton");
    ExternalSkeleton es = es_;
    SkeletonResult sr = buildSkeleton(tau_, L(), es, all_, forbidden, sp, check);
    if (!sr.ok) return finish(Stage::Skeleton, false, sr.failure);
    es_ = std::move(es);
    sk_ = std::move(sr.skeleton);
    std::vector<Vertex> tips, rtips;
    for (const auto& a : absorbers_) {
        tips.push_back(a.pair.y);
        rtips.push_back(a.pair.z);
    }
    SkeletonCheckInput ci;
    ci.leftTips = &tips;
    ci.rightTips = &rtips;
    ci.absorbed = &Vabs_;
    ci.external = &es_.vertices;
    ci.s4Bound = p_.s4Bound > 0 ? p_.s4Bound : (p_.mode == PipelineMode::Hitting ? 14 : 12);
    CheckReport rep = validateSkeleton(tau_, L(), sk_, all_, ci);
    if (!rep.ok()) return finish(Stage::Skeleton, false, "validator: " + rep.violations.front());
    res_.stats.skeletonLength = sk_.list.size();
    return finish(Stage::Skeleton, true, "r=" + std::to_string(sk_.size()));
}

bool Pipeline::stageCovers() {
    begin();
    covers_.clear();
    for (int i = 0; i < tau_.size(); ++i) {
        if (!tau_.nodes[i].atomic()) continue;
        for (int j = 0; j < tau_.t; ++j) {
            SliceCoverRecord rec;
            rec.node = i;
            rec.slice = j;
            rec.input = coverInput(i, j);
            Slice sl = sliceOf(i, j);
            bool done = false;
            if (sl.length() >= 10 && sl.ell() >= 2) {
                try {
                    SliceCoverParams cp;
                    cp.bond = p_.bond;
                    cp.seed = seedFor("slice-cover") + static_cast<std::uint64_t>(i * tau_.t + j);
                    SliceCoverResult r = coverSlice(sl, all_, rec.input, cp);
                    if (r.ok) {
                        rec.system = std::move(r.system);
                        done = true;
                    }
                } catch (const std::invalid_argument&) {
                }
            }
            if (!done) {
                ++res_.stats.coverCalls;
                PathSystemResult r = coverSliceExact(sl, all_, rec.input, p_.coverBudget);
                if (r.outcome != Outcome::Found) {
                    std::ostringstream d;
                    d << "slice " << j << " of v" << i << ": " << outcomeName(r.outcome);
                    return finish(Stage::Covers, false, d.str());
                }
                rec.system = std::move(r.system);
            }
            PathSystemCheck pc = checkSliceCover(sl, all_, rec.input, rec.system);
            if (!pc.ok()) return finish(Stage::Covers, false, "cover of v" + std::to_string(i) + " fails its check: " + pc.violations.front());
            covers_.push_back(std::move(rec));
        }
    }
    return finish(Stage::Covers, true, "slices=" + std::to_string(covers_.size()));
}

bool Pipeline::stageAssembly() {
    begin();
    AssemblyResult ar;
    try {
        ar = assembleCycle(sk_, covers_);
    } catch (const std::logic_error& e) {
        return finish(Stage::Assembly, false, std::string("internal: ") + e.what());
    }
    if (!ar.ok) return finish(Stage::Assembly, false, ar.failure);
    CheckReport rep = validateAlmostCycle(p_.n, ar.cycle, all_, absorbers_);
    if (!rep.ok()) return finish(Stage::Assembly, false, rep.violations.front());
    res_.stats.almostCycleLength = ar.cycle.size();
    res_.cycle = std::move(ar.cycle);
    return finish(Stage::Assembly, true, "length=" + std::to_string(res_.cycle.size()));
}

PipelineResult Pipeline::run() {
    auto ok = stageInput() && stageTree() && stageTiling() && stageBondedness() && stageContraction() &&
              stageExternalSkeleton() && stageAbsorbers() && stageSkeleton() && stageCovers() && stageAssembly();
    if (!ok) {
        res_.cycle.clear();
        return std::move(res_);
    }
    begin();
    try {
        res_.cycle = absorbAll(res_.cycle, absorbers_);
    } catch (const std::invalid_argument& e) {
        finish(Stage::Absorption, false, e.what());
        res_.cycle.clear();
        return std::move(res_);
    }
    finish(Stage::Absorption, true, "absorbed=" + std::to_string(absorbers_.size()));
    begin();
    bool spanning = verifyCycleInCube(p_.n, res_.cycle, true);
    bool inHost = spanning && verifyHamiltonCycle(all_, res_.cycle);
    if (!finish(Stage::Verification, inHost, inHost ? "Hamilton cycle of H u G" : (spanning ? "cycle leaves the host graph" : "not a spanning cycle"))) {
        res_.cycle.clear();
        return std::move(res_);
    }
    res_.ok = true;
    res_.failedStage = Stage::Done;
    return std::move(res_);
}

}  // namespace

PipelineResult constructHamiltonian(const PipelineInput& in, const PipelineParams& p) {
    Pipeline run(in, p);
    return run.run();
}

}  // namespace hcube
