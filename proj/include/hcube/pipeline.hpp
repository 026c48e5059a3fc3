#ifndef HCUBE_PIPELINE_HPP
#define HCUBE_PIPELINE_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hcube/absorber.hpp"
#include "hcube/cube.hpp"
#include "hcube/nibble.hpp"
#include "hcube/oracles.hpp"
#include "hcube/pathcover.hpp"
#include "hcube/tree.hpp"

namespace hcube {

// ---------------------------------------------------------------------------
// Contraction tree

enum class NodeKind { Atomic, Inner };

// One vertex v_i of the contraction tree. Coordinates live in Q^{n-s}.
struct TreeNode {
    NodeKind kind = NodeKind::Atomic;
    Subcube cube;               // C(v); a 0-cube for inner vertices and point leaves
    int parent = -1;
    int parentDir = -1;         // direction of the edge to the parent
    Vertex parentAttach = 0;    // endpoint of that edge inside this node
    std::vector<int> children;  // u_1..u_p
    std::vector<int> childDirs; // f_k
    std::vector<Vertex> attach; // nu_k: endpoint of the k-th child edge inside this node
    int delta = 0;
    int input = 0;              // b(i), slice index in 0..t-1

    bool atomic() const { return kind == NodeKind::Atomic; }
    bool leaf() const { return children.empty(); }
    int p() const { return static_cast<int>(children.size()); }
};

struct ContractionTree {
    int n = 0;
    int s = 0;
    int t = 1;
    std::vector<TreeNode> nodes;  // nodes[i] is v_i, v_0 the root, labels in DFS discovery order
    std::vector<int> nodeOf;      // vertex of Q^{n-s} -> representing node, or -1

    int size() const { return static_cast<int>(nodes.size()); }
    std::size_t representedAtomic() const;  // vertices of I inside atomic nodes
};

struct ContractParams {
    int t = 1;
    // Capacity limits; 0 leaves the quantity unbounded.
    int maxAtomicChildren = 0;
    int maxRootChildren = 0;
    int maxInnerChildren = 0;
    // Children of an atomic vertex attach at distinct cube vertices other
    // than the parent's; the root keeps two adjacent unattached vertices.
    bool distinctAttach = false;
    bool stripLeaves = true;  // the leaf-stripping pass on T* before contraction
    // Inner leaves accepted here become 0-dimensional atomic leaves instead of
    // being stripped; unreached vertices accepted here are hung as such
    // leaves wherever capacity allows.
    std::function<bool(Vertex)> pointLeaf;
    std::optional<Vertex> root;  // a vertex of the root cube
    std::uint64_t seed = 0;
    int restarts = 1;  // randomized DFS orders; the one representing most vertices wins
};

struct ContractResult {
    bool ok = false;
    std::string failure;
    ContractionTree tree;
    std::size_t strippedVertices = 0;  // removed by leaf stripping before contraction
    std::size_t droppedComponents = 0; // isolated cubes and components without a cube
    std::size_t pointLeaves = 0;
    int restartUsed = -1;
};

// Gamma1 = T* plus the cube edges, leaf stripping, removal of isolated cubes,
// contraction, DFS from an atomic root and iterated removal of inner leaves.
// T* is any subgraph of Q^{n-s}; with a graph that is not a tree the DFS
// picks the spanning tree. Fails without an atomic root.
ContractResult contractAndRoot(const SubgraphQn& Tstar, const std::vector<Subcube>& cubes, int s,
                               const ContractParams& p);

// Delta from the recursion over children.
std::vector<int> deltaByRecursion(const ContractionTree& tau);
// Delta as the number of inner-vertex visits of an Euler tour of each subtree.
std::vector<int> deltaByTraversal(const ContractionTree& tau);

// Tree shape, labels in DFS order, atomic leaves, the b(i) law, stored Delta
// against the recursion, attachment geometry, and the inner degree cap when
// positive.
CheckReport validateContractionTree(const ContractionTree& tau, int innerDegreeCap = 0);

// ---------------------------------------------------------------------------
// External skeleton and skeleton (vertices of Q^n)

struct ConnectionSequence {
    Vertex x = 0;
    Vertex y = 0;
    Vertex xh = 0;
    Vertex yh = 0;

    ConnectionSequence shifted(int dir) const {
        return {x ^ bit(dir), y ^ bit(dir), xh ^ bit(dir), yh ^ bit(dir)};
    }
};

// (V1)-(V3) and distinctness.
bool validConnection(const ConnectionSequence& c, int delta, std::string* why = nullptr);

struct NodePlan {
    ConnectionSequence seq;                  // unused at the root
    std::vector<ConnectionSequence> attach;  // per child: (z,w,zh,wh); at inner nodes (w_{k-1},w_k,wh_{k-1},wh_k)
    // Slice-to-slice transitions per track: y_k, x_{k+1} alternating, in slice order.
    std::array<std::vector<Vertex>, 2> transitions;
};

// Root tie: x_1^0, x̂_1^0 in the first atom, y_t^0 = x̂_1^0 + e, ŷ_t^0 = x_1^0 + e
// with e the crossing direction from the last layer to the first.
struct RootTie {
    Vertex x1 = 0;
    Vertex x1h = 0;
    Vertex yt = 0;
    Vertex yth = 0;
};

struct ExternalSkeleton {
    std::vector<NodePlan> plan;
    RootTie tie;                 // w_0^0 = tie.x1
    std::vector<Vertex> vertices;  // L•
};

// Invoked with a node whose own choices are complete; false rejects them.
using NodeCheck = std::function<bool(int node, const ExternalSkeleton& es)>;

struct SkeletonParams {
    int candidatesPerNode = 24;  // local choices tried per node
    int budget = 0;              // total choices tried; 0: 64 per node
    std::uint64_t seed = 0;
};

struct ExternalSkeletonResult {
    bool ok = false;
    std::string failure;
    int failedNode = -1;
    int failedSlice = -1;
    ExternalSkeleton es;
    int choicesTried = 0;
};

// Cases 1-3 top-down with the root tie fixed first. Vertices in `reserved`
// (Q^n) and clones of reservoir vertices (Q^{n-s}) are never used. A failing
// check makes the node try its next choice and, when exhausted, its parent.
ExternalSkeletonResult buildExternalSkeleton(const ContractionTree& tau, const LayerDecomposition& L,
                                             const SubgraphQn& Gp, const VertexMask* reservoir,
                                             const std::vector<Vertex>& reserved, const SkeletonParams& p,
                                             const NodeCheck& check = {});

// (ES1)-(ES5) and the connection-sequence laws at every node.
CheckReport validateExternalSkeleton(const ContractionTree& tau, const LayerDecomposition& L,
                                     const ExternalSkeleton& es, const VertexMask* reservoir);

// Joint top-down construction of the contraction tree and its external
// skeleton for one slice per molecule (t = 1). Each node picks its children
// and their attachment quadruples so that its own slice stays coverable;
// vertices left over afterwards are hung onto nodes with spare capacity.
using SliceCheck = std::function<bool(const Subcube& molecule, const std::vector<VertexPair>& pairs)>;

struct GrowParams {
    int maxAtomicChildren = 2;
    int maxRootChildren = 1;
    int checksPerNode = 1000; // cover checks spent on one node before it settles for fewer children
    int checkBudget = 0;     // per attempt; 0: 4000 per cube
    int attempts = 32;       // independent attempts; the one representing most vertices wins
    // Sequences keep x, y in one pair of layers {2j, 2j+1} and xh, yh in
    // another; this class is closed under every child configuration.
    bool pairedLayers = true;
    int growChildren = 1;    // children per atomic node during the first descent
    int hangRounds = 4;
    int maxBacktracks = 2000;  // undone subtrees per attempt
    std::uint64_t seed = 0;
};

struct GrowResult {
    bool ok = false;
    std::string failure;
    ContractionTree tree;
    ExternalSkeleton es;
    std::size_t unrepresented = 0;
    std::size_t pointLeaves = 0;
    std::size_t hung = 0;       // vertices attached by the repair pass
    std::size_t checks = 0;
    int attemptUsed = -1;
};

GrowResult growTreeAndSkeleton(const SubgraphQn& Tstar, const std::vector<Subcube>& cubes, const LayerDecomposition& L,
                               const SubgraphQn& Gp, const VertexMask* reservoir,
                               const std::function<bool(Vertex)>& pointLeaf, const SliceCheck& check,
                               const GrowParams& p);

enum class LinkKind { Edge, Path };

struct Skeleton {
    std::vector<Vertex> list;     // x_1..x_r, cyclic
    std::vector<LinkKind> link;   // link[k] joins list[k] and list[k+1 mod r]
    std::vector<int> node;        // molecule of list[k]
    std::vector<int> slice;       // slice of list[k] inside its molecule
    int break1 = -1;              // positions k of the same-parity pairs, or -1
    int break2 = -1;

    int size() const { return static_cast<int>(list.size()); }
};

// The two tracks of one node with child k inserted between its k-th and
// (k+1)-th segment. Uses the transitions stored in the plan.
std::array<std::vector<std::vector<Vertex>>, 2> nodeSegments(const ContractionTree& tau,
                                                             const LayerDecomposition& L,
                                                             const ExternalSkeleton& es, int i);

// Pairs of one slice of an atomic node implied by its segments.
std::vector<VertexPair> nodeSlicePairs(const ContractionTree& tau, const LayerDecomposition& L,
                                       const ExternalSkeleton& es, int i, int slice);

struct SkeletonResult {
    bool ok = false;
    std::string failure;
    int failedNode = -1;
    Skeleton skeleton;
};

// Slice transitions avoiding `forbidden` (first and last atoms of every
// slice crossed, edges in G'), then the double traversal tied at the root.
// At t = 1 there are no transitions. check runs after each node's choices.
SkeletonResult buildSkeleton(const ContractionTree& tau, const LayerDecomposition& L, ExternalSkeleton& es,
                             const SubgraphQn& Gp, const std::vector<Vertex>& forbidden, const SkeletonParams& p,
                             const NodeCheck& check = {});

struct SkeletonCheckInput {
    const std::vector<Vertex>* leftTips = nullptr;   // 𝔏
    const std::vector<Vertex>* rightTips = nullptr;  // ℜ1
    const std::vector<Vertex>* absorbed = nullptr;   // V^abs
    const std::vector<Vertex>* external = nullptr;   // L•
    int s4Bound = 12;
};

// (S1)-(S6) on any list. Path links stand for same-slice pairs of a cube
// molecule; (S3) also forbids a vertex on two path links.
CheckReport validateSkeleton(const ContractionTree& tau, const LayerDecomposition& L, const Skeleton& sk,
                             const SubgraphQn& Gp, const SkeletonCheckInput& in);

// ---------------------------------------------------------------------------
// Assembly and absorption

struct SliceCoverRecord {
    int node = -1;
    int slice = -1;
    SliceCoverInput input;
    PathSystem system;  // path r joins input.pairs[r]
};

struct AssemblyResult {
    bool ok = false;
    std::string failure;
    std::vector<Vertex> cycle;
};

// Walks the skeleton, replacing path links by the matching cover
// path. Throws std::logic_error on an endpoint mismatch.
AssemblyResult assembleCycle(const Skeleton& sk, const std::vector<SliceCoverRecord>& covers);

struct Absorber {
    Vertex u = 0;          // the absorbed clone
    AbsorberPair pair;     // in Q^n; y is the left tip, (zPrime, z) the absorbed edge
    int leftNode = -1;
    int rightNode = -1;
};

// (HC1)-(HC3) for an almost spanning cycle: a cycle of G', disjoint from the
// left tips and the absorbed vertices, together partitioning Q^n, and every
// absorbed edge on it.
CheckReport validateAlmostCycle(int n, const std::vector<Vertex>& cycle, const SubgraphQn& Gp,
                                const std::vector<Absorber>& absorbers);

// Splices every absorber into the cycle. Throws std::invalid_argument on
// duplicate absorbed edges.
std::vector<Vertex> absorbAll(const std::vector<Vertex>& cycle, const std::vector<Absorber>& absorbers);

// ---------------------------------------------------------------------------
// End-to-end

enum class PipelineMode { Dense, Hitting };

const char* pipelineModeName(PipelineMode m);

struct PipelineParams {
    int n = 12;
    int s = 2;
    int ell = 2;
    int q = 0;        // 0: 2^s, one slice per molecule
    int D = 4;        // inner tree degrees stay at most 12D
    int bond = 1;     // bondedness threshold for cube molecules
    double reservoirDensity = 0.0;  // reservoir R drawn in Q^{n-s}, kept out of the tree
    NibbleParams nibble{2, 0.1, 30, DSchedule::Measured, {}, 0};
    bool greedyTiling = true;
    int maxAtomicChildren = 2;
    int maxRootChildren = 1;
    bool pointLeaves = true;
    int contractRestarts = 8;
    // With one slice per molecule, build tau and L• jointly (growTreeAndSkeleton)
    // instead of contracting first and choosing connection sequences after.
    bool growTree = true;
    GrowParams grow;
    double beta = 0.1;       // Gamma threshold, as a fraction of n-s
    int robustD = 0;         // d of the robust matching; 0: 24D
    int absorberCandidates = 64;
    Budget coverBudget{200000, 0};
    SkeletonParams skeleton;
    PipelineMode mode = PipelineMode::Dense;
    int s4Bound = 0;         // 0: 12 in dense mode, 14 in hitting mode
    std::uint64_t seed = 0;

    int sliceLength() const { return q > 0 ? q : (1 << s); }
    // Human-readable notes where the values fall below the minima the slice covers assume.
    std::vector<std::string> warnings() const;
};

// Host graphs. Role i (1-based) reads G[(i-1) mod |G|]; the cycle lives in H
// together with all parts.
struct PipelineInput {
    SubgraphQn H;
    std::vector<SubgraphQn> G;

    const SubgraphQn& part(int role) const { return G[static_cast<std::size_t>(role - 1) % G.size()]; }
    SubgraphQn all() const;
};

// H = G_1 = Q^n_p from one seed.
PipelineInput samplePipelineInput(int n, double p, std::uint64_t seed);

enum class Stage {
    Input,
    Tree,
    Tiling,
    Bondedness,
    Contraction,
    ExternalSkeleton,
    Absorbers,
    Skeleton,
    Covers,
    Assembly,
    Absorption,
    Verification,
    Done
};

const char* stageName(Stage s);

struct StageReport {
    Stage stage = Stage::Input;
    bool ok = true;
    std::string detail;
    double ms = 0;
};

struct PipelineStats {
    std::size_t treeVertices = 0;
    std::size_t cubes = 0;
    std::size_t coveredVertices = 0;
    std::size_t bondedCubes = 0;
    std::size_t nodes = 0;
    std::size_t atomicNodes = 0;
    std::size_t innerNodes = 0;
    std::size_t pointLeaves = 0;
    std::size_t absorbedVertices = 0;  // |V^abs|
    std::size_t skeletonLength = 0;
    std::size_t coverCalls = 0;
    std::size_t almostCycleLength = 0;
};

struct PipelineResult {
    bool ok = false;
    Stage failedStage = Stage::Done;
    std::string failure;
    std::vector<StageReport> stages;
    PipelineStats stats;
    std::vector<std::string> warnings;
    std::vector<Vertex> cycle;
};

PipelineResult constructHamiltonian(const PipelineInput& in, const PipelineParams& p);

}  // namespace hcube

#endif
