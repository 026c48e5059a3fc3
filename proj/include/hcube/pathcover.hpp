#ifndef HCUBE_PATHCOVER_HPP
#define HCUBE_PATHCOVER_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hcube/cube.hpp"
#include "hcube/oracles.hpp"
#include "hcube/rng.hpp"

namespace hcube {

using VertexPair = std::pair<Vertex, Vertex>;

enum class CoverMode { OppositeParity, AvoidVertex, SameParityPairs };

const char* coverModeName(CoverMode m);

struct EndpointRequest {
    std::vector<VertexPair> pairs;
    std::optional<Vertex> avoid;
    CoverMode mode = CoverMode::OppositeParity;
};

struct PathSystem {
    std::vector<std::vector<Vertex>> paths;

    std::size_t vertexCount() const;
};

// Checks the parity preconditions of req.mode on a host whose vertices are
// the words below 2^ell. why receives the first violated condition.
bool requestValid(const EndpointRequest& req, int ell, std::string* why = nullptr);

// Picks the mode implied by the pairs' parities, reordering pairs so that
// the special pair comes first. Empty if no mode fits.
std::optional<EndpointRequest> classifyRequest(std::vector<VertexPair> pairs, std::optional<Vertex> avoid);

struct PathSystemCheck {
    std::vector<std::string> violations;

    bool ok() const { return violations.empty(); }
};

using EdgePredicate = std::function<bool(Vertex, Vertex)>;

// Disjointness, endpoint order, edge validity, parity alternation along each
// path and exact cover of the given vertex set.
PathSystemCheck checkPathSystem(const PathSystem& ps, const std::vector<VertexPair>& pairs,
                                const std::vector<Vertex>& cover, const EdgePredicate& edgeOk);
// Convenience form for the full ell-cube with optional avoided vertex.
PathSystemCheck checkPathSystem(const PathSystem& ps, int ell, const EndpointRequest& req);
bool containsEdge(const PathSystem& ps, Vertex a, Vertex b);

struct PathSystemResult {
    Outcome outcome = Outcome::Unsat;
    PathSystem system;
    std::uint64_t nodes = 0;
};

inline constexpr int kPathSolverMaxEll = 6;
inline constexpr int kPathSolverMaxPairs = 6;

// Exact search on Q^ell with vertices 0..2^ell-1. Throws on a malformed or
// mode-invalid request; Unsat means the search space was exhausted.
PathSystemResult solvePathSystem(int ell, const EndpointRequest& req, const Budget& budget = {});
// Same on a full subcube of Q^n given in global coordinates.
PathSystemResult solvePathSystem(const Subcube& host, const EndpointRequest& req, const Budget& budget = {});

// t consecutive clones of one ell-cube of Q^{n-s}; atom k lies in layer
// layers()[k]. Atom edges are the cube's own edges, crossing edges join the
// clones of one vertex in consecutive atoms.
class Slice {
public:
    Slice(const LayerDecomposition& L, const Subcube& cube, int firstLayer, int length);

    int n() const { return n_; }
    int ell() const { return cube_.dim(); }
    int length() const { return static_cast<int>(layers_.size()); }
    const Subcube& cube() const { return cube_; }
    const std::vector<int>& layers() const { return layers_; }

    Subcube atomCube(int k) const;
    Vertex vertex(int k, Vertex local) const;
    std::vector<Vertex> atomVertices(int k) const;
    std::vector<Vertex> vertices() const;
    std::optional<int> atomOf(Vertex v) const;
    Vertex localOf(Vertex v) const;
    // Clone of v in atom k.
    Vertex moveTo(Vertex v, int k) const { return vertex(k, localOf(v)); }

    // Atom order reversed; the same vertex set.
    Slice reversed() const;

    bool edgeAllowed(const SubgraphQn& G, Vertex a, Vertex b) const;
    // Crossing edges present in G between atoms k and k+1, split by the
    // parity of the endpoint in atom k.
    BondCount gapBond(const SubgraphQn& G, int k) const;
    bool bonded(const SubgraphQn& G, int b) const;

private:
    Slice() = default;

    int n_ = 0;
    int s_ = 0;
    Subcube cube_;
    std::vector<int> layers_;
    std::vector<Vertex> prefixes_;
};

struct AltParitySeq {
    std::vector<Vertex> vertices;
    int from = 0;
    int to = 0;
    std::vector<int> spliceAtoms;
    int maxForbidden = 0;  // forbidden crossing edges at the worst gap
};

struct AltParityResult {
    std::optional<AltParitySeq> seq;
    std::string failure;
    int failedGap = -1;  // lower atom of the gap without admissible edge
};

// (u, j, F, R)-sequence from the atom of u to atom j. R meets each atom in
// zero or two adjacent vertices; F need not contain R.
AltParityResult buildAltParitySeq(const Slice& slice, const SubgraphQn& G, Vertex u, int j,
                                  const std::vector<Vertex>& F, const std::vector<Vertex>& R, Rng& rng);
std::vector<std::string> checkAltParitySeq(const Slice& slice, const SubgraphQn& G, const AltParitySeq& seq, Vertex u,
                                           int j, const std::vector<Vertex>& F, const std::vector<Vertex>& R);

struct SliceCoverInput {
    std::vector<Vertex> L;
    std::vector<Vertex> R;
    std::vector<VertexPair> pairs;
};

struct SliceCoverParams {
    int bond = 0;       // 0: defaultBondThreshold(ell)
    int minLength = 10;
    int attempts = 256;
    Budget atomBudget{200000, 0};
    std::uint64_t seed = 0;
};

struct AtomCover {
    int atom = 0;
    EndpointRequest request;
    Outcome outcome = Outcome::Unsat;
};

struct SliceCoverResult {
    bool ok = false;
    std::string failure;
    PathSystem system;  // path r joins pairs[r] in the given orientation
    std::vector<std::vector<Vertex>> skeletons;
    std::vector<AtomCover> atoms;
    std::vector<std::string> attemptFailures;  // one entry per failed attempt
    int attemptsUsed = 0;
    int variant = -1;
    int specialAtom = -1;  // same-parity variant: the atom t*
    int maxForbidden = 0;
    bool bondGuarantee = false;  // bond >= maxForbidden + 1
};

// Throws std::invalid_argument when (C1)-(C3) or the length bound fail, or
// when the slice is not bonded at the configured threshold.
SliceCoverResult coverSlice(const Slice& slice, const SubgraphQn& G, const SliceCoverInput& in,
                            const SliceCoverParams& p = {});
// Two pairs from the first atom to the last with u1 =_p v1 and u1 !=_p u2.
SliceCoverResult coverSliceSameParity(const Slice& slice, const SubgraphQn& G, const SliceCoverInput& in,
                                      const SliceCoverParams& p = {});

// Random input meeting (C1)-(C3), or (C'1)-(C'3) when sameParity is set;
// rPairs adjacent R pairs, endpoints may fall in R. Empty when the draw fails.
std::optional<SliceCoverInput> randomSliceInput(const Slice& slice, int m, int lSize, int rPairs, bool sameParity,
                                                Rng& rng);

// Exhaustive search for a cover of any slice with the same contract as
// coverSlice: pairs joined in order, V(M*)\L covered exactly, each R pair an
// edge of its path. No length, bond or parity preconditions. Slices of at
// most 64 vertices.
PathSystemResult coverSliceExact(const Slice& slice, const SubgraphQn& G, const SliceCoverInput& in,
                                 const Budget& budget = {});

// Full check of a cover: paths in G plus atom edges, exact cover of V(M*)\L,
// endpoints, every R pair an edge of some path.
PathSystemCheck checkSliceCover(const Slice& slice, const SubgraphQn& G, const SliceCoverInput& in,
                                const PathSystem& ps);

}  // namespace hcube

#endif
