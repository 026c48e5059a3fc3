#ifndef HCUBE_NIBBLE_HPP
#define HCUBE_NIBBLE_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "hcube/cube.hpp"

namespace hcube {

// H_l(G) restricted to an active vertex set: hyperedges are the l-subcubes of
// G all of whose vertices are active.
class CubeHypergraph {
public:
    CubeHypergraph() = default;
    CubeHypergraph(int n, int l, std::vector<Subcube> edges, std::vector<char> active);

    int dim() const { return n_; }
    int ell() const { return l_; }
    const std::vector<Subcube>& edges() const { return edges_; }
    const std::vector<char>& active() const { return active_; }
    bool isActive(Vertex v) const { return active_[v] != 0; }
    std::size_t activeCount() const;

    std::vector<std::uint32_t> degrees() const;
    double meanDegree() const;  // over active vertices
    CubeHypergraph induced(const std::vector<char>& keep) const;

private:
    int n_ = 0;
    int l_ = 0;
    std::vector<Subcube> edges_;
    std::vector<char> active_;
};

inline constexpr int kHypergraphMaxDim = 16;
inline constexpr int kHypergraphMaxEll = 3;

CubeHypergraph buildCubeHypergraph(const SubgraphQn& g, int l);
// Same, allowing caps to be lifted by the caller.
CubeHypergraph buildCubeHypergraph(const SubgraphQn& g, int l, int maxDim, int maxEll);

inline int significance(const Subcube& e, DirMask S) { return std::popcount(e.dirs & S); }
std::uint64_t significance(const std::vector<Subcube>& E, DirMask S);
std::vector<Subcube> sigmaFilter(const std::vector<Subcube>& E, DirMask S, int t);
// Integer threshold used wherever a real threshold sqrt(l) is needed.
int sqrtThreshold(int l);

struct NibbleRoundResult {
    std::vector<Subcube> sampled;   // E'
    std::vector<Subcube> isolated;  // E''
    CubeHypergraph remaining;       // H'
};

// round distinguishes the draws of successive rounds under one seed.
NibbleRoundResult nibbleRound(const CubeHypergraph& H, double eps, double D, std::uint64_t seed, std::uint64_t round = 0);

// Measured: mean degree of the current hypergraph each round. Geometric: the
// initial mean degree decayed by exp(-(2^l-1) eps) per round.
enum class DSchedule { Geometric, Measured, Supplied };

struct NibbleParams {
    int ell = 2;
    double eps = 0.1;
    int rounds = 30;
    DSchedule schedule = DSchedule::Measured;
    std::vector<double> supplied;  // used when schedule == Supplied
    std::uint64_t seed = 0;
};

struct CubeTiling {
    int n = 0;
    int ell = 0;
    std::vector<Subcube> cubes;
};

struct NibbleTrace {
    std::vector<double> D;
    std::vector<std::size_t> covered;  // vertices covered after each round
};

CubeTiling nibbleTiling(const SubgraphQn& g, const NibbleParams& p, NibbleTrace* trace = nullptr);
// Runs the rounds on a prebuilt hypergraph.
CubeTiling nibbleTiling(const CubeHypergraph& H, const NibbleParams& p, NibbleTrace* trace = nullptr);

struct TilingViolations {
    std::size_t overlaps = 0;
    std::size_t missingInHost = 0;
    std::size_t wrongDimension = 0;
    std::size_t nonCanonical = 0;
    bool ok() const { return overlaps + missingInHost + wrongDimension + nonCanonical == 0; }
};

TilingViolations checkTiling(const CubeTiling& C, const SubgraphQn& host);
std::vector<char> coveredMask(const CubeTiling& C);

// A_i(x) sets are given as direction masks: A = {x + e : e in mask}.
struct TilingReportParams {
    std::vector<Vertex> xs;  // empty: every vertex
    double delta = 0.1;
    std::vector<DirMask> A;  // A_1..A_K; A_0 is always the full neighbourhood
    std::vector<DirMask> S;  // direction sets for (M3)
    double alpha = 0.5;
    std::optional<int> m2Threshold;
    double m3Divisor = 3000.0;
};

struct VertexTilingReport {
    Vertex x = 0;
    int m1 = 0;            // |A_0(x) n V(C)|
    int nearCubes = 0;     // |C_x|
    int m2 = 0;            // max_e |Sigma(C_x, {e}, 1)|
    std::vector<std::vector<int>> m3;  // [i][j]: |Sigma(C_x(A_i), S_j, ceil sqrt l)|
};

struct TilingReport {
    std::vector<VertexTilingReport> perVertex;
    int minM1 = 0;
    int maxM2 = 0;
    bool m1Pass = true;
    bool m2Pass = true;
    bool m3Pass = true;
    std::size_t m3Evaluated = 0;
};

TilingReport validateTiling(const CubeTiling& C, const TilingReportParams& p);

// Seeded retry: reruns with derived seeds until accept passes or attempts run out.
std::optional<CubeTiling> tileWithRetry(const SubgraphQn& g, NibbleParams p, int attempts,
                                        const std::function<bool(const CubeTiling&)>& accept, int* usedAttempt = nullptr);

// Adds host cubes on still-uncovered vertices; pool order is shuffled by seed.
std::size_t extendTilingGreedily(CubeTiling& C, const SubgraphQn& host, std::uint64_t seed);

}  // namespace hcube

#endif
