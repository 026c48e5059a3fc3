#include "hcube/random_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace hcube {

namespace {

constexpr std::uint64_t kBinomialTag = tag("binomial-edge");
constexpr std::uint64_t kReservoirTag = tag("reservoir-vertex");
constexpr std::uint64_t kLevelTag = tag("level-biased-edge");
constexpr std::uint64_t kBranchTag = tag("percolation-branch");
constexpr std::uint64_t kPercReservoirTag = tag("percolation-reservoir");

void checkProb(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("probability outside [0,1]");
}

}  // namespace

SubgraphQn sampleBinomial(int n, double p, std::uint64_t seed) {
    checkProb(p);
    SubgraphQn g(n);
    for (Vertex v = 0; v < g.order(); ++v) {
        DirMask up = ~v & lowMask(n);
        while (up) {
            int d = std::countr_zero(up);
            up &= up - 1;
            if (edgeUniform(seed, kBinomialTag, {v, d}) < p) g.add(v, d);
        }
    }
    return g;
}

bool inReservoir(double delta, std::uint64_t seed, Vertex v) { return vertexUniform(seed, kReservoirTag, v) < delta; }

std::vector<Vertex> sampleReservoir(int n, double delta, std::uint64_t seed) {
    checkProb(delta);
    checkDim(n);
    if (n > kMaxDenseDim) throw std::invalid_argument("reservoir enumeration needs n <= 26");
    std::vector<Vertex> out;
    for (Vertex v = 0; v < (Vertex{1} << n); ++v)
        if (inReservoir(delta, seed, v)) out.push_back(v);
    return out;
}

void checkProbVector(const ProbVector& pvec, int n) {
    if (static_cast<int>(pvec.size()) != n) throw std::invalid_argument("probability vector must have n components");
    for (double p : pvec) checkProb(p);
}

SubgraphQn sampleLevelBiased(int n, const ProbVector& pvec, Vertex root, std::uint64_t seed) {
    checkProbVector(pvec, n);
    checkVertex(root, n);
    SubgraphQn g(n);
    for (Vertex v = 0; v < g.order(); ++v) {
        DirMask up = ~v & lowMask(n);
        while (up) {
            int d = std::countr_zero(up);
            up &= up - 1;
            Edge e{v, d};
            if (edgeUniform(seed, kLevelTag, e) < pvec[levelFrom(lowerEnd(e, root), root)]) g.add(v, d);
        }
    }
    return g;
}

PercolationModel::PercolationModel(int n, ProbVector pvec, int M, Vertex root, std::uint64_t seed, double reservoirDelta)
    : n_(n), pvec_(std::move(pvec)), M_(M), root_(root), seed_(seed), delta_(reservoirDelta) {
    checkProbVector(pvec_, n);
    checkVertex(root, n);
    checkProb(reservoirDelta);
    if (M < 1) throw std::invalid_argument("branching cap M must be at least 1");
}

bool PercolationModel::inW(const Edge& e) const {
    return edgeUniform(seed_, kLevelTag, e) < pvec_[levelFrom(lowerEnd(e, root_), root_)];
}

DirMask PercolationModel::upW(Vertex x) const {
    DirMask up = upDirections(x, root_, n_), out = 0;
    while (up) {
        int d = std::countr_zero(up);
        up &= up - 1;
        if (inW(edgeBetween(x, x ^ bit(d)))) out |= bit(d);
    }
    return out;
}

DirMask PercolationModel::chosen(Vertex x) const {
    DirMask up = upW(x);
    if (std::popcount(up) < M_) return 0;
    std::vector<int> dirs = directionsOf(up);
    Rng rng(seed_, mix64(kBranchTag ^ mix64(x)));
    DirMask out = 0;
    // Partial Fisher-Yates: the first M positions form a uniform M-subset.
    for (int k = 0; k < M_; ++k) {
        std::size_t j = k + static_cast<std::size_t>(rng.below(dirs.size() - k));
        std::swap(dirs[k], dirs[j]);
        out |= bit(dirs[k]);
    }
    return out;
}

bool PercolationModel::inWPrime(const Edge& e) const {
    Vertex low = lowerEnd(e, root_);
    return (chosen(low) >> e.dir) & 1;
}

bool PercolationModel::inR(Vertex v) const { return vertexUniform(seed_, kPercReservoirTag, v) < delta_; }

bool PercolationModel::inP(const Edge& e) const { return !inR(e.v) && !inR(e.other()) && inWPrime(e); }

PercolationSample samplePercolation(int n, const ProbVector& pvec, int M, std::uint64_t seed, Vertex root,
                                    double reservoirDelta) {
    PercolationModel model(n, pvec, M, root, seed, reservoirDelta);
    PercolationSample s{SubgraphQn(n), SubgraphQn(n), {}, SubgraphQn(n)};
    std::vector<char> inR(s.W.order());
    for (Vertex v = 0; v < s.W.order(); ++v)
        if ((inR[v] = model.inR(v))) s.R.push_back(v);
    for (Vertex x = 0; x < s.W.order(); ++x) {
        DirMask w = model.upW(x);
        DirMask c = model.chosen(x);
        for (int d : directionsOf(w)) {
            Edge e = edgeBetween(x, x ^ bit(d));
            s.W.add(e);
            if ((c >> d) & 1) {
                s.WPrime.add(e);
                if (!inR[x] && !inR[x ^ bit(d)]) s.P.add(e);
            }
        }
    }
    return s;
}

double binomialUpperTail(int trials, double y, int k) {
    checkProb(y);
    if (k <= 0) return 1.0;
    if (k > trials) return 0.0;
    if (y == 0.0) return 0.0;
    if (y == 1.0) return 1.0;
    double ly = std::log(y), lq = std::log1p(-y);
    auto logTerm = [&](int j) {
        return std::lgamma(trials + 1.0) - std::lgamma(j + 1.0) - std::lgamma(trials - j + 1.0) + j * ly + (trials - j) * lq;
    };
    auto logSum = [&](int lo, int hi) {
        double mx = -std::numeric_limits<double>::infinity();
        for (int j = lo; j <= hi; ++j) mx = std::max(mx, logTerm(j));
        double acc = 0.0;
        for (int j = lo; j <= hi; ++j) acc += std::exp(logTerm(j) - mx);
        return std::exp(mx) * acc;
    };
    // Sum the side that excludes the mode so the result keeps relative accuracy.
    if (static_cast<double>(k) > trials * y) return std::min(1.0, logSum(k, trials));
    return std::clamp(1.0 - logSum(0, k - 1), 0.0, 1.0);
}

double fLevel(int i, double y, int n, int M) {
    if (i < 0 || i > n - M) throw std::invalid_argument("level " + std::to_string(i) + " exceeds n - M");
    checkProb(y);
    return 0.99 * 0.99 * static_cast<double>(M) / (n - i) * binomialUpperTail(n - i, y, M);
}

FeasibleTuple solveFeasibleTuple(int n, int M, double eps, bool strict, const FeasibilityBounds& bounds) {
    int top = lastFeasibleLevel(n);
    if (strict) {
        if (M <= 1600) throw FeasibilityError("strict feasibility needs M > 1600");
        if (!(eps > 0.0 && eps < 0.1)) throw FeasibilityError("strict feasibility needs 0 < eps < 1/10");
        if (top > n - M) throw FeasibilityError("strict feasibility: n too small for M (levels up to 9n/10 exceed n - M)");
    }
    if (M < 1) throw std::invalid_argument("branching cap M must be at least 1");
    if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("eps must lie in (0,1]");
    if (top > n - M) throw std::invalid_argument("levels up to 9n/10 exceed n - M; increase n or decrease M");

    FeasibleTuple out;
    out.n = n;
    out.M = M;
    out.eps = eps;
    out.pvec.assign(n, 0.0);
    std::vector<double> atEps(top + 1);
    for (int i = 0; i <= top; ++i) atEps[i] = fLevel(i, eps, n, M);
    out.m = *std::min_element(atEps.begin(), atEps.end());
    out.t = out.m * n;
    if (!(out.m > 0.0)) throw FeasibilityError("bisection cannot bracket: f_i(eps) vanishes");
    if (strict && !(600.0 / n < out.m && out.m < 100.0 * M / n))
        throw FeasibilityError("strict feasibility bound 600/n < m < 100M/n violated");
    if (bounds.tLow && !(out.t > *bounds.tLow)) throw FeasibilityError("t below requested lower bound");
    if (bounds.tHigh && !(out.t < *bounds.tHigh)) throw FeasibilityError("t above requested upper bound");

    for (int i = 0; i <= top; ++i) {
        if (atEps[i] == out.m) {
            out.pvec[i] = eps;
            continue;
        }
        double lo = 0.0, hi = eps;
        double best = eps, bestErr = std::abs(atEps[i] - out.m);
        for (int it = 0; it < 400 && bestErr > 1e-13; ++it) {
            double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            double f = fLevel(i, mid, n, M);
            double err = std::abs(f - out.m);
            if (err < bestErr) {
                bestErr = err;
                best = mid;
            }
            if (f < out.m) lo = mid;
            else hi = mid;
        }
        if (bestErr > 1e-12) throw FeasibilityError("bisection failed to reach 1e-12 at level " + std::to_string(i));
        out.pvec[i] = best;
    }
    return out;
}

namespace {

bool below(Vertex x, Vertex y, Vertex root) { return ((x ^ root) & ~(y ^ root)) == 0; }

struct ChainWalker {
    int n;
    const SubgraphQn* G;
    const VertexSet& avoid;
    Vertex y;

    bool blocked(Vertex v) const { return avoid.count(v) > 0; }
    bool step(Vertex a, int d) const { return G == nullptr || G->has(a, d); }
};

}  // namespace

std::uint64_t factorial(int k) {
    if (k < 0 || k > 20) throw std::overflow_error("factorial argument outside [0,20]");
    std::uint64_t r = 1;
    for (int i = 2; i <= k; ++i) r *= static_cast<std::uint64_t>(i);
    return r;
}

ChainFamily enumerateChains(int n, Vertex x, Vertex y, Vertex root, const SubgraphQn* G, const VertexSet& avoid,
                            bool wantList) {
    checkVertex(x, n);
    checkVertex(y, n);
    checkVertex(root, n);
    if (G && G->dim() != n) throw std::invalid_argument("graph dimension mismatch");
    if (!below(x, y, root)) throw std::invalid_argument("x must lie below y with respect to root");
    ChainFamily fam{x, y, root, 0, false, {}};
    DirMask diff = x ^ y;
    int dist = std::popcount(diff);
    if (dist > kChainCountCap) throw std::overflow_error("chain count beyond exact range");
    if (avoid.count(x) || avoid.count(y)) {
        fam.listed = wantList && dist <= kChainListCap;
        return fam;
    }
    ChainWalker w{n, G, avoid, y};
    if (wantList && dist <= kChainListCap) {
        fam.listed = true;
        std::vector<Vertex> cur{x};
        auto rec = [&](auto&& self, Vertex v) -> void {
            if (v == y) {
                fam.chains.push_back(cur);
                return;
            }
            DirMask rest = v ^ y;
            while (rest) {
                int d = std::countr_zero(rest);
                rest &= rest - 1;
                Vertex u = v ^ bit(d);
                if (!w.step(v, d) || w.blocked(u)) continue;
                cur.push_back(u);
                self(self, u);
                cur.pop_back();
            }
        };
        rec(rec, x);
        fam.count = fam.chains.size();
        return fam;
    }
    // Count over subsets of the differing directions already flipped.
    std::vector<int> dirs = directionsOf(diff);
    std::vector<unsigned __int128> ways(std::size_t{1} << dist, 0);
    ways[0] = 1;
    for (std::size_t s = 0; s < ways.size(); ++s) {
        if (ways[s] == 0) continue;
        Vertex v = x;
        for (int k = 0; k < dist; ++k)
            if ((s >> k) & 1) v ^= bit(dirs[k]);
        for (int k = 0; k < dist; ++k) {
            if ((s >> k) & 1) continue;
            Vertex u = v ^ bit(dirs[k]);
            if (!w.step(v, dirs[k]) || w.blocked(u)) continue;
            ways[s | (std::size_t{1} << k)] += ways[s];
        }
    }
    unsigned __int128 total = ways.back();
    if (total > std::numeric_limits<std::uint64_t>::max()) throw std::overflow_error("chain count overflow");
    fam.count = static_cast<std::uint64_t>(total);
    return fam;
}

VertexSet chainVertices(int n, Vertex x, Vertex y, Vertex root, const SubgraphQn* G) {
    VertexSet out;
    if (!below(x, y, root)) return out;
    DirMask diff = x ^ y;
    int dist = std::popcount(diff);
    if (dist > 24) throw std::overflow_error("chain vertex enumeration beyond range");
    std::vector<int> dirs = directionsOf(diff);
    std::size_t states = std::size_t{1} << dist;
    auto vertexOf = [&](std::size_t s) {
        Vertex v = x;
        for (int k = 0; k < dist; ++k)
            if ((s >> k) & 1) v ^= bit(dirs[k]);
        return v;
    };
    std::vector<char> fwd(states, 0), bwd(states, 0);
    fwd[0] = 1;
    for (std::size_t s = 0; s < states; ++s) {
        if (!fwd[s]) continue;
        Vertex v = vertexOf(s);
        for (int k = 0; k < dist; ++k)
            if (!((s >> k) & 1) && (G == nullptr || G->has(v, dirs[k]))) fwd[s | (std::size_t{1} << k)] = 1;
    }
    bwd[states - 1] = 1;
    for (std::size_t s = states; s-- > 0;) {
        if (!bwd[s]) continue;
        Vertex v = vertexOf(s);
        for (int k = 0; k < dist; ++k)
            if (((s >> k) & 1) && (G == nullptr || G->has(v, dirs[k]))) bwd[s & ~(std::size_t{1} << k)] = 1;
    }
    if (!fwd[states - 1]) return out;
    for (std::size_t s = 0; s < states; ++s)
        if (fwd[s] && bwd[s]) out.insert(vertexOf(s));
    (void)n;
    return out;
}

std::uint64_t chainsDisjointFrom(int n, Vertex x, Vertex y, Vertex xp, Vertex yp, Vertex root, const SubgraphQn* G) {
    VertexSet blocked = chainVertices(n, xp, yp, root, G);
    return enumerateChains(n, x, y, root, G, blocked, false).count;
}

std::uint64_t levelIntersectionCount(int m, int mPrime, int b, int i) {
    if (!(m < i && i <= b && b <= mPrime)) return 0;
    return binomial(b - m - 1, i - m - 1) * factorial(mPrime - i) * factorial(i - m);
}

std::uint64_t admissiblePatternCountBrute(int i, int l, int s, int k) {
    int N = k - 2;
    if (N < 0 || N > 30) throw std::invalid_argument("brute-force pattern count needs 2 <= k <= 32");
    if (i < 0 || i > N) return 0;
    std::uint64_t count = 0;
    const std::uint64_t end = std::uint64_t{1} << N;
    // Gosper's hack walks the i-subsets of [N] in increasing order.
    for (std::uint64_t A = (std::uint64_t{1} << i) - 1; A < end;) {
        int longest = 0, runs = 0, cur = 0;
        for (int a = 0; a < N; ++a) {
            if ((A >> a) & 1) {
                cur = 0;
            } else {
                if (cur == 0) ++runs;
                longest = std::max(longest, ++cur);
            }
        }
        count += (longest == l && runs == s);
        if (A == 0) break;
        std::uint64_t c = A & (0 - A), r = A + c;
        A = (((r ^ A) >> 2) / c) | r;
    }
    return count;
}

std::uint64_t admissiblePatternCountDP(int i, int l, int s, int k) {
    int N = k - 2;
    if (N < 0 || i < 0 || i > N) return 0;
    int z = N - i;
    if (z == 0) return (l == 0 && s == 0) ? 1 : 0;
    if (l < 1 || s < 1 || s > z) return 0;
    // Compositions of z into s parts bounded by cap.
    auto bounded = [&](int cap) {
        std::vector<std::vector<unsigned __int128>> c(s + 1, std::vector<unsigned __int128>(z + 1, 0));
        c[0][0] = 1;
        for (int p = 1; p <= s; ++p)
            for (int total = 0; total <= z; ++total)
                for (int part = 1; part <= std::min(cap, total); ++part) c[p][total] += c[p - 1][total - part];
        return c[s][z];
    };
    unsigned __int128 runs = bounded(l) - bounded(l - 1);
    unsigned __int128 r = runs * binomial(i + 1, s);
    if (r > std::numeric_limits<std::uint64_t>::max()) throw std::overflow_error("pattern count overflow");
    return static_cast<std::uint64_t>(r);
}

std::uint64_t admissiblePatternCount(int i, int l, int s, int k) {
    if (k < 3) throw std::invalid_argument("admissible patterns need k >= 3");
    return k <= 22 ? admissiblePatternCountBrute(i, l, s, k) : admissiblePatternCountDP(i, l, s, k);
}

}  // namespace hcube
