#include "hcube/oracles.hpp"

#include <algorithm>
#include <chrono>
#include <ostream>
#include <stdexcept>

#include "hcube/matching.hpp"

namespace hcube {

bool Graph::hasEdge(int a, int b) const {
    const auto& row = adj[a].size() <= adj[b].size() ? adj[a] : adj[b];
    int other = adj[a].size() <= adj[b].size() ? b : a;
    return std::find(row.begin(), row.end(), other) != row.end();
}

Graph toGraph(const SubgraphQn& g) {
    Graph out(static_cast<int>(g.order()));
    for (Vertex v = 0; v < g.order(); ++v)
        for (int d : directionsOf(g.adj(v))) out.adj[v].push_back(static_cast<int>(v ^ bit(d)));
    return out;
}

const char* outcomeName(Outcome o) {
    switch (o) {
        case Outcome::Found: return "found";
        case Outcome::Unsat: return "unsat";
        case Outcome::Timeout: return "timeout";
    }
    return "?";
}

std::ostream& operator<<(std::ostream& os, Outcome o) { return os << outcomeName(o); }

namespace {

// Exact search over edge states. Each vertex must end with exactly two chosen
// edges; chosen edges form vertex-disjoint path fragments whose endpoints are
// tracked so no edge may close a cycle early.
class EdgeSearch {
public:
    EdgeSearch(const Graph& g, const Budget& b) : g_(g), n_(g.size()), budget_(b) {
        start_ = std::chrono::steady_clock::now();
        inc_.resize(n_);
        for (int a = 0; a < n_; ++a)
            for (int b2 : g.adj[a])
                if (a < b2) {
                    inc_[a].push_back(static_cast<int>(edges_.size()));
                    inc_[b2].push_back(static_cast<int>(edges_.size()));
                    edges_.push_back({a, b2});
                }
        st_.assign(edges_.size(), kUndecided);
        in_.assign(n_, 0);
        und_.resize(n_);
        end_.resize(n_);
        for (int v = 0; v < n_; ++v) {
            und_[v] = static_cast<int>(inc_[v].size());
            end_[v] = v;
        }
        disc_.resize(n_);
        low_.resize(n_);
    }

    HamiltonResult run() {
        HamiltonResult r;
        for (int v = 0; v < n_; ++v) queue_.push_back(v);
        bool ok = search();
        r.nodes = nodes_;
        if (ok) {
            r.outcome = Outcome::Found;
            r.cycle = extractCycle();
        } else {
            r.outcome = timedOut_ ? Outcome::Timeout : Outcome::Unsat;
        }
        return r;
    }

private:
    static constexpr char kUndecided = 0, kIn = 1, kOut = 2;

    struct Change {
        bool isEdge;
        int idx;
        int old;
    };

    struct Frame {
        int v, parentEdge, i;
    };

    int other(int e, int v) const { return edges_[e].first == v ? edges_[e].second : edges_[e].first; }

    bool expired() {
        if (timedOut_) return true;
        if (budget_.maxNodes && nodes_ > budget_.maxNodes) timedOut_ = true;
        if (budget_.timeoutMs > 0 && (nodes_ & 255) == 0) {
            double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
            if (ms > budget_.timeoutMs) timedOut_ = true;
        }
        return timedOut_;
    }

    void setEnd(int v, int w) {
        trail_.push_back({false, v, end_[v]});
        end_[v] = w;
    }

    bool setEdge(int e, char state) {
        if (st_[e] == state) return true;
        if (st_[e] != kUndecided) return false;
        trail_.push_back({true, e, kUndecided});
        st_[e] = state;
        auto [a, b] = edges_[e];
        --und_[a];
        --und_[b];
        queue_.push_back(a);
        queue_.push_back(b);
        if (state == kOut) return true;
        ++in_[a];
        ++in_[b];
        ++chosen_;
        if (in_[a] > 2 || in_[b] > 2) return false;
        int ea = end_[a], eb = end_[b];
        if (ea == b) return chosen_ == n_;  // closes the fragment: only legal as the final edge
        setEnd(ea, eb);
        setEnd(eb, ea);
        if (chosen_ < n_ - 1)
            for (int f : inc_[ea])
                if (st_[f] == kUndecided && other(f, ea) == eb) pendingOut_.push_back(f);
        return true;
    }

    bool propagate() {
        while (!queue_.empty() || !pendingOut_.empty()) {
            if (!pendingOut_.empty()) {
                int f = pendingOut_.back();
                pendingOut_.pop_back();
                if (st_[f] == kIn) return false;
                if (!setEdge(f, kOut)) return false;
                continue;
            }
            int v = queue_.back();
            queue_.pop_back();
            if (in_[v] == 2) {
                if (und_[v] > 0)
                    for (int f : inc_[v])
                        if (st_[f] == kUndecided && !setEdge(f, kOut)) return false;
            } else if (in_[v] + und_[v] < 2) {
                return false;
            } else if (in_[v] + und_[v] == 2 && und_[v] > 0) {
                for (int f : inc_[v])
                    if (st_[f] == kUndecided && !setEdge(f, kIn)) return false;
            }
        }
        return true;
    }

    void undo(std::size_t mark) {
        while (trail_.size() > mark) {
            Change c = trail_.back();
            trail_.pop_back();
            if (!c.isEdge) {
                end_[c.idx] = c.old;
                continue;
            }
            auto [a, b] = edges_[c.idx];
            if (st_[c.idx] == kIn) {
                --in_[a];
                --in_[b];
                --chosen_;
            }
            ++und_[a];
            ++und_[b];
            st_[c.idx] = kUndecided;
        }
        queue_.clear();
        pendingOut_.clear();
    }

    // 2-connectivity of the graph of non-excluded edges.
    bool biconnected() {
        std::fill(disc_.begin(), disc_.end(), -1);
        int timer = 0, visited = 1, rootChildren = 0;
        std::vector<Frame>& stack = frames_;
        stack.clear();
        stack.push_back({0, -1, 0});
        disc_[0] = low_[0] = timer++;
        while (!stack.empty()) {
            Frame& f = stack.back();
            int v = f.v;
            int next = -1, via = -1;
            while (f.i < static_cast<int>(inc_[v].size())) {
                int e = inc_[v][f.i++];
                if (st_[e] == kOut || e == f.parentEdge) continue;
                int w = other(e, v);
                if (disc_[w] < 0) {
                    next = w;
                    via = e;
                    break;
                }
                low_[v] = std::min(low_[v], disc_[w]);
            }
            if (next >= 0) {
                disc_[next] = low_[next] = timer++;
                ++visited;
                if (v == 0) ++rootChildren;
                stack.push_back({next, via, 0});
                continue;
            }
            int pe = f.parentEdge;
            stack.pop_back();
            if (pe >= 0) {
                int parent = other(pe, v);
                low_[parent] = std::min(low_[parent], low_[v]);
                if (parent != 0 && low_[v] >= disc_[parent]) return false;
            }
        }
        return visited == n_ && rootChildren <= 1;
    }

    bool search() {
        ++nodes_;
        if (expired()) return false;
        if (!propagate()) return false;
        if (chosen_ == n_) return true;
        bool check = n_ <= 512 || (nodes_ & 31) == 0;
        if (check && !biconnected()) return false;
        // Branch at the open vertex with the fewest undecided edges.
        int best = -1;
        for (int v = 0; v < n_; ++v)
            if (in_[v] < 2 && und_[v] > 0 && (best < 0 || und_[v] < und_[best] || (und_[v] == und_[best] && in_[v] > in_[best])))
                best = v;
        if (best < 0) return false;
        int pick = -1;
        for (int e : inc_[best])
            if (st_[e] == kUndecided && (pick < 0 || und_[other(e, best)] < und_[other(pick, best)])) pick = e;
        for (char choice : {kIn, kOut}) {
            std::size_t mark = trail_.size();
            if (setEdge(pick, choice) && search()) return true;
            undo(mark);
            if (timedOut_) return false;
        }
        return false;
    }

    std::vector<int> extractCycle() const {
        std::vector<std::vector<int>> nb(n_);
        for (std::size_t e = 0; e < edges_.size(); ++e)
            if (st_[e] == kIn) {
                nb[edges_[e].first].push_back(edges_[e].second);
                nb[edges_[e].second].push_back(edges_[e].first);
            }
        std::vector<int> cycle{0};
        int prev = -1, cur = 0;
        while (true) {
            int nxt = nb[cur][0] == prev ? nb[cur][1] : nb[cur][0];
            if (nxt == 0) break;
            cycle.push_back(nxt);
            prev = cur;
            cur = nxt;
        }
        return cycle;
    }

    const Graph& g_;
    int n_;
    Budget budget_;
    std::chrono::steady_clock::time_point start_;
    std::uint64_t nodes_ = 0;
    bool timedOut_ = false;
    std::vector<std::pair<int, int>> edges_;
    std::vector<std::vector<int>> inc_;
    std::vector<char> st_;
    std::vector<int> in_, und_, end_;
    int chosen_ = 0;
    std::vector<Change> trail_;
    std::vector<int> queue_, pendingOut_;
    std::vector<int> disc_, low_;
    std::vector<Frame> frames_;
};

}  // namespace

HamiltonResult exactHamiltonCycle(const Graph& g, const Budget& budget, const std::vector<int>* side) {
    int n = g.size();
    HamiltonResult r;
    if (n < 3) return r;
    int s = 0;
    for (int v = 0; v < n; ++v) {
        if (g.adj[v].size() < 2) return r;
        if (g.adj[v].size() < g.adj[s].size()) s = v;
    }
    if (side) {
        int zero = 0;
        for (int v = 0; v < n; ++v) zero += (*side)[v] == 0;
        if (2 * zero != n) return r;
    }
    EdgeSearch search(g, budget);
    r = search.run();
    if (r.outcome == Outcome::Found && !verifyHamiltonCycle(g, r.cycle))
        throw std::logic_error("Hamilton search returned an invalid cycle");
    return r;
}

CubeHamiltonResult exactHamiltonCycle(const SubgraphQn& g, const Budget& budget) {
    Graph h = toGraph(g);
    std::vector<int> side(h.size());
    for (int v = 0; v < h.size(); ++v) side[v] = parity(static_cast<Vertex>(v));
    HamiltonResult r = exactHamiltonCycle(h, budget, &side);
    CubeHamiltonResult out{r.outcome, {}, r.nodes};
    for (int v : r.cycle) out.cycle.push_back(static_cast<Vertex>(v));
    if (out.outcome == Outcome::Found && !verifyHamiltonCycle(g, out.cycle))
        throw std::logic_error("Hamilton search returned an invalid cube cycle");
    return out;
}

bool verifyHamiltonCycle(const Graph& g, const std::vector<int>& cycle) {
    int n = g.size();
    if (static_cast<int>(cycle.size()) != n || n < 3) return false;
    std::vector<char> seen(n, 0);
    for (int v : cycle) {
        if (v < 0 || v >= n || seen[v]) return false;
        seen[v] = 1;
    }
    for (int i = 0; i < n; ++i)
        if (!g.hasEdge(cycle[i], cycle[(i + 1) % n])) return false;
    return true;
}

bool verifyHamiltonCycle(const SubgraphQn& g, const std::vector<Vertex>& cycle) {
    if (cycle.size() != g.order() || cycle.size() < 4) return false;
    std::vector<char> seen(g.order(), 0);
    for (Vertex v : cycle) {
        if (v >= g.order() || seen[v]) return false;
        seen[v] = 1;
    }
    for (std::size_t i = 0; i < cycle.size(); ++i)
        if (!g.hasEdge(cycle[i], cycle[(i + 1) % cycle.size()])) return false;
    return true;
}

bool verifyCycleInCube(int n, const std::vector<Vertex>& cycle, bool spanning) {
    checkDim(n);
    if (cycle.size() < 4) return false;
    if (spanning && (n > kMaxDenseDim || cycle.size() != (std::size_t{1} << n))) return false;
    std::vector<Vertex> sorted = cycle;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) return false;
    for (std::size_t i = 0; i < cycle.size(); ++i) {
        Vertex a = cycle[i], b = cycle[(i + 1) % cycle.size()];
        if ((a | b) & ~lowMask(n)) return false;
        if (std::popcount(a ^ b) != 1) return false;
    }
    return true;
}

bool hamiltonianByDP(const Graph& g) {
    int n = g.size();
    if (n > 32) throw std::invalid_argument("subset DP limited to 32 vertices");
    if (n < 3) return false;
    std::vector<std::uint32_t> nb(n, 0);
    for (int v = 0; v < n; ++v)
        for (int w : g.adj[v]) nb[v] |= std::uint32_t{1} << w;
    if (n > 26) throw std::invalid_argument("subset DP table too large");
    // ends[mask]: endpoints of paths from 0 that visit exactly mask (mask holds 0).
    std::vector<std::uint32_t> ends(std::size_t{1} << n, 0);
    ends[1] = 1;
    for (std::uint32_t mask = 1; mask < (std::uint32_t{1} << n); mask += 2) {
        std::uint32_t e = ends[mask];
        while (e) {
            int v = std::countr_zero(e);
            e &= e - 1;
            std::uint32_t ext = nb[v] & ~mask;
            while (ext) {
                int w = std::countr_zero(ext);
                ext &= ext - 1;
                ends[mask | (std::uint32_t{1} << w)] |= std::uint32_t{1} << w;
            }
        }
    }
    std::uint32_t full = n == 32 ? ~std::uint32_t{0} : (std::uint32_t{1} << n) - 1;
    return (ends[full] & nb[0]) != 0;
}

namespace {

BipartiteGraph parityBipartite(const SubgraphQn& g, std::vector<Vertex>& evens, std::vector<Vertex>& odds,
                               std::vector<int>& index) {
    index.assign(g.order(), -1);
    for (Vertex v = 0; v < g.order(); ++v) {
        auto& side = parity(v) ? odds : evens;
        index[v] = static_cast<int>(side.size());
        side.push_back(v);
    }
    BipartiteGraph b(static_cast<int>(evens.size()), static_cast<int>(odds.size()));
    for (std::size_t i = 0; i < evens.size(); ++i)
        for (int d : directionsOf(g.adj(evens[i]))) b.addEdge(static_cast<int>(i), index[evens[i] ^ bit(d)]);
    return b;
}

}  // namespace

std::size_t maximumMatchingSize(const SubgraphQn& g) {
    std::vector<Vertex> evens, odds;
    std::vector<int> index;
    return static_cast<std::size_t>(hopcroftKarp(parityBipartite(g, evens, odds, index)).size);
}

std::optional<std::vector<Edge>> exactPerfectMatching(const SubgraphQn& g) {
    std::vector<Vertex> evens, odds;
    std::vector<int> index;
    Matching m = hopcroftKarp(parityBipartite(g, evens, odds, index));
    if (static_cast<std::size_t>(m.size) * 2 != g.order()) return std::nullopt;
    std::vector<Edge> out;
    for (std::size_t i = 0; i < evens.size(); ++i) out.push_back(edgeBetween(evens[i], odds[m.left[i]]));
    return out;
}

bool isConnected(const SubgraphQn& g) {
    std::vector<char> seen(g.order(), 0);
    std::vector<Vertex> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
        Vertex v = stack.back();
        stack.pop_back();
        for (int d : directionsOf(g.adj(v))) {
            Vertex w = v ^ bit(d);
            if (!seen[w]) {
                seen[w] = 1;
                ++count;
                stack.push_back(w);
            }
        }
    }
    return count == g.order();
}

}  // namespace hcube
