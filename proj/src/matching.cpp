#include "hcube/matching.hpp"

#include <limits>
#include <queue>

namespace hcube {

Matching hopcroftKarp(const BipartiteGraph& g) {
    Matching m{std::vector<int>(g.nLeft, -1), std::vector<int>(g.nRight, -1), 0};
    const int inf = std::numeric_limits<int>::max();
    std::vector<int> dist(g.nLeft), it(g.nLeft);

    auto bfs = [&] {
        std::queue<int> q;
        bool found = false;
        for (int l = 0; l < g.nLeft; ++l) {
            dist[l] = m.left[l] < 0 ? 0 : inf;
            if (dist[l] == 0) q.push(l);
        }
        while (!q.empty()) {
            int l = q.front();
            q.pop();
            for (int r : g.adj[l]) {
                int l2 = m.right[r];
                if (l2 < 0) found = true;
                else if (dist[l2] == inf) {
                    dist[l2] = dist[l] + 1;
                    q.push(l2);
                }
            }
        }
        return found;
    };

    auto dfs = [&](auto&& self, int l) -> bool {
        for (int& i = it[l]; i < static_cast<int>(g.adj[l].size()); ++i) {
            int r = g.adj[l][i];
            int l2 = m.right[r];
            if (l2 < 0 || (dist[l2] == dist[l] + 1 && self(self, l2))) {
                m.left[l] = r;
                m.right[r] = l;
                return true;
            }
        }
        dist[l] = inf;
        return false;
    };

    while (bfs()) {
        std::fill(it.begin(), it.end(), 0);
        for (int l = 0; l < g.nLeft; ++l)
            if (m.left[l] < 0 && dfs(dfs, l)) ++m.size;
    }
    return m;
}

std::vector<int> hallViolator(const BipartiteGraph& g, const Matching& m) {
    std::vector<char> seenL(g.nLeft, 0), seenR(g.nRight, 0);
    std::queue<int> q;
    for (int l = 0; l < g.nLeft; ++l)
        if (m.left[l] < 0) {
            seenL[l] = 1;
            q.push(l);
        }
    while (!q.empty()) {
        int l = q.front();
        q.pop();
        for (int r : g.adj[l]) {
            if (seenR[r]) continue;
            seenR[r] = 1;
            int l2 = m.right[r];
            if (l2 >= 0 && !seenL[l2]) {
                seenL[l2] = 1;
                q.push(l2);
            }
        }
    }
    std::vector<int> out;
    for (int l = 0; l < g.nLeft; ++l)
        if (seenL[l]) out.push_back(l);
    return out;
}

bool isValidMatching(const BipartiteGraph& g, const Matching& m) {
    if (static_cast<int>(m.left.size()) != g.nLeft || static_cast<int>(m.right.size()) != g.nRight) return false;
    int count = 0;
    for (int l = 0; l < g.nLeft; ++l) {
        int r = m.left[l];
        if (r < 0) continue;
        if (r >= g.nRight || m.right[r] != l) return false;
        bool edge = false;
        for (int x : g.adj[l]) edge |= x == r;
        if (!edge) return false;
        ++count;
    }
    for (int r = 0; r < g.nRight; ++r)
        if (m.right[r] >= 0 && m.left[m.right[r]] != r) return false;
    return count == m.size;
}

}  // namespace hcube
