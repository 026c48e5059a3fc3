#ifndef HCUBE_MATCHING_HPP
#define HCUBE_MATCHING_HPP

#include <vector>

namespace hcube {

struct BipartiteGraph {
    int nLeft = 0;
    int nRight = 0;
    std::vector<std::vector<int>> adj;  // left -> right

    BipartiteGraph() = default;
    BipartiteGraph(int left, int right) : nLeft(left), nRight(right), adj(left) {}
    void addEdge(int l, int r) { adj[l].push_back(r); }
};

struct Matching {
    std::vector<int> left;   // partner of each left vertex, or -1
    std::vector<int> right;  // partner of each right vertex, or -1
    int size = 0;
};

Matching hopcroftKarp(const BipartiteGraph& g);

// Left vertices reachable from unmatched left vertices by alternating paths;
// N of this set is strictly smaller whenever the matching misses a left vertex.
std::vector<int> hallViolator(const BipartiteGraph& g, const Matching& m);

bool isValidMatching(const BipartiteGraph& g, const Matching& m);

}  // namespace hcube

#endif
