#ifndef HCUBE_ORACLES_HPP
#define HCUBE_ORACLES_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "hcube/cube.hpp"

namespace hcube {

// Simple undirected graph on 0..size()-1.
struct Graph {
    std::vector<std::vector<int>> adj;

    Graph() = default;
    explicit Graph(int n) : adj(n) {}
    int size() const { return static_cast<int>(adj.size()); }
    void addEdge(int a, int b) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    bool hasEdge(int a, int b) const;
};

Graph toGraph(const SubgraphQn& g);

enum class Outcome { Found, Unsat, Timeout };

const char* outcomeName(Outcome o);
std::ostream& operator<<(std::ostream& os, Outcome o);

struct Budget {
    std::uint64_t maxNodes = 0;  // 0: unlimited
    double timeoutMs = 0;        // 0: unlimited
};

struct HamiltonResult {
    Outcome outcome = Outcome::Unsat;
    std::vector<int> cycle;
    std::uint64_t nodes = 0;
};

// side, when given, is a proper 2-colouring used for the balance cutoff.
HamiltonResult exactHamiltonCycle(const Graph& g, const Budget& budget = {}, const std::vector<int>* side = nullptr);

struct CubeHamiltonResult {
    Outcome outcome = Outcome::Unsat;
    std::vector<Vertex> cycle;
    std::uint64_t nodes = 0;
};

CubeHamiltonResult exactHamiltonCycle(const SubgraphQn& g, const Budget& budget = {});

bool verifyHamiltonCycle(const Graph& g, const std::vector<int>& cycle);
// Closed implicitly; must visit every vertex of Q^n once along edges of g.
bool verifyHamiltonCycle(const SubgraphQn& g, const std::vector<Vertex>& cycle);
// Same checks against full Q^n when the host graph is not materialized.
bool verifyCycleInCube(int n, const std::vector<Vertex>& cycle, bool spanning);

// Subset dynamic programme over Hamilton paths from vertex 0; at most 32 vertices.
bool hamiltonianByDP(const Graph& g);

std::optional<std::vector<Edge>> exactPerfectMatching(const SubgraphQn& g);
std::size_t maximumMatchingSize(const SubgraphQn& g);

bool isConnected(const SubgraphQn& g);

}  // namespace hcube

#endif
