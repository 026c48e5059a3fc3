#include "hcube/io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hcube::io {

namespace {

[[noreturn]] void bad(const std::string& what) { throw std::invalid_argument(what); }

const json& field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) bad(std::string("json: missing field '") + key + "'");
    return j.at(key);
}

std::vector<int> dirsFromList(const std::vector<int>& dirs) {
    std::vector<int> out;
    out.reserve(dirs.size());
    for (int d : dirs) out.push_back(dirToJson(d));
    return out;
}

}  // namespace

json dirsToJson(DirMask m) {
    json a = json::array();
    for (int d = 0; m >> d; ++d)
        if ((m >> d) & 1) a.push_back(d + 1);
    return a;
}

DirMask dirsFromJson(const json& j, int n) {
    if (!j.is_array()) bad("json: direction list expected");
    DirMask m = 0;
    for (const json& x : j) {
        int d = dirFromJson(x, n);
        if ((m >> d) & 1) bad("json: repeated direction " + std::to_string(d + 1));
        m |= bit(d);
    }
    return m;
}

json dirToJson(int dir) { return dir + 1; }

int dirFromJson(const json& j, int n) {
    if (!j.is_number_integer()) bad("json: direction must be an integer");
    long long d = j.get<long long>();
    if (d < 1 || d > n) bad("json: direction " + std::to_string(d) + " outside 1.." + std::to_string(n));
    return static_cast<int>(d - 1);
}

Vertex vertexFromJson(const json& j, int n) {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0))
        bad("json: vertex must be an unsigned integer");
    Vertex v = j.get<Vertex>();
    if (n < 64 && (v >> n) != 0) bad("json: vertex " + std::to_string(v) + " outside Q^" + std::to_string(n));
    return v;
}

std::vector<Vertex> verticesFromJson(const json& j, int n) {
    if (!j.is_array()) bad("json: vertex list expected");
    std::vector<Vertex> out;
    out.reserve(j.size());
    for (const json& x : j) out.push_back(vertexFromJson(x, n));
    return out;
}

json toJson(const Subcube& c) { return {{"base", c.base}, {"dirs", dirsToJson(c.dirs)}}; }

Subcube subcubeFromJson(const json& j, int n) {
    Subcube c{vertexFromJson(field(j, "base"), n), dirsFromJson(field(j, "dirs"), n)};
    if (!c.canonical()) bad("json: subcube base has a free direction set");
    return c;
}

json toJson(const CubeTiling& t) {
    json a = json::array();
    for (const Subcube& c : t.cubes) a.push_back(toJson(c));
    return a;
}

CubeTiling tilingFromJson(const json& j, int n, int ell) {
    if (!j.is_array()) bad("json: tiling must be a list of cubes");
    CubeTiling t{n, ell, {}};
    for (const json& c : j) t.cubes.push_back(subcubeFromJson(c, n));
    return t;
}

json toJson(const FeasibleTuple& t) {
    return {{"n", t.n}, {"M", t.M}, {"eps", t.eps}, {"t", t.t}, {"m", t.m}, {"pvec", t.pvec}};
}

FeasibleTuple tupleFromJson(const json& j) {
    FeasibleTuple t;
    t.n = field(j, "n").get<int>();
    t.M = field(j, "M").get<int>();
    t.t = field(j, "t").get<double>();
    t.m = field(j, "m").get<double>();
    t.pvec = field(j, "pvec").get<ProbVector>();
    if (j.contains("eps")) t.eps = j["eps"].get<double>();
    return t;
}

json toJson(const PathSystem& ps) { return ps.paths; }

PathSystem pathSystemFromJson(const json& j, int n) {
    if (!j.is_array()) bad("json: path system must be a list of vertex arrays");
    PathSystem ps;
    for (const json& p : j) ps.paths.push_back(verticesFromJson(p, n));
    return ps;
}

json toJson(const AbsorberPair& p) {
    return {{"x", p.x}, {"y", p.y}, {"z", p.z}, {"zPrime", p.zPrime}, {"left", toJson(p.left)},
            {"right", toJson(p.right)}};
}

AbsorberPair absorberPairFromJson(const json& j, int n) {
    AbsorberPair p;
    p.x = vertexFromJson(field(j, "x"), n);
    p.y = vertexFromJson(field(j, "y"), n);
    p.z = vertexFromJson(field(j, "z"), n);
    p.zPrime = vertexFromJson(field(j, "zPrime"), n);
    p.left = subcubeFromJson(field(j, "left"), n);
    p.right = subcubeFromJson(field(j, "right"), n);
    auto edge = [](Vertex a, Vertex b, const char* name) {
        if (std::popcount(a ^ b) != 1) bad(std::string("absorber pair: ") + name + " is not a cube edge");
        return edgeBetween(a, b);
    };
    p.el = edge(p.x, p.y, "x-y");
    p.er = edge(p.x, p.z, "x-z");
    p.e = edge(p.y, p.zPrime, "y-zPrime");
    return p;
}

json toJson(const SpecialAbsorber& sa) {
    json cubes = json::array();
    for (const Subcube& c : sa.cubes) cubes.push_back(toJson(c));
    return {{"type", absorberTypeName(sa.type)}, {"x", sa.x},          {"a", dirToJson(sa.a)},
            {"b", dirToJson(sa.b)},              {"dirs", dirsFromList(sa.dirs)}, {"paths", sa.paths},
            {"cubes", cubes}};
}

SpecialAbsorber specialAbsorberFromJson(const json& j, int n) {
    SpecialAbsorber sa;
    const std::string type = field(j, "type").get<std::string>();
    if (type == "I") sa.type = AbsorberType::I;
    else if (type == "II") sa.type = AbsorberType::II;
    else if (type == "III") sa.type = AbsorberType::III;
    else bad("special absorber: unknown type '" + type + "'");
    sa.x = vertexFromJson(field(j, "x"), n);
    sa.a = dirFromJson(field(j, "a"), n);
    sa.b = dirFromJson(field(j, "b"), n);
    for (const json& d : field(j, "dirs")) sa.dirs.push_back(dirFromJson(d, n));
    for (const json& p : field(j, "paths")) sa.paths.push_back(verticesFromJson(p, n));
    if (j.contains("cubes"))
        for (const json& c : j["cubes"]) sa.cubes.push_back(subcubeFromJson(c, n));
    return sa;
}

json toJson(const SliceCoverInput& in) {
    json pairs = json::array();
    for (const auto& [u, v] : in.pairs) pairs.push_back({u, v});
    return {{"L", in.L}, {"R", in.R}, {"pairs", pairs}};
}

SliceCoverInput sliceInputFromJson(const json& j, int n) {
    SliceCoverInput in;
    if (j.contains("L")) in.L = verticesFromJson(j["L"], n);
    if (j.contains("R")) in.R = verticesFromJson(j["R"], n);
    for (const json& p : field(j, "pairs")) {
        std::vector<Vertex> uv = verticesFromJson(p, n);
        if (uv.size() != 2) bad("slice input: each pair needs two vertices");
        in.pairs.emplace_back(uv[0], uv[1]);
    }
    return in;
}

json cycleToJson(const std::vector<Vertex>& cycle) { return cycle; }

std::vector<Vertex> cycleFromJson(const json& j, int n) { return verticesFromJson(j, n); }

json toJson(const PipelineResult& r, const PipelineParams& p) {
    json stages = json::array();
    for (const StageReport& s : r.stages)
        stages.push_back({{"stage", stageName(s.stage)}, {"ok", s.ok}, {"detail", s.detail}, {"ms", s.ms}});
    const PipelineStats& st = r.stats;
    json stats = {{"treeVertices", st.treeVertices},     {"cubes", st.cubes},
                  {"coveredVertices", st.coveredVertices}, {"bondedCubes", st.bondedCubes},
                  {"nodes", st.nodes},                   {"atomicNodes", st.atomicNodes},
                  {"innerNodes", st.innerNodes},         {"pointLeaves", st.pointLeaves},
                  {"absorbedVertices", st.absorbedVertices}, {"skeletonLength", st.skeletonLength},
                  {"coverCalls", st.coverCalls},         {"almostCycleLength", st.almostCycleLength}};
    json params = {{"n", p.n},       {"s", p.s},       {"ell", p.ell},  {"q", p.sliceLength()},
                   {"D", p.D},       {"b", p.bond},    {"mode", pipelineModeName(p.mode)},
                   {"seed", p.seed}};
    json out = {{"ok", r.ok},         {"params", params},       {"stages", stages},
                {"stats", stats},     {"warnings", r.warnings}, {"cycleLength", r.cycle.size()}};
    if (!r.ok) {
        out["failedStage"] = stageName(r.failedStage);
        out["failure"] = r.failure;
    }
    return out;
}

std::vector<Vertex> readVertexList(std::istream& is, int n) {
    std::vector<Vertex> out;
    std::string line;
    while (std::getline(is, line)) {
        line = line.substr(0, line.find('#'));
        std::istringstream ls(line);
        std::string tok;
        while (ls >> tok) {
            std::size_t used = 0;
            unsigned long long v = 0;
            try {
                v = std::stoull(tok, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != tok.size() || tok[0] == '-') bad("vertex list: bad token '" + tok + "'");
            if (n < 64 && (v >> n) != 0) bad("vertex list: vertex " + tok + " outside Q^" + std::to_string(n));
            out.push_back(v);
        }
    }
    return out;
}

void writeVertexList(std::ostream& os, const std::vector<Vertex>& vs) {
    for (Vertex v : vs) os << v << '\n';
}

ProbVector readProbVector(std::istream& is) {
    ProbVector p;
    std::string line;
    while (std::getline(is, line)) {
        line = line.substr(0, line.find('#'));
        std::istringstream ls(line);
        double x;
        if (!(ls >> x)) {
            std::string rest;
            if (std::istringstream(line) >> rest) bad("pvec file: bad line '" + line + "'");
            continue;
        }
        p.push_back(x);
    }
    return p;
}

json readJsonFile(const std::string& path) {
    std::ifstream f(path);
    if (!f) bad("cannot open " + path);
    try {
        return json::parse(f);
    } catch (const json::parse_error& e) {
        bad(path + ": " + e.what());
    }
}

SubgraphQn readGraphFile(const std::string& path) {
    std::ifstream f(path);
    if (!f) bad("cannot open " + path);
    return readGraph(f);
}

}  // namespace hcube::io
