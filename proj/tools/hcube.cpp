// Command line front end: sample, tile, tree, cover, absorb, construct,
// hitting, threshold. Exit codes: 0 done, 1 the result failed its checks,
// 2 bad input.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hcube/absorber.hpp"
#include "hcube/cube.hpp"
#include "hcube/harness.hpp"
#include "hcube/io.hpp"
#include "hcube/nibble.hpp"
#include "hcube/pathcover.hpp"
#include "hcube/pipeline.hpp"
#include "hcube/random_models.hpp"
#include "hcube/tree.hpp"

using namespace hcube;
using io::json;

namespace {

constexpr int kFailed = 1;
constexpr int kBadInput = 2;

// Writes to path, or to stdout when path is empty or "-".
class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty() && path != "-") {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_) throw std::invalid_argument("cannot write " + path);
        }
    }
    std::ostream& os() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

void writeJson(const std::string& path, const json& j) {
    Output out(path);
    out.os() << j.dump(2) << '\n';
}

// A JSON literal when the argument starts like one, a file path otherwise.
json loadJson(const std::string& arg) {
    const auto first = arg.find_first_not_of(" \t\n");
    if (first != std::string::npos && (arg[first] == '[' || arg[first] == '{')) return json::parse(arg);
    return io::readJsonFile(arg);
}

VertexMask maskOf(int n, const std::vector<Vertex>& vs) {
    VertexMask m(std::size_t{1} << n, 0);
    for (Vertex v : vs) m[v] = 1;
    return m;
}

std::vector<Vertex> listOf(const VertexMask& m) {
    std::vector<Vertex> out;
    for (Vertex v = 0; v < m.size(); ++v)
        if (m[v]) out.push_back(v);
    return out;
}

void requireDim(int n, int lo, int hi, const char* what) {
    if (n < lo || n > hi)
        throw std::invalid_argument(std::string(what) + " needs " + std::to_string(lo) + " <= n <= " +
                                    std::to_string(hi));
}

// ---- sample ----

struct SampleOpts {
    std::string model = "binomial";
    int n = 10;
    double p = 0.5;
    std::string pvecFile;
    int M = 1;
    std::uint64_t seed = 0;
    Vertex root = 0;
    double delta = 0.01;
    std::string part = "P";
    bool strict = false;
    std::string out;
    std::string tupleOut;
};

ProbVector pvecFor(const SampleOpts& o) {
    if (!o.pvecFile.empty()) {
        std::ifstream f(o.pvecFile);
        if (!f) throw std::invalid_argument("cannot open " + o.pvecFile);
        ProbVector pv = io::readProbVector(f);
        checkProbVector(pv, o.n);
        return pv;
    }
    FeasibleTuple t = solveFeasibleTuple(o.n, o.M, o.p, o.strict);
    if (!o.tupleOut.empty()) writeJson(o.tupleOut, io::toJson(t));
    return t.pvec;
}

int runSample(const SampleOpts& o) {
    requireDim(o.n, 1, kMaxDenseDim, "sample");
    Output out(o.out);
    if (o.model == "binomial") {
        writeGraph(out.os(), sampleBinomial(o.n, o.p, o.seed));
    } else if (o.model == "levelbiased") {
        writeGraph(out.os(), sampleLevelBiased(o.n, pvecFor(o), o.root, o.seed));
    } else if (o.model == "percolation") {
        PercolationSample s = samplePercolation(o.n, pvecFor(o), o.M, o.seed, o.root, o.delta);
        if (o.part == "W") writeGraph(out.os(), s.W);
        else if (o.part == "Wprime") writeGraph(out.os(), s.WPrime);
        else if (o.part == "P") writeGraph(out.os(), s.P);
        else if (o.part == "R") io::writeVertexList(out.os(), s.R);
        else throw std::invalid_argument("unknown part " + o.part);
    } else if (o.model == "reservoir") {
        io::writeVertexList(out.os(), sampleReservoir(o.n, o.delta, o.seed));
    } else {
        throw std::invalid_argument("unknown model " + o.model);
    }
    return 0;
}

// ---- tile ----

struct TileOpts {
    std::string in;
    int ell = 2;
    double eps = 0.1;
    int rounds = 30;
    std::string schedule = "measured";
    std::uint64_t seed = 0;
    bool greedy = false;
    std::string out;
    std::string report;
};

int runTile(const TileOpts& o) {
    SubgraphQn g = io::readGraphFile(o.in);
    NibbleParams p;
    p.ell = o.ell;
    p.eps = o.eps;
    p.rounds = o.rounds;
    p.seed = o.seed;
    if (o.schedule == "measured") p.schedule = DSchedule::Measured;
    else if (o.schedule == "geometric") p.schedule = DSchedule::Geometric;
    else throw std::invalid_argument("unknown schedule " + o.schedule);
    NibbleTrace trace;
    CubeTiling C = nibbleTiling(g, p, &trace);
    std::size_t extra = o.greedy ? extendTilingGreedily(C, g, o.seed) : 0;
    writeJson(o.out, io::toJson(C));

    TilingViolations v = checkTiling(C, g);
    if (!o.report.empty()) {
        TilingReport r = validateTiling(C, {});
        std::size_t covered = 0;
        for (char c : coveredMask(C)) covered += c != 0;
        json rep = {{"n", g.dim()},
                    {"ell", o.ell},
                    {"cubes", C.cubes.size()},
                    {"greedyCubes", extra},
                    {"coveredVertices", covered},
                    {"coveredFraction", static_cast<double>(covered) / static_cast<double>(g.order())},
                    {"D", trace.D},
                    {"coveredPerRound", trace.covered},
                    {"minM1", r.minM1},
                    {"maxM2", r.maxM2},
                    {"violations",
                     {{"overlaps", v.overlaps},
                      {"missingInHost", v.missingInHost},
                      {"wrongDimension", v.wrongDimension},
                      {"nonCanonical", v.nonCanonical}}}};
        writeJson(o.report, rep);
    }
    return v.ok() ? 0 : kFailed;
}

// ---- tree ----

struct TreeOpts {
    int n = 10;
    std::string in;
    double p = 1.0;
    double eps = 1.0;
    double delta = 0.0;
    int D = 0;
    int k = 0;
    int M = 1;
    int C = 16;
    std::uint64_t seed = 0;
    std::string avoid;
    std::string out;
    std::string report;
};

int runTree(const TreeOpts& o) {
    SubgraphQn G = o.in.empty() ? (o.p >= 1.0 ? SubgraphQn::full(o.n) : sampleBinomial(o.n, o.p, o.seed))
                                : io::readGraphFile(o.in);
    const int n = G.dim();
    std::vector<Vertex> R = o.delta > 0 ? sampleReservoir(n, o.delta, o.seed) : std::vector<Vertex>{};
    std::vector<Vertex> A;
    if (!o.avoid.empty()) {
        std::ifstream f(o.avoid);
        if (!f) throw std::invalid_argument("cannot open " + o.avoid);
        A = io::readVertexList(f, n);
    }
    NearSpanningParams p;
    p.M = o.M;
    p.C = o.C;
    p.pmax = o.eps;
    p.k = o.k;
    p.degreeCap = o.D;
    p.seed = o.seed;
    TreeResult r = buildNearSpanningTree(G, maskOf(n, R), A, p);

    if (r.ok) {
        Output out(o.out);
        writeGraph(out.os(), r.tree.graph);
        std::vector<Vertex> res = listOf(r.reservoir);
        out.os() << "reservoir " << res.size() << '\n';
        io::writeVertexList(out.os(), res);
    }
    if (!o.report.empty()) {
        json corners = json::array();
        for (const CornerReport& c : r.corners)
            corners.push_back({{"corner", c.corner},
                               {"forestVertices", c.forestVertices},
                               {"targets", c.targets},
                               {"uncoveredTargets", c.uncoveredTargets},
                               {"tripleShortfalls", c.tripleShortfalls},
                               {"cycle", outcomeName(c.cycleOutcome)},
                               {"cycleLength", c.cycleLength},
                               {"cycleAttempts", c.cycleAttempts}});
        json rep = {{"ok", r.ok},
                    {"failure", r.failure},
                    {"treeVertices", r.tree.vertexCount()},
                    {"maxDegree", r.ok ? r.tree.maxDegree() : 0},
                    {"degreeCap", r.degreeCap},
                    {"isTree", r.ok && isTree(r.tree)},
                    {"reservoir", listOf(r.reservoir).size()},
                    {"avoided", listOf(r.avoided).size()},
                    {"minCoverage", r.minCoverage},
                    {"meanCoverage", r.meanCoverage},
                    {"droppedVertices", r.droppedVertices},
                    {"corners", corners}};
        writeJson(o.report, rep);
    }
    if (!r.ok) std::cerr << "tree: " << r.failure << '\n';
    return r.ok ? 0 : kFailed;
}

// ---- cover ----

struct CoverOpts {
    std::string slice;
    std::string pairs;
    std::string L;
    std::string R;
    std::string graph;
    std::uint64_t seed = 0;
    bool exact = false;
    bool sameParity = false;
    int bond = 0;
    std::string out;
};

int runCover(const CoverOpts& o) {
    json sj = loadJson(o.slice);
    const int n = sj.at("n").get<int>();
    const int s = sj.at("s").get<int>();
    const int q = sj.value("q", 1 << s);
    LayerDecomposition L(n, s, q);
    Subcube cube = io::subcubeFromJson(sj.at("cube"), L.innerDim());
    Slice slice(L, cube, sj.value("firstLayer", 0), sj.value("length", q));

    SliceCoverInput in;
    in.pairs = io::sliceInputFromJson(json{{"pairs", loadJson(o.pairs)}}, n).pairs;
    if (!o.L.empty()) in.L = io::verticesFromJson(loadJson(o.L), n);
    if (!o.R.empty()) in.R = io::verticesFromJson(loadJson(o.R), n);
    SubgraphQn G = o.graph.empty() ? SubgraphQn::full(n) : io::readGraphFile(o.graph);
    if (G.dim() != n) throw std::invalid_argument("cover: graph dimension differs from the slice");

    PathSystem ps;
    std::string failure;
    if (o.exact) {
        PathSystemResult r = coverSliceExact(slice, G, in);
        if (r.outcome == Outcome::Found) ps = r.system;
        else failure = std::string("exact search: ") + outcomeName(r.outcome);
    } else {
        SliceCoverParams p;
        p.seed = o.seed;
        p.bond = o.bond;
        SliceCoverResult r = o.sameParity ? coverSliceSameParity(slice, G, in, p) : coverSlice(slice, G, in, p);
        if (r.ok) ps = r.system;
        else failure = r.failure;
    }
    if (failure.empty()) {
        PathSystemCheck c = checkSliceCover(slice, G, in, ps);
        if (!c.ok()) failure = "cover check: " + c.violations.front();
    }
    if (!failure.empty()) {
        std::cerr << "cover: " << failure << '\n';
        return kFailed;
    }
    writeJson(o.out, io::toJson(ps));
    return 0;
}

// ---- absorb ----

struct AbsorbOpts {
    std::string graph;
    std::vector<std::string> pairs;
    std::vector<std::string> specials;
    int s = 2;
    int q = 0;
    int ell = 2;
};

int runAbsorb(const AbsorbOpts& o) {
    SubgraphQn G = io::readGraphFile(o.graph);
    const int n = G.dim();
    bool allOk = true;
    json results = json::array();
    auto record = [&](const std::string& file, const char* kind, const CheckReport& rep) {
        allOk = allOk && rep.ok();
        results.push_back({{"file", file}, {"kind", kind}, {"ok", rep.ok()}, {"violations", rep.violations}});
    };
    auto items = [](const json& j) { return j.is_array() ? j : json::array({j}); };
    for (const std::string& f : o.pairs)
        for (const json& j : items(io::readJsonFile(f)))
            record(f, "pair", validateAbsorberPair(io::absorberPairFromJson(j, n), G));
    if (!o.specials.empty()) {
        LayerDecomposition L(n, o.s, o.q > 0 ? o.q : 1 << o.s);
        for (const std::string& f : o.specials)
            for (const json& j : items(io::readJsonFile(f)))
                record(f, "special", validateSpecialAbsorber(L, io::specialAbsorberFromJson(j, n), G, o.ell));
    }
    std::cout << json{{"ok", allOk}, {"results", results}}.dump(2) << '\n';
    return allOk ? 0 : kFailed;
}

// ---- construct ----

struct ConstructOpts {
    int n = 12;
    int s = 2;
    int ell = 2;
    int q = 0;
    int D = 4;
    int b = 1;
    std::optional<double> density;
    std::vector<std::string> inputs;
    std::uint64_t seed = 0;
    std::string mode = "dense";
    std::string out;
    std::string diag;
};

int runConstruct(const ConstructOpts& o) {
    PipelineInput in;
    if (!o.inputs.empty()) {
        std::vector<SubgraphQn> gs;
        for (const std::string& f : o.inputs) gs.push_back(io::readGraphFile(f));
        for (const SubgraphQn& g : gs)
            if (g.dim() != gs.front().dim()) throw std::invalid_argument("construct: inputs differ in dimension");
        in.H = gs.front();
        if (gs.size() == 1) in.G = gs;
        else in.G.assign(gs.begin() + 1, gs.end());
    } else {
        requireDim(o.n, 2, kMaxDenseDim, "construct");
        in = samplePipelineInput(o.n, o.density.value_or(1.0), o.seed);
    }
    PipelineParams p;
    p.n = in.H.dim();
    p.s = o.s;
    p.ell = o.ell;
    p.q = o.q;
    p.D = o.D;
    p.bond = o.b;
    p.seed = o.seed;
    if (o.mode == "dense") p.mode = PipelineMode::Dense;
    else if (o.mode == "hitting") p.mode = PipelineMode::Hitting;
    else throw std::invalid_argument("unknown mode " + o.mode);

    PipelineResult r = constructHamiltonian(in, p);
    if (!o.diag.empty()) writeJson(o.diag, io::toJson(r, p));
    if (!r.ok) {
        std::cerr << "construct: " << r.failure << '\n';
        return kFailed;
    }
    Output out(o.out);
    out.os() << io::cycleToJson(r.cycle).dump() << '\n';
    return 0;
}

// ---- hitting / threshold ----

struct HittingOpts {
    int n = 4;
    int trials = 100;
    std::uint64_t seed = 0;
    std::string props = "deg1,deg2,con,pm,ham";
    double timeoutMs = 0;
    std::string format = "json";
    std::string file;
    int threads = 1;
    bool crossCheck = false;
    bool timings = false;
};

int runHitting(const HittingOpts& o) {
    requireDim(o.n, 1, 10, "hitting");
    HittingParams p;
    p.n = o.n;
    p.trials = o.trials;
    p.seed = o.seed;
    p.properties = parseProperties(o.props);
    p.hamBudget = Budget{0, o.timeoutMs};
    p.threads = o.threads;
    p.crossCheck = o.crossCheck;
    HittingTable t = hittingExperiment(p);
    Output out(o.file);
    if (o.format == "csv") writeHittingCsv(out.os(), t, o.timings);
    else if (o.format == "json") writeHittingJson(out.os(), t, o.timings);
    else throw std::invalid_argument("unknown format " + o.format);
    if (t.summary.violations > 0) {
        std::cerr << "hitting: " << t.summary.violations << " invariant violations\n";
        return kFailed;
    }
    return 0;
}

struct ThresholdOpts {
    int n = 4;
    std::string prop = "ham";
    double pmin = 0.3;
    double pmax = 0.7;
    double step = 0.05;
    int trials = 100;
    std::uint64_t seed = 0;
    double timeoutMs = 0;
    std::string format = "json";
    std::string file;
    int threads = 1;
};

int runThreshold(const ThresholdOpts& o) {
    requireDim(o.n, 1, 10, "threshold");
    SweepParams p;
    p.n = o.n;
    std::optional<Property> prop = parseProperty(o.prop);
    if (!prop) throw std::invalid_argument("unknown property " + o.prop);
    p.property = *prop;
    p.grid = gridOf(o.pmin, o.pmax, o.step);
    p.trials = o.trials;
    p.seed = o.seed;
    p.hamBudget = Budget{0, o.timeoutMs};
    p.threads = o.threads;
    SweepResult r = thresholdSweep(p);
    Output out(o.file);
    if (o.format == "csv") writeSweepCsv(out.os(), r);
    else if (o.format == "json") writeSweepJson(out.os(), r);
    else throw std::invalid_argument("unknown format " + o.format);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hamilton cycles in random subgraphs of the hypercube"};
    app.require_subcommand(1);
    int status = 0;

    SampleOpts so;
    auto* sample = app.add_subcommand("sample", "Draw a random subgraph of Q^n or a reservoir");
    sample->add_option("--model", so.model, "binomial, levelbiased, percolation or reservoir")
        ->check(CLI::IsMember({"binomial", "levelbiased", "percolation", "reservoir"}));
    sample->add_option("--n", so.n, "Dimension");
    sample->add_option("--p", so.p, "Edge probability; for the level models the eps of the tuple solver");
    sample->add_option("--pvec-file", so.pvecFile, "Level probabilities p_0..p_{n-1}, one per line");
    sample->add_option("--M", so.M, "Up-branching of the percolation");
    sample->add_option("--seed", so.seed);
    sample->add_option("--root", so.root, "Root vertex of the level models");
    sample->add_option("--delta", so.delta, "Reservoir density");
    sample->add_option("--part", so.part, "Percolation output: W, Wprime, P or R")
        ->check(CLI::IsMember({"W", "Wprime", "P", "R"}));
    sample->add_flag("--strict", so.strict, "Solve the tuple with the strict bounds");
    sample->add_option("--tuple-out", so.tupleOut, "Write the solved tuple as JSON");
    sample->add_option("--out", so.out, "Graph file (default stdout)");
    sample->callback([&] { status = runSample(so); });

    TileOpts to;
    auto* tile = app.add_subcommand("tile", "Nibble tiling of a graph by l-cubes");
    tile->add_option("--in", to.in, "Graph file")->required();
    tile->add_option("--ell", to.ell, "Cube dimension");
    tile->add_option("--eps", to.eps, "Selection probability scale");
    tile->add_option("--rounds", to.rounds);
    tile->add_option("--schedule", to.schedule, "measured or geometric");
    tile->add_option("--seed", to.seed);
    tile->add_flag("--greedy", to.greedy, "Extend the tiling greedily afterwards");
    tile->add_option("--out", to.out, "Tiling JSON (default stdout)");
    tile->add_option("--report", to.report, "Report JSON");
    tile->callback([&] { status = runTile(to); });

    TreeOpts tro;
    auto* tree = app.add_subcommand("tree", "Near-spanning bounded-degree tree");
    tree->add_option("--n", tro.n, "Dimension when no graph is given");
    tree->add_option("--in", tro.in, "Host graph file (default Q^n_p)");
    tree->add_option("--p", tro.p, "Host edge probability");
    tree->add_option("--eps", tro.eps, "Upper bound on the level probabilities");
    tree->add_option("--delta", tro.delta, "Reservoir density");
    tree->add_option("--D", tro.D, "Degree cap (0: 4CM+6)");
    tree->add_option("--k", tro.k, "Avoid radius around the avoided vertices");
    tree->add_option("--M", tro.M);
    tree->add_option("--C", tro.C, "Percolation samples per corner");
    tree->add_option("--seed", tro.seed);
    tree->add_option("--avoid", tro.avoid, "Vertex list file");
    tree->add_option("--out", tro.out, "Tree graph plus reservoir list (default stdout)");
    tree->add_option("--report", tro.report, "Report JSON");
    tree->callback([&] { status = runTree(tro); });

    CoverOpts co;
    auto* cover = app.add_subcommand("cover", "Prescribed-endpoint path cover of a slice");
    cover->add_option("--slice", co.slice, "{n, s, q, cube:{base,dirs} in Q^{n-s}, firstLayer, length}")->required();
    cover->add_option("--pairs", co.pairs, "[[u,v], ...]")->required();
    cover->add_option("--L", co.L, "Vertices left uncovered");
    cover->add_option("--R", co.R, "Vertices whose adjacent pairs must be path edges");
    cover->add_option("--graph", co.graph, "Host graph file (default Q^n)");
    cover->add_option("--seed", co.seed);
    cover->add_option("--bond", co.bond, "Bondedness threshold (0: default for ell)");
    cover->add_flag("--exact", co.exact, "Exhaustive search instead of the connecting construction");
    cover->add_flag("--same-parity", co.sameParity, "Two pairs of equal parity");
    cover->add_option("--out", co.out, "PathSystem JSON (default stdout)");
    cover->callback([&] { status = runCover(co); });

    AbsorbOpts ao;
    auto* absorb = app.add_subcommand("absorb", "Validate absorbers against a host graph");
    absorb->add_option("--graph", ao.graph, "Host graph file")->required();
    absorb->add_option("--pair", ao.pairs, "AbsorberPair JSON file (object or list)");
    absorb->add_option("--special", ao.specials, "SpecialAbsorber JSON file (object or list)");
    absorb->add_option("--s", ao.s);
    absorb->add_option("--q", ao.q);
    absorb->add_option("--ell", ao.ell);
    absorb->callback([&] { status = runAbsorb(ao); });

    ConstructOpts cno;
    auto* construct = app.add_subcommand("construct", "Build a Hamilton cycle");
    construct->add_option("--n", cno.n);
    construct->add_option("--s", cno.s);
    construct->add_option("--ell", cno.ell);
    construct->add_option("--q", cno.q, "Slice length (0: 2^s)");
    construct->add_option("--D", cno.D);
    construct->add_option("--b", cno.b, "Bondedness threshold");
    auto* dens = construct->add_option("--density", cno.density, "Sample H = G = Q^n_p");
    construct->add_option("--input", cno.inputs, "Graph files: H then the parts, or one file for both")
        ->excludes(dens);
    construct->add_option("--seed", cno.seed);
    construct->add_option("--mode", cno.mode)->check(CLI::IsMember({"dense", "hitting"}));
    construct->add_option("--out", cno.out, "Cycle JSON (default stdout)");
    construct->add_option("--diag", cno.diag, "Stage report JSON");
    construct->callback([&] { status = runConstruct(cno); });

    HittingOpts ho;
    auto* hitting = app.add_subcommand("hitting", "Hitting times along the edge process");
    hitting->add_option("--n", ho.n);
    hitting->add_option("--trials", ho.trials);
    hitting->add_option("--seed", ho.seed);
    hitting->add_option("--props", ho.props, "Subset of deg1,deg2,con,pm,ham");
    hitting->add_option("--timeout-ms", ho.timeoutMs, "Per-call budget of the Hamiltonicity oracle");
    hitting->add_option("--out", ho.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    hitting->add_option("--file", ho.file, "Output file (default stdout)");
    hitting->add_option("--threads", ho.threads);
    hitting->add_flag("--cross-check", ho.crossCheck, "Repeat every search by linear scan");
    hitting->add_flag("--timings", ho.timings, "Include wall-clock timings");
    hitting->callback([&] { status = runHitting(ho); });

    ThresholdOpts tho;
    auto* threshold = app.add_subcommand("threshold", "Probability of a property across a grid of p");
    threshold->add_option("--n", tho.n);
    threshold->add_option("--prop", tho.prop);
    threshold->add_option("--pmin", tho.pmin);
    threshold->add_option("--pmax", tho.pmax);
    threshold->add_option("--step", tho.step);
    threshold->add_option("--trials", tho.trials);
    threshold->add_option("--seed", tho.seed);
    threshold->add_option("--timeout-ms", tho.timeoutMs);
    threshold->add_option("--out", tho.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    threshold->add_option("--file", tho.file, "Output file (default stdout)");
    threshold->add_option("--threads", tho.threads);
    threshold->callback([&] { status = runThreshold(tho); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kBadInput;
    }
    return status;
}
