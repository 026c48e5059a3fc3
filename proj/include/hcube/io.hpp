#ifndef HCUBE_IO_HPP
#define HCUBE_IO_HPP

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hcube/absorber.hpp"
#include "hcube/cube.hpp"
#include "hcube/nibble.hpp"
#include "hcube/pathcover.hpp"
#include "hcube/pipeline.hpp"
#include "hcube/random_models.hpp"

// JSON forms of the library values. Vertices are unsigned integers and
// directions are 1-based, as in the graph file format. Readers throw
// std::invalid_argument on malformed input.
namespace hcube::io {

using nlohmann::json;

json dirsToJson(DirMask m);
DirMask dirsFromJson(const json& j, int n);
json dirToJson(int dir);
int dirFromJson(const json& j, int n);

json toJson(const Subcube& c);
Subcube subcubeFromJson(const json& j, int n);

// List of {base, dirs}.
json toJson(const CubeTiling& t);
CubeTiling tilingFromJson(const json& j, int n, int ell);

json toJson(const FeasibleTuple& t);
FeasibleTuple tupleFromJson(const json& j);

// List of vertex arrays.
json toJson(const PathSystem& ps);
PathSystem pathSystemFromJson(const json& j, int n);

json toJson(const AbsorberPair& p);
// The cached edges are rebuilt from the vertices; a non-adjacent pair is
// rejected here rather than left to the validator.
AbsorberPair absorberPairFromJson(const json& j, int n);

json toJson(const SpecialAbsorber& sa);
SpecialAbsorber specialAbsorberFromJson(const json& j, int n);

json toJson(const SliceCoverInput& in);
SliceCoverInput sliceInputFromJson(const json& j, int n);

json cycleToJson(const std::vector<Vertex>& cycle);
std::vector<Vertex> cycleFromJson(const json& j, int n);

json toJson(const PipelineResult& r, const PipelineParams& p);

Vertex vertexFromJson(const json& j, int n);
std::vector<Vertex> verticesFromJson(const json& j, int n);

// Whitespace separated vertices, '#' starts a comment.
std::vector<Vertex> readVertexList(std::istream& is, int n);
void writeVertexList(std::ostream& os, const std::vector<Vertex>& vs);
// One probability per line.
ProbVector readProbVector(std::istream& is);

json readJsonFile(const std::string& path);
SubgraphQn readGraphFile(const std::string& path);

}  // namespace hcube::io

#endif
