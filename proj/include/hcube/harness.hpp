#ifndef HCUBE_HARNESS_HPP
#define HCUBE_HARNESS_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "hcube/cube.hpp"
#include "hcube/oracles.hpp"

namespace hcube {

// A uniformly random ordering of E(Q^n); G_t holds its first t edges.
class EdgeProcess {
public:
    EdgeProcess(int n, std::uint64_t seed);

    int n() const { return n_; }
    std::size_t size() const { return order_.size(); }
    const std::vector<Edge>& order() const { return order_; }
    const Edge& at(std::size_t k) const { return order_[k]; }

    // G_t for 0 <= t <= size().
    SubgraphQn prefix(std::size_t t) const;

private:
    int n_;
    std::vector<Edge> order_;
};

enum class Property { MinDegree1, MinDegree2, Connected, PerfectMatching, Hamiltonian };

inline constexpr std::array<Property, 5> kAllProperties = {Property::MinDegree1, Property::MinDegree2,
                                                           Property::Connected, Property::PerfectMatching,
                                                           Property::Hamiltonian};

// Short names deg1, deg2, con, pm, ham.
const char* propertyName(Property p);
std::optional<Property> parseProperty(std::string_view name);
// Comma separated list; throws std::invalid_argument on an unknown name.
std::vector<Property> parseProperties(std::string_view list);

// Found: the graph has the property, Unsat: it has not, Timeout: undecided.
using PropertyOracle = std::function<Outcome(const SubgraphQn&)>;

// The Hamiltonicity oracle runs under budget and re-verifies every cycle it returns.
PropertyOracle propertyOracle(Property p, const Budget& hamBudget = {});

struct HittingTime {
    std::optional<std::size_t> tau;  // empty after a timeout
    std::size_t evaluations = 0;
};

// Smallest t >= lo with G_t in the property, by binary search. The caller
// guarantees G_t lacks the property for t < lo. Throws std::invalid_argument
// when G_m lacks it.
HittingTime hittingTime(const EdgeProcess& proc, const PropertyOracle& oracle, std::size_t lo = 0);
// Same by scanning t = lo, lo+1, ...
HittingTime hittingTimeLinear(const EdgeProcess& proc, const PropertyOracle& oracle, std::size_t lo = 0);

struct TrialRecord {
    std::uint64_t seed = 0;
    std::array<std::optional<std::size_t>, 5> tau;  // indexed by Property
    std::array<bool, 5> measured{};
    std::array<bool, 5> timedOut{};
    std::array<double, 5> ms{};
    std::vector<std::string> violations;  // broken deterministic inequalities

    const std::optional<std::size_t>& of(Property p) const { return tau[static_cast<int>(p)]; }
    bool timeout() const;
};

// Wilson score interval.
struct Proportion {
    std::size_t hits = 0;
    std::size_t total = 0;
    double rate = 0;
    double lo = 0;
    double hi = 0;
};

Proportion wilson(std::size_t hits, std::size_t total, double z = 1.959963984540054);

struct Coincidence {
    std::string name;  // e.g. "ham=deg2"
    Property a, b;
    Proportion p;      // over trials where both were measured without timeout
};

struct HittingSummary {
    std::size_t trials = 0;
    std::size_t timedOut = 0;
    std::size_t violations = 0;
    std::vector<Coincidence> rates;  // empty when no trial qualifies
};

struct HittingParams {
    int n = 4;
    int trials = 100;
    std::vector<Property> properties{kAllProperties.begin(), kAllProperties.end()};
    std::uint64_t seed = 0;
    Budget hamBudget{0, 0};
    bool crossCheck = false;  // also run the linear scan and record disagreements
    int threads = 1;
};

struct HittingTable {
    HittingParams params;
    std::vector<TrialRecord> records;
    HittingSummary summary;
};

// Hitting times in the order deg1, deg2, con, pm, ham; every later search starts
// at the deterministic lower bracket given by the earlier ones.
TrialRecord hittingTrial(int n, std::uint64_t seed, const std::vector<Property>& props, const Budget& hamBudget,
                         bool crossCheck);
HittingTable hittingExperiment(const HittingParams& p);

struct SweepPoint {
    double p = 0;
    Proportion hat;
    std::size_t timedOut = 0;
    double fitted = 0;  // isotonic fit
    bool fitWithinCI = true;
};

struct SweepParams {
    int n = 4;
    std::vector<double> grid;
    int trials = 100;
    Property property = Property::Hamiltonian;
    std::uint64_t seed = 0;
    Budget hamBudget{0, 0};
    int threads = 1;
};

struct SweepResult {
    SweepParams params;
    std::vector<SweepPoint> points;
    double maxResidual = 0;  // max |fitted - rate|
};

SweepResult thresholdSweep(const SweepParams& p);

// Weighted pool-adjacent-violators fit of a nondecreasing sequence.
std::vector<double> isotonicFit(const std::vector<double>& y, const std::vector<double>& w);

// pmin, pmin+step, ... up to pmax inclusive within rounding.
std::vector<double> gridOf(double pmin, double pmax, double step);

inline constexpr std::string_view kHittingSchema = "hcube.hitting/1";
inline constexpr std::string_view kSweepSchema = "hcube.threshold/1";

// Timings are left out unless asked for, so equal inputs give equal bytes.
void writeHittingCsv(std::ostream& os, const HittingTable& t, bool timings = false);
void writeHittingJson(std::ostream& os, const HittingTable& t, bool timings = false);
void writeSweepCsv(std::ostream& os, const SweepResult& r);
void writeSweepJson(std::ostream& os, const SweepResult& r);

}  // namespace hcube

#endif
