#include "hcube/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "hcube/random_models.hpp"
#include "hcube/rng.hpp"

namespace hcube {

EdgeProcess::EdgeProcess(int n, std::uint64_t seed) : n_(n) {
    if (n < 1 || n > 20) throw std::invalid_argument("EdgeProcess: n out of range");
    order_ = SubgraphQn::full(n).edges();
    Rng rng(seed, "edge-process");
    rng.shuffle(order_);
}

SubgraphQn EdgeProcess::prefix(std::size_t t) const {
    if (t > order_.size()) throw std::out_of_range("EdgeProcess::prefix");
    SubgraphQn g(n_);
    for (std::size_t k = 0; k < t; ++k) g.add(order_[k]);
    return g;
}

const char* propertyName(Property p) {
    switch (p) {
        case Property::MinDegree1: return "deg1";
        case Property::MinDegree2: return "deg2";
        case Property::Connected: return "con";
        case Property::PerfectMatching: return "pm";
        case Property::Hamiltonian: return "ham";
    }
    return "?";
}

std::optional<Property> parseProperty(std::string_view name) {
    for (Property p : kAllProperties)
        if (name == propertyName(p)) return p;
    return std::nullopt;
}

std::vector<Property> parseProperties(std::string_view list) {
    std::vector<Property> out;
    while (!list.empty()) {
        const auto comma = list.find(',');
        const std::string_view item = list.substr(0, comma);
        auto p = parseProperty(item);
        if (!p) throw std::invalid_argument("unknown property: " + std::string(item));
        if (std::find(out.begin(), out.end(), *p) == out.end()) out.push_back(*p);
        if (comma == std::string_view::npos) break;
        list.remove_prefix(comma + 1);
    }
    std::sort(out.begin(), out.end());
    return out;
}

PropertyOracle propertyOracle(Property p, const Budget& hamBudget) {
    auto of = [](bool b) { return b ? Outcome::Found : Outcome::Unsat; };
    switch (p) {
        case Property::MinDegree1: return [of](const SubgraphQn& g) { return of(g.minDegree() >= 1); };
        case Property::MinDegree2: return [of](const SubgraphQn& g) { return of(g.minDegree() >= 2); };
        case Property::Connected: return [of](const SubgraphQn& g) { return of(isConnected(g)); };
        case Property::PerfectMatching:
            return [of](const SubgraphQn& g) { return of(exactPerfectMatching(g).has_value()); };
        case Property::Hamiltonian:
            return [hamBudget](const SubgraphQn& g) {
                if (g.minDegree() < 2) return Outcome::Unsat;
                CubeHamiltonResult r = exactHamiltonCycle(g, hamBudget);
                if (r.outcome == Outcome::Found && !verifyHamiltonCycle(g, r.cycle))
                    throw std::logic_error("Hamiltonicity oracle returned an invalid cycle");
                return r.outcome;
            };
    }
    throw std::invalid_argument("propertyOracle");
}

HittingTime hittingTime(const EdgeProcess& proc, const PropertyOracle& oracle, std::size_t lo) {
    HittingTime out;
    std::size_t hi = proc.size();
    ++out.evaluations;
    const Outcome top = oracle(proc.prefix(hi));
    if (top == Outcome::Timeout) return out;
    if (top != Outcome::Found) throw std::invalid_argument("hittingTime: property fails on the full cube");
    lo = std::min(lo, hi);
    // Invariant: G_hi has the property, G_t for t < lo has not.
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        ++out.evaluations;
        const Outcome o = oracle(proc.prefix(mid));
        if (o == Outcome::Timeout) return out;
        if (o == Outcome::Found) hi = mid;
        else lo = mid + 1;
    }
    out.tau = hi;
    return out;
}

HittingTime hittingTimeLinear(const EdgeProcess& proc, const PropertyOracle& oracle, std::size_t lo) {
    HittingTime out;
    SubgraphQn g = proc.prefix(std::min(lo, proc.size()));
    for (std::size_t t = lo; t <= proc.size(); ++t) {
        if (t > lo) g.add(proc.at(t - 1));
        ++out.evaluations;
        const Outcome o = oracle(g);
        if (o == Outcome::Timeout) return out;
        if (o == Outcome::Found) {
            out.tau = t;
            return out;
        }
    }
    throw std::invalid_argument("hittingTimeLinear: property fails on the full cube");
}

bool TrialRecord::timeout() const {
    return std::any_of(timedOut.begin(), timedOut.end(), [](bool b) { return b; });
}

Proportion wilson(std::size_t hits, std::size_t total, double z) {
    Proportion p;
    p.hits = hits;
    p.total = total;
    if (total == 0) return p;
    const double n = static_cast<double>(total);
    const double ph = static_cast<double>(hits) / n;
    const double z2 = z * z;
    const double centre = (ph + z2 / (2 * n)) / (1 + z2 / n);
    const double half = z / (1 + z2 / n) * std::sqrt(ph * (1 - ph) / n + z2 / (4 * n * n));
    p.rate = ph;
    p.lo = std::max(0.0, centre - half);
    p.hi = std::min(1.0, centre + half);
    return p;
}

namespace {

int idx(Property p) { return static_cast<int>(p); }

bool wants(const std::vector<Property>& props, Property p) {
    return std::find(props.begin(), props.end(), p) != props.end();
}

template <class F>
void forEachParallel(std::size_t count, int threads, F&& f) {
    const int k = std::max(1, std::min<int>(threads, static_cast<int>(count)));
    if (k <= 1) {
        for (std::size_t i = 0; i < count; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    for (int w = 0; w < k; ++w)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < count && !failed;) {
                try {
                    f(i);
                } catch (...) {
                    if (!failed.exchange(true)) error = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

std::string fmt(double x) {
    std::ostringstream os;
    os << std::setprecision(10) << x;
    return os.str();
}

}  // namespace

TrialRecord hittingTrial(int n, std::uint64_t seed, const std::vector<Property>& props, const Budget& hamBudget,
                         bool crossCheck) {
    using Clock = std::chrono::steady_clock;
    TrialRecord rec;
    rec.seed = seed;
    const EdgeProcess proc(n, seed);
    auto lower = [&](Property p) -> std::size_t {
        auto t = rec.of(p);
        return t ? *t : 0;
    };
    for (Property p : kAllProperties) {
        if (!wants(props, p)) continue;
        const PropertyOracle oracle = propertyOracle(p, hamBudget);
        // Lower brackets from the necessary conditions; the step before the
        // bracket is evaluated so a broken inequality is still seen.
        std::size_t lo = 0;
        std::string below;
        if (p == Property::MinDegree2 || p == Property::Connected || p == Property::PerfectMatching) {
            lo = lower(Property::MinDegree1);
            below = "deg1";
        } else if (p == Property::Hamiltonian) {
            lo = lower(Property::MinDegree2);
            below = "deg2";
        }
        const auto t0 = Clock::now();
        rec.measured[idx(p)] = true;
        if (lo > 0) {
            const Outcome before = oracle(proc.prefix(lo - 1));
            if (before == Outcome::Found) {
                rec.violations.push_back(std::string(propertyName(p)) + " holds before " + below);
                lo = 0;
            }
        }
        HittingTime h = hittingTime(proc, oracle, lo);
        rec.ms[idx(p)] = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
        rec.tau[idx(p)] = h.tau;
        rec.timedOut[idx(p)] = !h.tau;
        if (crossCheck && h.tau) {
            HittingTime lin = hittingTimeLinear(proc, oracle, 0);
            if (lin.tau && *lin.tau != *h.tau)
                rec.violations.push_back(std::string("binary search and linear scan disagree on ") + propertyName(p));
        }
    }
    auto leq = [&](Property a, Property b) {
        const auto &x = rec.of(a), &y = rec.of(b);
        if (x && y && *x > *y)
            rec.violations.push_back(std::string(propertyName(a)) + " > " + propertyName(b));
    };
    leq(Property::MinDegree1, Property::MinDegree2);
    leq(Property::MinDegree2, Property::Hamiltonian);
    leq(Property::MinDegree1, Property::Connected);
    leq(Property::Connected, Property::Hamiltonian);
    leq(Property::MinDegree1, Property::PerfectMatching);
    return rec;
}

HittingTable hittingExperiment(const HittingParams& p) {
    HittingTable t;
    t.params = p;
    const int trials = std::max(0, p.trials);
    t.records.resize(static_cast<std::size_t>(trials));
    std::vector<Property> props = p.properties;
    std::sort(props.begin(), props.end());
    forEachParallel(static_cast<std::size_t>(trials), p.threads, [&](std::size_t i) {
        t.records[i] = hittingTrial(p.n, streamKey(p.seed, tag("trial") + i), props, p.hamBudget, p.crossCheck);
    });
    HittingSummary& s = t.summary;
    s.trials = t.records.size();
    for (const auto& r : t.records) {
        s.timedOut += r.timeout();
        s.violations += r.violations.size();
    }
    const std::array<std::pair<Property, Property>, 3> pairs = {
        std::pair{Property::Hamiltonian, Property::MinDegree2},
        std::pair{Property::PerfectMatching, Property::MinDegree1},
        std::pair{Property::Connected, Property::MinDegree1}};
    for (auto [a, b] : pairs) {
        if (!wants(props, a) || !wants(props, b)) continue;
        std::size_t hits = 0, total = 0;
        for (const auto& r : t.records) {
            if (r.timeout() || !r.of(a) || !r.of(b)) continue;
            ++total;
            hits += *r.of(a) == *r.of(b);
        }
        if (total == 0) continue;
        s.rates.push_back({std::string(propertyName(a)) + "=" + propertyName(b), a, b, wilson(hits, total)});
    }
    return t;
}

std::vector<double> isotonicFit(const std::vector<double>& y, const std::vector<double>& w) {
    if (y.size() != w.size()) throw std::invalid_argument("isotonicFit: size mismatch");
    struct Block {
        double mean, weight;
        std::size_t count;
    };
    std::vector<Block> blocks;
    for (std::size_t i = 0; i < y.size(); ++i) {
        blocks.push_back({y[i], std::max(w[i], 1e-300), 1});
        while (blocks.size() > 1 && blocks[blocks.size() - 2].mean > blocks.back().mean) {
            Block b = blocks.back();
            blocks.pop_back();
            Block& a = blocks.back();
            const double wt = a.weight + b.weight;
            a.mean = (a.mean * a.weight + b.mean * b.weight) / wt;
            a.weight = wt;
            a.count += b.count;
        }
    }
    std::vector<double> out;
    for (const auto& b : blocks) out.insert(out.end(), b.count, b.mean);
    return out;
}

std::vector<double> gridOf(double pmin, double pmax, double step) {
    if (step <= 0 || pmin > pmax) throw std::invalid_argument("gridOf: empty or invalid grid");
    std::vector<double> g;
    const auto k = static_cast<std::size_t>(std::floor((pmax - pmin) / step + 1e-9));
    for (std::size_t i = 0; i <= k; ++i) g.push_back(std::round((pmin + static_cast<double>(i) * step) * 1e12) / 1e12);
    return g;
}

SweepResult thresholdSweep(const SweepParams& p) {
    SweepResult r;
    r.params = p;
    const std::size_t points = p.grid.size();
    const std::size_t trials = static_cast<std::size_t>(std::max(0, p.trials));
    const PropertyOracle oracle = propertyOracle(p.property, p.hamBudget);
    std::vector<Outcome> outcomes(points * trials);
    forEachParallel(points * trials, p.threads, [&](std::size_t k) {
        const std::size_t i = k / trials;
        const SubgraphQn g = sampleBinomial(p.n, p.grid[i], streamKey(p.seed, tag("sweep") + k));
        outcomes[k] = oracle(g);
    });
    std::vector<double> rates, weights;
    for (std::size_t i = 0; i < points; ++i) {
        SweepPoint pt;
        pt.p = p.grid[i];
        std::size_t hits = 0, total = 0;
        for (std::size_t j = 0; j < trials; ++j) {
            const Outcome o = outcomes[i * trials + j];
            if (o == Outcome::Timeout) {
                ++pt.timedOut;
                continue;
            }
            ++total;
            hits += o == Outcome::Found;
        }
        pt.hat = wilson(hits, total);
        rates.push_back(pt.hat.rate);
        weights.push_back(static_cast<double>(total));
        r.points.push_back(pt);
    }
    const std::vector<double> fit = isotonicFit(rates, weights);
    for (std::size_t i = 0; i < points; ++i) {
        auto& pt = r.points[i];
        pt.fitted = fit[i];
        pt.fitWithinCI = pt.hat.total == 0 || (fit[i] >= pt.hat.lo - 1e-12 && fit[i] <= pt.hat.hi + 1e-12);
        r.maxResidual = std::max(r.maxResidual, std::abs(fit[i] - pt.hat.rate));
    }
    return r;
}

void writeHittingCsv(std::ostream& os, const HittingTable& t, bool timings) {
    const auto& props = t.params.properties;
    os << "seed";
    for (Property p : kAllProperties)
        if (wants(props, p)) os << ",tau_" << propertyName(p);
    if (timings)
        for (Property p : kAllProperties)
            if (wants(props, p)) os << ",ms_" << propertyName(p);
    os << ",timeout,violations\n";
    for (const auto& r : t.records) {
        os << r.seed;
        for (Property p : kAllProperties)
            if (wants(props, p)) {
                os << ',';
                if (r.of(p)) os << *r.of(p);
            }
        if (timings)
            for (Property p : kAllProperties)
                if (wants(props, p)) os << ',' << fmt(r.ms[idx(p)]);
        os << ',' << (r.timeout() ? 1 : 0) << ',' << r.violations.size() << '\n';
    }
}

void writeHittingJson(std::ostream& os, const HittingTable& t, bool timings) {
    using nlohmann::json;
    json j;
    j["schema"] = kHittingSchema;
    j["n"] = t.params.n;
    j["trials"] = t.params.trials;
    j["seed"] = t.params.seed;
    json props = json::array();
    for (Property p : t.params.properties) props.push_back(propertyName(p));
    j["properties"] = props;
    json recs = json::array();
    for (const auto& r : t.records) {
        json jr;
        jr["seed"] = r.seed;
        json tau = json::object(), to = json::object(), ms = json::object();
        for (Property p : kAllProperties) {
            if (!r.measured[idx(p)]) continue;
            tau[propertyName(p)] = r.of(p) ? json(*r.of(p)) : json(nullptr);
            to[propertyName(p)] = r.timedOut[idx(p)];
            ms[propertyName(p)] = r.ms[idx(p)];
        }
        jr["tau"] = tau;
        jr["timedOut"] = to;
        if (timings) jr["ms"] = ms;
        jr["violations"] = r.violations;
        recs.push_back(jr);
    }
    j["records"] = recs;
    json s;
    s["trials"] = t.summary.trials;
    s["timedOut"] = t.summary.timedOut;
    s["violations"] = t.summary.violations;
    json rates = json::array();
    for (const auto& c : t.summary.rates)
        rates.push_back({{"name", c.name}, {"hits", c.p.hits}, {"total", c.p.total}, {"rate", c.p.rate},
                         {"wilsonLo", c.p.lo}, {"wilsonHi", c.p.hi}});
    s["coincidence"] = rates;
    j["summary"] = s;
    os << j.dump(2) << '\n';
}

void writeSweepCsv(std::ostream& os, const SweepResult& r) {
    os << "p,hits,total,timeout,rate,wilson_lo,wilson_hi,isotonic,within_ci\n";
    for (const auto& pt : r.points)
        os << fmt(pt.p) << ',' << pt.hat.hits << ',' << pt.hat.total << ',' << pt.timedOut << ',' << fmt(pt.hat.rate)
           << ',' << fmt(pt.hat.lo) << ',' << fmt(pt.hat.hi) << ',' << fmt(pt.fitted) << ',' << (pt.fitWithinCI ? 1 : 0)
           << '\n';
}

void writeSweepJson(std::ostream& os, const SweepResult& r) {
    using nlohmann::json;
    json j;
    j["schema"] = kSweepSchema;
    j["n"] = r.params.n;
    j["property"] = propertyName(r.params.property);
    j["trials"] = r.params.trials;
    j["seed"] = r.params.seed;
    json pts = json::array();
    for (const auto& pt : r.points)
        pts.push_back({{"p", pt.p}, {"hits", pt.hat.hits}, {"total", pt.hat.total}, {"timedOut", pt.timedOut},
                       {"rate", pt.hat.rate}, {"wilsonLo", pt.hat.lo}, {"wilsonHi", pt.hat.hi},
                       {"isotonic", pt.fitted}, {"withinCI", pt.fitWithinCI}});
    j["points"] = pts;
    j["maxResidual"] = r.maxResidual;
    os << j.dump(2) << '\n';
}

}  // namespace hcube
