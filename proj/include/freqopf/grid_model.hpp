#pragma once

// Static network/case data model: parsing, validation, load scaling.

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace freqopf {

using json = nlohmann::json;

struct CaseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GovernorParams {
    double t1 = 0, t2 = 0, t3 = 0, t4 = 0, t5 = 0;
    double f_hp = 0;  // HP turbine power fraction, 0..1
    double k = 0;     // mechanical gain
    double r = 0;     // droop, pu

    bool operator==(const GovernorParams&) const = default;
};

struct Generator {
    std::string id;
    std::string bus;
    double p_min = 0, p_max = 0;      // MW
    double c2 = 0, c1 = 0, c0 = 0;    // $/MW^2 h, $/MWh, $/h
    double inertia_h = 0;             // s, on machine base
    double mva_base = 0;              // MVA
    GovernorParams governor;

    bool operator==(const Generator&) const = default;
};

struct Line {
    std::string id;
    std::string from_bus, to_bus;
    double reactance_x = 0;      // pu on system base
    double thermal_limit = 0;    // MW

    bool operator==(const Line&) const = default;
};

struct PowerCase {
    double f0 = 60.0;        // Hz
    double p_base = 100.0;   // MVA
    double damping_d = 1.0;  // pu
    std::vector<std::string> buses;
    std::string reference_bus;
    std::vector<Line> lines;
    std::vector<Generator> generators;
    std::map<std::string, double> loads;  // bus -> MW
    std::string contingency_unit;

    bool operator==(const PowerCase&) const = default;

    const Generator& generator(const std::string& id) const {
        for (const auto& g : generators)
            if (g.id == id) return g;
        throw CaseError("unknown generator id: " + id);
    }

    bool has_bus(const std::string& b) const {
        return std::find(buses.begin(), buses.end(), b) != buses.end();
    }

    double total_load() const {
        double s = 0;
        for (const auto& [b, mw] : loads) s += mw;
        return s;
    }
};

namespace detail {

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw CaseError(msg);
}

inline double get_num(const json& j, const std::string& key, const std::string& ctx) {
    if (!j.contains(key)) throw CaseError(ctx + ": missing field '" + key + "'");
    if (!j.at(key).is_number()) throw CaseError(ctx + ": field '" + key + "' is not a number");
    return j.at(key).get<double>();
}

inline std::string get_str(const json& j, const std::string& key, const std::string& ctx) {
    if (!j.contains(key)) throw CaseError(ctx + ": missing field '" + key + "'");
    if (!j.at(key).is_string()) throw CaseError(ctx + ": field '" + key + "' is not a string");
    return j.at(key).get<std::string>();
}

}  // namespace detail

inline void validate_case(const PowerCase& c) {
    using detail::require;
    require(c.f0 > 0, "f0 must be positive");
    require(c.p_base > 0, "p_base must be positive");
    require(c.damping_d >= 0, "damping_d must be nonnegative");
    require(!c.buses.empty(), "case has no buses");
    require(c.has_bus(c.reference_bus), "reference_bus '" + c.reference_bus + "' is not a bus");

    for (const auto& ln : c.lines) {
        require(c.has_bus(ln.from_bus), "line " + ln.id + ": dangling bus reference '" + ln.from_bus + "'");
        require(c.has_bus(ln.to_bus), "line " + ln.id + ": dangling bus reference '" + ln.to_bus + "'");
        require(ln.reactance_x > 0, "line " + ln.id + ": reactance_x must be positive");
        require(ln.thermal_limit > 0, "line " + ln.id + ": thermal_limit must be positive");
    }

    require(!c.generators.empty(), "case has no generators");
    for (const auto& g : c.generators) {
        require(c.has_bus(g.bus), "generator " + g.id + ": dangling bus reference '" + g.bus + "'");
        require(g.p_min >= 0, "generator " + g.id + ": p_min must be nonnegative");
        require(g.p_min <= g.p_max, "generator " + g.id + ": p_min must not exceed p_max");
        require(g.inertia_h > 0, "generator " + g.id + ": inertia_h must be positive");
        require(g.mva_base > 0, "generator " + g.id + ": mva_base must be positive");
        require(g.c2 >= 0, "generator " + g.id + ": c2 must be nonnegative (convex cost)");
        const auto& gv = g.governor;
        require(gv.t1 > 0 && gv.t3 > 0 && gv.t5 > 0, "generator " + g.id + ": t1, t3, t5 must be positive");
        require(gv.t2 >= 0 && gv.t4 >= 0, "generator " + g.id + ": t2, t4 must be nonnegative");
        require(gv.f_hp > 0 && gv.f_hp < 1, "generator " + g.id + ": f_hp must be in (0,1)");
        require(gv.k > 0, "generator " + g.id + ": k must be positive");
        require(gv.r > 0, "generator " + g.id + ": r must be positive");
    }

    for (const auto& [bus, mw] : c.loads)
        require(c.has_bus(bus), "load: dangling bus reference '" + bus + "'");

    require(std::any_of(c.generators.begin(), c.generators.end(),
                        [&](const Generator& g) { return g.id == c.contingency_unit; }),
            "contingency_unit '" + c.contingency_unit + "' is not a generator");

    // Feasibility precheck: surviving capacity covers total load.
    double cap = 0;
    for (const auto& g : c.generators)
        if (g.id != c.contingency_unit) cap += g.p_max;
    require(cap >= c.total_load(),
            "infeasible case: non-contingency capacity below total load");

    // No duplicate ids.
    auto dup = [](auto ids, const char* what) {
        std::sort(ids.begin(), ids.end());
        if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
            throw CaseError(std::string("duplicate ") + what + " id");
    };
    {
        std::vector<std::string> ids;
        for (const auto& g : c.generators) ids.push_back(g.id);
        dup(ids, "generator");
        ids.clear();
        for (const auto& l : c.lines) ids.push_back(l.id);
        dup(ids, "line");
        dup(c.buses, "bus");
    }
}

inline PowerCase case_from_json(const json& j) {
    using namespace detail;
    PowerCase c;
    c.f0 = j.value("f0", 60.0);
    c.p_base = j.value("p_base", 100.0);
    c.damping_d = j.value("damping_d", 1.0);
    if (!j.contains("buses") || !j.at("buses").is_array())
        throw CaseError("case: missing field 'buses'");
    for (const auto& b : j.at("buses")) c.buses.push_back(b.get<std::string>());
    c.reference_bus = get_str(j, "reference_bus", "case");
    for (const auto& lj : j.value("lines", json::array())) {
        Line ln;
        ln.id = get_str(lj, "id", "line");
        ln.from_bus = get_str(lj, "from_bus", "line " + ln.id);
        ln.to_bus = get_str(lj, "to_bus", "line " + ln.id);
        ln.reactance_x = get_num(lj, "reactance_x", "line " + ln.id);
        ln.thermal_limit = get_num(lj, "thermal_limit", "line " + ln.id);
        c.lines.push_back(ln);
    }
    if (!j.contains("generators") || !j.at("generators").is_array())
        throw CaseError("case: missing field 'generators'");
    for (const auto& gj : j.at("generators")) {
        Generator g;
        g.id = get_str(gj, "id", "generator");
        const std::string ctx = "generator " + g.id;
        g.bus = get_str(gj, "bus", ctx);
        g.p_min = get_num(gj, "p_min", ctx);
        g.p_max = get_num(gj, "p_max", ctx);
        g.c2 = get_num(gj, "c2", ctx);
        g.c1 = get_num(gj, "c1", ctx);
        g.c0 = get_num(gj, "c0", ctx);
        g.inertia_h = get_num(gj, "inertia_h", ctx);
        g.mva_base = get_num(gj, "mva_base", ctx);
        if (!gj.contains("governor")) throw CaseError(ctx + ": missing field 'governor'");
        const auto& gv = gj.at("governor");
        g.governor.t1 = get_num(gv, "t1", ctx + ".governor");
        g.governor.t2 = get_num(gv, "t2", ctx + ".governor");
        g.governor.t3 = get_num(gv, "t3", ctx + ".governor");
        g.governor.t4 = get_num(gv, "t4", ctx + ".governor");
        g.governor.t5 = get_num(gv, "t5", ctx + ".governor");
        g.governor.f_hp = get_num(gv, "f_hp", ctx + ".governor");
        g.governor.k = get_num(gv, "k", ctx + ".governor");
        g.governor.r = get_num(gv, "r", ctx + ".governor");
        c.generators.push_back(g);
    }
    const json loads = j.value("loads", json::object());
    for (const auto& [bus, mw] : loads.items()) {
        if (!mw.is_number()) throw CaseError("load at bus '" + bus + "' is not a number");
        c.loads[bus] = mw.get<double>();
    }
    c.contingency_unit = get_str(j, "contingency_unit", "case");
    validate_case(c);
    return c;
}

inline PowerCase parse_case(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw CaseError(std::string("case file is not valid JSON: ") + e.what());
    }
    return case_from_json(j);
}

inline json case_to_json(const PowerCase& c) {
    json j;
    j["f0"] = c.f0;
    j["p_base"] = c.p_base;
    j["damping_d"] = c.damping_d;
    j["buses"] = c.buses;
    j["reference_bus"] = c.reference_bus;
    j["lines"] = json::array();
    for (const auto& ln : c.lines)
        j["lines"].push_back({{"id", ln.id},
                              {"from_bus", ln.from_bus},
                              {"to_bus", ln.to_bus},
                              {"reactance_x", ln.reactance_x},
                              {"thermal_limit", ln.thermal_limit}});
    j["generators"] = json::array();
    for (const auto& g : c.generators)
        j["generators"].push_back({{"id", g.id},
                                   {"bus", g.bus},
                                   {"p_min", g.p_min},
                                   {"p_max", g.p_max},
                                   {"c2", g.c2},
                                   {"c1", g.c1},
                                   {"c0", g.c0},
                                   {"inertia_h", g.inertia_h},
                                   {"mva_base", g.mva_base},
                                   {"governor",
                                    {{"t1", g.governor.t1},
                                     {"t2", g.governor.t2},
                                     {"t3", g.governor.t3},
                                     {"t4", g.governor.t4},
                                     {"t5", g.governor.t5},
                                     {"f_hp", g.governor.f_hp},
                                     {"k", g.governor.k},
                                     {"r", g.governor.r}}}});
    j["loads"] = json::object();
    for (const auto& [bus, mw] : c.loads) j["loads"][bus] = mw;
    j["contingency_unit"] = c.contingency_unit;
    return j;
}

inline std::string serialize_case(const PowerCase& c) { return case_to_json(c).dump(2); }

inline PowerCase scale_loads(const PowerCase& c, double factor) {
    if (!(factor > 0)) throw CaseError("scale_loads: factor must be positive");
    PowerCase out = c;
    for (auto& [bus, mw] : out.loads) mw *= factor;
    return out;
}

inline PowerCase select_contingency(const PowerCase& c, const std::string& unit) {
    c.generator(unit);  // throws on unknown id
    PowerCase out = c;
    out.contingency_unit = unit;
    return out;
}

}  // namespace freqopf
