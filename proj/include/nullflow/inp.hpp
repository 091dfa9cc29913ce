/*==============================================================================
 *  inp.hpp
 *
 *  Reader and canonical writer for the subset of the EPANET INP dialect used
 *  by demand-driven pipe networks: [JUNCTIONS], [RESERVOIRS], [TANKS] (read as
 *  fixed heads at elevation + initial level), [PIPES], [DEMANDS], [OPTIONS].
 *  [COORDINATES], [PATTERNS] and the descriptive sections are skipped. Pumps,
 *  valves, controls, emitters and status overrides are rejected when they
 *  contain entries.
 *
 *  Everything is converted to SI at the boundary: flows m³/s, lengths and
 *  heads m, diameters m, Darcy-Weisbach roughness m.
 *
 *============================================================================*/
#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "network.hpp"

namespace nullflow {

namespace inp_detail {

inline std::string upper(std::string_view s)
{
    std::string r(s);
    std::transform(r.begin(), r.end(), r.begin(), [](unsigned char c) { return std::toupper(c); });
    return r;
}

inline std::vector<std::string_view> tokens(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

struct Line {
    std::size_t number;
    std::vector<std::string_view> fields;
};

inline double number(std::string_view s, std::size_t line_no)
{
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v)) {
        throw Error(Errc::ParseError,
                    "line " + std::to_string(line_no) + ": '" + std::string(s) + "' is not a number");
    }
    return v;
}

inline void need(const Line& l, std::size_t n, const char* what)
{
    if (l.fields.size() < n) {
        throw Error(Errc::ParseError, "line " + std::to_string(l.number) + ": " + what +
                                          " needs at least " + std::to_string(n) + " fields");
    }
}

struct Units {
    double flow = 1.0;       // file flow unit -> m³/s
    double length = 1.0;     // ft or m -> m
    double diameter = 1e-3;  // in or mm -> m
    double dw_rough = 1e-3;  // millifeet or mm -> m
};

inline Units units_for(const std::string& flow_units, std::size_t line_no)
{
    static const std::map<std::string, double, std::less<>> us = {
        {"CFS", 0.028316846592},
        {"GPM", 0.003785411784 / 60.0},
        {"MGD", 1e6 * 0.003785411784 / 86400.0},
        {"IMGD", 1e6 * 0.00454609 / 86400.0},
        {"AFD", 1233.48183754752 / 86400.0},
    };
    static const std::map<std::string, double, std::less<>> si = {
        {"LPS", 1e-3}, {"LPM", 1e-3 / 60.0}, {"MLD", 1e3 / 86400.0},
        {"CMH", 1.0 / 3600.0}, {"CMD", 1.0 / 86400.0}, {"CMS", 1.0},
    };
    Units u;
    if (auto it = us.find(flow_units); it != us.end()) {
        u.flow = it->second;
        u.length = 0.3048;
        u.diameter = 0.0254;
        u.dw_rough = 0.0003048;
    } else if (auto jt = si.find(flow_units); jt != si.end()) {
        u.flow = jt->second;
    } else {
        throw Error(Errc::ParseError,
                    "line " + std::to_string(line_no) + ": unknown flow units '" + flow_units + "'");
    }
    return u;
}

// Shortest decimal text for v.
inline std::string fmt(double v)
{
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

// Text x such that parse(x) / scale == v exactly, preferring the shortest.
inline std::string fmt_scaled(double v, double scale)
{
    const double x0 = v * scale;
    std::string best;
    double x = x0;
    for (int k = 0; k < 4; ++k) x = std::nextafter(x, -INFINITY);
    for (int k = 0; k < 9; ++k, x = std::nextafter(x, INFINITY)) {
        if (x / scale != v) continue;
        std::string s = fmt(x);
        if (best.empty() || s.size() < best.size()) best = s;
    }
    if (best.empty()) {
        throw Error(Errc::InvalidValue, "value " + fmt(v) + " has no exact scaled representation");
    }
    return best;
}

}  // namespace inp_detail

inline Network parse_inp(std::string_view text)
{
    using namespace inp_detail;

    static const std::vector<std::string> rejected = {"PUMPS", "VALVES", "CONTROLS", "RULES",
                                                      "EMITTERS", "STATUS"};
    static const std::vector<std::string> skipped = {
        "TITLE", "PATTERNS", "COORDINATES", "VERTICES", "LABELS", "BACKDROP", "TAGS",
        "CURVES", "TIMES", "REPORT", "ENERGY", "QUALITY", "REACTIONS", "SOURCES",
        "MIXING", "END"};

    std::map<std::string, std::vector<Line>> sections;
    std::string current;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view raw = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (auto c = raw.find(';'); c != std::string_view::npos) raw = raw.substr(0, c);
        auto f = tokens(raw);
        if (f.empty()) continue;
        if (f[0].front() == '[') {
            std::string name = upper(f[0]);
            if (name.back() != ']') throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": bad section header");
            current = name.substr(1, name.size() - 2);
            if (std::find(skipped.begin(), skipped.end(), current) == skipped.end() &&
                std::find(rejected.begin(), rejected.end(), current) == rejected.end() &&
                current != "JUNCTIONS" && current != "RESERVOIRS" && current != "TANKS" &&
                current != "PIPES" && current != "DEMANDS" && current != "OPTIONS") {
                throw Error(Errc::UnsupportedSection, "section [" + current + "]");
            }
            sections[current];
            continue;
        }
        if (current.empty()) {
            throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": data outside a section");
        }
        if (std::find(rejected.begin(), rejected.end(), current) != rejected.end()) {
            throw Error(Errc::UnsupportedSection,
                        "[" + current + "] entries are not supported (line " + std::to_string(line_no) + ")");
        }
        sections[current].push_back({line_no, std::move(f)});
    }

    Units units = units_for("GPM", 0);
    HeadlossModel model = HeadlossModel::HazenWilliams;
    double multiplier = 1.0;
    for (const auto& l : sections["OPTIONS"]) {
        const std::string key = upper(l.fields[0]);
        if (key == "UNITS") {
            need(l, 2, "Units");
            units = units_for(upper(l.fields[1]), l.number);
        } else if (key == "HEADLOSS") {
            need(l, 2, "Headloss");
            const std::string v = upper(l.fields[1]);
            if (v == "H-W") model = HeadlossModel::HazenWilliams;
            else if (v == "D-W") model = HeadlossModel::DarcyWeisbach;
            else throw Error(Errc::UnsupportedSection, "headloss formula '" + v + "'");
        } else if (key == "DEMAND" && l.fields.size() >= 3 && upper(l.fields[1]) == "MULTIPLIER") {
            multiplier = number(l.fields[2], l.number);
        }
    }

    std::vector<Junction> junctions;
    std::vector<FixedHead> fixed;
    std::unordered_map<std::string, NodeRef> nodes;
    auto add_node = [&](std::string_view id, NodeRef ref, std::size_t ln) {
        if (!nodes.emplace(std::string(id), ref).second) {
            throw Error(Errc::DuplicateId, "node id '" + std::string(id) + "' (line " + std::to_string(ln) + ")");
        }
    };

    for (const auto& l : sections["JUNCTIONS"]) {
        need(l, 2, "junction");
        double demand = l.fields.size() >= 3 ? number(l.fields[2], l.number) : 0.0;
        number(l.fields[1], l.number);  // elevation: validated, unused by the demand-driven model
        add_node(l.fields[0], NodeRef::junction(static_cast<Index>(junctions.size())), l.number);
        junctions.push_back({std::string(l.fields[0]), demand * units.flow * multiplier});
    }
    for (const auto& l : sections["RESERVOIRS"]) {
        need(l, 2, "reservoir");
        add_node(l.fields[0], NodeRef::fixed(static_cast<Index>(fixed.size())), l.number);
        fixed.push_back({std::string(l.fields[0]), number(l.fields[1], l.number) * units.length});
    }
    for (const auto& l : sections["TANKS"]) {
        need(l, 3, "tank");
        const double head = number(l.fields[1], l.number) + number(l.fields[2], l.number);
        add_node(l.fields[0], NodeRef::fixed(static_cast<Index>(fixed.size())), l.number);
        fixed.push_back({std::string(l.fields[0]), head * units.length});
    }

    // [DEMANDS] entries replace the junction's base demand by their sum.
    std::vector<std::optional<double>> listed(junctions.size());
    for (const auto& l : sections["DEMANDS"]) {
        need(l, 2, "demand");
        auto it = nodes.find(std::string(l.fields[0]));
        if (it == nodes.end() || !it->second.is_junction()) {
            throw Error(Errc::DanglingNodeRef, "demand for unknown junction '" +
                                                   std::string(l.fields[0]) + "' (line " +
                                                   std::to_string(l.number) + ")");
        }
        auto& slot = listed[it->second.index];
        slot = slot.value_or(0.0) + number(l.fields[1], l.number) * units.flow * multiplier;
    }
    for (std::size_t i = 0; i < junctions.size(); ++i) {
        if (listed[i]) junctions[i].demand = *listed[i];
    }

    std::vector<Pipe> pipes;
    for (const auto& l : sections["PIPES"]) {
        need(l, 6, "pipe");
        auto node = [&](std::string_view id) {
            auto it = nodes.find(std::string(id));
            if (it == nodes.end()) {
                throw Error(Errc::DanglingNodeRef, "pipe '" + std::string(l.fields[0]) +
                                                       "' references unknown node '" + std::string(id) +
                                                       "' (line " + std::to_string(l.number) + ")");
            }
            return it->second;
        };
        if (l.fields.size() >= 8) {
            const std::string status = upper(l.fields[7]);
            if (status != "OPEN") {
                throw Error(Errc::UnsupportedSection, "pipe status '" + status + "' (line " +
                                                          std::to_string(l.number) + ")");
            }
        }
        Pipe p;
        p.id = std::string(l.fields[0]);
        p.from = node(l.fields[1]);
        p.to = node(l.fields[2]);
        p.length = number(l.fields[3], l.number) * units.length;
        p.diameter = number(l.fields[4], l.number) / (1.0 / units.diameter);
        const double rough = number(l.fields[5], l.number);
        p.roughness = model == HeadlossModel::HazenWilliams ? rough : rough / (1.0 / units.dw_rough);
        p.model = model;
        pipes.push_back(std::move(p));
    }

    return Network(std::move(junctions), std::move(fixed), std::move(pipes));
}

/// Canonical INP text: SI units (CMS), file order preserved, fixed heads
/// written as reservoirs. Parsing the output reproduces an equal Network.
inline std::string to_inp(const Network& net)
{
    using namespace inp_detail;
    const auto pipes = net.pipes();
    HeadlossModel model = pipes.empty() ? HeadlossModel::HazenWilliams : pipes.front().model;
    for (const auto& p : pipes) {
        if (p.model != model) {
            throw Error(Errc::InvalidValue, "INP output needs a single headloss model");
        }
    }
    std::string s;
    s += "[JUNCTIONS]\n;ID\tElev\tDemand\n";
    for (const auto& j : net.junctions()) s += j.id + "\t0\t" + fmt(j.demand) + "\n";
    s += "\n[RESERVOIRS]\n;ID\tHead\n";
    for (const auto& f : net.fixed_heads()) s += f.id + "\t" + fmt(f.head) + "\n";
    s += "\n[PIPES]\n;ID\tNode1\tNode2\tLength\tDiameter\tRoughness\tMinorLoss\tStatus\n";
    for (const auto& p : pipes) {
        s += p.id + "\t" + net.node_id(p.from) + "\t" + net.node_id(p.to) + "\t" + fmt(p.length) +
             "\t" + fmt_scaled(p.diameter, 1000.0) + "\t" +
             (model == HeadlossModel::HazenWilliams ? fmt(p.roughness)
                                                    : fmt_scaled(p.roughness, 1000.0)) +
             "\t0\tOpen\n";
    }
    s += "\n[OPTIONS]\nUnits\tCMS\nHeadloss\t";
    s += model == HeadlossModel::HazenWilliams ? "H-W" : "D-W";
    s += "\n\n[END]\n";
    return s;
}

}  // namespace nullflow
