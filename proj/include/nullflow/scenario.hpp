/*==============================================================================
 *  scenario.hpp
 *
 *  Demand scenarios for extended-time runs: one demand vector per step.
 *  Scenarios come from a CSV file (header `step,<junction ids>`, flows in
 *  m³/s) or from a seeded synthetic diurnal profile.
 *
 *============================================================================*/
#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "network.hpp"

namespace nullflow {

struct DemandScenario {
    std::vector<std::vector<double>> steps;
    std::vector<std::string> step_labels;

    std::size_t size() const noexcept { return steps.size(); }

    void validate(const Network& net) const
    {
        for (std::size_t k = 0; k < steps.size(); ++k) {
            if (static_cast<Index>(steps[k].size()) != net.n_junctions()) {
                throw Error(Errc::DimensionMismatch, "step " + std::to_string(k) + " has the wrong length");
            }
            for (double v : steps[k]) {
                if (!(v >= 0.0) || !std::isfinite(v)) {
                    throw Error(Errc::InvalidValue, "step " + std::to_string(k) + " has a negative demand");
                }
            }
        }
    }
};

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit engine draw;
/// identical on every platform.
inline double unit_draw(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Base demands × (1 + 0.4·sin(2πt/N − π/2)) × (1 + 0.1·(u − 0.5)), u ~ U[0,1)
/// drawn per junction and step.
inline DemandScenario synthetic_scenario(const Network& net, std::size_t n_steps, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    DemandScenario sc;
    const auto base = net.demands();
    for (std::size_t t = 0; t < n_steps; ++t) {
        const double phase = 2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(n_steps);
        const double m = 1.0 + 0.4 * std::sin(phase - std::numbers::pi / 2.0);
        std::vector<double> d(base.size());
        for (std::size_t i = 0; i < base.size(); ++i) {
            d[i] = std::max(0.0, base[i]) * m * (1.0 + 0.1 * (unit_draw(rng) - 0.5));
        }
        sc.steps.push_back(std::move(d));
        sc.step_labels.push_back(std::to_string(t));
    }
    return sc;
}

inline DemandScenario read_scenario_csv(std::istream& is, const Network& net)
{
    auto split = [](const std::string& line) {
        std::vector<std::string> out;
        std::string cell;
        std::istringstream ss(line);
        while (std::getline(ss, cell, ',')) {
            while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
            while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
            out.push_back(cell);
        }
        return out;
    };
    std::string line;
    if (!std::getline(is, line)) throw Error(Errc::ParseError, "empty scenario file");
    const auto header = split(line);
    if (header.empty() || header[0] != "step") {
        throw Error(Errc::ParseError, "scenario header must start with 'step'");
    }
    std::vector<Index> column_of(header.size(), -1);
    std::vector<char> covered(static_cast<std::size_t>(net.n_junctions()), 0);
    for (std::size_t c = 1; c < header.size(); ++c) {
        Index found = -1;
        for (Index i = 0; i < net.n_junctions(); ++i) {
            if (net.junctions()[i].id == header[c]) found = i;
        }
        if (found < 0) throw Error(Errc::DanglingNodeRef, "scenario column '" + header[c] + "' is not a junction");
        if (covered[found]) throw Error(Errc::DuplicateId, "scenario column '" + header[c] + "' repeated");
        covered[found] = 1;
        column_of[c] = found;
    }
    for (Index i = 0; i < net.n_junctions(); ++i) {
        if (!covered[i]) throw Error(Errc::ParseError, "scenario lacks junction '" + net.junctions()[i].id + "'");
    }

    DemandScenario sc;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = split(line);
        if (cells.size() != header.size()) {
            throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": wrong number of cells");
        }
        std::vector<double> d(static_cast<std::size_t>(net.n_junctions()));
        for (std::size_t c = 1; c < cells.size(); ++c) {
            double v = 0.0;
            auto [p, ec] = std::from_chars(cells[c].data(), cells[c].data() + cells[c].size(), v);
            if (ec != std::errc{} || p != cells[c].data() + cells[c].size()) {
                throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": bad number '" + cells[c] + "'");
            }
            d[column_of[c]] = v;
        }
        sc.step_labels.push_back(cells[0]);
        sc.steps.push_back(std::move(d));
    }
    sc.validate(net);
    return sc;
}

inline void write_scenario_csv(std::ostream& os, const DemandScenario& sc, const Network& net)
{
    os << "step";
    for (const auto& j : net.junctions()) os << ',' << j.id;
    os << '\n';
    char buf[64];
    for (std::size_t k = 0; k < sc.steps.size(); ++k) {
        os << (k < sc.step_labels.size() ? sc.step_labels[k] : std::to_string(k));
        for (double v : sc.steps[k]) {
            auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
            os << ',' << std::string_view(buf, static_cast<std::size_t>(p - buf));
        }
        os << '\n';
    }
}

}  // namespace nullflow
