/*==============================================================================
 *  fixtures.hpp
 *
 *  Small synthetic networks with known structure, used by the tests, the
 *  benchmark driver and the shipped INP files.
 *
 *============================================================================*/
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "network.hpp"
#include "scenario.hpp"

namespace nullflow::fixtures {

/// Roughness default per model: C = 100, or 0.26 mm absolute.
inline double default_roughness(HeadlossModel m)
{
    return m == HeadlossModel::HazenWilliams ? 100.0 : 0.26e-3;
}

namespace detail {

inline Pipe pipe(std::string id, NodeRef a, NodeRef b, double L, double D, HeadlossModel m)
{
    return Pipe{std::move(id), a, b, L, D, default_roughness(m), m};
}

}  // namespace detail

inline Network single_pipe(HeadlossModel m = HeadlossModel::HazenWilliams)
{
    return Network({{"J1", 0.01}}, {{"R1", 50.0}},
                   {detail::pipe("P1", NodeRef::fixed(0), NodeRef::junction(0), 1000.0, 0.3, m)});
}

inline Network parallel_pair(HeadlossModel m = HeadlossModel::HazenWilliams)
{
    return Network({{"J1", 0.02}}, {{"R1", 50.0}},
                   {detail::pipe("P1", NodeRef::fixed(0), NodeRef::junction(0), 1000.0, 0.3, m),
                    detail::pipe("P2", NodeRef::fixed(0), NodeRef::junction(0), 1000.0, 0.3, m)});
}

/// Reservoir feeding A; loop A→B→C→A with mixed diameters.
inline Network triangle(HeadlossModel m = HeadlossModel::HazenWilliams)
{
    using N = NodeRef;
    return Network({{"A", 0.010}, {"B", 0.008}, {"C", 0.006}}, {{"R", 50.0}},
                   {detail::pipe("P1", N::fixed(0), N::junction(0), 1000.0, 0.30, m),
                    detail::pipe("P2", N::junction(0), N::junction(1), 800.0, 0.20, m),
                    detail::pipe("P3", N::junction(1), N::junction(2), 600.0, 0.15, m),
                    detail::pipe("P4", N::junction(2), N::junction(0), 900.0, 0.25, m)});
}

/// Single loop through the reservoir: R→a→b→c→R.
inline Network square_loop(HeadlossModel m = HeadlossModel::HazenWilliams)
{
    using N = NodeRef;
    return Network({{"a", 0.005}, {"b", 0.006}, {"c", 0.004}}, {{"R", 40.0}},
                   {detail::pipe("P1", N::fixed(0), N::junction(0), 500.0, 0.20, m),
                    detail::pipe("P2", N::junction(0), N::junction(1), 500.0, 0.15, m),
                    detail::pipe("P3", N::junction(1), N::junction(2), 500.0, 0.15, m),
                    detail::pipe("P4", N::junction(2), N::fixed(0), 500.0, 0.20, m)});
}

/// side × side lattice fed from a reservoir (80 m) at corner (0,0). Row 0
/// and column 0 are 450 mm trunk mains; the interior pipes are 100 to
/// 200 mm distribution mains. Demands average 1.5 L/s per node on a fixed
/// pattern, so no two paths are hydraulically symmetric. For side = 10:
/// n_p = 180, n_n = 99, n_l = 81.
inline Network grid(int side = 10, HeadlossModel m = HeadlossModel::HazenWilliams, bool dry_corner = false)
{
    const double distribution[] = {0.10, 0.15, 0.20, 0.125};
    const double trunk = 0.45;
    auto node_name = [](int r, int c) { return "N" + std::to_string(r) + "_" + std::to_string(c); };
    std::vector<Junction> junctions;
    std::vector<Index> index_of(static_cast<std::size_t>(side * side), -1);
    for (int r = 0; r < side; ++r) {
        for (int c = 0; c < side; ++c) {
            if (r == 0 && c == 0) continue;
            double d = 1.5e-3 * (0.6 + 0.1 * ((3 * r + 5 * c) % 9));
            if (dry_corner && r == side - 1 && c == side - 1) d = 0.0;
            index_of[r * side + c] = static_cast<Index>(junctions.size());
            junctions.push_back({node_name(r, c), d});
        }
    }
    auto ref = [&](int r, int c) {
        return (r == 0 && c == 0) ? NodeRef::fixed(0) : NodeRef::junction(index_of[r * side + c]);
    };
    std::vector<Pipe> pipes;
    int k = 0;
    for (int r = 0; r < side; ++r) {
        for (int c = 0; c + 1 < side; ++c, ++k) {
            pipes.push_back(detail::pipe("H" + std::to_string(r) + "_" + std::to_string(c), ref(r, c),
                                         ref(r, c + 1), 300.0 + 20.0 * ((r + 2 * c) % 5),
                                         r == 0 ? trunk : distribution[(7 * k) % 4], m));
        }
    }
    for (int r = 0; r + 1 < side; ++r) {
        for (int c = 0; c < side; ++c, ++k) {
            pipes.push_back(detail::pipe("V" + std::to_string(r) + "_" + std::to_string(c), ref(r, c),
                                         ref(r + 1, c), 300.0 + 20.0 * ((2 * r + c) % 5),
                                         c == 0 ? trunk : distribution[(7 * k) % 4], m));
        }
    }
    return Network(std::move(junctions), {{"R", 80.0}}, std::move(pipes));
}

struct RandomSpec {
    Index junctions = 20;
    Index fixed_heads = 1;
    Index extra_pipes = 10;  // chords on top of the spanning tree
    HeadlossModel model = HeadlossModel::HazenWilliams;
};

/// Random spanning tree over junctions and fixed heads, plus extra random
/// pipes (parallel pipes allowed), random orientation. Connected and valid
/// by construction. Integer draws use only raw engine bits.
inline Network random_network(std::uint64_t seed, const RandomSpec& spec)
{
    std::mt19937_64 rng(seed);
    auto below = [&rng](Index n) { return static_cast<Index>(rng() % static_cast<std::uint64_t>(n)); };
    const Index nn = spec.junctions, n0 = spec.fixed_heads, nv = nn + n0;
    auto ref = [nn](Index v) { return v < nn ? NodeRef::junction(v) : NodeRef::fixed(v - nn); };

    std::vector<Junction> junctions;
    for (Index i = 0; i < nn; ++i) {
        junctions.push_back({"J" + std::to_string(i), 1e-3 * (0.5 + unit_draw(rng))});
    }
    std::vector<FixedHead> fixed;
    for (Index i = 0; i < n0; ++i) fixed.push_back({"R" + std::to_string(i), 40.0 + 20.0 * unit_draw(rng)});

    // Random attachment order, starting from a fixed head so that one sits
    // next to a junction.
    std::vector<Index> order(static_cast<std::size_t>(nv));
    std::iota(order.begin(), order.end(), Index{0});
    for (Index i = nv - 1; i > 0; --i) std::swap(order[i], order[below(i + 1)]);
    auto first_fixed = std::find_if(order.begin(), order.end(), [nn](Index v) { return v >= nn; });
    std::iter_swap(order.begin(), first_fixed);
    if (nv > 1 && order[1] >= nn) {
        auto first_junction = std::find_if(order.begin(), order.end(), [nn](Index v) { return v < nn; });
        std::iter_swap(order.begin() + 1, first_junction);
    }

    std::vector<Pipe> pipes;
    const double diameters[] = {0.1, 0.15, 0.2, 0.25, 0.3, 0.4};
    auto add = [&](Index a, Index b) {
        if (rng() & 1U) std::swap(a, b);
        const double L = 100.0 + 900.0 * unit_draw(rng);
        const double D = diameters[below(6)];
        pipes.push_back(Pipe{"P" + std::to_string(pipes.size()), ref(a), ref(b), L, D,
                             default_roughness(spec.model), spec.model});
    };
    for (Index k = 1; k < nv; ++k) add(order[k], order[below(k)]);
    for (Index e = 0; e < spec.extra_pipes; ++e) {
        Index a = below(nv), b = below(nv);
        while (b == a) b = below(nv);
        add(a, b);
    }
    return Network(std::move(junctions), std::move(fixed), std::move(pipes));
}

/// Every named fixture, for the CLI and shipped files.
inline std::vector<std::string> names()
{
    return {"single_pipe", "parallel_pair", "triangle", "square_loop", "grid10", "grid10_dry_corner"};
}

inline Network by_name(const std::string& name, HeadlossModel m = HeadlossModel::HazenWilliams)
{
    if (name == "single_pipe") return single_pipe(m);
    if (name == "parallel_pair") return parallel_pair(m);
    if (name == "triangle") return triangle(m);
    if (name == "square_loop") return square_loop(m);
    if (name == "grid10") return grid(10, m);
    if (name == "grid10_dry_corner") return grid(10, m, true);
    throw Error(Errc::InvalidValue, "unknown fixture '" + name + "'");
}

}  // namespace nullflow::fixtures
