/*==============================================================================
 *  headloss.hpp
 *
 *  Frictional headloss h_j(q) = G_jj(q)·q for Hazen-Williams and
 *  Darcy-Weisbach pipes, the diagonal Newton matrix F = dh/dq, and the
 *  diagonal shift T that bounds the condition number of F + T.
 *
 *  Hazen-Williams:  G = r|q|^0.852,  F = 1.852·G.
 *
 *  Darcy-Weisbach:  G = f(Re)·8L|q|/(π²gD⁵) with f laminar below Re = 2000,
 *  Swamee-Jain above Re = 4000 and a cubic Hermite blend in between that
 *  matches value and slope at both ends. F is the exact derivative,
 *  F = (2 + Re·f'(Re)/f)·G, so the per-pipe exponent n_j stored in the state
 *  is flow dependent (1 in the laminar range, close to 2 when fully rough).
 *  At q = 0 the laminar limit gives the finite value G = 128νL/(πgD⁴).
 *
 *============================================================================*/
#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include "error.hpp"
#include "network.hpp"

namespace nullflow {

inline constexpr double gravity = 9.81;               // m/s²
inline constexpr double water_viscosity = 1.004e-6;   // m²/s at 20 °C
inline constexpr double hw_exponent = 1.852;

inline double hw_resistance(double length, double diameter, double C)
{
    if (!(length > 0.0) || !(diameter > 0.0) || !(C > 0.0)) {
        throw Error(Errc::NonPositiveInput, "Hazen-Williams resistance needs L, D, C > 0");
    }
    return 10.670 * length / (std::pow(C, hw_exponent) * std::pow(diameter, 4.871));
}

struct DwGeometry {
    double length = 0.0;
    double diameter = 0.0;
    double roughness = 0.0;  // absolute, m
    double viscosity = water_viscosity;
};

namespace dw {

inline constexpr double re_laminar = 2000.0;
inline constexpr double re_turbulent = 4000.0;

inline double swamee_jain(double re, double rel_rough)
{
    const double l = std::log10(rel_rough / 3.7 + 5.74 / std::pow(re, 0.9));
    return 0.25 / (l * l);
}

inline double swamee_jain_slope(double re, double rel_rough)
{
    const double u = rel_rough / 3.7 + 5.74 / std::pow(re, 0.9);
    const double l = std::log10(u);
    const double dl = (-0.9 * 5.74 * std::pow(re, -1.9)) / (u * std::numbers::ln10);
    return -0.5 / (l * l * l) * dl;
}

struct Blend {
    double f0, f1, m0, m1;
};

inline Blend transition(double rel_rough)
{
    return {64.0 / re_laminar, swamee_jain(re_turbulent, rel_rough),
            -64.0 / (re_laminar * re_laminar), swamee_jain_slope(re_turbulent, rel_rough)};
}

}  // namespace dw

/// Friction factor f(Re) for relative roughness ε/D. Re must be positive.
inline double dw_friction_factor(double re, double rel_rough)
{
    if (re < dw::re_laminar) return 64.0 / re;
    if (re > dw::re_turbulent) return dw::swamee_jain(re, rel_rough);
    const auto b = dw::transition(rel_rough);
    const double h = dw::re_turbulent - dw::re_laminar;
    const double t = (re - dw::re_laminar) / h;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * b.f0 + (t3 - 2 * t2 + t) * h * b.m0 +
           (-2 * t3 + 3 * t2) * b.f1 + (t3 - t2) * h * b.m1;
}

/// df/dRe, consistent with dw_friction_factor.
inline double dw_friction_slope(double re, double rel_rough)
{
    if (re < dw::re_laminar) return -64.0 / (re * re);
    if (re > dw::re_turbulent) return dw::swamee_jain_slope(re, rel_rough);
    const auto b = dw::transition(rel_rough);
    const double h = dw::re_turbulent - dw::re_laminar;
    const double t = (re - dw::re_laminar) / h;
    const double t2 = t * t;
    return ((6 * t2 - 6 * t) * b.f0 + (3 * t2 - 4 * t + 1) * h * b.m0 +
            (-6 * t2 + 6 * t) * b.f1 + (3 * t2 - 2 * t) * h * b.m1) / h;
}

inline void check_geometry(const DwGeometry& g)
{
    if (!(g.length > 0.0) || !(g.diameter > 0.0) || !(g.roughness > 0.0) || !(g.viscosity > 0.0)) {
        throw Error(Errc::NonPositiveGeometry, "Darcy-Weisbach geometry must be positive");
    }
}

inline double reynolds(double q, const DwGeometry& g)
{
    return 4.0 * std::abs(q) / (std::numbers::pi * g.diameter * g.viscosity);
}

/// r(q) with headloss r(q)·|q|·q. Unbounded as q → 0 (laminar f ~ 1/Re).
inline double dw_resistance(double q, const DwGeometry& g)
{
    check_geometry(g);
    const double re = reynolds(q, g);
    if (re == 0.0) return INFINITY;
    const double pi = std::numbers::pi;
    return dw_friction_factor(re, g.roughness / g.diameter) * 8.0 * g.length /
           (pi * pi * gravity * std::pow(g.diameter, 5));
}

/// Per-pipe constants for evaluating G and F.
class ResistanceModel {
public:
    ResistanceModel() = default;

    explicit ResistanceModel(const Network& net)
    {
        const auto pipes = net.pipes();
        kind_.reserve(pipes.size());
        for (const auto& p : pipes) {
            kind_.push_back(p.model);
            if (p.model == HeadlossModel::HazenWilliams) {
                r_.push_back(hw_resistance(p.length, p.diameter, p.roughness));
                geom_.push_back({});
            } else {
                DwGeometry g{p.length, p.diameter, p.roughness, water_viscosity};
                check_geometry(g);
                r_.push_back(0.0);
                geom_.push_back(g);
            }
        }
    }

    Index size() const noexcept { return static_cast<Index>(kind_.size()); }
    HeadlossModel kind(Index j) const { return kind_[j]; }
    double hw_r(Index j) const { return r_[j]; }
    const DwGeometry& geometry(Index j) const { return geom_[j]; }

    /// Nominal exponent: 1.852 (HW) or 2 (DW).
    double nominal_exponent(Index j) const
    {
        return kind_[j] == HeadlossModel::HazenWilliams ? hw_exponent : 2.0;
    }

    struct Value {
        double G;
        double n;  // F = n·G
    };

    Value evaluate(Index j, double q) const
    {
        if (kind_[j] == HeadlossModel::HazenWilliams) {
            return {r_[j] * std::pow(std::abs(q), hw_exponent - 1.0), hw_exponent};
        }
        const auto& g = geom_[j];
        const double pi = std::numbers::pi;
        const double re = reynolds(q, g);
        if (re < dw::re_laminar) {
            return {128.0 * g.viscosity * g.length / (pi * gravity * std::pow(g.diameter, 4)), 1.0};
        }
        const double rel = g.roughness / g.diameter;
        const double f = dw_friction_factor(re, rel);
        const double c = 8.0 * g.length / (pi * pi * gravity * std::pow(g.diameter, 5));
        return {c * f * std::abs(q), 2.0 + re * dw_friction_slope(re, rel) / f};
    }

    /// Headloss h_j(q) = G_jj(q)·q.
    double headloss(Index j, double q) const { return evaluate(j, q).G * q; }

private:
    std::vector<HeadlossModel> kind_;
    std::vector<double> r_;
    std::vector<DwGeometry> geom_;
};

struct HeadlossState {
    std::vector<double> G;
    std::vector<double> n;
    std::vector<double> F;
    std::vector<double> T;
    long long evaluations = 0;  // per-pipe G evaluations performed

    HeadlossState() = default;
    explicit HeadlossState(Index np)
        : G(static_cast<std::size_t>(np), 0.0), n(static_cast<std::size_t>(np), 0.0),
          F(static_cast<std::size_t>(np), 0.0), T(static_cast<std::size_t>(np), 0.0)
    {
    }

    Index size() const noexcept { return static_cast<Index>(G.size()); }

    double F_reg(Index j) const { return F[j] + T[j]; }

    std::vector<double> F_reg() const
    {
        std::vector<double> r(F.size());
        for (std::size_t j = 0; j < F.size(); ++j) r[j] = F[j] + T[j];
        return r;
    }
};

/// Recomputes G, n, F for the pipes in `subset` from q; leaves the rest untouched.
inline void update_GF(HeadlossState& state, std::span<const double> q, const ResistanceModel& model,
                      std::span<const Index> subset)
{
    if (q.size() != state.G.size() || model.size() != state.size()) {
        throw Error(Errc::DimensionMismatch, "flow vector / headloss state length");
    }
    for (Index j : subset) {
        if (j < 0 || j >= state.size()) throw Error(Errc::IndexOutOfRange, "pipe index in update set");
        const auto v = model.evaluate(j, q[j]);
        state.G[j] = v.G;
        state.n[j] = v.n;
        state.F[j] = v.n * v.G;
    }
    state.evaluations += static_cast<long long>(subset.size());
}

inline void update_GF(HeadlossState& state, std::span<const double> q, const ResistanceModel& model)
{
    std::vector<Index> all(state.G.size());
    std::iota(all.begin(), all.end(), Index{0});
    update_GF(state, q, model, all);
}

/// T_j = max(0, max(F)/κ̄ − F_j), adjusted by at most a few ulps so that
/// max(F+T)/min(F+T) ≤ κ̄ also holds in floating point.
inline std::vector<double> regularize(std::span<const double> F, double kappa_bar)
{
    if (!(kappa_bar > 1.0)) throw Error(Errc::InvalidConfig, "kappa_bar must exceed 1");
    double m = 0.0;
    for (double f : F) {
        if (!(f >= 0.0)) throw Error(Errc::InvalidValue, "negative or NaN diagonal entry");
        m = std::max(m, f);
    }
    if (m == 0.0) throw Error(Errc::AllZeroDiagonal, "all diagonal entries are zero");
    double floor_v = m / kappa_bar;
    while (m / floor_v > kappa_bar) floor_v = std::nextafter(floor_v, INFINITY);

    std::vector<double> T(F.size(), 0.0);
    for (std::size_t j = 0; j < F.size(); ++j) {
        if (F[j] >= floor_v) continue;
        double t = floor_v - F[j];
        while (F[j] + t < floor_v) t = std::nextafter(t, INFINITY);
        T[j] = t;
    }
    return T;
}

inline void regularize(HeadlossState& state, double kappa_bar)
{
    state.T = regularize(state.F, kappa_bar);
}

}  // namespace nullflow
