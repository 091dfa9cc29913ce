/*==============================================================================
 *  solvers.hpp
 *
 *  Newton solvers for the demand-driven network equations
 *
 *      G(q)·q + A12·h + A10·h0 = 0
 *      A12ᵀ·q                  = d
 *
 *  GGA    Schur reduction onto the heads, A12ᵀF̃⁻¹A12 factored every iteration.
 *  NSM1   null-space Newton: q = x* + Z·v, so continuity holds at every
 *         iterate; the loop system ZᵀF̃Z is rebuilt over E₂ every iteration.
 *  NSM2   as NSM1, but headlosses (and the loop matrix) are refreshed only on
 *         the pipes whose flow moved by at least ε·δ_N.
 *  NSM3   as NSM2, and the head system is skipped until the update set has
 *         shrunk or the relative flow step is below δ_N.
 *
 *  F̃ = F + T is the regularized Newton diagonal. Residuals always use the
 *  unshifted G.
 *
 *============================================================================*/
#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cholesky.hpp"
#include "gram.hpp"
#include "headloss.hpp"
#include "network.hpp"
#include "null_basis.hpp"

namespace nullflow {

enum class Method { GGA, NSM1, NSM2, NSM3 };

inline std::string_view to_string(Method m) noexcept
{
    switch (m) {
        case Method::GGA:  return "gga";
        case Method::NSM1: return "nsm1";
        case Method::NSM2: return "nsm2";
        case Method::NSM3: return "nsm3";
    }
    return "?";
}

inline Method parse_method(std::string_view s)
{
    if (s == "gga") return Method::GGA;
    if (s == "nsm1") return Method::NSM1;
    if (s == "nsm2") return Method::NSM2;
    if (s == "nsm3") return Method::NSM3;
    throw Error(Errc::InvalidConfig, "unknown method '" + std::string(s) + "'");
}

struct SolverConfig {
    Method method = Method::NSM1;
    double delta = 1e-6;           // residual tolerance δ_N
    double epsilon = 1e-3;         // update-set parameter ε
    int kmax = 100;
    double kappa = 1e8;            // bound on κ(F + T)
    double a = 0.5;                // NSM3 head-delay fraction
    double gga_flow_floor = 1e-6;  // m³/s
    bool reuse_symbolic = true;
    bool record_iterates = false;

    void validate() const
    {
        if (!(delta > 0.0)) throw Error(Errc::InvalidConfig, "delta must be positive");
        if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error(Errc::InvalidConfig, "epsilon must lie in (0, 1)");
        if (kmax < 1) throw Error(Errc::InvalidConfig, "kmax must be at least 1");
        if (!(kappa > 1.0)) throw Error(Errc::InvalidConfig, "kappa must exceed 1");
        if (!(a > 0.0 && a <= 1.0)) throw Error(Errc::InvalidConfig, "a must lie in (0, 1]");
        if (!(gga_flow_floor > 0.0)) throw Error(Errc::InvalidConfig, "flow floor must be positive");
    }
};

/// Wall time per block in milliseconds.
struct TimingBreakdown {
    double linear_solves = 0.0;
    double headloss = 0.0;
    double matmat = 0.0;
    double other = 0.0;

    double total() const noexcept { return linear_solves + headloss + matmat + other; }

    TimingBreakdown& operator+=(const TimingBreakdown& o) noexcept
    {
        linear_solves += o.linear_solves;
        headloss += o.headloss;
        matmat += o.matmat;
        other += o.other;
        return *this;
    }
};

struct SolverResult {
    Method method = Method::NSM1;
    std::vector<double> q;
    std::vector<double> h;
    int iterations = 0;
    std::vector<double> residual_history;       // NaN where the residual was not evaluated
    std::vector<Index> update_set_sizes;        // headloss evaluations per iteration
    std::vector<double> continuity_history;     // ‖A12ᵀq^k − d‖∞ per iterate (NSM)
    std::vector<std::vector<double>> q_iterates;  // only with record_iterates
    bool converged = false;
    double final_residual = std::numeric_limits<double>::quiet_NaN();
    double verified_residual = std::numeric_limits<double>::quiet_NaN();  // with every G fresh
    long long headloss_evaluations = 0;
    int head_solves = 0;
    TimingBreakdown timing;
};

namespace detail {

class Stopwatch {
public:
    explicit Stopwatch(double& sink) : sink_(sink), start_(std::chrono::steady_clock::now()) {}
    ~Stopwatch()
    {
        sink_ += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    }
    Stopwatch(const Stopwatch&) = delete;
    Stopwatch& operator=(const Stopwatch&) = delete;

private:
    double& sink_;
    std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

/// Quantities that depend only on the network: the null basis, the factor
/// of A12ᵀA12, and the assembly plans and symbolic factors of both reduced
/// systems. Immutable once built; share freely between threads.
class Precomputed {
public:
    Precomputed() = default;

    explicit Precomputed(const Network& net)
    {
        double t_basis = 0.0, t_symbolic = 0.0, t_factor = 0.0;
        fingerprint_ = net.fingerprint();
        model_ = ResistanceModel(net);
        {
            detail::Stopwatch sw(t_basis);
            basis_ = build_fundamental_basis(net);
            z_plan_ = WeightedGram(basis_.Z_real());
        }
        {
            detail::Stopwatch sw(t_symbolic);
            a_plan_ = WeightedGram(net.A12());
            head_symbolic_ = std::make_shared<SymbolicFactor>(symbolic_cholesky(a_plan_.pattern()));
            if (basis_.n_loops > 0) {
                loop_symbolic_ = std::make_shared<SymbolicFactor>(symbolic_cholesky(z_plan_.pattern()));
            }
        }
        {
            detail::Stopwatch sw(t_factor);
            const std::vector<double> ones(static_cast<std::size_t>(net.n_pipes()), 1.0);
            head_factor_.emplace(head_symbolic_, a_plan_.assemble(ones));
        }
        basis_ms_ = t_basis;
        symbolic_ms_ = t_symbolic;
        head_factor_ms_ = t_factor;
    }

    std::uint64_t fingerprint() const noexcept { return fingerprint_; }
    const ResistanceModel& model() const noexcept { return model_; }
    const NullBasis& basis() const noexcept { return basis_; }
    const WeightedGram& loop_plan() const noexcept { return z_plan_; }
    const WeightedGram& head_plan() const noexcept { return a_plan_; }
    std::shared_ptr<const SymbolicFactor> head_symbolic() const noexcept { return head_symbolic_; }
    std::shared_ptr<const SymbolicFactor> loop_symbolic() const noexcept { return loop_symbolic_; }
    const NumericFactor& head_factor() const { return *head_factor_; }

    double basis_ms() const noexcept { return basis_ms_; }
    double symbolic_ms() const noexcept { return symbolic_ms_; }
    double head_factor_ms() const noexcept { return head_factor_ms_; }

    void check(const Network& net) const
    {
        if (!head_factor_ || net.fingerprint() != fingerprint_) {
            throw Error(Errc::InvalidConfig, "precomputed data belongs to a different network");
        }
    }

private:
    std::uint64_t fingerprint_ = 0;
    ResistanceModel model_;
    NullBasis basis_;
    WeightedGram z_plan_;
    WeightedGram a_plan_;
    std::shared_ptr<const SymbolicFactor> head_symbolic_;
    std::shared_ptr<const SymbolicFactor> loop_symbolic_;
    std::optional<NumericFactor> head_factor_;
    double basis_ms_ = 0.0;
    double symbolic_ms_ = 0.0;
    double head_factor_ms_ = 0.0;
};

/// ‖[G·q + A12·h + A10·h0 ; A12ᵀ·q − d]‖∞ with the given (unshifted) G.
inline double residual_norm(const Network& net, std::span<const double> q, std::span<const double> h,
                            std::span<const double> d, std::span<const double> G)
{
    if (static_cast<Index>(q.size()) != net.n_pipes() || static_cast<Index>(G.size()) != net.n_pipes() ||
        static_cast<Index>(h.size()) != net.n_junctions() || static_cast<Index>(d.size()) != net.n_junctions()) {
        throw Error(Errc::DimensionMismatch, "residual operand length");
    }
    auto energy = net.A12().multiply(h);
    const auto h0 = net.fixed_head_values();
    const auto fixed = net.A10().multiply(h0);
    double r = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) {
        r = std::max(r, std::abs(G[j] * q[j] + energy[j] + fixed[j]));
    }
    const auto cont = net.A12().multiply_transposed(q);
    for (std::size_t i = 0; i < d.size(); ++i) r = std::max(r, std::abs(cont[i] - d[i]));
    return r;
}

inline double continuity_error(const Network& net, std::span<const double> q, std::span<const double> d)
{
    const auto cont = net.A12().multiply_transposed(q);
    double r = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) r = std::max(r, std::abs(cont[i] - d[i]));
    return r;
}

/// x* = A12·w with A12ᵀA12·w = d.
inline std::vector<double> particular_solution(const Precomputed& pre, const CscMatrix& A12,
                                               std::span<const double> d)
{
    if (static_cast<Index>(d.size()) != A12.cols()) {
        throw Error(Errc::DimensionMismatch, "demand vector length");
    }
    return A12.multiply(pre.head_factor().solve(d));
}

/// {i ∈ E2 : |q_next_i − q_prev_i| ≥ ε·δ_N}
inline std::vector<Index> update_set(std::span<const double> q_next, std::span<const double> q_prev,
                                     double epsilon, double delta, std::span<const Index> E2)
{
    if (q_next.size() != q_prev.size()) throw Error(Errc::DimensionMismatch, "flow vector lengths");
    const double threshold = epsilon * delta;
    std::vector<Index> U;
    for (Index i : E2) {
        if (std::abs(q_next[i] - q_prev[i]) >= threshold) U.push_back(i);
    }
    return U;
}

/// q⁰_j = (πD²/4)·0.3048 m/s along the reference direction.
inline std::vector<double> initial_flows(const Network& net)
{
    std::vector<double> q;
    for (const auto& p : net.pipes()) q.push_back(std::numbers::pi * p.diameter * p.diameter / 4.0 * 0.3048);
    return q;
}

inline std::vector<double> initial_heads(const Network& net)
{
    const auto h0 = net.fixed_head_values();
    return std::vector<double>(static_cast<std::size_t>(net.n_junctions()),
                               *std::max_element(h0.begin(), h0.end()));
}

namespace detail {

inline void check_inputs(const Network& net, std::span<const double> d, const SolverConfig& cfg,
                         const Precomputed& pre)
{
    cfg.validate();
    pre.check(net);
    if (static_cast<Index>(d.size()) != net.n_junctions()) {
        throw Error(Errc::DimensionMismatch, "demand vector length");
    }
}

inline std::shared_ptr<const SymbolicFactor> symbolic_for(const std::shared_ptr<const SymbolicFactor>& shared,
                                                          const CscMatrix& X, bool reuse)
{
    if (reuse) return shared;
    return std::make_shared<SymbolicFactor>(symbolic_cholesky(X));
}

inline void factor(std::optional<NumericFactor>& fac, std::shared_ptr<const SymbolicFactor> sym,
                   const CscMatrix& X, bool reuse)
{
    if (reuse && fac) {
        fac->refactor(X);
    } else {
        fac.emplace(std::move(sym), X);
    }
}

}  // namespace detail

inline SolverResult solve_gga(const Network& net, std::span<const double> d, const SolverConfig& cfg,
                              const Precomputed& pre)
{
    detail::check_inputs(net, d, cfg, pre);
    SolverResult res;
    res.method = Method::GGA;
    auto& tm = res.timing;
    const auto& model = pre.model();
    const CscMatrix& A12 = net.A12();
    const auto h0 = net.fixed_head_values();
    const auto fixed = net.A10().multiply(h0);
    const Index np = net.n_pipes();

    std::vector<double> q = initial_flows(net);
    std::vector<double> h = initial_heads(net);
    HeadlossState st(np);
    {
        detail::Stopwatch sw(tm.headloss);
        update_GF(st, q, model);
    }
    std::vector<double> D(static_cast<std::size_t>(np)), Fj(static_cast<std::size_t>(np));
    std::vector<double> e(static_cast<std::size_t>(np));
    std::optional<NumericFactor> fac;

    for (int k = 1; k <= cfg.kmax; ++k) {
        {
            detail::Stopwatch sw(tm.headloss);
            for (Index j = 0; j < np; ++j) {
                Fj[j] = std::abs(q[j]) < cfg.gga_flow_floor
                            ? st.n[j] * model.evaluate(j, cfg.gga_flow_floor).G
                            : st.F[j];
            }
            const auto T = regularize(Fj, cfg.kappa);
            for (Index j = 0; j < np; ++j) D[j] = 1.0 / (Fj[j] + T[j]);
        }
        CscMatrix S;
        std::vector<double> rhs;
        {
            detail::Stopwatch sw(tm.matmat);
            S = pre.head_plan().assemble(D);
            for (Index j = 0; j < np; ++j) e[j] = D[j] * (st.G[j] * q[j] + fixed[j]);
            rhs = A12.multiply_transposed(e);
            const auto cont = A12.multiply_transposed(q);
            for (Index i = 0; i < net.n_junctions(); ++i) rhs[i] = -rhs[i] - (d[i] - cont[i]);
        }
        {
            detail::Stopwatch sw(tm.linear_solves);
            detail::factor(fac, detail::symbolic_for(pre.head_symbolic(), S, cfg.reuse_symbolic), S,
                           cfg.reuse_symbolic);
            h = fac->solve(rhs);
        }
        ++res.head_solves;
        {
            detail::Stopwatch sw(tm.other);
            const auto Ah = A12.multiply(h);
            for (Index j = 0; j < np; ++j) q[j] -= D[j] * (st.G[j] * q[j] + Ah[j] + fixed[j]);
        }
        {
            detail::Stopwatch sw(tm.headloss);
            update_GF(st, q, model);
        }
        res.update_set_sizes.push_back(np);
        if (cfg.record_iterates) res.q_iterates.push_back(q);
        double r = 0.0;
        {
            detail::Stopwatch sw(tm.other);
            r = residual_norm(net, q, h, d, st.G);
        }
        res.residual_history.push_back(r);
        res.iterations = k;
        if (r <= cfg.delta) {
            res.converged = true;
            break;
        }
    }
    res.final_residual = res.residual_history.empty() ? NAN : res.residual_history.back();
    res.verified_residual = res.final_residual;
    res.headloss_evaluations = st.evaluations;
    res.q = std::move(q);
    res.h = std::move(h);
    return res;
}

inline SolverResult solve_nsm(const Network& net, std::span<const double> d, const SolverConfig& cfg,
                              const Precomputed& pre)
{
    detail::check_inputs(net, d, cfg, pre);
    if (cfg.method == Method::GGA) throw Error(Errc::InvalidConfig, "solve_nsm needs an NSM method");
    SolverResult res;
    res.method = cfg.method;
    auto& tm = res.timing;
    const auto& model = pre.model();
    const auto& Z = pre.basis();
    const CscMatrix& A12 = net.A12();
    const auto h0 = net.fixed_head_values();
    const auto fixed = net.A10().multiply(h0);
    const Index np = net.n_pipes();
    const auto E2 = std::span<const Index>(Z.E2);
    const bool partial = cfg.method != Method::NSM1;

    std::vector<double> xs;
    {
        detail::Stopwatch sw(tm.linear_solves);
        xs = particular_solution(pre, A12, d);
    }

    // Flows outside E₂ are fixed at x* by continuity; the rest start from the
    // velocity-based guess.
    std::vector<double> q = initial_flows(net);
    {
        std::vector<char> loop(static_cast<std::size_t>(np), 0);
        for (Index i : E2) loop[i] = 1;
        for (Index j = 0; j < np; ++j) {
            if (!loop[j]) q[j] = xs[j];
        }
    }
    std::vector<double> h = initial_heads(net);
    HeadlossState st(np);
    {
        detail::Stopwatch sw(tm.headloss);
        update_GF(st, q, model);
    }

    // Heads from Eq. A12ᵀA12·h = A12ᵀ[(F̃−G)q_prev − A10h0 − F̃q_next].
    auto solve_heads = [&](std::span<const double> q_prev, std::span<const double> q_next) {
        std::vector<double> rhs(static_cast<std::size_t>(np));
        {
            detail::Stopwatch sw(tm.other);
            for (Index j = 0; j < np; ++j) {
                const double Fr = st.F[j] + st.T[j];
                rhs[j] = (Fr - st.G[j]) * q_prev[j] - fixed[j] - Fr * q_next[j];
            }
        }
        detail::Stopwatch sw(tm.linear_solves);
        h = pre.head_factor().solve(A12.multiply_transposed(rhs));
        ++res.head_solves;
    };

    if (Z.n_loops == 0) {
        {
            detail::Stopwatch sw(tm.headloss);
            regularize(st, cfg.kappa);
        }
        solve_heads(q, q);
        const double r = residual_norm(net, q, h, d, st.G);
        res.continuity_history.push_back(continuity_error(net, q, d));
        if (cfg.record_iterates) res.q_iterates.push_back(q);
        res.converged = r <= cfg.delta;
        res.final_residual = res.verified_residual = r;
        res.headloss_evaluations = st.evaluations;
        res.q = std::move(q);
        res.h = std::move(h);
        return res;
    }

    std::vector<double> Fx_prev;  // F̃ the current X was assembled with
    std::optional<CscMatrix> X;
    std::optional<NumericFactor> fac;
    std::vector<double> t(static_cast<std::size_t>(np));
    std::vector<double> q_next(static_cast<std::size_t>(np));
    bool heads_active = cfg.method != Method::NSM3;
    const auto trigger_size = static_cast<Index>(std::ceil(cfg.a * static_cast<double>(E2.size())));

    for (int k = 1; k <= cfg.kmax; ++k) {
        {
            detail::Stopwatch sw(tm.headloss);
            regularize(st, cfg.kappa);
        }
        const auto Fr = st.F_reg();
        {
            detail::Stopwatch sw(tm.matmat);
            if (!X || !partial) {
                X = pre.loop_plan().assemble(Fr);
            } else {
                std::vector<Index> changed;
                for (Index i : E2) {
                    if (Fr[i] != Fx_prev[i]) changed.push_back(i);
                }
                pre.loop_plan().update(*X, Fr, Fx_prev, changed);
            }
            Fx_prev = Fr;
        }
        std::vector<double> b;
        {
            detail::Stopwatch sw(tm.matmat);
            for (Index j = 0; j < np; ++j) t[j] = (Fr[j] - st.G[j]) * q[j] - fixed[j] - Fr[j] * xs[j];
            b = Z.multiply_transposed(t);
        }
        std::vector<double> v;
        {
            detail::Stopwatch sw(tm.linear_solves);
            try {
                detail::factor(fac, detail::symbolic_for(pre.loop_symbolic(), *X, cfg.reuse_symbolic), *X,
                               cfg.reuse_symbolic);
            } catch (const Error& e) {
                if (e.code() == Errc::NotPositiveDefinite) {
                    throw Error(Errc::AllZeroLoop, "loop system is singular: " + std::string(e.what()));
                }
                throw;
            }
            v = fac->solve(b);
        }
        {
            detail::Stopwatch sw(tm.other);
            const auto Zv = Z.multiply(v);
            for (Index j = 0; j < np; ++j) q_next[j] = xs[j] + Zv[j];
        }

        std::vector<Index> U;
        double rel_step = 0.0;
        {
            detail::Stopwatch sw(tm.other);
            if (k == 1 || !partial) {
                U.assign(E2.begin(), E2.end());
            } else {
                U = update_set(q_next, q, cfg.epsilon, cfg.delta, E2);
            }
            double num = 0.0, den = 0.0;
            for (Index j = 0; j < np; ++j) {
                num += std::abs(q_next[j] - q[j]);
                den += std::abs(q_next[j]);
            }
            rel_step = den > 0.0 ? num / den : 0.0;
        }
        if (!heads_active) {
            const auto Uk = update_set(q_next, q, cfg.epsilon, cfg.delta, E2);
            if (static_cast<Index>(Uk.size()) < trigger_size || rel_step <= cfg.delta) heads_active = true;
        }
        if (heads_active) solve_heads(q, q_next);

        {
            detail::Stopwatch sw(tm.headloss);
            update_GF(st, q_next, model, U);
        }
        q.swap(q_next);
        res.update_set_sizes.push_back(static_cast<Index>(U.size()));
        res.continuity_history.push_back(continuity_error(net, q, d));
        if (cfg.record_iterates) res.q_iterates.push_back(q);
        res.iterations = k;

        if (!heads_active) {
            res.residual_history.push_back(NAN);
            continue;
        }
        double r = 0.0;
        {
            detail::Stopwatch sw(tm.other);
            r = residual_norm(net, q, h, d, st.G);
        }
        res.residual_history.push_back(r);
        if (r <= cfg.delta) {
            res.converged = true;
            break;
        }
    }

    res.final_residual = res.residual_history.back();
    res.headloss_evaluations = st.evaluations;
    if (partial) {
        HeadlossState fresh(np);
        update_GF(fresh, q, model);
        res.verified_residual = heads_active ? residual_norm(net, q, h, d, fresh.G) : NAN;
    } else {
        res.verified_residual = res.final_residual;
    }
    res.q = std::move(q);
    res.h = std::move(h);
    return res;
}

inline SolverResult solve(const Network& net, std::span<const double> d, const SolverConfig& cfg,
                          const Precomputed& pre)
{
    return cfg.method == Method::GGA ? solve_gga(net, d, cfg, pre) : solve_nsm(net, d, cfg, pre);
}

inline SolverResult solve(const Network& net, const SolverConfig& cfg, const Precomputed& pre)
{
    const auto d = net.demands();
    return solve(net, d, cfg, pre);
}

/// Throws MaxIterations for a run that stopped at k_max.
inline const SolverResult& require_converged(const SolverResult& r)
{
    if (!r.converged) {
        throw Error(Errc::MaxIterations, std::string(to_string(r.method)) + " stopped after " +
                                             std::to_string(r.iterations) + " iterations");
    }
    return r;
}

}  // namespace nullflow
