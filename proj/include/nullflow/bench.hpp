/*==============================================================================
 *  bench.hpp
 *
 *  Extended-time runs, ε×δ_N sweeps and flow histograms, with CSV and JSON
 *  reports. Numeric payloads are deterministic for a given network, scenario
 *  and configuration; timing columns are not.
 *
 *============================================================================*/
#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "scenario.hpp"
#include "solvers.hpp"

namespace nullflow::bench {

inline constexpr int schema_version = 1;

/// Shortest round-trip text; NaN as an empty cell.
inline std::string num(double v)
{
    if (std::isnan(v)) return "";
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

inline nlohmann::json json_num(double v)
{
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

/// "a:step:b" → a, a+step, …, b (inclusive; count from rounding).
inline std::vector<double> parse_range(const std::string& s)
{
    std::vector<double> parts;
    std::size_t start = 0;
    while (true) {
        const auto colon = s.find(':', start);
        const std::string tok = s.substr(start, colon == std::string::npos ? std::string::npos : colon - start);
        double v = 0.0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (tok.empty() || ec != std::errc{} || p != tok.data() + tok.size()) {
            throw Error(Errc::InvalidConfig, "bad range '" + s + "'");
        }
        parts.push_back(v);
        if (colon == std::string::npos) break;
        start = colon + 1;
    }
    if (parts.size() == 1) return parts;
    if (parts.size() != 3 || !(parts[1] > 0.0) || parts[2] < parts[0]) {
        throw Error(Errc::InvalidConfig, "range must be a:step:b with step > 0 and a <= b");
    }
    const auto n = static_cast<long>(std::floor((parts[2] - parts[0]) / parts[1] + 1e-9)) + 1;
    std::vector<double> out;
    for (long k = 0; k < n; ++k) out.push_back(parts[0] + static_cast<double>(k) * parts[1]);
    return out;
}

/// Solves every step; steps are independent and may use several threads.
inline std::vector<SolverResult> solve_steps(const Network& net, const DemandScenario& sc,
                                             const SolverConfig& cfg, const Precomputed& pre,
                                             unsigned threads = 1)
{
    std::vector<SolverResult> out(sc.size());
    if (threads <= 1 || sc.size() <= 1) {
        for (std::size_t k = 0; k < sc.size(); ++k) out[k] = solve(net, sc.steps[k], cfg, pre);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t k; (k = next++) < sc.size();) {
                try {
                    out[k] = solve(net, sc.steps[k], cfg, pre);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
    return out;
}

struct MethodReport {
    Method method = Method::NSM1;
    double mean_ms = 0.0;
    double min_ms = 0.0;
    TimingBreakdown mean_blocks;
    std::vector<SolverResult> steps;  // from the last repetition

    long long headloss_evaluations() const
    {
        long long s = 0;
        for (const auto& r : steps) s += r.headloss_evaluations;
        return s;
    }
    int head_solves() const
    {
        int s = 0;
        for (const auto& r : steps) s += r.head_solves;
        return s;
    }
    int iterations() const
    {
        int s = 0;
        for (const auto& r : steps) s += r.iterations;
        return s;
    }
    bool all_converged() const
    {
        return std::all_of(steps.begin(), steps.end(), [](const SolverResult& r) { return r.converged; });
    }
};

struct RunSpec {
    std::vector<Method> methods{Method::GGA, Method::NSM1, Method::NSM2, Method::NSM3};
    SolverConfig config;
    int repetitions = 1;
    std::string scenario_source = "synthetic:1:0";
    std::uint64_t seed = 0;
};

struct RunReport {
    std::string network_name;
    Index n_pipes = 0, n_junctions = 0, n_fixed = 0, n_loops = 0, e2_size = 0;
    double precompute_basis_ms = 0.0;
    double precompute_symbolic_ms = 0.0;
    double precompute_factor_ms = 0.0;
    RunSpec spec;
    std::size_t n_steps = 0;
    std::vector<MethodReport> methods;
    double max_dq = 0.0;  // cross-method, over all steps
    double max_dh = 0.0;

    bool all_converged() const
    {
        return std::all_of(methods.begin(), methods.end(), [](const MethodReport& m) { return m.all_converged(); });
    }
};

inline RunReport run(const Network& net, const DemandScenario& sc, const RunSpec& spec,
                     std::string network_name = "network")
{
    if (spec.methods.empty()) throw Error(Errc::InvalidConfig, "no methods selected");
    if (spec.repetitions < 1) throw Error(Errc::InvalidConfig, "repetitions must be at least 1");
    spec.config.validate();
    sc.validate(net);

    RunReport rep;
    rep.network_name = std::move(network_name);
    rep.spec = spec;
    rep.n_steps = sc.size();
    const Precomputed pre(net);
    rep.n_pipes = net.n_pipes();
    rep.n_junctions = net.n_junctions();
    rep.n_fixed = net.n_fixed();
    rep.n_loops = pre.basis().n_loops;
    rep.e2_size = static_cast<Index>(pre.basis().E2.size());
    rep.precompute_basis_ms = pre.basis_ms();
    rep.precompute_symbolic_ms = pre.symbolic_ms();
    rep.precompute_factor_ms = pre.head_factor_ms();

    for (Method m : spec.methods) {
        SolverConfig cfg = spec.config;
        cfg.method = m;
        MethodReport mr;
        mr.method = m;
        mr.min_ms = INFINITY;
        // One discarded warm-up pass, then the timed repetitions.
        for (int r = 0; r <= spec.repetitions; ++r) {
            const auto t0 = std::chrono::steady_clock::now();
            auto results = solve_steps(net, sc, cfg, pre, 1);
            const double ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
            if (r == 0) continue;
            mr.mean_ms += ms / spec.repetitions;
            mr.min_ms = std::min(mr.min_ms, ms);
            for (const auto& s : results) {
                TimingBreakdown t = s.timing;
                t.linear_solves /= spec.repetitions;
                t.headloss /= spec.repetitions;
                t.matmat /= spec.repetitions;
                t.other /= spec.repetitions;
                mr.mean_blocks += t;
            }
            mr.steps = std::move(results);
        }
        rep.methods.push_back(std::move(mr));
    }

    for (std::size_t a = 0; a < rep.methods.size(); ++a) {
        for (std::size_t b = a + 1; b < rep.methods.size(); ++b) {
            for (std::size_t k = 0; k < sc.size(); ++k) {
                const auto& ra = rep.methods[a].steps[k];
                const auto& rb = rep.methods[b].steps[k];
                for (std::size_t j = 0; j < ra.q.size(); ++j) rep.max_dq = std::max(rep.max_dq, std::abs(ra.q[j] - rb.q[j]));
                for (std::size_t i = 0; i < ra.h.size(); ++i) rep.max_dh = std::max(rep.max_dh, std::abs(ra.h[i] - rb.h[i]));
            }
        }
    }
    return rep;
}

/// Per-step CSV; the final column (time_ms) is non-normative.
inline void write_run_csv(std::ostream& os, const RunReport& rep)
{
    os << "method,step,iterations,converged,final_residual,verified_residual,"
          "headloss_evaluations,head_solves,update_set_total,time_ms\n";
    for (const auto& m : rep.methods) {
        for (std::size_t k = 0; k < m.steps.size(); ++k) {
            const auto& r = m.steps[k];
            long long u = 0;
            for (Index s : r.update_set_sizes) u += s;
            os << to_string(m.method) << ',' << k << ',' << r.iterations << ',' << (r.converged ? 1 : 0) << ','
               << num(r.final_residual) << ',' << num(r.verified_residual) << ',' << r.headloss_evaluations
               << ',' << r.head_solves << ',' << u << ',' << num(r.timing.total()) << '\n';
        }
    }
}

inline nlohmann::json run_json(const RunReport& rep)
{
    using nlohmann::json;
    json j;
    j["schema_version"] = schema_version;
    j["non_normative"] = {"timing", "precompute_ms", "time_ms"};
    j["network"] = {{"name", rep.network_name}, {"n_p", rep.n_pipes}, {"n_n", rep.n_junctions},
                    {"n_0", rep.n_fixed}, {"n_l", rep.n_loops}, {"e2", rep.e2_size}};
    const auto& c = rep.spec.config;
    j["config"] = {{"delta", c.delta}, {"epsilon", c.epsilon}, {"kmax", c.kmax}, {"kappa", c.kappa},
                   {"a", c.a}, {"gga_flow_floor", c.gga_flow_floor}, {"reuse_symbolic", c.reuse_symbolic}};
    j["scenario"] = {{"source", rep.spec.scenario_source}, {"seed", rep.spec.seed}, {"steps", rep.n_steps}};
    j["repetitions"] = rep.spec.repetitions;
    j["precompute_ms"] = {{"basis", rep.precompute_basis_ms}, {"symbolic", rep.precompute_symbolic_ms},
                          {"head_factor", rep.precompute_factor_ms}};
    j["methods"] = json::array();
    for (const auto& m : rep.methods) {
        json its = json::array(), res = json::array();
        for (const auto& r : m.steps) {
            its.push_back(r.iterations);
            res.push_back(json_num(r.final_residual));
        }
        j["methods"].push_back({
            {"method", to_string(m.method)},
            {"all_converged", m.all_converged()},
            {"total_iterations", m.iterations()},
            {"headloss_evaluations", m.headloss_evaluations()},
            {"head_solves", m.head_solves()},
            {"iterations", its},
            {"final_residuals", res},
            {"timing", {{"mean_ms", m.mean_ms}, {"min_ms", m.min_ms},
                        {"blocks_ms", {{"linear_solves", m.mean_blocks.linear_solves},
                                       {"headloss", m.mean_blocks.headloss},
                                       {"matmat", m.mean_blocks.matmat},
                                       {"other", m.mean_blocks.other}}}}},
        });
    }
    j["cross_method"] = {{"max_abs_dq", rep.max_dq}, {"max_abs_dh", rep.max_dh}};
    return j;
}

/*------------------------------------------------------------------------------
 *  ε × δ_N sweep (NSM2)
 *----------------------------------------------------------------------------*/

struct SweepSpec {
    std::vector<double> log10_eps = parse_range("-9:0.5:-1");
    std::vector<double> log10_delta = parse_range("-9:0.5:-3");
    SolverConfig config;  // method forced to NSM2; delta/epsilon from the grids
};

struct SweepCell {
    double log10_eps = 0.0;
    double log10_delta = 0.0;
    double mean_iterations = 0.0;
    int max_iterations = 0;
    double max_residual = 0.0;           // worst verified residual over the steps
    std::size_t nonconverged_steps = 0;  // steps that hit k_max
    std::size_t inaccurate_steps = 0;    // stopped, but the verified residual exceeds δ_N
    double nsm1_mean_iterations = 0.0;

    bool flagged() const noexcept { return nonconverged_steps > 0 || inaccurate_steps > 0; }
};

struct SweepReport {
    std::vector<SweepCell> cells;  // δ-major, ε-minor
    std::size_t n_steps = 0;

    std::size_t flagged() const
    {
        return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(),
                                                      [](const SweepCell& c) { return c.flagged(); }));
    }
};

inline SweepReport sweep(const Network& net, const DemandScenario& sc, const SweepSpec& spec)
{
    if (spec.log10_eps.empty() || spec.log10_delta.empty()) throw Error(Errc::InvalidConfig, "empty sweep grid");
    sc.validate(net);
    const Precomputed pre(net);
    SweepReport rep;
    rep.n_steps = sc.size();
    auto mean_its = [&](const std::vector<SolverResult>& rs) {
        double s = 0.0;
        for (const auto& r : rs) s += r.iterations;
        return rs.empty() ? 0.0 : s / static_cast<double>(rs.size());
    };
    for (double ld : spec.log10_delta) {
        SolverConfig base = spec.config;
        base.delta = std::pow(10.0, ld);
        base.method = Method::NSM1;
        const double nsm1 = mean_its(solve_steps(net, sc, base, pre));
        for (double le : spec.log10_eps) {
            SolverConfig cfg = base;
            cfg.method = Method::NSM2;
            cfg.epsilon = std::pow(10.0, le);
            const auto rs = solve_steps(net, sc, cfg, pre);
            SweepCell c;
            c.log10_eps = le;
            c.log10_delta = ld;
            c.mean_iterations = mean_its(rs);
            c.nsm1_mean_iterations = nsm1;
            for (const auto& r : rs) {
                c.max_iterations = std::max(c.max_iterations, r.iterations);
                const double v = std::isnan(r.verified_residual) ? INFINITY : r.verified_residual;
                c.max_residual = std::max(c.max_residual, v);
                if (!r.converged) {
                    ++c.nonconverged_steps;
                } else if (!(v <= cfg.delta)) {
                    ++c.inaccurate_steps;
                }
            }
            rep.cells.push_back(c);
        }
    }
    return rep;
}

inline void write_sweep_csv(std::ostream& os, const SweepReport& rep)
{
    os << "log10_epsilon,log10_delta,mean_iterations,max_iterations,max_residual,nonconverged_steps,"
          "inaccurate_steps,flagged,nsm1_mean_iterations\n";
    for (const auto& c : rep.cells) {
        os << num(c.log10_eps) << ',' << num(c.log10_delta) << ',' << num(c.mean_iterations) << ','
           << c.max_iterations << ',' << num(c.max_residual) << ',' << c.nonconverged_steps << ','
           << c.inaccurate_steps << ',' << (c.flagged() ? 1 : 0) << ',' << num(c.nsm1_mean_iterations) << '\n';
    }
}

inline nlohmann::json sweep_json(const SweepReport& rep)
{
    using nlohmann::json;
    json j;
    j["schema_version"] = schema_version;
    j["steps"] = rep.n_steps;
    j["flagged_cells"] = rep.flagged();
    j["cells"] = json::array();
    for (const auto& c : rep.cells) {
        j["cells"].push_back({{"log10_epsilon", c.log10_eps}, {"log10_delta", c.log10_delta},
                              {"mean_iterations", c.mean_iterations}, {"max_iterations", c.max_iterations},
                              {"max_residual", json_num(c.max_residual)},
                              {"nonconverged_steps", c.nonconverged_steps},
                              {"inaccurate_steps", c.inaccurate_steps},
                              {"flagged", c.flagged()},
                              {"nsm1_mean_iterations", c.nsm1_mean_iterations}});
    }
    return j;
}

/*------------------------------------------------------------------------------
 *  Flow histogram
 *----------------------------------------------------------------------------*/

struct FlowHistogram {
    double bin_width = 0.25;            // decades
    double zero_threshold = 1e-12;      // |q| below this counts as zero flow
    std::vector<double> bin_lo;         // log10 lower edges, ascending
    std::vector<std::size_t> counts;
    std::size_t zero_count = 0;

    std::size_t occupied() const
    {
        return static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }));
    }
};

inline FlowHistogram flow_histogram(std::span<const double> q, double bin_width = 0.25, double zero_threshold = 1e-12)
{
    FlowHistogram hist;
    hist.bin_width = bin_width;
    hist.zero_threshold = zero_threshold;
    std::vector<long> idx;
    for (double v : q) {
        const double a = std::abs(v);
        if (a < zero_threshold) {
            ++hist.zero_count;
            continue;
        }
        idx.push_back(static_cast<long>(std::floor(std::log10(a) / bin_width)));
    }
    if (idx.empty()) return hist;
    const auto [lo, hi] = std::minmax_element(idx.begin(), idx.end());
    const long first = *lo;
    hist.counts.assign(static_cast<std::size_t>(*hi - first + 1), 0);
    for (long b = first; b <= *hi; ++b) hist.bin_lo.push_back(static_cast<double>(b) * bin_width);
    for (long b : idx) ++hist.counts[static_cast<std::size_t>(b - first)];
    return hist;
}

inline FlowHistogram flow_histogram(const SolverResult& r) { return flow_histogram(r.q); }

inline void write_histogram_csv(std::ostream& os, const FlowHistogram& h)
{
    os << "log10_lo,log10_hi,count\n";
    os << "zero,zero," << h.zero_count << '\n';
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
        os << num(h.bin_lo[b]) << ',' << num(h.bin_lo[b] + h.bin_width) << ',' << h.counts[b] << '\n';
    }
}

/*------------------------------------------------------------------------------
 *  Basis diagnostics report
 *----------------------------------------------------------------------------*/

inline nlohmann::json diagnostics_json(const Network& net, const NullBasis& basis, const BasisDiagnostics& d)
{
    const auto inc_nnz = net.A12().nnz() + net.A10().nnz();
    return {{"schema_version", schema_version},
            {"n_p", net.n_pipes()},
            {"n_n", net.n_junctions()},
            {"n_0", net.n_fixed()},
            {"n_l", d.n_l},
            {"e2", basis.E2.size()},
            {"nnz_Z", basis.nnz()},
            {"cond_ZtZ", d.cond_ZtZ},
            {"cond_A12tA12", d.cond_A12tA12},
            {"nnz_ZtFZ", d.nnz_ZtFZ},
            {"nnz_A12tFA12", d.nnz_A12tFA12},
            {"nnz_ratio_percent", d.nnz_ratio},
            {"loop_fraction_percent", d.loop_fraction},
            {"incidence_nnz_per_junction", static_cast<double>(inc_nnz) / static_cast<double>(net.n_junctions())}};
}

}  // namespace nullflow::bench
