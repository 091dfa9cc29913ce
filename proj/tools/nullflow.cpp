// nullflow: command-line driver for single and extended-time runs, parameter
// sweeps, basis diagnostics and fixture export.
//
// Exit codes: 0 success, 2 non-convergence or numerical failure, 3 input error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include <nullflow/nullflow.hpp>

namespace fs = std::filesystem;
using namespace nullflow;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_nonconvergence = 2;
constexpr int exit_input = 3;

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::ParseError, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// A path to an INP file, or fixture:<name>[:dw].
Network load_network(const std::string& source)
{
    if (source.rfind("fixture:", 0) == 0) {
        std::string name = source.substr(8);
        auto model = HeadlossModel::HazenWilliams;
        if (name.size() > 3 && name.compare(name.size() - 3, 3, ":dw") == 0) {
            model = HeadlossModel::DarcyWeisbach;
            name.resize(name.size() - 3);
        }
        return fixtures::by_name(name, model);
    }
    try {
        return parse_inp(read_file(source));
    } catch (const Error& e) {
        throw Error(e.code(), source + ": " + e.message());
    }
}

// A CSV path, or synthetic:N:seed.
DemandScenario load_scenario(const std::string& source, const Network& net, std::uint64_t& seed)
{
    if (source.rfind("synthetic:", 0) == 0) {
        const std::string rest = source.substr(10);
        const auto colon = rest.find(':');
        std::size_t n = 0;
        try {
            n = std::stoull(rest.substr(0, colon));
            seed = colon == std::string::npos ? 0 : std::stoull(rest.substr(colon + 1));
        } catch (const std::exception&) {
            throw Error(Errc::InvalidConfig, "bad scenario '" + source + "', expected synthetic:N:seed");
        }
        if (n == 0) throw Error(Errc::InvalidConfig, "scenario needs at least one step");
        return synthetic_scenario(net, n, seed);
    }
    std::ifstream in(source);
    if (!in) throw Error(Errc::ParseError, "cannot open '" + source + "'");
    try {
        return read_scenario_csv(in, net);
    } catch (const Error& e) {
        throw Error(e.code(), source + ": " + e.message());
    }
}

std::ofstream open_out(const fs::path& dir, const std::string& name)
{
    fs::create_directories(dir);
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw Error(Errc::InvalidConfig, "cannot write '" + (dir / name).string() + "'");
    return out;
}

std::vector<Method> parse_methods(const std::vector<std::string>& names)
{
    std::vector<Method> out;
    for (const auto& n : names) {
        std::stringstream ss(n);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (tok == "all") {
                out.insert(out.end(), {Method::GGA, Method::NSM1, Method::NSM2, Method::NSM3});
            } else if (!tok.empty()) {
                out.push_back(parse_method(tok));
            }
        }
    }
    return out;
}

struct CommonOptions {
    std::string network;
    double delta = 1e-6;
    double epsilon = 1e-3;
    int kmax = 100;
    double kappa = 1e8;
    double a = 0.5;
    std::string steps = "synthetic:1:0";
    std::string out = "out";

    SolverConfig config() const
    {
        SolverConfig c;
        c.delta = delta;
        c.epsilon = epsilon;
        c.kmax = kmax;
        c.kappa = kappa;
        c.a = a;
        return c;
    }
};

void add_common(CLI::App* cmd, CommonOptions& o)
{
    cmd->add_option("network", o.network, "INP file or fixture:<name>[:dw]")->required();
    cmd->add_option("--delta", o.delta, "Convergence tolerance on the residual norm");
    cmd->add_option("--epsilon", o.epsilon, "Update-set threshold factor");
    cmd->add_option("--kmax", o.kmax, "Iteration limit");
    cmd->add_option("--kappa", o.kappa, "Condition bound for F + T");
    cmd->add_option("--trigger", o.a, "Update-set fraction that switches NSM3 to per-iteration heads");
    cmd->add_option("--steps", o.steps, "Scenario CSV or synthetic:N:seed");
    cmd->add_option("--out", o.out, "Output directory");
}

int run_solve(const CommonOptions& o, const std::vector<std::string>& method_names, int reps, bool no_reuse)
{
    const Network net = load_network(o.network);
    bench::RunSpec spec;
    spec.methods = parse_methods(method_names);
    spec.config = o.config();
    spec.config.reuse_symbolic = !no_reuse;
    spec.repetitions = reps;
    spec.scenario_source = o.steps;
    const auto sc = load_scenario(o.steps, net, spec.seed);

    const auto rep = bench::run(net, sc, spec, o.network);
    {
        auto out = open_out(o.out, "run.csv");
        bench::write_run_csv(out, rep);
    }
    {
        auto out = open_out(o.out, "run.json");
        out << bench::run_json(rep).dump(2) << '\n';
    }
    for (const auto& m : rep.methods) {
        if (m.steps.empty() || !m.steps.back().converged) continue;
        auto out = open_out(o.out, "histogram_" + std::string(to_string(m.method)) + ".csv");
        bench::write_histogram_csv(out, bench::flow_histogram(m.steps.back()));
    }

    std::printf("%-6s %10s %12s %12s %10s %12s\n", "method", "iters", "hl_evals", "head_solves", "mean_ms",
                "converged");
    for (const auto& m : rep.methods) {
        std::printf("%-6s %10d %12lld %12d %10.3f %12s\n", std::string(to_string(m.method)).c_str(),
                    m.iterations(), m.headloss_evaluations(), m.head_solves(), m.mean_ms,
                    m.all_converged() ? "yes" : "NO");
    }
    std::printf("max |dq| = %.3e  max |dh| = %.3e\n", rep.max_dq, rep.max_dh);
    return rep.all_converged() ? exit_ok : exit_nonconvergence;
}

int run_sweep(const CommonOptions& o, const std::string& eps_grid, const std::string& delta_grid)
{
    const Network net = load_network(o.network);
    bench::SweepSpec spec;
    spec.log10_eps = bench::parse_range(eps_grid);
    spec.log10_delta = bench::parse_range(delta_grid);
    spec.config = o.config();
    std::uint64_t seed = 0;
    const auto sc = load_scenario(o.steps, net, seed);
    const auto rep = bench::sweep(net, sc, spec);
    {
        auto out = open_out(o.out, "sweep.csv");
        bench::write_sweep_csv(out, rep);
    }
    {
        auto out = open_out(o.out, "sweep.json");
        auto j = bench::sweep_json(rep);
        j["scenario"] = {{"source", o.steps}, {"seed", seed}};
        out << j.dump(2) << '\n';
    }
    std::printf("%zu cells, %zu flagged\n", rep.cells.size(), rep.flagged());
    return exit_ok;
}

int run_diag(const std::string& network, const std::string& out_dir)
{
    const Network net = load_network(network);
    const auto basis = build_fundamental_basis(net);
    const std::vector<double> ones(static_cast<std::size_t>(net.n_pipes()), 1.0);
    const auto d = diagnostics(basis, net.A12(), ones);
    const auto j = bench::diagnostics_json(net, basis, d);
    {
        auto out = open_out(out_dir, "diagnostics.json");
        out << j.dump(2) << '\n';
    }
    {
        auto out = open_out(out_dir, "Z.mtx");
        write_matrix_market(out, basis.Z_real());
    }
    std::cout << j.dump(2) << '\n';
    return exit_ok;
}

int run_fixture(const std::string& name, bool dw, const std::string& out)
{
    const Network net = fixtures::by_name(name, dw ? HeadlossModel::DarcyWeisbach : HeadlossModel::HazenWilliams);
    const std::string text = to_inp(net);
    if (out.empty() || out == "-") {
        std::cout << text;
        return exit_ok;
    }
    std::ofstream f(out, std::ios::binary);
    if (!f) throw Error(Errc::InvalidConfig, "cannot write '" + out + "'");
    f << text;
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Pipe-network hydraulics with null-space and Schur-complement Newton solvers"};
    app.require_subcommand(1);

    CommonOptions solve_opts;
    std::vector<std::string> methods{"all"};
    int reps = 1;
    bool no_reuse = false;
    auto* solve_cmd = app.add_subcommand("solve", "Solve one or more demand steps and report per method");
    add_common(solve_cmd, solve_opts);
    solve_cmd->add_option("--method", methods, "gga, nsm1, nsm2, nsm3 or all (repeatable, comma separated)");
    solve_cmd->add_option("--reps", reps, "Timed repetitions after one warm-up");
    solve_cmd->add_flag("--no-symbolic-reuse", no_reuse, "Redo symbolic analysis at every factorization");

    CommonOptions sweep_opts;
    std::string eps_grid = "-9:0.5:-1", delta_grid = "-9:0.5:-3";
    auto* sweep_cmd = app.add_subcommand("sweep", "NSM2 iterations and residuals over an epsilon x delta grid");
    add_common(sweep_cmd, sweep_opts);
    sweep_cmd->add_option("--eps-grid", eps_grid, "log10 epsilon values, a:step:b");
    sweep_cmd->add_option("--delta-grid", delta_grid, "log10 delta values, a:step:b");

    std::string diag_net, diag_out = "out";
    auto* diag_cmd = app.add_subcommand("diag", "Null-basis diagnostics");
    diag_cmd->add_option("network", diag_net, "INP file or fixture:<name>[:dw]")->required();
    diag_cmd->add_option("--out", diag_out, "Output directory");

    std::string fixture_name, fixture_out;
    bool fixture_dw = false;
    auto* fixture_cmd = app.add_subcommand("fixture", "Write a built-in network as INP");
    fixture_cmd->add_option("name", fixture_name, "Fixture name")
        ->required()
        ->check(CLI::IsMember(fixtures::names()));
    fixture_cmd->add_flag("--dw", fixture_dw, "Darcy-Weisbach instead of Hazen-Williams");
    fixture_cmd->add_option("--out", fixture_out, "Output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_input;
    }

    try {
        if (*solve_cmd) return run_solve(solve_opts, methods, reps, no_reuse);
        if (*sweep_cmd) return run_sweep(sweep_opts, eps_grid, delta_grid);
        if (*diag_cmd) return run_diag(diag_net, diag_out);
        if (*fixture_cmd) return run_fixture(fixture_name, fixture_dw, fixture_out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.is_input_error() ? exit_input : exit_nonconvergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_input;
    }
    return exit_ok;
}
