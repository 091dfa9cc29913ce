#include <catch_amalgamated.hpp>

#include <fstream>
#include <random>
#include <sstream>

#include <nullflow/fixtures.hpp>
#include <nullflow/inp.hpp>
#include <nullflow/network.hpp>

using namespace nullflow;

namespace {

Errc code_of(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error raised");
    return Errc::ParseError;
}

Pipe pipe(std::string id, NodeRef a, NodeRef b, double L = 100.0, double D = 0.2, double C = 100.0)
{
    return Pipe{std::move(id), a, b, L, D, C, HeadlossModel::HazenWilliams};
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("smallest legal network", "[network]")
{
    const Network net = fixtures::single_pipe();
    CHECK(net.n_pipes() == 1);
    CHECK(net.n_junctions() == 1);
    CHECK(net.n_fixed() == 1);
    CHECK(net.n_loops() == 0);
    // Reservoir → junction: the pipe enters the junction and leaves the reservoir.
    CHECK(net.A12().at(0, 0) == 1.0);
    CHECK(net.A10().at(0, 0) == -1.0);
}

TEST_CASE("incidence rows of the triangle sum to zero", "[network]")
{
    const Network net = fixtures::triangle();
    const auto A12 = net.A12().to_dense();
    const auto A10 = net.A10().to_dense();
    for (Index j = 0; j < net.n_pipes(); ++j) {
        double s = A10[j];
        for (Index i = 0; i < net.n_junctions(); ++i) s += A12[j * net.n_junctions() + i];
        CHECK(s == 0.0);
    }
    CHECK(net.n_loops() == 1);
    const auto [A12b, A10b] = build_incidence(net);
    CHECK(A12b == net.A12());
    CHECK(A10b == net.A10());
}

TEST_CASE("validation errors", "[network]")
{
    using N = NodeRef;
    CHECK(code_of([] { Network({}, {{"R", 10.0}}, {}); }) == Errc::InvalidValue);
    CHECK(code_of([] { Network({{"J", 0.0}}, {}, {pipe("P", N::junction(0), N::junction(0))}); }) ==
          Errc::NoFixedHead);
    CHECK(code_of([] {
              Network({{"J", 0.0}, {"J", 0.0}}, {{"R", 1.0}},
                      {pipe("P", N::fixed(0), N::junction(0)), pipe("Q", N::junction(0), N::junction(1))});
          }) == Errc::DuplicateId);
    CHECK(code_of([] {
              Network({{"J", 0.0}}, {{"R", 1.0}},
                      {pipe("P", N::fixed(0), N::junction(0)), pipe("P", N::fixed(0), N::junction(0))});
          }) == Errc::DuplicateId);
    CHECK(code_of([] { Network({{"J", 0.0}}, {{"R", 1.0}}, {pipe("P", N::fixed(0), N::junction(3))}); }) ==
          Errc::DanglingNodeRef);
    CHECK(code_of([] {
              Network({{"J", 0.0}, {"K", 0.0}}, {{"R", 1.0}}, {pipe("P", N::fixed(0), N::junction(0))});
          }) == Errc::DisconnectedGraph);
    CHECK(code_of([] { Network({{"J", 0.0}}, {{"R", 1.0}}, {pipe("P", N::fixed(0), N::junction(0), -1.0)}); }) ==
          Errc::InvalidValue);
    CHECK(code_of([] {
              Network({{"J", 0.0}}, {{"R", 1.0}},
                      {pipe("P", N::fixed(0), N::junction(0)), pipe("Q", N::junction(0), N::junction(0))});
          }) == Errc::InvalidValue);
}

TEST_CASE("fingerprint tracks content", "[network]")
{
    const Network a = fixtures::triangle();
    const Network b = fixtures::triangle();
    CHECK(a == b);
    CHECK(a.fingerprint() == b.fingerprint());
    const auto d = std::vector<double>{0.02, 0.0, 0.001};
    const Network c = a.with_demands(d);
    CHECK(c.demands() == d);
    CHECK_FALSE(c == a);
    CHECK(c.fingerprint() != a.fingerprint());
    CHECK(fixtures::triangle(HeadlossModel::DarcyWeisbach).fingerprint() != a.fingerprint());
}

TEST_CASE("grid fixture dimensions", "[network][fixtures]")
{
    const Network g = fixtures::grid(10);
    CHECK(g.n_pipes() == 180);
    CHECK(g.n_junctions() == 99);
    CHECK(g.n_fixed() == 1);
    CHECK(g.n_loops() == 81);
    const Network dry = fixtures::grid(10, HeadlossModel::HazenWilliams, true);
    CHECK(dry.demands().back() == 0.0);
}

TEST_CASE("INP reader converts US units and applies [DEMANDS]", "[inp]")
{
    const std::string text = R"([TITLE]
sample network

[JUNCTIONS]
;ID  Elev  Demand
 J1  100   100   ; base demand in GPM
 J2  90    50

[RESERVOIRS]
 R1  200

[TANKS]
;ID Elev Init Min Max Diam MinVol
 T1  150  10  0   20  50   0

[PIPES]
 P1  R1  J1  1000  12  100  0  Open
 P2  J1  J2  500   8   120
 P3  J2  T1  800   6   110  0  open

[DEMANDS]
 J2  20
 J2  30

[PUMPS]

[COORDINATES]
 J1  0  0

[OPTIONS]
 Units  GPM
 Headloss  H-W

[END]
)";
    const Network net = parse_inp(text);
    REQUIRE(net.n_junctions() == 2);
    REQUIRE(net.n_fixed() == 2);
    REQUIRE(net.n_pipes() == 3);
    const double gpm = 0.003785411784 / 60.0;
    CHECK(net.junctions()[0].demand == Catch::Approx(100 * gpm).epsilon(1e-15));
    CHECK(net.junctions()[1].demand == Catch::Approx(50 * gpm).epsilon(1e-15));  // 20 + 30 from [DEMANDS]
    CHECK(net.fixed_heads()[0].head == Catch::Approx(200 * 0.3048).epsilon(1e-15));
    CHECK(net.fixed_heads()[1].head == Catch::Approx(160 * 0.3048).epsilon(1e-15));
    CHECK(net.pipes()[0].length == Catch::Approx(304.8).epsilon(1e-15));
    CHECK(net.pipes()[0].diameter == Catch::Approx(0.3048).epsilon(1e-15));
    CHECK(net.pipes()[1].roughness == 120.0);
    CHECK(net.pipes()[2].to.kind == NodeRef::Kind::FixedHead);
}

TEST_CASE("INP reader rejects unsupported content", "[inp]")
{
    const std::string base = "[JUNCTIONS]\nJ 0 1\n[RESERVOIRS]\nR 10\n[PIPES]\nP R J 100 100 100\n";
    CHECK_NOTHROW(parse_inp(base));
    CHECK(code_of([&] { parse_inp(base + "[PUMPS]\nPU R J HEAD 1\n"); }) == Errc::UnsupportedSection);
    CHECK(code_of([&] { parse_inp(base + "[VALVES]\nV J R 100 PRV 10 0\n"); }) == Errc::UnsupportedSection);
    CHECK(code_of([&] { parse_inp(base + "[GIZMOS]\n"); }) == Errc::UnsupportedSection);
    CHECK(code_of([&] { parse_inp(base + "[OPTIONS]\nHeadloss C-M\n"); }) == Errc::UnsupportedSection);
    CHECK(code_of([] {
              parse_inp("[JUNCTIONS]\nJ 0 1\n[RESERVOIRS]\nR 10\n[PIPES]\nP R J 100 100 100 0 Closed\n");
          }) == Errc::UnsupportedSection);
    CHECK(code_of([] { parse_inp("[JUNCTIONS]\nJ 0 abc\n[RESERVOIRS]\nR 10\n"); }) == Errc::ParseError);
    CHECK(code_of([] { parse_inp("J 0 1\n"); }) == Errc::ParseError);
    CHECK(code_of([] { parse_inp("[JUNCTIONS]\nJ 0 1\n[RESERVOIRS]\nR 10\n[PIPES]\nP R X 100 100 100\n"); }) ==
          Errc::DanglingNodeRef);
    CHECK(code_of([] { parse_inp("[JUNCTIONS]\nJ 0 1\n[RESERVOIRS]\nJ 10\n"); }) == Errc::DuplicateId);
    CHECK(code_of([] { parse_inp("[OPTIONS]\nUnits FURLONGS\n"); }) == Errc::ParseError);
}

TEST_CASE("Darcy-Weisbach roughness units", "[inp]")
{
    const auto si = parse_inp("[JUNCTIONS]\nJ 0 1\n[RESERVOIRS]\nR 10\n[PIPES]\nP R J 100 300 0.26\n"
                              "[OPTIONS]\nUnits LPS\nHeadloss D-W\n");
    CHECK(si.pipes()[0].model == HeadlossModel::DarcyWeisbach);
    CHECK(si.pipes()[0].roughness == Catch::Approx(0.26e-3).epsilon(1e-15));
    CHECK(si.pipes()[0].diameter == Catch::Approx(0.3).epsilon(1e-15));
    CHECK(si.junctions()[0].demand == Catch::Approx(1e-3).epsilon(1e-15));
    const auto us = parse_inp("[JUNCTIONS]\nJ 0 1\n[RESERVOIRS]\nR 10\n[PIPES]\nP R J 100 12 0.85\n"
                              "[OPTIONS]\nUnits CFS\nHeadloss D-W\n");
    CHECK(us.pipes()[0].roughness == Catch::Approx(0.85 * 0.0003048).epsilon(1e-15));
}

TEST_CASE("INP writer round-trips random networks exactly", "[inp][property]")
{
    std::mt19937_64 rng(42);
    for (int t = 0; t < 100; ++t) {
        fixtures::RandomSpec spec;
        spec.junctions = 1 + static_cast<Index>(rng() % 40);
        spec.fixed_heads = 1 + static_cast<Index>(rng() % 3);
        spec.extra_pipes = static_cast<Index>(rng() % 20);
        spec.model = (rng() & 1U) ? HeadlossModel::HazenWilliams : HeadlossModel::DarcyWeisbach;
        const Network net = fixtures::random_network(rng(), spec);
        const Network back = parse_inp(to_inp(net));
        CHECK(back == net);
    }
}

TEST_CASE("shipped INP files match the built-in fixtures", "[inp][fixtures]")
{
    const std::string dir = NULLFLOW_FIXTURE_DIR;
    for (const auto& name : fixtures::names()) {
        INFO(name);
        CHECK(parse_inp(read_file(dir + "/" + name + ".inp")) == fixtures::by_name(name));
    }
    CHECK(parse_inp(read_file(dir + "/triangle_dw.inp")) == fixtures::triangle(HeadlossModel::DarcyWeisbach));
    CHECK(parse_inp(read_file(dir + "/grid10_dw.inp")) == fixtures::grid(10, HeadlossModel::DarcyWeisbach));
}

TEST_CASE("network JSON export", "[network]")
{
    const auto j = to_json(fixtures::triangle());
    CHECK(j["junctions"].size() == 3);
    CHECK(j["fixed_heads"].size() == 1);
    CHECK(j["pipes"].size() == 4);
}
