#include <catch_amalgamated.hpp>

#include <sstream>

#include "otto/experiments.hpp"

using namespace otto;
namespace ex = otto::experiments;

namespace {

ex::ExperimentConfig config(const std::string& name, ManifoldSpec spec, std::size_t n = 0) {
    ex::ExperimentConfig c;
    c.experiment = name;
    c.spec = std::move(spec);
    c.resolution = {n, 0};
    return ex::resolve(c);
}

std::size_t data_rows(const std::string& csv) {
    std::size_t lines = 0;
    for (char ch : csv) lines += ch == '\n';
    return lines - 1;
}

} // namespace

TEST_CASE("experiment registry and describe", "[experiments]") {
    for (const char* name :
         {"curvature-scan", "geodesic-vs-hopflax", "length-vs-w2", "transport-holonomy", "poisson-flow", "validate"}) {
        const auto text = ex::describe(name);
        REQUIRE(text.find(name) == 0);
        REQUIRE(text.find("Outputs:") != std::string::npos);
        REQUIRE(text.find("manifest.json") != std::string::npos);
    }
    REQUIRE(ex::describe("curvature-scan").find("3 |T_ab|^2") != std::string::npos);
    REQUIRE(ex::describe("length-vs-w2").find("W2") != std::string::npos);
    try {
        ex::describe("bogus");
        FAIL("expected an error");
    } catch (const invalid_argument& e) {
        const std::string msg = e.what();
        REQUIRE(msg.find("poisson-flow") != std::string::npos);
        REQUIRE(msg.find("length-vs-w2") != std::string::npos);
    }
}

TEST_CASE("config resolution", "[experiments]") {
    auto c = config("validate", ManifoldSpec::circle());
    REQUIRE(c.resolution == std::array<std::size_t, 2>{32, 1});
    REQUIRE(c.tolerances.at("gradient") == 1e-7);
    REQUIRE(c.parameters.at("samples") == 5);
    auto t = config("poisson-flow", ManifoldSpec::flat_torus());
    REQUIRE(t.resolution == std::array<std::size_t, 2>{32, 32});

    ex::ExperimentConfig bad;
    bad.experiment = "validate";
    bad.tolerances["gradient"] = -1;
    REQUIRE_THROWS_AS(ex::resolve(bad), invalid_argument);
    bad.tolerances = {{"nonsense", 1.0}};
    REQUIRE_THROWS_AS(ex::resolve(bad), invalid_argument);
    bad.tolerances.clear();
    bad.parameters = {{"nonsense", 1.0}};
    REQUIRE_THROWS_AS(ex::resolve(bad), invalid_argument);
    bad.parameters.clear();
    bad.experiment = "poisson-flow";
    REQUIRE_THROWS_AS(ex::resolve(bad), invalid_argument);
    bad.experiment = "missing";
    REQUIRE_THROWS_AS(ex::resolve(bad), invalid_argument);

    auto conf = config("transport-holonomy",
                       ManifoldSpec::conformal_torus(ConformalFactor::fourier({{0.3, 1, 0, 0.0}})));
    auto back = ex::resolve(ex::config_from_json(ex::json::parse(ex::config_to_json(conf).dump())));
    REQUIRE(ex::config_to_json(back) == ex::config_to_json(conf));
    REQUIRE_THROWS_AS(ex::config_from_json(ex::json{{"experiment", "validate"}, {"typo", 1}}), invalid_argument);
}

TEST_CASE("documented runs", "[experiments]") {
    SECTION("validate on the circle") {
        auto r = ex::execute(config("validate", ManifoldSpec::circle(), 32));
        REQUIRE(r.pass());
        REQUIRE(r.assertions.size() == 12);
    }
    SECTION("curvature scan on the flat torus") {
        auto c = config("curvature-scan", ManifoldSpec::flat_torus());
        c.parameters["samples"] = 100;
        c.seed = 1;
        auto r = ex::execute(c);
        REQUIRE(r.pass());
        REQUIRE(r.files.at(0).first == "curvature-scan.csv");
        REQUIRE(data_rows(r.files.at(0).second) == 100);
        REQUIRE(r.summary.at("min_sectional").get<double>() >= -1e-9);
    }
    SECTION("curvature scan on the conformal torus records but does not assert") {
        auto c = config("curvature-scan", ManifoldSpec::conformal_torus(ConformalFactor::fourier({{0.3, 1, 0, 0.0}})));
        c.parameters["samples"] = 10;
        auto r = ex::execute(c);
        REQUIRE(r.assertions.empty());
        REQUIRE(r.summary.contains("found_violation"));
    }
    SECTION("geodesic against Hopf-Lax") {
        auto r = ex::execute(config("geodesic-vs-hopflax", ManifoldSpec::circle()));
        REQUIRE(r.pass());
        REQUIRE(r.summary.at("max_error").get<double>() < 1e-5);
    }
    SECTION("poisson flow") {
        auto c = config("poisson-flow", ManifoldSpec::flat_torus(), 24);
        c.parameters["steps"] = 20;
        auto r = ex::execute(c);
        REQUIRE(r.pass());
        REQUIRE(data_rows(r.files.at(0).second) == 21);
    }
    SECTION("transport holonomy") {
        auto c = config("transport-holonomy", ManifoldSpec::circle(), 32);
        auto r = ex::execute(c);
        REQUIRE(r.pass());
        REQUIRE(r.summary.contains("holonomy_angle_1"));
    }
    SECTION("failed tolerance is reported") {
        auto c = config("geodesic-vs-hopflax", ManifoldSpec::circle(), 32);
        c.tolerances["geodesic_residual"] = 1e-30;
        auto r = ex::execute(c);
        REQUIRE_FALSE(r.pass());
        const auto m = ex::manifest(c, r, "invariant-violation");
        REQUIRE(m.at("pass") == false);
        REQUIRE(m.at("assertions").size() == 3);
        REQUIRE(m.at("config").at("experiment") == "geodesic-vs-hopflax");
    }
}

TEST_CASE("outputs are reproducible byte for byte", "[experiments]") {
    auto c = config("curvature-scan", ManifoldSpec::circle(), 32);
    c.parameters["samples"] = 20;
    c.seed = 11;
    auto a = ex::execute(c), b = ex::execute(c);
    REQUIRE(a.files == b.files);
    REQUIRE(a.summary.dump() == b.summary.dump());
    REQUIRE(ex::manifest(c, a, "pass").dump(2) == ex::manifest(c, b, "pass").dump(2));
    c.seed = 12;
    REQUIRE(ex::execute(c).files != a.files);
}
