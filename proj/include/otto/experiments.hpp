#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "otto/connection.hpp"
#include "otto/curvature.hpp"
#include "otto/io.hpp"
#include "otto/poisson.hpp"
#include "otto/properties.hpp"
#include "otto/sampling.hpp"
#include "otto/wasserstein.hpp"

namespace otto::experiments {

using json = nlohmann::json;
using io::Check;

struct ExperimentConfig {
    std::string experiment;
    ManifoldSpec spec = ManifoldSpec::circle();
    std::array<std::size_t, 2> resolution{0, 0};  // zero selects the experiment default
    std::uint64_t seed = 1;
    std::map<std::string, double> tolerances;
    std::map<std::string, double> parameters;
    bool filter = true;
    std::string output_dir = "otto-output";
};

struct ExperimentResult {
    std::vector<Check> assertions;
    json summary = json::object();
    std::vector<std::pair<std::string, std::string>> files;  // name, contents

    bool pass() const {
        return std::all_of(assertions.begin(), assertions.end(), [](const Check& c) { return c.pass; });
    }
    void check_at_most(std::string name, double value, double tol) {
        assertions.push_back({std::move(name), value, tol, value <= tol});
    }
};

struct ExperimentInfo {
    std::string name;
    std::string summary;
    std::vector<std::string> formulas;
    std::vector<std::string> outputs;
    std::vector<ManifoldKind> manifolds;
    std::map<std::string, double> parameters;
    std::map<std::string, double> tolerances;
    std::size_t default_n_1d = 0;
    std::size_t default_n_2d = 0;
};

// %.17g rendering shared by every CSV and summary value.
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Short rendering for console text.
inline std::string fmt_short(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline const std::vector<ExperimentInfo>& registry() {
    using K = ManifoldKind;
    static const std::vector<ExperimentInfo> r{
        {"curvature-scan",
         "Random sectional curvatures of the Otto metric compared with the minimum base curvature.",
         {"Kbar(a, b) = int K (|grad a|^2 |grad b|^2 - <grad a, grad b>^2) rho dvol + 3 |T_ab|^2 over the "
          "normalized Gram determinant",
          "T_ab = (1 - Pi_rho)((Hess b)(grad a, .))",
          "flat bases: Kbar >= 0"},
         {"curvature-scan.csv: index,min_k,gram_mass,three_t_squared,sectional",
          "summary.json: samples, min_sectional, min_base_curvature, violations"},
         {K::circle, K::flat_torus, K::conformal_torus},
         {{"samples", 100}, {"band", 0}},
         {{"nonnegativity", 1e-9}},
         64,
         16},
        {"geodesic-vs-hopflax",
         "Initial-value Otto geodesic compared with the Hopf-Lax solution of the Hamilton-Jacobi equation.",
         {"d rho/dt + div(rho grad phi) = 0, d phi/dt + |grad phi|^2 / 2 = 0",
          "phi(t, x) = inf_y phi0(y) + d(x, y)^2 / (2 t)",
          "error = max-norm of the gauge-free difference"},
         {"geodesic-vs-hopflax.csv: t,hopf_lax_error,energy", "summary.json: max_error, energy_drift, residual"},
         {K::circle, K::flat_torus},
         {{"amplitude", 0.05}, {"t_final", 0.5}, {"steps", 64}, {"checkpoints", 4}},
         {{"hopf_lax", 1e-5}, {"energy", 1e-6}, {"geodesic_residual", 1e-7}},
         128,
         24},
        {"length-vs-w2",
         "Polygonal Wasserstein length of a geodesic against its Riemannian length in the Otto metric.",
         {"L_J(c) = sum_k W2(c(t_k), c(t_k+1)) over a uniform partition with J intervals",
          "L(c) = int sqrt(<V_phi, V_phi>_rho) dt", "W2 from an exact transport LP with periodic squared distance"},
         {"length-vs-w2.csv: J,polygonal_length,riemannian_length,ratio", "summary.json: final ratio"},
         {K::circle, K::flat_torus},
         {{"amplitude", 0.5}, {"t_final", 1.0}, {"steps", 64}, {"j_max", 16}, {"lp_refinement", 0}},
         {{"length", 0.03}, {"monotonicity", 1e-9}},
         48,
         16},
        {"transport-holonomy",
         "Parallel transport of two potentials around a closed density loop.",
         {"V_{d eta/dt} + nabla_{V_phi} V_eta = 0", "<V_eta1, V_eta2>_rho(t) constant in t",
          "holonomy angle between eta(0) and eta(1), reported only"},
         {"transport-holonomy.csv: t,norm_1,norm_2,inner", "summary.json: holonomy angles, drift"},
         {K::circle, K::flat_torus, K::conformal_torus},
         {{"intervals", 100}, {"amplitude_a", 0.15}, {"amplitude_b", 0.2}},
         {{"drift", 1e-6}, {"inner", 1e-6}},
         48,
         16},
        {"poisson-flow",
         "Hamiltonian flow of a linear functional on densities over the symplectic torus.",
         {"{f, g} = d_x f d_y g - d_y f d_x g", "{F_phi1, F_phi2}(mu) = int {phi1, phi2} dmu",
          "d rho/dt = -{phi, rho}", "conserved: mass, F_phi, int rho^2"},
         {"poisson-flow.csv: t,mass,functional,l2_norm_squared,min_density",
          "summary.json: drifts, jacobiator, documented bracket"},
         {K::flat_torus},
         {{"t_final", 1.0}, {"steps", 50}, {"triples", 20}},
         {{"functional", 1e-7}, {"l2", 1e-6}, {"mass", 1e-12}, {"jacobiator", 1e-8}, {"lifted_bracket", 1e-10}},
         0,
         32},
        {"validate",
         "Property suites for the discrete calculus, the Otto metric, the connection and the curvature.",
         {"int f div X = -int <grad f, X>", "d/de F_phi(rho + e V_psi rho) = <V_phi, V_psi>_rho",
          "nabla_a b - nabla_b a = [V_a, V_b]", "V_a <b, c> = <nabla_a b, c> + <b, nabla_a c>",
          "T_ab = -T_ba, d_rho^* T_ab = 0", "R(a,b,c,d) = -R(b,a,c,d) = -R(a,b,d,c) = R(c,d,a,b), first Bianchi",
          "flat bases: Kbar >= 0"},
         {"validate.csv: suite,sample,residual,tolerance,pass", "summary.json: worst residual per suite"},
         {K::circle, K::flat_torus, K::conformal_torus},
         {{"samples", 5}},
         {{"adjointness", 1e-10},
          {"hessian_symmetry", 1e-10},
          {"trace", 1e-8},
          {"gradient", 1e-7},
          {"projection", 1e-9},
          {"green", 1e-8},
          {"torsion", 1e-8},
          {"metric_compatibility", 1e-6},
          {"t_tensor", 1e-9},
          {"curvature_symmetries", 1e-8},
          {"nonnegativity", 1e-9},
          {"io_roundtrip", 1e-15}},
         32,
         32},
    };
    return r;
}

inline std::string experiment_names() {
    std::string s;
    for (const auto& e : registry()) s += (s.empty() ? "" : ", ") + e.name;
    return s;
}

inline const ExperimentInfo& find(const std::string& name) {
    for (const auto& e : registry())
        if (e.name == name) return e;
    throw invalid_argument("unknown experiment '" + name + "'; valid names: " + experiment_names());
}

inline std::string describe(const std::string& name) {
    const ExperimentInfo& e = find(name);
    std::ostringstream os;
    os << e.name << "\n  " << e.summary << "\n\nIdentities and formulas:\n";
    for (const auto& f : e.formulas) os << "  " << f << "\n";
    os << "\nManifolds:";
    for (auto k : e.manifolds) os << " " << to_string(k);
    os << "\n\nParameters (default):\n";
    for (const auto& [k, v] : e.parameters) os << "  " << k << " = " << fmt_short(v) << "\n";
    os << "\nTolerances (default):\n";
    for (const auto& [k, v] : e.tolerances) os << "  " << k << " = " << fmt_short(v) << "\n";
    os << "\nOutputs:\n";
    for (const auto& f : e.outputs) os << "  " << f << "\n";
    os << "  manifest.json: config, tolerances, assertions with pass/fail\n";
    return os.str();
}

// Fills defaults and rejects unknown keys, non-positive tolerances and unsupported manifolds.
inline ExperimentConfig resolve(ExperimentConfig c) {
    const ExperimentInfo& e = find(c.experiment);
    if (std::find(e.manifolds.begin(), e.manifolds.end(), c.spec.kind) == e.manifolds.end())
        throw invalid_argument(c.experiment + " does not support the manifold " + std::string(to_string(c.spec.kind)));
    for (const auto& [k, v] : c.tolerances) {
        if (!e.tolerances.count(k)) throw invalid_argument(c.experiment + ": unknown tolerance '" + k + "'");
        if (!(v > 0.0) || !std::isfinite(v)) throw invalid_argument(c.experiment + ": tolerance '" + k + "' must be positive");
    }
    for (const auto& [k, v] : c.parameters) {
        if (!e.parameters.count(k)) throw invalid_argument(c.experiment + ": unknown parameter '" + k + "'");
        if (!std::isfinite(v)) throw invalid_argument(c.experiment + ": parameter '" + k + "' must be finite");
    }
    for (const auto& [k, v] : e.tolerances) c.tolerances.emplace(k, v);
    for (const auto& [k, v] : e.parameters) c.parameters.emplace(k, v);
    const bool one_d = c.spec.dimension() == 1;
    if (c.resolution[0] == 0) c.resolution[0] = one_d ? e.default_n_1d : e.default_n_2d;
    if (one_d) c.resolution[1] = 1;
    else if (c.resolution[1] == 0) c.resolution[1] = c.resolution[0];
    return c;
}

inline json config_to_json(const ExperimentConfig& c) {
    json j;
    j["experiment"] = c.experiment;
    j["manifold"] = io::spec_to_json(c.spec);
    j["resolution"] = c.spec.dimension() == 1 ? json::array({c.resolution[0]})
                                              : json::array({c.resolution[0], c.resolution[1]});
    j["seed"] = c.seed;
    j["filter"] = c.filter;
    j["tolerances"] = c.tolerances;
    j["parameters"] = c.parameters;
    j["output_dir"] = c.output_dir;
    return j;
}

inline ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    try {
        if (j.contains("experiment")) c.experiment = j.at("experiment").get<std::string>();
        if (j.contains("manifold")) c.spec = io::spec_from_json(j.at("manifold"));
        if (j.contains("resolution")) {
            const auto& r = j.at("resolution");
            if (r.is_number()) c.resolution = {r.get<std::size_t>(), 0};
            else c.resolution = {r.at(0).get<std::size_t>(), r.size() > 1 ? r.at(1).get<std::size_t>() : 0};
        }
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("filter")) c.filter = j.at("filter").get<bool>();
        if (j.contains("tolerances")) c.tolerances = j.at("tolerances").get<std::map<std::string, double>>();
        if (j.contains("parameters")) c.parameters = j.at("parameters").get<std::map<std::string, double>>();
        if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
        for (const auto& [k, v] : j.items())
            if (k != "experiment" && k != "manifold" && k != "resolution" && k != "seed" && k != "filter" &&
                k != "tolerances" && k != "parameters" && k != "output_dir")
                throw invalid_argument("config: unknown key '" + k + "'");
    } catch (const json::exception& e) {
        throw invalid_argument(std::string("config: ") + e.what());
    }
    return c;
}

namespace detail {

inline std::size_t count_param(const ExperimentConfig& c, const std::string& key, std::size_t min) {
    const double v = c.parameters.at(key);
    if (v < static_cast<double>(min) || v != std::floor(v))
        throw invalid_argument(c.experiment + ": parameter '" + key + "' must be an integer >= " + std::to_string(min));
    return static_cast<std::size_t>(v);
}

inline GridPtr grid_for(const ExperimentConfig& c) { return build_grid(c.spec, c.resolution); }

inline ScalarField first_mode(const GridPtr& g, double amp) {
    if (g->dim() == 1) return sample(g, [=](double x, double) { return amp * std::sin(x * 2 * std::numbers::pi / g->period(0)); });
    const double lx = 2 * std::numbers::pi / g->period(0), ly = 2 * std::numbers::pi / g->period(1);
    return sample(g, [=](double x, double y) { return amp * std::sin(lx * x) * std::cos(ly * y); });
}

inline std::string csv(const std::string& header, const std::vector<std::vector<double>>& rows) {
    std::string s = header + "\n";
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + fmt(r[i]);
        s += "\n";
    }
    return s;
}

inline ExperimentResult curvature_scan(const ExperimentConfig& c) {
    ExperimentResult out;
    const GridPtr g = grid_for(c);
    const std::size_t n = count_param(c, "samples", 1);
    const int band = static_cast<int>(count_param(c, "band", 0));
    const ComparisonReport rep = comparison_experiment(g, n, c.seed, band);
    out.files.emplace_back("curvature-scan.csv", rep.csv());
    out.summary = {{"samples", rep.samples.size()},
                   {"min_sectional", rep.min_sectional},
                   {"min_base_curvature", rep.min_base_curvature},
                   {"violations", rep.violations},
                   {"found_violation", rep.found_violation()}};
    if (g->spec().flat()) out.check_at_most("flat base: -min sectional curvature", -rep.min_sectional, c.tolerances.at("nonnegativity"));
    return out;
}

inline ExperimentResult geodesic_vs_hopflax(const ExperimentConfig& c) {
    ExperimentResult out;
    const GridPtr g = grid_for(c);
    const std::size_t steps = count_param(c, "steps", 16), cps = count_param(c, "checkpoints", 1);
    const double t_final = c.parameters.at("t_final");
    const ScalarField phi0 = first_mode(g, c.parameters.at("amplitude"));
    GeodesicOptions opt;
    opt.filter = c.filter;
    const DensityCurve curve = geodesic_flow(Density::uniform(g), phi0, t_final, steps, opt);
    const double e0 = otto_inner(curve.density(0), curve.potential(0), curve.potential(0));
    std::vector<std::vector<double>> rows;
    double worst = 0, drift = 0;
    for (std::size_t k = 1; k <= cps; ++k) {
        const std::size_t j = (k * steps) / cps;
        const double t = curve.time(j);
        const Potential hl(curve.density(j), hopf_lax(phi0, t));
        const double err = tangent_distance(hl, curve.potential(j));
        const double e = otto_inner(curve.density(j), curve.potential(j), curve.potential(j));
        worst = std::max(worst, err);
        rows.push_back({t, err, e});
    }
    for (std::size_t j = 0; j < curve.size(); ++j)
        drift = std::max(drift, std::abs(otto_inner(curve.density(j), curve.potential(j), curve.potential(j)) - e0));
    const double res = geodesic_residual(curve);
    out.files.emplace_back("geodesic-vs-hopflax.csv", csv("t,hopf_lax_error,energy", rows));
    out.summary = {{"max_error", worst}, {"energy_drift", drift}, {"geodesic_residual", res}, {"energy", e0}};
    out.check_at_most("max-norm error against Hopf-Lax", worst, c.tolerances.at("hopf_lax"));
    out.check_at_most("energy drift", drift, c.tolerances.at("energy"));
    out.check_at_most("geodesic equation residual", res, c.tolerances.at("geodesic_residual"));
    return out;
}

inline ExperimentResult length_vs_w2(const ExperimentConfig& c) {
    ExperimentResult out;
    const GridPtr g = grid_for(c);
    const std::size_t steps = count_param(c, "steps", 16), jmax = count_param(c, "j_max", 1);
    std::size_t r = count_param(c, "lp_refinement", 0);
    if (r == 0) r = g->dim() == 1 ? std::max<std::size_t>(1, std::min<std::size_t>(20, kMaxTransportNodes / g->size())) : 1;
    const ScalarField phi0 = first_mode(g, c.parameters.at("amplitude"));
    GeodesicOptions opt;
    opt.filter = c.filter;
    const DensityCurve curve = geodesic_flow(Density::uniform(g), phi0, c.parameters.at("t_final"), steps, opt);
    const double riem = riemannian_length(curve);
    std::vector<std::size_t> js;
    for (std::size_t j = 1; j < jmax; j *= 2) js.push_back(j);
    js.push_back(jmax);
    std::vector<std::vector<double>> rows;
    double prev = 0, worst_drop = 0, ratio = 0;
    for (std::size_t j : js) {
        const double len = polygonal_length(curve, j, r);
        ratio = len / riem;
        rows.push_back({static_cast<double>(j), len, riem, ratio});
        if (j != js.front()) worst_drop = std::max(worst_drop, (prev - len) / riem);
        prev = len;
    }
    out.files.emplace_back("length-vs-w2.csv", csv("J,polygonal_length,riemannian_length,ratio", rows));
    out.summary = {{"riemannian_length", riem}, {"final_ratio", ratio}, {"lp_refinement", r}, {"j_max", jmax}};
    out.check_at_most("|L_J / L - 1| at J = j_max", std::abs(ratio - 1.0), c.tolerances.at("length"));
    if (js.size() > 1 && (jmax & (jmax - 1)) == 0)
        out.check_at_most("relative decrease of L_J under refinement", worst_drop, c.tolerances.at("monotonicity"));
    return out;
}

inline ExperimentResult transport_holonomy(const ExperimentConfig& c) {
    ExperimentResult out;
    const GridPtr g = grid_for(c);
    const std::size_t intervals = count_param(c, "intervals", 2);
    const double a = c.parameters.at("amplitude_a"), b = c.parameters.at("amplitude_b");
    const double pi = std::numbers::pi, lx = 2 * pi / g->period(0), ly = 2 * pi / g->period(1);
    const bool two_d = g->dim() == 2;
    auto second = [=](double x, double y) { return two_d ? std::sin(2 * ly * y) : std::sin(2 * lx * x); };
    auto rho_t = [&](double t) {
        const double ca = a * (1 - std::cos(2 * pi * t)), cb = b * std::sin(2 * pi * t);
        return sample(g, [=](double x, double y) { return 1 + ca * std::cos(lx * x) + cb * second(x, y); });
    };
    auto drho_t = [&](double t) {
        const double ca = 2 * pi * a * std::sin(2 * pi * t), cb = 2 * pi * b * std::cos(2 * pi * t);
        return sample(g, [=](double x, double y) { return ca * std::cos(lx * x) + cb * second(x, y); });
    };
    const DensityCurve loop = curve_from_density_path(g, rho_t, intervals, 1.0, drho_t);
    TransportOptions topt;
    topt.throw_on_drift = false;
    const ScalarField eta1 = sample(g, [=](double x, double) { return std::sin(lx * x); });
    const ScalarField eta2 = sample(g, [=](double x, double y) { return std::cos(2 * lx * x) + (two_d ? std::sin(ly * y) : 0.0); });
    const TransportState s1 = parallel_transport(loop, eta1, topt), s2 = parallel_transport(loop, eta2, topt);
    std::vector<std::vector<double>> rows;
    const double ip0 = otto_inner(loop.density(0), s1.eta[0], s2.eta[0]);
    double inner_drift = 0;
    for (std::size_t j = 0; j < loop.size(); ++j) {
        const double ip = otto_inner(loop.density(j), s1.eta[j], s2.eta[j]);
        inner_drift = std::max(inner_drift, std::abs(ip - ip0));
        rows.push_back({loop.time(j), s1.norms[j], s2.norms[j], ip});
    }
    out.files.emplace_back("transport-holonomy.csv", csv("t,norm_1,norm_2,inner", rows));
    out.summary = {{"holonomy_angle_1", holonomy_angle(s1)},
                   {"holonomy_angle_2", holonomy_angle(s2)},
                   {"norm_drift_1", s1.drift},
                   {"norm_drift_2", s2.drift},
                   {"inner_drift", inner_drift},
                   {"continuity_residual", loop.continuity_residual()},
                   {"node_stage", s1.node_stage}};
    out.check_at_most("Otto norm drift of eta_1", s1.drift, c.tolerances.at("drift"));
    out.check_at_most("Otto norm drift of eta_2", s2.drift, c.tolerances.at("drift"));
    out.check_at_most("drift of <eta_1, eta_2>", inner_drift, c.tolerances.at("inner"));
    return out;
}

inline ExperimentResult poisson_flow(const ExperimentConfig& c) {
    ExperimentResult out;
    const GridPtr g = grid_for(c);
    const std::size_t steps = count_param(c, "steps", 1), triples = count_param(c, "triples", 0);
    const double lx = 2 * std::numbers::pi / g->period(0), ly = 2 * std::numbers::pi / g->period(1);
    Rng rng(c.seed);
    const Density mu0 = random_density(g, rng);
    const ScalarField phi =
        sample(g, [=](double x, double y) { return std::sin(lx * x) * std::cos(ly * y) + 0.3 * std::cos(2 * ly * y); });
    HamiltonianFlowOptions opt;
    opt.filter = c.filter;
    std::vector<double> mass;
    const auto path = hamiltonian_flow(mu0, phi, c.parameters.at("t_final"), steps, opt, &mass);
    const double f0 = coordinate_functional(mu0, phi), l0 = l2_norm_squared(mu0);
    double df = 0, dl = 0, dm = 0;
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < path.size(); ++k) {
        const double t = c.parameters.at("t_final") * static_cast<double>(k) / static_cast<double>(steps);
        const double m = mass[k], f = coordinate_functional(path[k], phi), l = l2_norm_squared(path[k]);
        df = std::max(df, std::abs(f - f0));
        dl = std::max(dl, std::abs(l - l0));
        dm = std::max(dm, std::abs(m - 1.0));
        rows.push_back({t, m, f, l, path[k].min()});
    }
    double jac = 0;
    for (std::size_t i = 0; i < triples; ++i) {
        const ScalarField a = random_field(g, rng), b = random_field(g, rng), d = random_field(g, rng);
        jac = std::max(jac, std::abs(jacobiator(mu0, a, b, d)));
    }
    const Density doc(sample(g, [=](double x, double y) { return 1 + 0.5 * std::cos(lx * x) * std::cos(ly * y); }));
    const double bracket = lifted_bracket(doc, sample(g, [=](double x, double) { return std::sin(lx * x); }),
                                          sample(g, [=](double, double y) { return std::sin(ly * y); }));
    // {sin x, sin y} = l_x l_y cos x cos y paired with 1 + cos x cos y / 2 over unit mass.
    const double expect = 0.125 * lx * ly;
    out.files.emplace_back("poisson-flow.csv", csv("t,mass,functional,l2_norm_squared,min_density", rows));
    out.summary = {{"functional_drift", df}, {"l2_drift", dl}, {"mass_drift", dm},
                   {"max_jacobiator", jac},  {"documented_bracket", bracket}, {"documented_bracket_expected", expect}};
    out.check_at_most("F_phi drift", df, c.tolerances.at("functional"));
    out.check_at_most("L2 norm drift", dl, c.tolerances.at("l2"));
    out.check_at_most("mass drift", dm, c.tolerances.at("mass"));
    if (triples > 0) out.check_at_most("max |Jacobiator| over random triples", jac, c.tolerances.at("jacobiator"));
    out.check_at_most("|lifted bracket - 1/8| on the documented case", std::abs(bracket - expect),
                      c.tolerances.at("lifted_bracket"));
    return out;
}

inline ExperimentResult validate_suites(const ExperimentConfig& c) {
    ExperimentResult out;
    const GridPtr g = grid_for(c);
    const std::size_t n = count_param(c, "samples", 1);
    Rng rng(c.seed);
    std::map<std::string, double> worst;
    std::string rows = "suite,sample,residual,tolerance,pass\n";
    auto record = [&](const std::string& suite, std::size_t i, double v) {
        const double tol = c.tolerances.at(suite);
        rows += suite + "," + std::to_string(i) + "," + fmt(v) + "," + fmt(tol) + "," + (v <= tol ? "1" : "0") + "\n";
        worst[suite] = std::max(worst.count(suite) ? worst[suite] : 0.0, v);
    };
    for (std::size_t i = 0; i < n; ++i) {
        const Density rho = random_density(g, rng);
        const WeightedLaplacian op(rho);
        const ScalarField a = random_field(g, rng), b = random_field(g, rng), d = random_field(g, rng),
                          e = random_field(g, rng);
        record("adjointness", i, props::adjointness(a, gradient(b)));
        record("hessian_symmetry", i, props::hessian_symmetry(a));
        record("trace", i, props::trace_identity(a));
        record("gradient", i, props::gradient_identity(rho, a, Potential(rho, b)));
        record("projection", i, props::projection_idempotence(op, hessian_contract(a, b)));
        record("green", i, props::green_residual(rho, a));
        record("torsion", i, props::torsion(op, a, b));
        record("metric_compatibility", i, props::metric_compatibility(rho, a, b, d));
        record("t_tensor", i, props::t_tensor_identities(op, a, b));
        record("curvature_symmetries", i, props::curvature_symmetries(op, a, b, d, e));
        if (g->spec().flat()) record("nonnegativity", i, std::max(0.0, -sectional_curvature(op, a, b)));
        const io::FieldRecord fr = io::make_record(rho);
        const io::FieldRecord back = io::record_from_binary(io::to_binary(fr));
        const io::FieldRecord backj = io::record_from_json(json::parse(io::to_json(fr).dump()));
        record("io_roundtrip", i, std::max(max_abs_diff(back.values, fr.values), max_abs_diff(backj.values, fr.values)));
    }
    out.files.emplace_back("validate.csv", rows);
    out.summary = json(worst);
    for (const auto& [suite, v] : worst) out.check_at_most(suite, v, c.tolerances.at(suite));
    return out;
}

} // namespace detail

// Runs a resolved configuration.  Numerical failures propagate as exceptions.
inline ExperimentResult execute(const ExperimentConfig& c) {
    if (c.experiment == "curvature-scan") return detail::curvature_scan(c);
    if (c.experiment == "geodesic-vs-hopflax") return detail::geodesic_vs_hopflax(c);
    if (c.experiment == "length-vs-w2") return detail::length_vs_w2(c);
    if (c.experiment == "transport-holonomy") return detail::transport_holonomy(c);
    if (c.experiment == "poisson-flow") return detail::poisson_flow(c);
    if (c.experiment == "validate") return detail::validate_suites(c);
    throw invalid_argument("unknown experiment '" + c.experiment + "'; valid names: " + experiment_names());
}

inline json manifest(const ExperimentConfig& c, const ExperimentResult& r, const std::string& status,
                     const std::string& error = {}) {
    json a = json::array();
    for (const auto& ch : r.assertions)
        a.push_back({{"name", ch.name}, {"value", ch.value}, {"tolerance", ch.tolerance}, {"pass", ch.pass}});
    json files = json::array();
    for (const auto& f : r.files) files.push_back(f.first);
    files.push_back("summary.json");
    json m{{"config", config_to_json(c)}, {"tolerances", c.tolerances}, {"assertions", a},
           {"pass", status == "pass"},    {"status", status},             {"files", files}};
    if (!error.empty()) m["error"] = error;
    return m;
}

} // namespace otto::experiments
