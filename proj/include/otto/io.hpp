#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "otto/connection.hpp"
#include "otto/density.hpp"

// Field containers.
//
// JSON form: {"format": "otto-field", "version": 1, "spec": {...}, "resolution": [nx, ny],
// "scheme": "spectral"|"fd4", "role": "field"|"density"|"potential", "values": [...],
// "gauge": {"anchor": [...], "residual": r}}.  Values are in row-major node order
// (index = i * ny + j, i along x); "gauge" is present for potentials only.
//
// Binary form, all integers and floats little-endian:
//   bytes 0..3   magic "WGF1"
//   bytes 4..7   uint32 version (1)
//   bytes 8..15  uint64 header length L
//   next L bytes UTF-8 JSON header: the JSON form without "values" and "gauge.anchor",
//                plus "count" and "anchor_count"
//   then count float64 values, then anchor_count float64 anchor values.

namespace otto::io {

using json = nlohmann::json;

inline constexpr int kFormatVersion = 1;
inline constexpr char kBinaryMagic[4] = {'W', 'G', 'F', '1'};

enum class FieldRole { field, density, potential };

inline std::string to_string(FieldRole r) {
    switch (r) {
    case FieldRole::field: return "field";
    case FieldRole::density: return "density";
    case FieldRole::potential: return "potential";
    }
    return "?";
}

inline FieldRole role_from_string(const std::string& s) {
    if (s == "field") return FieldRole::field;
    if (s == "density") return FieldRole::density;
    if (s == "potential") return FieldRole::potential;
    throw invalid_argument("unknown field role '" + s + "'");
}

inline json spec_to_json(const ManifoldSpec& spec) {
    if (spec.conformal.callable) throw invalid_argument("spec_to_json: callable conformal factors cannot be stored");
    json j;
    j["kind"] = std::string(otto::to_string(spec.kind));
    j["periods"] = spec.dimension() == 1 ? json::array({spec.periods[0]}) : json::array({spec.periods[0], spec.periods[1]});
    if (spec.kind == ManifoldKind::conformal_torus) {
        json terms = json::array();
        for (const auto& t : spec.conformal.terms)
            terms.push_back({{"amplitude", t.amplitude}, {"kx", t.kx}, {"ky", t.ky}, {"phase", t.phase}});
        j["conformal_factor"] = terms;
    }
    return j;
}

inline ManifoldSpec spec_from_json(const json& j) {
    try {
        const ManifoldKind kind = manifold_kind_from_string(j.at("kind").get<std::string>());
        const auto& per = j.at("periods");
        switch (kind) {
        case ManifoldKind::circle: return ManifoldSpec::circle(per.at(0).get<double>());
        case ManifoldKind::flat_torus: return ManifoldSpec::flat_torus(per.at(0).get<double>(), per.at(1).get<double>());
        case ManifoldKind::conformal_torus: {
            std::vector<FourierTerm> terms;
            for (const auto& t : j.at("conformal_factor"))
                terms.push_back({t.at("amplitude").get<double>(), t.at("kx").get<int>(), t.at("ky").get<int>(),
                                 t.value("phase", 0.0)});
            return ManifoldSpec::conformal_torus(ConformalFactor::fourier(std::move(terms)), per.at(0).get<double>(),
                                                 per.at(1).get<double>());
        }
        }
    } catch (const json::exception& e) {
        throw invalid_argument(std::string("spec_from_json: ") + e.what());
    }
    throw invalid_argument("spec_from_json: unreachable");
}

inline std::string to_string(DiffScheme s) { return s == DiffScheme::spectral ? "spectral" : "fd4"; }
inline DiffScheme scheme_from_string(const std::string& s) {
    if (s == "spectral") return DiffScheme::spectral;
    if (s == "fd4") return DiffScheme::fd4;
    throw invalid_argument("unknown differentiation scheme '" + s + "'");
}

// A stored field with its geometry, role and (for potentials) gauge anchor.
struct FieldRecord {
    ManifoldSpec spec;
    std::array<std::size_t, 2> resolution{0, 1};
    DiffScheme scheme = DiffScheme::spectral;
    FieldRole role = FieldRole::field;
    std::vector<double> values;
    std::vector<double> anchor;  // anchor density values, potentials only
    double gauge_residual = 0.0;

    GridPtr grid() const { return build_grid(spec, resolution, scheme); }
    ScalarField field(const GridPtr& g) const { return ScalarField(g, values); }
    ScalarField field() const { return field(grid()); }
};

inline FieldRecord make_record(const ScalarField& f, FieldRole role = FieldRole::field) {
    const Grid& g = f.grid();
    return {g.spec(), g.resolution(), g.scheme(), role, f.data(), {}, 0.0};
}
inline FieldRecord make_record(const Density& rho) { return make_record(rho.field(), FieldRole::density); }
inline FieldRecord make_record(const Potential& phi) {
    FieldRecord r = make_record(phi.field(), FieldRole::potential);
    r.anchor = phi.anchor().field().data();
    r.gauge_residual = phi.gauge_residual();
    return r;
}

inline Density to_density(const FieldRecord& r, const GridPtr& g) {
    if (r.role != FieldRole::density) throw invalid_argument("to_density: record role is " + to_string(r.role));
    return Density(r.field(g));
}
inline Potential to_potential(const FieldRecord& r, const GridPtr& g) {
    if (r.role != FieldRole::potential) throw invalid_argument("to_potential: record role is " + to_string(r.role));
    return Potential(Density(ScalarField(g, r.anchor)), r.field(g));
}

namespace detail {

inline json header_json(const FieldRecord& r) {
    json j;
    j["format"] = "otto-field";
    j["version"] = kFormatVersion;
    j["spec"] = spec_to_json(r.spec);
    j["resolution"] = r.spec.dimension() == 1 ? json::array({r.resolution[0]})
                                              : json::array({r.resolution[0], r.resolution[1]});
    j["scheme"] = to_string(r.scheme);
    j["role"] = to_string(r.role);
    return j;
}

inline FieldRecord record_from_header(const json& j) {
    if (j.value("format", std::string()) != "otto-field") throw invalid_argument("field container: bad format tag");
    if (j.value("version", 0) != kFormatVersion) throw invalid_argument("field container: unsupported version");
    FieldRecord r;
    try {
        r.spec = spec_from_json(j.at("spec"));
        const auto& res = j.at("resolution");
        r.resolution = {res.at(0).get<std::size_t>(), r.spec.dimension() == 2 ? res.at(1).get<std::size_t>() : 1};
        r.scheme = scheme_from_string(j.value("scheme", std::string("spectral")));
        r.role = role_from_string(j.at("role").get<std::string>());
        if (r.role == FieldRole::potential) r.gauge_residual = j.at("gauge").value("residual", 0.0);
    } catch (const json::exception& e) {
        throw invalid_argument(std::string("field container: ") + e.what());
    }
    return r;
}

inline void check_counts(const FieldRecord& r) {
    const std::size_t n = r.resolution[0] * r.resolution[1];
    if (r.values.size() != n) throw invalid_argument("field container: value count does not match resolution");
    if (r.role == FieldRole::potential && r.anchor.size() != n)
        throw invalid_argument("field container: potential is missing its gauge anchor");
}

inline void put_u32(std::string& s, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}
inline void put_u64(std::string& s, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}
inline void put_f64(std::string& s, double d) { put_u64(s, std::bit_cast<std::uint64_t>(d)); }

inline std::uint64_t get_le(const std::string& s, std::size_t& pos, int bytes) {
    if (pos + static_cast<std::size_t>(bytes) > s.size()) throw invalid_argument("binary container: truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[pos + i])) << (8 * i);
    pos += static_cast<std::size_t>(bytes);
    return v;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw invalid_argument("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw invalid_argument("cannot write '" + path + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw invalid_argument("write failed for '" + path + "'");
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

} // namespace detail

inline json to_json(const FieldRecord& r) {
    detail::check_counts(r);
    json j = detail::header_json(r);
    j["values"] = r.values;
    if (r.role == FieldRole::potential) j["gauge"] = {{"anchor", r.anchor}, {"residual", r.gauge_residual}};
    return j;
}

inline FieldRecord record_from_json(const json& j) {
    FieldRecord r = detail::record_from_header(j);
    try {
        r.values = j.at("values").get<std::vector<double>>();
        if (r.role == FieldRole::potential) r.anchor = j.at("gauge").at("anchor").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw invalid_argument(std::string("field container: ") + e.what());
    }
    detail::check_counts(r);
    return r;
}

inline std::string to_binary(const FieldRecord& r) {
    detail::check_counts(r);
    json h = detail::header_json(r);
    h["count"] = r.values.size();
    h["anchor_count"] = r.anchor.size();
    if (r.role == FieldRole::potential) h["gauge"] = {{"residual", r.gauge_residual}};
    const std::string header = h.dump();
    std::string out(kBinaryMagic, 4);
    detail::put_u32(out, static_cast<std::uint32_t>(kFormatVersion));
    detail::put_u64(out, header.size());
    out += header;
    for (double v : r.values) detail::put_f64(out, v);
    for (double v : r.anchor) detail::put_f64(out, v);
    return out;
}

inline FieldRecord record_from_binary(const std::string& bytes) {
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kBinaryMagic, 4) != 0)
        throw invalid_argument("binary container: bad magic");
    std::size_t pos = 4;
    if (detail::get_le(bytes, pos, 4) != static_cast<std::uint64_t>(kFormatVersion))
        throw invalid_argument("binary container: unsupported version");
    const std::uint64_t len = detail::get_le(bytes, pos, 8);
    if (pos + len > bytes.size()) throw invalid_argument("binary container: truncated header");
    json h;
    try {
        h = json::parse(bytes.substr(pos, len));
    } catch (const json::exception& e) {
        throw invalid_argument(std::string("binary container: ") + e.what());
    }
    pos += len;
    FieldRecord r = detail::record_from_header(h);
    const std::size_t count = h.value("count", std::size_t{0}), acount = h.value("anchor_count", std::size_t{0});
    if (bytes.size() - pos != 8 * (count + acount)) throw invalid_argument("binary container: payload size mismatch");
    r.values.resize(count);
    r.anchor.resize(acount);
    for (auto& v : r.values) v = std::bit_cast<double>(detail::get_le(bytes, pos, 8));
    for (auto& v : r.anchor) v = std::bit_cast<double>(detail::get_le(bytes, pos, 8));
    detail::check_counts(r);
    return r;
}

inline bool has_binary_magic(const std::string& bytes) {
    return bytes.size() >= 4 && std::memcmp(bytes.data(), kBinaryMagic, 4) == 0;
}

inline void save_json(const FieldRecord& r, const std::string& path) { detail::write_file(path, detail::dump(to_json(r))); }
inline void save_binary(const FieldRecord& r, const std::string& path) { detail::write_file(path, to_binary(r)); }

// Reads either form, detected by the binary magic.
inline FieldRecord load_record(const std::string& path) {
    const std::string bytes = detail::read_file(path);
    if (has_binary_magic(bytes)) return record_from_binary(bytes);
    try {
        return record_from_json(json::parse(bytes));
    } catch (const json::parse_error& e) {
        throw invalid_argument("'" + path + "': " + e.what());
    }
}

// Curve container: {"format": "otto-curve", "version": 1, "spec", "resolution", "scheme",
// "continuity_tolerance", "times": [...], "nodes": [{"density": [...], "potential": [...]}]}.
inline json curve_to_json(const DensityCurve& c) {
    json j = detail::header_json(make_record(c.density(0)));
    j.erase("role");
    j["format"] = "otto-curve";
    j["continuity_tolerance"] = c.tolerance();
    j["times"] = c.times();
    json nodes = json::array();
    for (std::size_t k = 0; k < c.size(); ++k)
        nodes.push_back({{"density", c.density(k).field().data()}, {"potential", c.potential(k).field().data()}});
    j["nodes"] = std::move(nodes);
    return j;
}

inline DensityCurve curve_from_json(const json& j) {
    if (j.value("format", std::string()) != "otto-curve") throw invalid_argument("curve container: bad format tag");
    json h = j;
    h["format"] = "otto-field";
    h["role"] = "field";
    FieldRecord r = detail::record_from_header(h);
    const GridPtr g = r.grid();
    try {
        std::vector<double> t = j.at("times").get<std::vector<double>>();
        std::vector<Density> rho;
        std::vector<Potential> phi;
        for (const auto& n : j.at("nodes")) {
            Density d(ScalarField(g, n.at("density").get<std::vector<double>>()));
            phi.emplace_back(d, ScalarField(g, n.at("potential").get<std::vector<double>>()));
            rho.push_back(std::move(d));
        }
        return DensityCurve(std::move(t), std::move(rho), std::move(phi),
                            j.value("continuity_tolerance", DensityCurve::kDefaultContinuityTolerance));
    } catch (const json::exception& e) {
        throw invalid_argument(std::string("curve container: ") + e.what());
    }
}

inline void save_curve(const DensityCurve& c, const std::string& path) {
    detail::write_file(path, detail::dump(curve_to_json(c)));
}
inline DensityCurve load_curve(const std::string& path) {
    try {
        return curve_from_json(json::parse(detail::read_file(path)));
    } catch (const json::parse_error& e) {
        throw invalid_argument("'" + path + "': " + e.what());
    }
}

// Invariant checks on a stored record.
struct Check {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct ValidationReport {
    std::vector<Check> checks;
    bool pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

inline ValidationReport validate(const FieldRecord& r, double tolerance = 1e-10) {
    ValidationReport rep;
    auto add = [&](std::string name, double v, double tol, bool ok) { rep.checks.push_back({std::move(name), v, tol, ok}); };
    double bad = 0;
    for (double v : r.values) bad += std::isfinite(v) ? 0.0 : 1.0;
    add("finite values", bad, 0.0, bad == 0.0);
    if (bad != 0.0) return rep;
    const GridPtr g = r.grid();
    const ScalarField f = r.field(g);
    if (r.role == FieldRole::density) {
        double lo = r.values[0];
        for (double v : r.values) lo = std::min(lo, v);
        add("positivity (min value)", lo, kPositivityFloor, lo > kPositivityFloor);
        const double mass = integrate(f);
        add("unit mass", std::abs(mass - 1.0), tolerance, std::abs(mass - 1.0) <= tolerance);
    }
    if (r.role == FieldRole::potential) {
        double abad = 0, lo = r.anchor.empty() ? 0.0 : r.anchor[0];
        for (double v : r.anchor) {
            abad += std::isfinite(v) ? 0.0 : 1.0;
            lo = std::min(lo, v);
        }
        add("finite anchor", abad, 0.0, abad == 0.0);
        add("anchor positivity (min value)", lo, kPositivityFloor, abad == 0.0 && lo > kPositivityFloor);
        if (abad == 0.0 && lo > kPositivityFloor) {
            const ScalarField a(g, r.anchor);
            const double mass = integrate(a);
            add("anchor unit mass", std::abs(mass - 1.0), tolerance, std::abs(mass - 1.0) <= tolerance);
            const double gauge = std::abs(integrate(f * a));
            const double scale = std::max(1.0, f.max_abs());
            add("gauge: integral of phi rho", gauge, tolerance * scale, gauge <= tolerance * scale);
        }
    }
    return rep;
}

inline ValidationReport validate(const DensityCurve& c, double tolerance = 1e-10) {
    ValidationReport rep;
    for (std::size_t k = 0; k < c.size(); ++k) {
        for (auto ch : validate(make_record(c.density(k)), tolerance).checks) {
            ch.name = "node " + std::to_string(k) + " density: " + ch.name;
            rep.checks.push_back(ch);
        }
        for (auto ch : validate(make_record(c.potential(k)), tolerance).checks) {
            ch.name = "node " + std::to_string(k) + " potential: " + ch.name;
            rep.checks.push_back(ch);
        }
    }
    rep.checks.push_back({"continuity residual", c.continuity_residual(), c.tolerance(),
                          c.continuity_residual() <= c.tolerance()});
    return rep;
}

inline json report_to_json(const ValidationReport& rep) {
    json a = json::array();
    for (const auto& c : rep.checks)
        a.push_back({{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance}, {"pass", c.pass}});
    return {{"pass", rep.pass()}, {"checks", a}};
}

} // namespace otto::io
