#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "otto/experiments.hpp"
#include "otto/io.hpp"

namespace fs = std::filesystem;
namespace ex = otto::experiments;
using json = nlohmann::json;

namespace {

enum Exit : int { kPass = 0, kUsage = 1, kNumerical = 2, kInvariant = 3 };

struct RunFlags {
    std::string config_file;
    std::string experiment;
    std::string manifold;
    std::size_t n = 0, ny = 0;
    std::vector<double> periods;
    double conformal_amplitude = 0.3;
    bool conformal_amplitude_set = false;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::vector<std::string> tolerances, parameters;
    int filter = -1;
    std::string output;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
    cmd->add_option("--config", f.config_file, "JSON configuration file; flags override its entries");
    cmd->add_option("--manifold", f.manifold, "circle | flat-torus | conformal-torus");
    cmd->add_option("-n,--n", f.n, "Nodes along x");
    cmd->add_option("--ny", f.ny, "Nodes along y (defaults to n)");
    cmd->add_option("--period", f.periods, "Period per axis")->expected(1, 2);
    cmd->add_option_function<double>(
        "--conformal-amplitude",
        [&f](double a) {
            f.conformal_amplitude = a;
            f.conformal_amplitude_set = true;
        },
        "Amplitude a of the conformal factor u = a cos x");
    cmd->add_option_function<std::uint64_t>(
        "--seed",
        [&f](std::uint64_t s) {
            f.seed = s;
            f.seed_set = true;
        },
        "Random seed");
    cmd->add_option("--tol", f.tolerances, "Tolerance override name=value (repeatable)");
    cmd->add_option("--param", f.parameters, "Parameter override name=value (repeatable)");
    cmd->add_flag_function(
        "--filter,!--no-filter", [&f](std::int64_t c) { f.filter = c > 0 ? 1 : 0; }, "Spectral filter on or off");
    cmd->add_option("-o,--output", f.output, "Output directory (overrides OTTO_OUTPUT_DIR and the config)");
}

std::pair<std::string, double> key_value(const std::string& s) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw otto::invalid_argument("expected name=value, got '" + s + "'");
    try {
        std::size_t used = 0;
        const double v = std::stod(s.substr(eq + 1), &used);
        if (used != s.size() - eq - 1) throw std::invalid_argument("trailing characters");
        return {s.substr(0, eq), v};
    } catch (const std::exception&) {
        throw otto::invalid_argument("bad number in '" + s + "'");
    }
}

ex::ExperimentConfig build_config(const RunFlags& f) {
    ex::ExperimentConfig c;
    if (!f.config_file.empty()) {
        const std::string text = otto::io::detail::read_file(f.config_file);
        try {
            c = ex::config_from_json(json::parse(text));
        } catch (const json::parse_error& e) {
            throw otto::invalid_argument("config '" + f.config_file + "': " + e.what());
        }
    }
    if (!f.experiment.empty()) c.experiment = f.experiment;
    if (c.experiment.empty()) throw otto::invalid_argument("no experiment given; valid names: " + ex::experiment_names());
    if (!f.manifold.empty() || !f.periods.empty() || f.conformal_amplitude_set) {
        const otto::ManifoldKind kind = f.manifold.empty() ? c.spec.kind : otto::manifold_kind_from_string(f.manifold);
        std::array<double, 2> per = c.spec.periods;
        if (kind != c.spec.kind) per = {2 * std::numbers::pi, 2 * std::numbers::pi};
        for (std::size_t i = 0; i < f.periods.size(); ++i) per[i] = f.periods[i];
        if (f.periods.size() == 1) per[1] = per[0];
        switch (kind) {
        case otto::ManifoldKind::circle: c.spec = otto::ManifoldSpec::circle(per[0]); break;
        case otto::ManifoldKind::flat_torus: c.spec = otto::ManifoldSpec::flat_torus(per[0], per[1]); break;
        case otto::ManifoldKind::conformal_torus: {
            otto::ConformalFactor u = c.spec.kind == kind && !f.conformal_amplitude_set
                                          ? c.spec.conformal
                                          : otto::ConformalFactor::fourier({{f.conformal_amplitude, 1, 0, 0.0}});
            c.spec = otto::ManifoldSpec::conformal_torus(std::move(u), per[0], per[1]);
            break;
        }
        }
    }
    if (f.n) c.resolution = {f.n, f.ny};
    else if (f.ny) c.resolution[1] = f.ny;
    if (f.seed_set) c.seed = f.seed;
    if (f.filter >= 0) c.filter = f.filter == 1;
    for (const auto& s : f.tolerances) {
        auto [k, v] = key_value(s);
        c.tolerances[k] = v;
    }
    for (const auto& s : f.parameters) {
        auto [k, v] = key_value(s);
        c.parameters[k] = v;
    }
    if (const char* env = std::getenv("OTTO_OUTPUT_DIR"); env && *env) c.output_dir = env;
    if (!f.output.empty()) c.output_dir = f.output;
    return ex::resolve(c);
}

void write_text(const fs::path& p, const std::string& s) { otto::io::detail::write_file(p.string(), s); }

int run_experiment(const RunFlags& flags) {
    ex::ExperimentConfig cfg;
    try {
        cfg = build_config(flags);
    } catch (const otto::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    }
    const fs::path dir = fs::path(cfg.output_dir) / cfg.experiment;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        std::cerr << "usage error: cannot create output directory " << dir << ": " << ec.message() << "\n";
        return kUsage;
    }
    ex::ExperimentResult res;
    std::string status = "pass", error;
    int code = kPass;
    try {
        res = ex::execute(cfg);
        if (!res.pass()) {
            status = "invariant-violation";
            code = kInvariant;
        }
    } catch (const otto::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const otto::grid_mismatch& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const otto::invariant_violation& e) {
        status = "invariant-violation";
        error = e.what();
        code = kInvariant;
    } catch (const std::exception& e) {
        status = "numerical-failure";
        error = e.what();
        code = kNumerical;
    }
    try {
        for (const auto& [name, body] : res.files) write_text(dir / name, body);
        write_text(dir / "summary.json", res.summary.dump(2) + "\n");
        write_text(dir / "manifest.json", ex::manifest(cfg, res, status, error).dump(2) + "\n");
    } catch (const std::exception& e) {
        std::cerr << "error writing outputs: " << e.what() << "\n";
        return kNumerical;
    }
    for (const auto& a : res.assertions)
        std::cout << (a.pass ? "PASS " : "FAIL ") << a.name << ": " << ex::fmt_short(a.value) << " (tolerance "
                  << ex::fmt_short(a.tolerance) << ")\n";
    if (!error.empty()) std::cerr << status << ": " << error << "\n";
    std::cout << cfg.experiment << ": " << status << " (outputs in " << dir.string() << ")\n";
    return code;
}

int validate_files(const std::vector<std::string>& files, double tol) {
    bool all = true;
    json out = json::array();
    for (const auto& path : files) {
        otto::io::ValidationReport rep;
        try {
            const std::string bytes = otto::io::detail::read_file(path);
            if (!otto::io::has_binary_magic(bytes)) {
                const json j = json::parse(bytes);
                if (j.value("format", std::string()) == "otto-curve") rep = otto::io::validate(otto::io::curve_from_json(j), tol);
                else rep = otto::io::validate(otto::io::record_from_json(j), tol);
            } else {
                rep = otto::io::validate(otto::io::record_from_binary(bytes), tol);
            }
        } catch (const otto::invariant_violation& e) {
            rep.checks.push_back({std::string("load: ") + e.what(), 1.0, 0.0, false});
        } catch (const otto::positivity_error& e) {
            rep.checks.push_back({std::string("load: ") + e.what(), 1.0, 0.0, false});
        } catch (const std::exception& e) {
            std::cerr << "usage error: " << path << ": " << e.what() << "\n";
            return kUsage;
        }
        json r = otto::io::report_to_json(rep);
        r["file"] = path;
        out.push_back(r);
        all = all && rep.pass();
    }
    std::cout << out.dump(2) << "\n";
    return all ? kPass : kInvariant;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Otto-geometry experiments on periodic grids"};
    app.require_subcommand(1);

    RunFlags run_flags;
    auto* run = app.add_subcommand("run", "Run one experiment and write CSV/JSON outputs with a manifest");
    run->add_option("experiment", run_flags.experiment, "Experiment name");
    add_run_flags(run, run_flags);

    std::string describe_name;
    auto* describe = app.add_subcommand("describe", "Print an experiment's formulas and output schema");
    describe->add_option("experiment", describe_name, "Experiment name")->required();

    RunFlags val_flags;
    std::vector<std::string> val_files;
    double file_tol = 1e-10;
    auto* validate = app.add_subcommand("validate", "Check stored field/curve files, or run the property suites");
    validate->add_option("files", val_files, "Field or curve containers to check");
    validate->add_option("--file-tol", file_tol, "Tolerance for stored-file checks");
    add_run_flags(validate, val_flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*run) return run_experiment(run_flags);
        if (*describe) {
            std::cout << ex::describe(describe_name);
            return kPass;
        }
        if (*validate) {
            if (!val_files.empty()) return validate_files(val_files, file_tol);
            val_flags.experiment = "validate";
            return run_experiment(val_flags);
        }
    } catch (const otto::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
