// flowlin: build and verify globally linearizing coordinates for ODE systems
// with an asymptotically stable equilibrium, extract decay eigenfunctions,
// and compute radial normal forms. See README.md for the full contract.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flowlin/chart.hpp"
#include "flowlin/conjugacy.hpp"
#include "flowlin/errors.hpp"
#include "flowlin/expr.hpp"
#include "flowlin/koopman.hpp"
#include "flowlin/lyapunov.hpp"
#include "flowlin/morse.hpp"
#include "flowlin/zoo.hpp"

namespace {

using namespace flowlin;

void emit_diagnostic(const std::string& error, const std::string& module,
                     const std::string& detail) {
    std::string escaped;
    for (char c : detail) {
        if (c == '"' || c == '\\') escaped += '\\';
        if (c == '\n') {
            escaped += "\\n";
            continue;
        }
        escaped += c;
    }
    std::cerr << "{\"error\":\"" << error << "\",\"module\":\"" << module << "\",\"detail\":\""
              << escaped << "\"}" << std::endl;
}

std::vector<double> parse_number_list(const std::string& text, const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) {
                ++used;
            }
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw EngineError(Err::kInvalidArgument, "cli",
                              "could not parse " + what + " entry '" + item + "'");
        }
    }
    if (out.empty()) {
        throw EngineError(Err::kInvalidArgument, "cli", what + " must not be empty");
    }
    return out;
}

Vec to_vec(const std::vector<double>& xs) {
    Vec v(static_cast<int>(xs.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) v[static_cast<int>(i)] = xs[i];
    return v;
}

lyapunov::DomainBox parse_box(const std::string& text) {
    std::vector<double> lo, hi;
    std::stringstream ss(text);
    std::string axis;
    while (std::getline(ss, axis, ',')) {
        const auto colon = axis.find(':');
        if (colon == std::string::npos) {
            throw EngineError(Err::kInvalidArgument, "cli",
                              "box axes use lo:hi syntax, got '" + axis + "'");
        }
        try {
            lo.push_back(std::stod(axis.substr(0, colon)));
            hi.push_back(std::stod(axis.substr(colon + 1)));
        } catch (const std::exception&) {
            throw EngineError(Err::kInvalidArgument, "cli", "could not parse box '" + text + "'");
        }
    }
    return lyapunov::DomainBox(to_vec(lo), to_vec(hi));
}

Mat parse_matrix_literal(const std::string& text) {
    // Accepts [[a,b],[c,d]] with arbitrary whitespace.
    std::vector<std::vector<double>> rows;
    std::size_t i = 0;
    auto skip_ws = [&] {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    };
    auto expect = [&](char c) {
        skip_ws();
        if (i >= text.size() || text[i] != c) {
            throw EngineError(Err::kInvalidArgument, "cli",
                              std::string("matrix literal: expected '") + c + "' at offset " +
                                  std::to_string(i));
        }
        ++i;
    };
    expect('[');
    for (;;) {
        expect('[');
        std::vector<double> row;
        for (;;) {
            skip_ws();
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(text.substr(i), &used);
            } catch (const std::exception&) {
                throw EngineError(Err::kInvalidArgument, "cli",
                                  "matrix literal: expected a number at offset " +
                                      std::to_string(i));
            }
            i += used;
            row.push_back(v);
            skip_ws();
            if (i < text.size() && text[i] == ',') {
                ++i;
                continue;
            }
            break;
        }
        expect(']');
        rows.push_back(std::move(row));
        skip_ws();
        if (i < text.size() && text[i] == ',') {
            ++i;
            continue;
        }
        break;
    }
    expect(']');
    const auto n_rows = rows.size();
    const auto n_cols = rows.front().size();
    Mat m(static_cast<int>(n_rows), static_cast<int>(n_cols));
    for (std::size_t r = 0; r < n_rows; ++r) {
        if (rows[r].size() != n_cols) {
            throw EngineError(Err::kInvalidArgument, "cli", "matrix literal rows differ in length");
        }
        for (std::size_t c = 0; c < n_cols; ++c) {
            m(static_cast<int>(r), static_cast<int>(c)) = rows[r][c];
        }
    }
    return m;
}

struct RunConfig {
    std::string system;
    std::vector<std::string> f_exprs;
    std::string equilibrium;
    std::string lyapunov_source;  // "", "quadratic", or an expression
    std::string level = "auto";
    std::string target = "minus_identity";
    std::string box;
    std::string point;
    int resolution = 0;
    int samples = 100;
    std::string times = "-1,-0.25,0.5,2";
    std::uint64_t seed = 0;
    double tol = 1e-5;
    unsigned threads = 0;
    std::string out;
};

void add_common_options(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--system", cfg.system, "Zoo system name (see `flowlin zoo list`)");
    cmd->add_option("--f", cfg.f_exprs,
                    "Right-hand side expression, one per component (repeat the flag)");
    cmd->add_option("--equilibrium", cfg.equilibrium, "Equilibrium coordinates, comma separated");
    cmd->add_option("--lyapunov", cfg.lyapunov_source,
                    "Lyapunov source: expression, 'quadratic', or empty for the zoo default");
    cmd->add_option("--level", cfg.level, "Level c: a number or 'auto'");
    cmd->add_option("--target", cfg.target,
                    "Target matrix: 'minus_identity', 'diag:l1,l2,...' or [[..],[..]] literal");
    cmd->add_option("--box", cfg.box, "Working box, per-axis lo:hi separated by commas");
    cmd->add_option("--samples", cfg.samples, "Sample count for verification runs");
    cmd->add_option("--times", cfg.times, "Comma-separated flow times");
    cmd->add_option("--seed", cfg.seed, "Seed for deterministic sampling");
    cmd->add_option("--tol", cfg.tol, "Pass/fail tolerance for verification subcommands");
    cmd->add_option("--threads", cfg.threads, "Worker threads (0 = all cores)");
    cmd->add_option("--out", cfg.out, "Output file path (JSON or CSV depending on subcommand)");
}

struct BuiltSystem {
    ode::VectorFieldSpec field;
    lyapunov::LyapunovSpec lyap;  // validated, with level
    lyapunov::DomainBox box;
    conjugacy::HurwitzTarget target;
    chart::SphereChart chart;
    conjugacy::LinearizingMap map;
};

conjugacy::HurwitzTarget parse_target(const std::string& text, int n) {
    if (text.empty() || text == "minus_identity") {
        return conjugacy::HurwitzTarget::minus_identity(n);
    }
    if (text.rfind("diag:", 0) == 0) {
        const auto entries = parse_number_list(text.substr(5), "--target diag");
        if (static_cast<int>(entries.size()) != n) {
            throw EngineError(Err::kInvalidArgument, "cli",
                              "diag target needs " + std::to_string(n) + " entries");
        }
        return conjugacy::HurwitzTarget::diagonal(to_vec(entries));
    }
    const Mat m = parse_matrix_literal(text);
    if (m.rows() != n || m.cols() != n) {
        throw EngineError(Err::kInvalidArgument, "cli",
                          "target matrix must be " + std::to_string(n) + "x" + std::to_string(n));
    }
    return conjugacy::HurwitzTarget::make(m);
}

/// validate -> choose_level -> star-shape check -> retarget.
BuiltSystem build_system(const RunConfig& cfg) {
    std::optional<ode::VectorFieldSpec> field;
    std::optional<lyapunov::LyapunovSpec> lyap;
    std::optional<lyapunov::DomainBox> box;
    std::optional<double> recommended_level;

    if (!cfg.system.empty()) {
        const auto& entry = zoo::get_zoo(cfg.system);
        field = entry.field;
        box = entry.box;
        if (cfg.lyapunov_source.empty()) {
            lyap = entry.lyap;
            recommended_level = entry.lyap.level;
        }
    } else {
        if (cfg.f_exprs.empty()) {
            throw EngineError(Err::kInvalidArgument, "cli",
                              "provide --system or --f expressions");
        }
        const int n = static_cast<int>(cfg.f_exprs.size());
        auto compiled = expr::compile_field(n, cfg.f_exprs);
        Vec x_star = Vec::Zero(n);
        if (!cfg.equilibrium.empty()) {
            const auto coords = parse_number_list(cfg.equilibrium, "--equilibrium");
            if (static_cast<int>(coords.size()) != n) {
                throw EngineError(Err::kInvalidArgument, "cli",
                                  "equilibrium dimension must match the number of --f components");
            }
            x_star = to_vec(coords);
        }
        field = ode::VectorFieldSpec::make(
            n, [compiled](const Vec& x) { return compiled(x); }, x_star, nullptr, "user");
    }

    if (!cfg.box.empty()) {
        box = parse_box(cfg.box);
        if (box->dimension() != field->dimension) {
            throw EngineError(Err::kInvalidArgument, "cli",
                              "box dimension does not match the system");
        }
    }
    if (!box) {
        throw EngineError(Err::kInvalidArgument, "cli", "a --box is required for this system");
    }

    if (!lyap) {
        const std::string& src = cfg.lyapunov_source;
        if (src.empty() || src == "quadratic") {
            lyap = lyapunov::quadratic_lyapunov_from_jacobian(
                *field, Mat::Identity(field->dimension, field->dimension));
        } else {
            auto ast = expr::parse(src);
            auto shared = std::make_shared<expr::ExprAst>(std::move(ast));
            lyap = lyapunov::LyapunovSpec::make(
                [shared](const Vec& x) { return expr::evaluate(*shared, x); },
                field->equilibrium);
        }
    }

    if (cfg.level != "auto" && !cfg.level.empty()) {
        const auto values = parse_number_list(cfg.level, "--level");
        if (values.size() != 1) {
            throw EngineError(Err::kInvalidArgument, "cli", "--level takes one number or 'auto'");
        }
        *lyap = lyap->with_level(values[0]);
    } else if (recommended_level && *recommended_level > 0.0) {
        *lyap = lyap->with_level(*recommended_level);
    } else {
        *lyap = lyap->with_level(lyapunov::choose_level(*lyap, *box, cfg.seed));
    }

    lyapunov::validate(*lyap, *field, *box, cfg.seed);

    chart::SphereChart chart(*lyap, *box);
    const int dirs = std::max(2 * field->dimension, 64);
    const auto star = chart::check_star_shaped(chart, dirs, 512, cfg.seed);
    if (!star.passed) {
        throw EngineError(Err::kStarShapeFailed, "chart",
                          "level set is not star-shaped about x*: " +
                              std::to_string(star.failed_directions.size()) + " of " +
                              std::to_string(star.num_directions) +
                              " rays cross it more than once");
    }

    auto target = parse_target(cfg.target, field->dimension);
    conjugacy::LinearizingMap map(*field, *lyap, chart, target);
    return BuiltSystem{std::move(*field), std::move(*lyap), std::move(*box), std::move(target),
                       std::move(chart), std::move(map)};
}

void write_out(const std::string& path, const std::string& content) {
    if (path.empty()) return;
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw EngineError(Err::kIoError, "cli", "cannot open '" + path + "' for writing");
    }
    out << content;
}

int cmd_linearize(const RunConfig& cfg) {
    auto built = build_system(cfg);
    if (!cfg.point.empty()) {
        const Vec x = to_vec(parse_number_list(cfg.point, "--point"));
        if (x.size() != built.field.dimension) {
            throw EngineError(Err::kInvalidArgument, "cli", "--point dimension mismatch");
        }
        const Vec y = built.map.linearize(x);
        std::ostringstream line;
        line.precision(9);
        for (int i = 0; i < y.size(); ++i) {
            if (i) line << " ";
            line << y[i];
        }
        std::cout << line.str() << "\n";
        if (!cfg.out.empty()) {
            std::ostringstream js;
            js.precision(17);
            js << "{\"x\":[";
            for (int i = 0; i < x.size(); ++i) js << (i ? "," : "") << x[i];
            js << "],\"y\":[";
            for (int i = 0; i < y.size(); ++i) js << (i ? "," : "") << y[i];
            js << "]}";
            write_out(cfg.out, js.str() + "\n");
        }
        return 0;
    }
    if (cfg.resolution >= 2) {
        const std::string path = cfg.out.empty() ? "grid.csv" : cfg.out;
        koopman::export_grid(built.map, built.box, cfg.resolution, path, cfg.threads);
        std::cout << "wrote " << path << "\n";
        return 0;
    }
    throw EngineError(Err::kInvalidArgument, "cli", "linearize needs --point or --res");
}

int cmd_verify(const RunConfig& cfg) {
    auto built = build_system(cfg);
    const auto times = parse_number_list(cfg.times, "--times");
    const auto conj = conjugacy::verify_conjugacy(built.map, built.box, times, cfg.samples,
                                                  cfg.seed, cfg.threads);
    Vec lambdas(built.field.dimension);
    for (int i = 0; i < lambdas.size(); ++i) lambdas[i] = -(i + 1);
    koopman::EigenfunctionSet eig(built.map, lambdas);
    const auto eig_report =
        koopman::verify_eigenfunctions(eig, built.box, times, cfg.samples, cfg.seed, cfg.threads);

    const bool passed = conj.max_residual <= cfg.tol && eig_report.max_defect() <= cfg.tol &&
                        conj.failures.empty() && eig_report.failures.empty();
    std::ostringstream js;
    js.precision(17);
    js << "{\"conjugacy\":" << conj.to_json() << ",\"eigenfunctions\":" << eig_report.to_json()
       << ",\"tol\":" << cfg.tol << ",\"passed\":" << (passed ? "true" : "false") << "}";
    std::cout << js.str() << "\n";
    write_out(cfg.out, js.str() + "\n");
    return passed ? 0 : 1;
}

int cmd_morse(const RunConfig& cfg) {
    auto built = build_system(cfg);
    morse::GenMorseMap gm(built.lyap, built.box, morse::GammaSpec::half_square());
    const auto report = morse::verify_normal_form(gm, 12, std::max(8, cfg.samples / 4), cfg.seed,
                                                  cfg.threads);
    const bool passed = report.max_defect <= cfg.tol;
    std::ostringstream js;
    js.precision(17);
    js << "{\"normal_form\":" << report.to_json() << ",\"tol\":" << cfg.tol
       << ",\"passed\":" << (passed ? "true" : "false") << "}";
    std::cout << js.str() << "\n";
    write_out(cfg.out, js.str() + "\n");
    return passed ? 0 : 1;
}

int cmd_koopman_check(const RunConfig& cfg) {
    auto built = build_system(cfg);
    Vec lambdas(built.field.dimension);
    for (int i = 0; i < lambdas.size(); ++i) lambdas[i] = -(i + 1);
    if (cfg.target.rfind("diag:", 0) == 0) {
        lambdas = to_vec(parse_number_list(cfg.target.substr(5), "--target diag"));
    }
    // The eigenfunction set retargets internally; hand it the minus-identity map.
    auto base = built.map.retarget(conjugacy::HurwitzTarget::minus_identity(built.field.dimension));
    koopman::EigenfunctionSet eig(base, lambdas);
    const auto times = parse_number_list(cfg.times, "--times");
    const auto report =
        koopman::verify_eigenfunctions(eig, built.box, times, cfg.samples, cfg.seed, cfg.threads);
    const bool passed = report.max_defect() <= cfg.tol && report.failures.empty();
    std::ostringstream js;
    js.precision(17);
    js << "{\"eigenfunctions\":" << report.to_json() << ",\"tol\":" << cfg.tol
       << ",\"passed\":" << (passed ? "true" : "false") << "}";
    std::cout << js.str() << "\n";
    write_out(cfg.out, js.str() + "\n");
    return passed ? 0 : 1;
}

int cmd_export_grid(const RunConfig& cfg) {
    auto built = build_system(cfg);
    if (cfg.resolution < 2) {
        throw EngineError(Err::kInvalidArgument, "cli", "--res must be at least 2");
    }
    const std::string path = cfg.out.empty() ? "grid.csv" : cfg.out;
    koopman::export_grid(built.map, built.box, cfg.resolution, path, cfg.threads);
    std::cout << "wrote " << path << "\n";
    return 0;
}

int cmd_zoo_list() {
    for (const auto& [name, description] : zoo::list_zoo()) {
        std::cout << name << " - " << description << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flowlin: globally linearizing coordinates for stable ODE systems"};
    app.set_config("--config", "", "Config file (key = value; command-line flags override it)");
    app.require_subcommand(0, 1);

    RunConfig cfg;
    auto* linearize = app.add_subcommand("linearize", "Build the map and evaluate it");
    add_common_options(linearize, cfg);
    linearize->add_option("--point", cfg.point, "Evaluation point, comma separated");
    linearize->add_option("--res", cfg.resolution, "Grid resolution per axis (writes CSV)");

    auto* verify = app.add_subcommand("verify", "Check the flow conjugacy and eigenfunctions");
    add_common_options(verify, cfg);

    auto* morse_cmd = app.add_subcommand("morse", "Check the radial normal form of V");
    add_common_options(morse_cmd, cfg);

    auto* koopman_cmd =
        app.add_subcommand("koopman-check", "Check the eigenfunction decay relation");
    add_common_options(koopman_cmd, cfg);

    auto* grid = app.add_subcommand("export-grid", "Write a CSV grid of map values");
    add_common_options(grid, cfg);
    grid->add_option("--res", cfg.resolution, "Grid resolution per axis");

    auto* zoo_cmd = app.add_subcommand("zoo", "Example-system registry");
    auto* zoo_list = zoo_cmd->add_subcommand("list", "List available systems");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        emit_diagnostic("UsageError", "cli", e.what());
        return 4;
    }

    try {
        if (app.got_subcommand(linearize)) return cmd_linearize(cfg);
        if (app.got_subcommand(verify)) return cmd_verify(cfg);
        if (app.got_subcommand(morse_cmd)) return cmd_morse(cfg);
        if (app.got_subcommand(koopman_cmd)) return cmd_koopman_check(cfg);
        if (app.got_subcommand(grid)) return cmd_export_grid(cfg);
        if (app.got_subcommand(zoo_cmd)) {
            if (zoo_cmd->got_subcommand(zoo_list) || zoo_cmd->get_subcommands().empty()) {
                return cmd_zoo_list();
            }
            return cmd_zoo_list();
        }
        std::cout << app.help();
        return 0;
    } catch (const EngineError& err) {
        emit_diagnostic(to_string(err.code()), err.module(), err.detail());
        return exit_code(err.code());
    } catch (const std::exception& err) {
        emit_diagnostic("Internal", "cli", err.what());
        return 3;
    }
}
