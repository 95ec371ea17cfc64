#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "acopf/builders.hpp"
#include "acopf/case_io.hpp"
#include "acopf/export.hpp"
#include "acopf/solvers.hpp"

namespace {

enum ExitCode { kOk = 0, kInfeasible = 1, kInputError = 2, kNumericalFailure = 3 };

int log_level() {
    const char* env = std::getenv("ACOPF_LOG");
    if (!env) return 0;
    const std::string v = env;
    if (v == "debug") return 2;
    if (v == "info") return 1;
    return 0;
}

void log_info(const std::string& msg) {
    if (log_level() >= 1) std::cerr << "info: " << msg << "\n";
}

void log_debug(const std::string& msg) {
    if (log_level() >= 2) std::cerr << "debug: " << msg << "\n";
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

acopf::Grid load_grid(const std::string& path) {
    const std::string text = slurp(path);
    acopf::Grid g;
    if (path.size() >= 2 && path.substr(path.size() - 2) == ".m")
        g = acopf::parse_matpower(text);
    else
        g = acopf::parse_dat(text);
    acopf::require_valid(g);
    log_debug("loaded grid from " + path);
    return g;
}

void write_output(const std::string& out_path, const std::string& content) {
    if (out_path.empty()) {
        std::cout << content;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
    out << content;
    log_info("wrote " + out_path);
}

std::string grid_summary(const acopf::Grid& g) {
    std::ostringstream os;
    os << g.buses.size() << " buses, " << g.branches.size() << " lines, "
       << g.generators.size() << " generators, reference bus " << g.reference_bus();
    return os.str();
}

void print_report(const acopf::Formulation& f, const acopf::ResidualReport& rep, double tol) {
    std::printf("objective: %.12g\n", rep.objective);
    std::printf("max violation: %.6g (tol %.3g)\n", rep.max_violation, tol);
    int shown = 0;
    auto show = [&](const std::string& kind, const std::string& tag, double viol) {
        if (viol <= tol) return;
        std::printf("  violated %-6s %-28s %.6g\n", kind.c_str(), tag.c_str(), viol);
        ++shown;
    };
    for (const auto& c : rep.poly) show("poly", c.tag, c.violation);
    for (const auto& c : rep.soc) show("cone", c.tag, c.violation);
    for (const auto& c : rep.psd) show("psd", c.tag, c.violation);
    for (const auto& b : rep.bounds) show("bound", b.name, b.violation);
    if (shown == 0) std::printf("feasible: all %zu constraints within tolerance\n",
                                f.polys.size() + f.socs.size() + f.psds.size());
}

int run(int argc, char** argv) {
    CLI::App app{"ACOPF formulation toolkit"};
    app.require_subcommand(1);

    std::string case_path, form = "siv", out_path, point_path;
    double tol = 1e-6;
    unsigned seed = 0;
    int multistart = 10;
    bool want_lb = false, want_ub = false, want_sdpa = false;

    auto add_case = [&](CLI::App* cmd) {
        cmd->add_option("case", case_path, "grid case file (.dat or .m)")->required();
    };

    CLI::App* parse = app.add_subcommand("parse", "validate a case file and print a summary");
    add_case(parse);

    CLI::App* build = app.add_subcommand("build", "build a formulation and write model JSON");
    add_case(build);
    build->add_option("--form", form, "formulation kind");
    build->add_option("--out", out_path, "output path (default stdout)");

    CLI::App* check = app.add_subcommand("check", "evaluate a point against a formulation");
    add_case(check);
    check->add_option("--form", form, "formulation kind");
    check->add_option("--point", point_path, "point JSON file")->required();
    check->add_option("--tol", tol, "feasibility tolerance");

    CLI::App* solve = app.add_subcommand("solve", "compute lower/upper bounds");
    add_case(solve);
    solve->add_flag("--lb", want_lb, "run the conic lower-bound solver");
    solve->add_flag("--ub", want_ub, "run the local upper-bound solver");
    solve->add_option("--tol", tol, "feasibility tolerance");
    solve->add_option("--seed", seed, "random seed for multistart");
    solve->add_option("--multistart", multistart, "number of local-solver starts");

    CLI::App* exp = app.add_subcommand("export", "export a formulation to solver formats");
    add_case(exp);
    exp->add_option("--form", form, "formulation kind");
    exp->add_flag("--sdpa", want_sdpa, "write sparse SDPA text");
    exp->add_option("--out", out_path, "output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kInputError;
    }

    const acopf::Grid grid = load_grid(case_path);

    if (parse->parsed()) {
        std::printf("%s\n", grid_summary(grid).c_str());
        return kOk;
    }

    if (build->parsed()) {
        const acopf::Formulation f = acopf::build_formulation(grid, form);
        write_output(out_path, acopf::export_json(f));
        return kOk;
    }

    if (check->parsed()) {
        const acopf::Formulation f = acopf::build_formulation(grid, form);
        const acopf::Point pt = acopf::read_point_json(slurp(point_path));
        for (const auto& [name, _] : pt)
            if (!f.has_var(name))
                throw std::runtime_error("point names unknown variable '" + name + "'");
        const acopf::ResidualReport rep = acopf::evaluate(f, pt);
        print_report(f, rep, tol);
        return rep.max_violation <= tol ? kOk : kInfeasible;
    }

    if (solve->parsed()) {
        if (!want_lb && !want_ub) throw std::runtime_error("solve needs --lb and/or --ub");
        acopf::SolveOptions opts;
        opts.tol_feas = tol;
        opts.rng_seed = seed;
        opts.multistart_count = multistart;
        acopf::SolveResult lb, ub;
        std::printf("%-6s %-18s %16s %14s %6s\n", "bound", "status", "objective",
                    "max_violation", "iters");
        if (want_lb) {
            lb = acopf::solve_jabr_barrier(grid, opts);
            std::printf("%-6s %-18s %16.8f %14.6g %6d\n", "lower", to_string(lb.status),
                        lb.objective, lb.max_violation, lb.iterations);
        }
        if (want_ub) {
            ub = acopf::solve_polar_local(grid, opts);
            std::printf("%-6s %-18s %16.8f %14.6g %6d\n", "upper", to_string(ub.status),
                        ub.objective, ub.max_violation, ub.iterations);
        }
        if (want_lb && want_ub)
            std::printf("gap: %.8f\n", acopf::optimality_gap(lb, ub));
        auto bad = [](const acopf::SolveResult& r) {
            return r.status == acopf::SolveStatus::numerical_failure ||
                   r.status == acopf::SolveStatus::iteration_limit;
        };
        if ((want_lb && bad(lb)) || (want_ub && bad(ub))) return kNumericalFailure;
        if ((want_lb && lb.status == acopf::SolveStatus::infeasible_detected) ||
            (want_ub && ub.status == acopf::SolveStatus::infeasible_detected))
            return kInfeasible;
        return kOk;
    }

    if (exp->parsed()) {
        const acopf::Formulation f = acopf::build_formulation(grid, form);
        write_output(out_path, want_sdpa ? acopf::export_sdpa(f) : acopf::export_json(f));
        return kOk;
    }

    return kInputError;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const acopf::SyntaxError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInputError;
    }
}
