#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lsavg/pipeline.hpp"

namespace {

struct Options {
    std::string problem;
    std::string eps;
    int order = 0;
    std::string out = "lsavg-out";
    std::string format = "csv";
    double tol = 0.0;
    long long seed = -1;
};

void add_flags(CLI::App* sub, Options& o) {
    sub->add_option("--problem", o.problem, "problem file")->required();
    sub->add_option("--eps", o.eps, "eps grid: comma list or logrange(lo, hi, per_decade)");
    sub->add_option("--order", o.order, "truncation order k");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--format", o.format, "csv, svg or text")->check(CLI::IsMember({"csv", "svg", "text"}));
    sub->add_option("--tol", o.tol, "branch residual tolerance");
    sub->add_option("--seed", o.seed, "multi-start seed");
}

int run(const std::string& cmd, const Options& o) {
    using namespace lsavg;
    Problem P = load_problem(o.problem);
    if (!o.eps.empty()) {
        P.run.eps = parse_eps(o.eps);
        P.run.eps_text = o.eps;
    }
    if (o.order != 0) P.run.order = o.order;
    if (o.tol != 0.0) {
        if (!(o.tol > 0)) throw ValidationError("--tol must be positive");
        P.run.tol = o.tol;
    }
    if (o.seed >= 0) P.run.seed = static_cast<unsigned>(o.seed);

    std::vector<std::string> stages = cmd == "pipeline" ? P.run.stages : std::vector<std::string>{cmd};
    if (stages.empty()) stages = known_stages();
    RunReport R = run_pipeline(P, stages);
    emit(R, o.format, o.out);
    for (const auto& s : R.stages) {
        std::cout << s.name << ": " << s.status;
        if (!s.message.empty()) std::cout << " (" << s.message << ")";
        std::cout << '\n';
    }
    return R.passed() ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Averaging and Lyapunov-Schmidt reduction for periodic perturbations"};
    app.require_subcommand(1);
    Options o;
    const std::vector<std::pair<std::string, std::string>> cmds = {
        {"avg", "averaged functions on the chart"},
        {"reduce", "bifurcation functions"},
        {"solve", "branch of zeros a_eps"},
        {"verify", "refined periodic orbits and Floquet data"},
        {"degree", "Brouwer degree certificates"},
        {"pipeline", "stages listed in the problem file"},
    };
    for (const auto& [name, help] : cmds) add_flags(app.add_subcommand(name, help), o);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    const std::string cmd = app.get_subcommands().front()->get_name();
    try {
        return run(cmd, o);
    } catch (const lsavg::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
