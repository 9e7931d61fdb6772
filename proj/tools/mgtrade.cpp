// Command-line driver: benchmark, full run, scenario generation.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mgtrade/mgtrade.hpp"

namespace fs = std::filesystem;
using namespace mgtrade;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitUncertified = 3;

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

void write_schedules(const fs::path& dir, const Scenario& sc, const std::vector<Schedule>& schedules,
                     const TradeMatrix* trades) {
    for (std::size_t i = 0; i < sc.size(); ++i) {
        std::ofstream out = open_out(dir / ("schedule_" + sc.microgrids[i].id + ".csv"));
        write_schedule_csv(out, schedules[i], sc.microgrids[i], sc.time, trades ? trades->net(i) : Series{});
    }
}

int cmd_benchmark(const std::string& scenario_path, const fs::path& out_dir) {
    const Scenario sc = load_scenario(scenario_path);
    const std::vector<BenchmarkResult> results = solve_benchmarks(sc);
    fs::create_directories(out_dir);
    std::vector<std::string> ids;
    std::vector<double> costs;
    std::vector<Schedule> schedules;
    for (std::size_t i = 0; i < sc.size(); ++i) {
        ids.push_back(sc.microgrids[i].id);
        costs.push_back(results[i].cost);
        schedules.push_back(results[i].schedule);
    }
    std::ofstream out = open_out(out_dir / "costs.csv");
    write_costs_csv(out, ids, costs);
    write_schedules(out_dir, sc, schedules, nullptr);
    write_costs_csv(std::cout, ids, costs);
    return kExitOk;
}

struct RunArgs {
    std::string scenario;
    std::string out = "out";
    double rho1 = 1.0;
    double rho2 = 1.0;
    double eps1 = 0.0; // 0 selects the scale-aware default
    double eps2 = 0.0;
    int max_iters = 20000;
    std::string rho_schedule = "fixed";
    bool certify = false;
};

int cmd_run(const RunArgs& a) {
    const Scenario sc = load_scenario(a.scenario);
    AlgorithmOptions opts;
    opts.p1.rho1 = a.rho1;
    opts.p2.rho2 = a.rho2;
    if (a.eps1 > 0.0) opts.p1.eps1 = a.eps1;
    if (a.eps2 > 0.0) opts.p2.eps2 = a.eps2;
    opts.p1.max_iters = a.max_iters;
    opts.p2.max_iters = a.max_iters;
    if (a.rho_schedule == "one-over-k") opts.p1.rho_schedule = RhoSchedule::one_over_k;
    else if (a.rho_schedule == "residual-balancing") opts.p1.rho_schedule = RhoSchedule::residual_balancing;

    const RunReport rep = run_algorithm1(sc, opts);
    const fs::path dir(a.out);
    fs::create_directories(dir);
    nlohmann::json doc = report_to_json(rep);
    int code = kExitOk;
    if (a.certify) {
        const CentralizedSolution central = centralized_p1(sc);
        const Certificate cert = certify(rep, central);
        doc["certificate"] = {{"passed", cert.passed},
                              {"objective_gap", cert.objective_gap},
                              {"centralized_objective", central.objective},
                              {"payment_error", cert.payment_error},
                              {"zero_sum_error", cert.zero_sum_error},
                              {"failures", cert.failures}};
        if (!cert.passed) {
            code = kExitUncertified;
            for (const std::string& f : cert.failures) std::cerr << "certification failed: " << f << '\n';
        }
    }
    {
        std::ofstream out = open_out(dir / "report.json");
        out << doc.dump(2) << '\n';
    }
    {
        std::ofstream out = open_out(dir / "table.csv");
        write_table_csv(out, rep);
    }
    {
        std::ofstream out = open_out(dir / "residuals_p1.csv");
        write_residuals_p1(out, rep.p1_residuals);
    }
    {
        std::ofstream out = open_out(dir / "residuals_p2.csv");
        write_residuals_p2(out, rep.p2_residuals);
    }
    write_schedules(dir, sc, rep.schedules, &rep.trades);
    write_table_csv(std::cout, rep);
    for (const std::string& n : rep.notes) std::cerr << "note: " << n << '\n';
    return code;
}

int cmd_gen(const GeneratorOptions& g, const std::string& out_path) {
    const std::string text = emit_scenario(generate_scenario(g));
    if (out_path == "-") {
        std::cout << text;
        return kExitOk;
    }
    const fs::path p(out_path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out = open_out(p);
    out << text;
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Energy trading and payment bargaining among interconnected microgrids"};
    app.require_subcommand(1);

    std::string bench_scenario, bench_out = "out";
    CLI::App* bench = app.add_subcommand("benchmark", "Standalone (no trading) cost of every microgrid");
    bench->add_option("--scenario", bench_scenario, "Scenario JSON file")->required();
    bench->add_option("--out", bench_out, "Output directory");

    RunArgs run_args;
    CLI::App* run = app.add_subcommand("run", "Energy trading and payment bargaining");
    run->add_option("--scenario", run_args.scenario, "Scenario JSON file")->required();
    run->add_option("--out", run_args.out, "Output directory");
    run->add_option("--rho1", run_args.rho1, "Energy-phase penalty (relative to the problem scale)")
        ->check(CLI::PositiveNumber);
    run->add_option("--rho2", run_args.rho2, "Payment-phase penalty (relative to the mean surplus)")
        ->check(CLI::PositiveNumber);
    run->add_option("--eps1", run_args.eps1, "Energy-phase tolerance in kWh (default 1e-4*sqrt(M(M-1)T))")
        ->check(CLI::PositiveNumber);
    run->add_option("--eps2", run_args.eps2, "Payment-phase tolerance (default 1e-6*|M'|)")
        ->check(CLI::PositiveNumber);
    run->add_option("--max-iters", run_args.max_iters, "Iteration limit per phase")->check(CLI::PositiveNumber);
    run->add_option("--rho-schedule", run_args.rho_schedule, "Energy-phase penalty schedule")
        ->check(CLI::IsMember({"fixed", "one-over-k", "residual-balancing"}));
    run->add_flag("--certify", run_args.certify, "Check the result against the centralized solution");

    GeneratorOptions gen_opts;
    std::string gen_out = "-";
    CLI::App* gen = app.add_subcommand("gen", "Write a synthetic scenario");
    gen->add_option("--microgrids", gen_opts.microgrids, "Number of microgrids")->check(CLI::PositiveNumber);
    gen->add_option("--users", gen_opts.users, "Elastic users per microgrid");
    gen->add_option("--seed", gen_opts.seed, "Random seed");
    gen->add_option("--out", gen_out, "Output path, - for stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*bench) return cmd_benchmark(bench_scenario, bench_out);
        if (*run) return cmd_run(run_args);
        if (*gen) return cmd_gen(gen_opts, gen_out);
    } catch (const ParseError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible scenario: " << e.what() << '\n';
        return kExitInput;
    } catch (const ValidationError& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kExitInput;
    } catch (const DimensionError& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kExitInput;
    } catch (const NoBargainError& e) {
        std::cerr << "no bargaining solution: " << e.what() << '\n';
        return kExitUncertified;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUncertified;
    }
    return kExitOk;
}
