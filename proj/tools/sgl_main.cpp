#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "sgl/sgl.hpp"

namespace {

struct DataOptions {
    std::string x_path, y_path, groups_path;
    bool synthetic = false;
    sgl::SyntheticConfig synth;
};

struct SolveOptions {
    double tau = 0.2;
    double eps = 1e-8;
    long max_passes = 100000;
    long fce = 10;
    std::string rule = "gap";
    bool strict = false;
    std::string out_path;
};

void add_data_options(CLI::App* cmd, DataOptions& data)
{
    auto* x = cmd->add_option("--x", data.x_path, "Design matrix file (CSV or SGLB binary)");
    auto* y = cmd->add_option("--y", data.y_path, "Response file, one value per line");
    auto* g = cmd->add_option("--groups", data.groups_path,
                              "Groups file: indices per line, optional '| weight'");
    auto* s = cmd->add_flag("--synthetic", data.synthetic, "Generate the benchmark design instead");
    cmd->add_option("--n", data.synth.n, "Synthetic rows")->needs(s);
    cmd->add_option("--p", data.synth.p, "Synthetic features")->needs(s);
    cmd->add_option("--group-size", data.synth.group_size, "Synthetic group size")->needs(s);
    cmd->add_option("--rho", data.synth.rho, "Column correlation decay")->needs(s);
    cmd->add_option("--gamma1", data.synth.gamma1, "Active groups")->needs(s);
    cmd->add_option("--gamma2", data.synth.gamma2, "Active coordinates per group")->needs(s);
    cmd->add_option("--noise-scale", data.synth.noise_scale, "Noise standard deviation")->needs(s);
    cmd->add_option("--seed", data.synth.seed, "Generator seed");
    x->needs(y)->needs(g);
    y->needs(x);
    g->needs(x);
    s->excludes(x);
}

void add_solver_options(CLI::App* cmd, SolveOptions& opt)
{
    cmd->add_option("--tau", opt.tau, "l1 mixing weight in [0,1]")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--eps", opt.eps, "Duality-gap tolerance");
    cmd->add_option("--max-passes", opt.max_passes, "Pass budget per lambda");
    cmd->add_option("--fce", opt.fce, "Passes between gap evaluations");
    cmd->add_option("--rule", opt.rule, "Screening rule")
        ->check(CLI::IsMember({"gap", "static", "dynamic", "dst3", "none"}));
    cmd->add_flag("--strict", opt.strict, "Exit nonzero when any point fails to converge");
    cmd->add_option("--out", opt.out_path, "Write the JSON record here instead of stdout");
}

struct LoadedData {
    sgl::Problem problem;
    sgl::GroupPartition partition;
    Eigen::VectorXd weights;
    nlohmann::json echo;
};

LoadedData load_data(const DataOptions& data)
{
    if (data.synthetic) {
        auto gen = sgl::generate_synthetic(data.synth);
        nlohmann::json echo{{"source", "synthetic"},
                            {"n", data.synth.n},
                            {"p", data.synth.p},
                            {"group_size", data.synth.group_size},
                            {"rho", data.synth.rho},
                            {"gamma1", data.synth.gamma1},
                            {"gamma2", data.synth.gamma2},
                            {"noise_scale", data.synth.noise_scale},
                            {"seed", data.synth.seed}};
        Eigen::VectorXd weights = sgl::sqrt_size_weights(gen.partition);
        return LoadedData{std::move(gen.problem), std::move(gen.partition), std::move(weights),
                          std::move(echo)};
    }
    if (data.x_path.empty())
        throw CLI::ValidationError("data", "either --synthetic or --x/--y/--groups is required");
    auto loaded = sgl::load_problem(data.x_path, data.y_path, data.groups_path);
    nlohmann::json echo{{"source", "files"},
                        {"x", data.x_path},
                        {"y", data.y_path},
                        {"groups", data.groups_path}};
    return LoadedData{std::move(loaded.problem), std::move(loaded.partition),
                      std::move(loaded.weights), std::move(echo)};
}

sgl::SolverConfig solver_config(const SolveOptions& opt, double eps)
{
    sgl::SolverConfig config;
    config.tolerance = eps;
    config.max_passes = opt.max_passes;
    config.gap_check_every = opt.fce;
    config.rule = sgl::rule_from_name(opt.rule);
    return config;
}

void emit_record(const sgl::RunRecord& record, const std::string& out_path)
{
    const std::string text = nlohmann::json(record).dump(2);
    if (out_path.empty()) {
        std::cout << text << '\n';
        return;
    }
    std::ofstream os(out_path);
    if (!os)
        throw std::runtime_error("cannot open output file " + out_path);
    os << text << '\n';
    if (!os)
        throw std::runtime_error("write failed for output file " + out_path);
}

int finish(const sgl::RunRecord& record, const SolveOptions& opt)
{
    emit_record(record, opt.out_path);
    if (!opt.strict)
        return 0;
    for (const auto& run : record.runs)
        if (!run.all_converged)
            return 3;
    return 0;
}

int run_gen_data(const sgl::SyntheticConfig& synth, const std::string& out_dir,
                 const std::string& format)
{
    const auto data = sgl::generate_synthetic(synth);
    std::filesystem::create_directories(out_dir);
    const auto dir = std::filesystem::path(out_dir);
    const std::string x_name = format == "binary" ? "X.sglb" : "X.csv";
    if (format == "binary")
        sgl::save_matrix_binary((dir / x_name).string(), data.problem.X());
    else
        sgl::save_matrix_csv((dir / x_name).string(), data.problem.X());
    sgl::save_vector_csv((dir / "y.csv").string(), data.problem.y());
    sgl::save_groups((dir / "groups.txt").string(), data.partition,
                     sgl::sqrt_size_weights(data.partition));

    nlohmann::json out{{"command", "gen-data"},
                       {"files",
                        {(dir / x_name).string(), (dir / "y.csv").string(),
                         (dir / "groups.txt").string()}},
                       {"config",
                        {{"n", synth.n},
                         {"p", synth.p},
                         {"group_size", synth.group_size},
                         {"rho", synth.rho},
                         {"gamma1", synth.gamma1},
                         {"gamma2", synth.gamma2},
                         {"noise_scale", synth.noise_scale},
                         {"seed", synth.seed},
                         {"format", format}}}};
    std::cout << out.dump(2) << '\n';
    return 0;
}

long bench_thread_cap()
{
    if (const char* env = std::getenv("SGL_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1)
            return v;
    }
    return 1;
}

void print_bench_table(const sgl::RunRecord& record)
{
    std::ostringstream os;
    os << "  rule      eps        time[s]   feat.frac  group.frac  converged\n";
    for (const auto& run : record.runs) {
        char line[160];
        std::snprintf(line, sizeof(line), "  %-9s %-9.1e %9.3f   %9.4f  %9.4f   %s\n",
                      run.rule.c_str(), run.eps, run.total_wall_time_sec,
                      run.mean_active_feature_fraction, run.mean_active_group_fraction,
                      run.all_converged ? "yes" : "no");
        os << line;
    }
    std::cerr << os.str();
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Sparse-Group Lasso solver with gap-based safe screening"};
    app.require_subcommand(1);

    // gen-data
    sgl::SyntheticConfig gen_config;
    std::string gen_out = ".";
    std::string gen_format = "csv";
    auto* gen = app.add_subcommand("gen-data", "Write a synthetic benchmark problem to disk");
    gen->add_option("--n", gen_config.n, "Rows");
    gen->add_option("--p", gen_config.p, "Features");
    gen->add_option("--group-size", gen_config.group_size, "Group size");
    gen->add_option("--rho", gen_config.rho, "Column correlation decay");
    gen->add_option("--gamma1", gen_config.gamma1, "Active groups");
    gen->add_option("--gamma2", gen_config.gamma2, "Active coordinates per group");
    gen->add_option("--noise-scale", gen_config.noise_scale, "Noise standard deviation");
    gen->add_option("--seed", gen_config.seed, "Generator seed");
    gen->add_option("--out", gen_out, "Output directory")->required();
    gen->add_option("--format", gen_format, "Design matrix format")
        ->check(CLI::IsMember({"csv", "binary"}));

    // solve
    DataOptions solve_data;
    SolveOptions solve_opt;
    double solve_lambda = 0.0, solve_ratio = 0.0;
    auto* solve_cmd = app.add_subcommand("solve", "Solve a single regularization level");
    add_data_options(solve_cmd, solve_data);
    add_solver_options(solve_cmd, solve_opt);
    auto* lam = solve_cmd->add_option("--lambda", solve_lambda, "Regularization level");
    auto* rat = solve_cmd->add_option("--lambda-ratio", solve_ratio,
                                      "Regularization level as a fraction of lambda_max");
    lam->excludes(rat);

    // path
    DataOptions path_data;
    SolveOptions path_opt;
    long path_T = 100;
    double path_delta = 3.0;
    auto* path_cmd = app.add_subcommand("path", "Solve a warm-started regularization path");
    add_data_options(path_cmd, path_data);
    add_solver_options(path_cmd, path_opt);
    path_cmd->add_option("--T", path_T, "Number of grid points");
    path_cmd->add_option("--delta", path_delta, "Grid spans lambda_max..lambda_max*10^-delta");

    // bench
    DataOptions bench_data;
    SolveOptions bench_opt;
    long bench_T = 100;
    double bench_delta = 3.0;
    std::vector<double> bench_eps = {1e-4, 1e-6, 1e-8};
    std::vector<std::string> bench_rules = {"none", "static", "dynamic", "dst3", "gap"};
    auto* bench_cmd = app.add_subcommand("bench", "Compare screening rules on the same path");
    add_data_options(bench_cmd, bench_data);
    add_solver_options(bench_cmd, bench_opt);
    bench_cmd->add_option("--T", bench_T, "Number of grid points");
    bench_cmd->add_option("--delta", bench_delta, "Grid span");
    bench_cmd->add_option("--eps-list", bench_eps, "Gap tolerances to benchmark")->delimiter(',');
    bench_cmd->add_option("--rules", bench_rules, "Rules to benchmark")
        ->delimiter(',')
        ->check(CLI::IsMember({"gap", "static", "dynamic", "dst3", "none"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed())
            return run_gen_data(gen_config, gen_out, gen_format);

        if (solve_cmd->parsed()) {
            auto data = load_data(solve_data);
            sgl::PenaltyParams penalty(solve_opt.tau, data.weights);
            const double lmax = sgl::lambda_max(data.problem, penalty, data.partition);
            double lambda = solve_lambda;
            if (rat->count() > 0)
                lambda = solve_ratio * lmax;
            if (!(lambda > 0.0))
                throw CLI::ValidationError("--lambda",
                                           "a positive --lambda or --lambda-ratio is required");

            sgl::PathConfig pc;
            pc.explicit_lambdas = {lambda};
            const auto path = sgl::solve_path(data.problem, penalty, data.partition, pc,
                                              solver_config(solve_opt, solve_opt.eps));
            sgl::RunRecord record;
            record.command = "solve";
            record.lambda_max = lmax;
            record.config = {{"tau", solve_opt.tau},       {"lambda", lambda},
                             {"eps", solve_opt.eps},       {"max_passes", solve_opt.max_passes},
                             {"fce", solve_opt.fce},       {"rule", solve_opt.rule},
                             {"strict", solve_opt.strict}, {"data", data.echo}};
            record.runs.push_back(
                sgl::make_rule_record(sgl::rule_from_name(solve_opt.rule), solve_opt.eps, path));
            return finish(record, solve_opt);
        }

        if (path_cmd->parsed()) {
            auto data = load_data(path_data);
            sgl::PenaltyParams penalty(path_opt.tau, data.weights);
            sgl::PathConfig pc;
            pc.num_points = path_T;
            pc.delta = path_delta;
            const auto path = sgl::solve_path(data.problem, penalty, data.partition, pc,
                                              solver_config(path_opt, path_opt.eps));
            sgl::RunRecord record;
            record.command = "path";
            record.lambda_max = path.lambda_max;
            record.config = {{"tau", path_opt.tau},       {"T", path_T},
                             {"delta", path_delta},       {"eps", path_opt.eps},
                             {"max_passes", path_opt.max_passes},
                             {"fce", path_opt.fce},       {"rule", path_opt.rule},
                             {"strict", path_opt.strict}, {"data", data.echo}};
            record.runs.push_back(
                sgl::make_rule_record(sgl::rule_from_name(path_opt.rule), path_opt.eps, path));
            return finish(record, path_opt);
        }

        // bench
        auto data = load_data(bench_data);
        sgl::PenaltyParams penalty(bench_opt.tau, data.weights);
        sgl::PathConfig pc;
        pc.num_points = bench_T;
        pc.delta = bench_delta;

        struct Task {
            std::string rule;
            double eps;
        };
        std::vector<Task> tasks;
        for (double eps : bench_eps)
            for (const auto& rule : bench_rules)
                tasks.push_back({rule, eps});

        std::vector<sgl::RuleRunRecord> results(tasks.size());
        const long threads =
            std::min<long>(bench_thread_cap(), static_cast<long>(tasks.size()));
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= tasks.size())
                    return;
                auto config = solver_config(bench_opt, tasks[i].eps);
                config.rule = sgl::rule_from_name(tasks[i].rule);
                const auto path = sgl::solve_path(data.problem, penalty, data.partition, pc,
                                                  config);
                results[i] = sgl::make_rule_record(config.rule, tasks[i].eps, path);
            }
        };
        if (threads <= 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (long t = 0; t < threads; ++t)
                pool.emplace_back(worker);
            for (auto& th : pool)
                th.join();
        }

        sgl::RunRecord record;
        record.command = "bench";
        record.lambda_max = sgl::lambda_max(data.problem, penalty, data.partition);
        record.config = {{"tau", bench_opt.tau},
                         {"T", bench_T},
                         {"delta", bench_delta},
                         {"eps_list", bench_eps},
                         {"rules", bench_rules},
                         {"max_passes", bench_opt.max_passes},
                         {"fce", bench_opt.fce},
                         {"strict", bench_opt.strict},
                         {"threads", threads},
                         {"data", data.echo}};
        record.runs = std::move(results);
        print_bench_table(record);
        return finish(record, bench_opt);
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "sgl: " << e.what() << '\n';
        return 2;
    }
}
