// pderm: communication-efficient distributed primal-dual training for
// regularized ERM, with pluggable local solvers.
//
// Subcommands: train, sweep-h, sweep-sigma, shard, rates, verify.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "pderm/engine.hpp"
#include "pderm/kernels.hpp"
#include "pderm/metrics.hpp"
#include "pderm/rates.hpp"
#include "pderm/verify.hpp"

namespace {

using namespace pderm;

struct TrainFlags {
    std::string data;
    std::string loss = "quadratic";
    double lambda = 0.01;
    std::int64_t machines = 1;
    std::string nu = "add";
    std::string sigma_prime = "auto";
    std::string solver = "cd";
    std::int64_t local_iters = 100;
    std::int64_t rounds = 50;
    double gap_tol = 0.0;
    std::int64_t gap_every = 1;
    std::string transport = "inproc";
    std::string listen;
    std::string connect;
    std::int64_t machine_id = -1;
    std::uint64_t seed = 0;
    std::string metrics;
    std::string partition = "random";
    std::int64_t dim = 0;
    std::int64_t global_n = 0;
    std::int64_t lbfgs_memory = 0;
    double ls_init = 1.0, ls_shrink = 0.5, ls_c = 1e-4;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f, bool with_solver_budget = true) {
    cmd->add_option("--data", f.data, "dataset in LIBSVM format")->required();
    cmd->add_option("--loss", f.loss, "quadratic|hinge|sqhinge|logistic");
    cmd->add_option("--lambda", f.lambda, "regularization parameter");
    cmd->add_option("--machines", f.machines, "number of machines K");
    cmd->add_option("--nu", f.nu, "aggregation: add (nu=1), avg (nu=1/K), or a value in (0,1]");
    cmd->add_option("--sigma-prime", f.sigma_prime, "subproblem parameter: auto (= nu K) or a value");
    cmd->add_option("--solver", f.solver, "cd|gd|cg|lbfgs|bb|fista");
    if (with_solver_budget)
        cmd->add_option("--local-iters", f.local_iters, "inner iterations H per round");
    cmd->add_option("--rounds", f.rounds, "outer rounds T");
    cmd->add_option("--gap-tol", f.gap_tol, "stop when the duality gap falls below this");
    cmd->add_option("--gap-every", f.gap_every, "evaluate the gap every R rounds");
    cmd->add_option("--transport", f.transport, "inproc|tcp");
    cmd->add_option("--listen", f.listen, "tcp coordinator listen address host:port");
    cmd->add_option("--connect", f.connect, "tcp worker coordinator address host:port");
    cmd->add_option("--machine-id", f.machine_id, "tcp worker machine id in [0,K)");
    cmd->add_option("--seed", f.seed, "run seed");
    cmd->add_option("--metrics", f.metrics, "metrics CSV output path");
    cmd->add_option("--partition", f.partition, "contiguous|round-robin|random");
    cmd->add_option("--dim", f.dim, "force the feature dimension d");
    cmd->add_option("--global-n", f.global_n, "total example count (tcp worker)");
    cmd->add_option("--lbfgs-memory", f.lbfgs_memory, "L-BFGS memory (default: H)");
    cmd->add_option("--ls-init", f.ls_init, "line-search initial step (gd)");
    cmd->add_option("--ls-shrink", f.ls_shrink, "line-search shrink factor (gd)");
    cmd->add_option("--ls-c", f.ls_c, "line-search sufficient decrease (gd)");
}

double resolve_nu(const std::string& s, std::int64_t K) {
    if (s == "add") return 1.0;
    if (s == "avg") return 1.0 / double(K);
    double nu;
    try {
        nu = std::stod(s);
    } catch (...) {
        throw CLI::ValidationError("--nu must be add, avg, or a number");
    }
    if (!(nu > 0.0) || nu > 1.0) throw CLI::ValidationError("--nu must lie in (0,1]");
    return nu;
}

RunConfig make_run_config(const TrainFlags& f, std::int64_t K) {
    RunConfig rc;
    rc.nu = resolve_nu(f.nu, K);
    if (f.sigma_prime == "auto") {
        rc.sigma_prime = 0.0;  // engine resolves to nu K
    } else {
        try {
            rc.sigma_prime = std::stod(f.sigma_prime);
        } catch (...) {
            throw CLI::ValidationError("--sigma-prime must be auto or a number");
        }
        if (!(rc.sigma_prime > 0.0))
            throw CLI::ValidationError("--sigma-prime must be positive");
        const double safe = rc.nu * double(K);
        if (rc.sigma_prime < safe - 1e-12) {
            std::cerr << "WARNING: sigma' = " << rc.sigma_prime
                      << " is below the safe value nu*K = " << safe
                      << "; the run may diverge\n";
        }
    }
    rc.rounds = f.rounds;
    rc.gap_tol = f.gap_tol;
    rc.gap_every = f.gap_every;
    rc.seed = f.seed;
    rc.solver.id = parse_solver_id(f.solver);
    rc.solver.local_iters = f.local_iters;
    rc.solver.memory = f.lbfgs_memory;
    rc.solver.ls_initial_step = f.ls_init;
    rc.solver.ls_shrink = f.ls_shrink;
    rc.solver.ls_sufficient_decrease = f.ls_c;
    rc.solver.seed = f.seed;
    return rc;
}

// the metrics CSV is append-only while the run is going: header first, then
// one flushed row per measured round
struct StreamingMetrics {
    std::ofstream file;
    RowSink sink;

    explicit StreamingMetrics(const std::string& path) {
        if (path.empty()) return;
        file.open(path);
        if (!file) throw std::runtime_error("cannot open " + path + " for writing");
        write_metrics_header(file);
        file.flush();
        sink = [this](const RoundMetrics& row) {
            write_metrics_row(file, row);
            file.flush();
        };
    }
};

int finish_run(const RunResult& result) {
    const double final_gap = result.trace.empty() ? std::nan("") : result.trace.back().gap;
    std::printf("final_gap=%.17g rounds=%lld status=%s\n", final_gap,
                static_cast<long long>(result.rounds_completed),
                run_status_name(result.status));
    return result.status == RunStatus::diverged ? 2 : 0;
}

int cmd_train(const TrainFlags& f) {
    if (f.transport == "tcp" && !f.connect.empty()) {
        // worker process: owns one shard, needs the global sizes from flags
        if (f.machine_id < 0 || f.machine_id >= f.machines)
            throw CLI::ValidationError("tcp worker needs --machine-id in [0,K)");
        if (f.global_n <= 0)
            throw CLI::ValidationError("tcp worker needs --global-n (total example count)");
        if (f.dim <= 0) throw CLI::ValidationError("tcp worker needs --dim (global d)");
        Dataset shard_data = normalize_examples(parse_libsvm_file(f.data, f.dim));
        const Loss loss = parse_loss(f.loss);
        validate_labels(loss, {shard_data.labels.data(), shard_data.labels.size()});
        LocalShard shard =
            make_local_shard(std::move(shard_data), loss, f.lambda, f.global_n, f.machines);
        RunConfig rc = make_run_config(f, f.machines);
        run_tcp_worker(shard, rc, f.connect, f.machine_id);
        std::printf("worker %lld done\n", static_cast<long long>(f.machine_id));
        return 0;
    }

    Dataset ds = normalize_examples(parse_libsvm_file(f.data, f.dim));
    ProblemSpec spec(std::move(ds), parse_loss(f.loss), f.lambda);
    const Partition part = make_partition(spec.n(), f.machines,
                                          parse_partition_strategy(f.partition), f.seed);
    RunConfig rc = make_run_config(f, f.machines);

    StreamingMetrics metrics(f.metrics);
    if (f.transport == "tcp") {
        if (f.listen.empty())
            throw CLI::ValidationError("tcp coordinator needs --listen host:port");
        return finish_run(run_tcp_coordinator(spec, part, rc, f.listen, metrics.sink));
    }
    if (f.transport != "inproc")
        throw CLI::ValidationError("--transport must be inproc or tcp");
    return finish_run(
        run(spec, part, rc, default_solver_factory(rc.solver, spec.loss), {}, metrics.sink));
}

std::vector<double> parse_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stod(tok));
    }
    return out;
}

std::string metrics_path_with_tag(const std::string& base, const std::string& tag) {
    if (base.empty()) return {};
    const auto dot = base.rfind(".csv");
    if (dot != std::string::npos && dot == base.size() - 4)
        return base.substr(0, dot) + "." + tag + ".csv";
    return base + "." + tag + ".csv";
}

// first measured round whose gap reaches the target, or -1
std::int64_t rounds_to_gap(const std::vector<RoundMetrics>& trace, double target) {
    for (const auto& row : trace)
        if (row.gap <= target) return row.round;
    return -1;
}

int cmd_sweep_h(const TrainFlags& f, const std::string& h_list) {
    const auto hs = parse_list(h_list);
    if (hs.empty()) throw CLI::ValidationError("--h-list must name at least one H");
    Dataset ds = normalize_examples(parse_libsvm_file(f.data, f.dim));
    ProblemSpec spec(std::move(ds), parse_loss(f.loss), f.lambda);
    const Partition part = make_partition(spec.n(), f.machines,
                                          parse_partition_strategy(f.partition), f.seed);
    std::printf("H,rounds_to_gap,elapsed_ms,final_gap,status\n");
    for (double hval : hs) {
        TrainFlags fh = f;
        fh.local_iters = std::int64_t(hval);
        RunConfig rc = make_run_config(fh, f.machines);
        StreamingMetrics metrics(
            metrics_path_with_tag(f.metrics, "h" + std::to_string(fh.local_iters)));
        const auto result =
            run(spec, part, rc, default_solver_factory(rc.solver, spec.loss), {}, metrics.sink);
        const double elapsed = result.trace.empty() ? 0.0 : result.trace.back().elapsed_ms;
        const double final_gap =
            result.trace.empty() ? std::nan("") : result.trace.back().gap;
        std::printf("%lld,%lld,%.3f,%.17g,%s\n", static_cast<long long>(fh.local_iters),
                    static_cast<long long>(rounds_to_gap(result.trace, f.gap_tol)), elapsed,
                    final_gap, run_status_name(result.status));
    }
    return 0;
}

int cmd_sweep_sigma(const TrainFlags& f, const std::string& sigma_list) {
    const auto sigmas = parse_list(sigma_list);
    if (sigmas.empty()) throw CLI::ValidationError("--sigma-list must name at least one value");
    Dataset ds = normalize_examples(parse_libsvm_file(f.data, f.dim));
    ProblemSpec spec(std::move(ds), parse_loss(f.loss), f.lambda);
    const Partition part = make_partition(spec.n(), f.machines,
                                          parse_partition_strategy(f.partition), f.seed);
    std::printf("sigma_prime,rounds_to_gap,final_gap,status\n");
    for (double sp : sigmas) {
        TrainFlags fs = f;
        fs.sigma_prime = std::to_string(sp);
        RunConfig rc = make_run_config(fs, f.machines);
        std::ostringstream tag;
        tag << "sigma" << sp;
        StreamingMetrics metrics(metrics_path_with_tag(f.metrics, tag.str()));
        const auto result =
            run(spec, part, rc, default_solver_factory(rc.solver, spec.loss), {}, metrics.sink);
        const double final_gap =
            result.trace.empty() ? std::nan("") : result.trace.back().gap;
        std::printf("%.6g,%lld,%.17g,%s\n", sp,
                    static_cast<long long>(rounds_to_gap(result.trace, f.gap_tol)), final_gap,
                    run_status_name(result.status));
    }
    return 0;
}

int cmd_shard(const std::string& data, std::int64_t machines, const std::string& strategy,
              std::uint64_t seed, std::string out_base, std::int64_t dim) {
    Dataset ds = normalize_examples(parse_libsvm_file(data, dim));
    const Partition part =
        make_partition(ds.n, machines, parse_partition_strategy(strategy), seed);
    if (out_base.empty()) out_base = data;
    for (std::int64_t k = 0; k < machines; ++k) {
        const Dataset shard = extract_shard(ds, part, k);
        const std::string path = out_base + ".part" + std::to_string(k);
        serialize_libsvm_file(shard, path);
        std::printf("%s: %lld examples\n", path.c_str(), static_cast<long long>(shard.n));
    }
    std::printf("global_n=%lld dim=%lld\n", static_cast<long long>(ds.n),
                static_cast<long long>(ds.d));
    return 0;
}

int cmd_rates(double lambda, double gamma, double n, double sigma_max, double sigma_sum,
              double sigma_prime, double nu, double theta, double lipschitz,
              double initial_subopt, double eps_d, double eps_gap, const std::string& loss_str,
              double machines) {
    RateInputs in;
    in.lambda = lambda;
    in.gamma = gamma;
    in.n = n;
    in.sigma_max = sigma_max;
    in.sigma_sum = sigma_sum;
    in.sigma_prime = sigma_prime;
    in.nu = nu;
    in.theta = theta;
    in.lipschitz = lipschitz;
    in.initial_dual_subopt = initial_subopt;
    in.epsilon_d = eps_d;
    in.epsilon_gap = eps_gap;

    bool want_lipschitz = lipschitz > 0.0;
    if (!loss_str.empty()) {
        const Loss loss = parse_loss(loss_str);
        const auto c = loss_constants(loss);
        if (c.has_gamma && in.gamma <= 0.0) in.gamma = c.gamma;
        if (c.has_lipschitz && in.lipschitz <= 0.0) {
            in.lipschitz = c.lipschitz;
            want_lipschitz = true;
        }
        if (!c.has_lipschitz && lipschitz > 0.0)
            throw CLI::ValidationError(loss_str +
                                       " loss is outside the Lipschitz rate's assumptions");
    }

    if (in.gamma > 0.0) {
        std::printf("smooth_leading_factor=%.17g\n", smooth_leading_factor(in));
        std::printf("smooth_rounds_dual=%.17g\n", smooth_rounds_dual(in));
        std::printf("smooth_rounds_gap=%.17g\n", smooth_rounds_gap(in));
        if (machines >= 1.0) {
            std::printf("adding_gap_rounds=%.17g\n",
                        smooth_gap_rounds_adding(in.lambda, in.gamma, in.n, in.sigma_max,
                                                 machines, in.theta, in.epsilon_gap));
            std::printf("averaging_gap_rounds=%.17g\n",
                        smooth_gap_rounds_averaging(in.lambda, in.gamma, in.n, in.sigma_max,
                                                    machines, in.theta, in.epsilon_gap));
        }
    }
    if (want_lipschitz) {
        const auto lr = lipschitz_rounds(in);
        std::printf("lipschitz_t0=%.17g\n", lr.t0);
        std::printf("lipschitz_T0=%.17g\n", lr.rounds_to_tail);
        std::printf("lipschitz_T=%.17g\n", lr.rounds);
    }
    if (!(in.gamma > 0.0) && !want_lipschitz)
        throw CLI::ValidationError("need --gamma (or a smooth --loss) or --lipschitz");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"distributed primal-dual ERM trainer"};
    app.require_subcommand(1);

    TrainFlags tf;
    auto* train = app.add_subcommand("train", "run the distributed training loop");
    add_train_flags(train, tf);

    TrainFlags hf;
    std::string h_list;
    auto* sweep_h = app.add_subcommand("sweep-h", "train across local iteration budgets");
    add_train_flags(sweep_h, hf, /*with_solver_budget=*/false);
    sweep_h->add_option("--h-list", h_list, "comma-separated H values")->required();

    TrainFlags sf;
    std::string sigma_list;
    auto* sweep_sigma =
        app.add_subcommand("sweep-sigma", "train across subproblem parameters sigma'");
    add_train_flags(sweep_sigma, sf);
    sweep_sigma->add_option("--sigma-list", sigma_list, "comma-separated sigma' values")
        ->required();

    std::string shard_data, shard_strategy = "random", shard_out;
    std::int64_t shard_machines = 1, shard_dim = 0;
    std::uint64_t shard_seed = 0;
    auto* shard = app.add_subcommand("shard", "split a dataset into per-machine files");
    shard->add_option("--data", shard_data)->required();
    shard->add_option("--machines", shard_machines)->required();
    shard->add_option("--partition", shard_strategy);
    shard->add_option("--seed", shard_seed);
    shard->add_option("--out", shard_out, "output base (default: the data path)");
    shard->add_option("--dim", shard_dim);

    double r_lambda = 0, r_gamma = 0, r_n = 0, r_sigma_max = 0, r_sigma = 0, r_sigma_prime = 0;
    double r_nu = 1.0, r_theta = 0, r_lip = 0, r_init = 0, r_eps_d = 1e-6, r_eps_gap = 1e-6;
    double r_machines = 0;
    std::string r_loss;
    auto* rates = app.add_subcommand("rates", "print the iteration-complexity bounds");
    rates->add_option("--lambda", r_lambda)->required();
    rates->add_option("--n", r_n)->required();
    rates->add_option("--gamma", r_gamma);
    rates->add_option("--loss", r_loss, "derive gamma/L from a loss id");
    rates->add_option("--sigma-max", r_sigma_max);
    rates->add_option("--sigma", r_sigma);
    rates->add_option("--sigma-prime", r_sigma_prime)->required();
    rates->add_option("--nu", r_nu);
    rates->add_option("--theta", r_theta);
    rates->add_option("--lipschitz", r_lip);
    rates->add_option("--initial-dual-subopt", r_init);
    rates->add_option("--eps-d", r_eps_d);
    rates->add_option("--eps-gap", r_eps_gap);
    rates->add_option("--machines", r_machines, "also print the adding/averaging preset bounds for this K");

    std::uint64_t v_seed = 0;
    std::int64_t v_trials = 100;
    std::string v_dump = "pderm-counterexamples";
    auto* verify = app.add_subcommand("verify", "run the oracle/property suite");
    verify->add_option("--seed", v_seed);
    verify->add_option("--trials", v_trials);
    verify->add_option("--dump-dir", v_dump);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train) return cmd_train(tf);
        if (*sweep_h) return cmd_sweep_h(hf, h_list);
        if (*sweep_sigma) return cmd_sweep_sigma(sf, sigma_list);
        if (*shard)
            return cmd_shard(shard_data, shard_machines, shard_strategy, shard_seed, shard_out,
                             shard_dim);
        if (*rates)
            return cmd_rates(r_lambda, r_gamma, r_n, r_sigma_max, r_sigma, r_sigma_prime, r_nu,
                             r_theta, r_lip, r_init, r_eps_d, r_eps_gap, r_loss, r_machines);
        if (*verify) {
            const auto report = property_suite(v_seed, v_trials, v_dump);
            print_report(std::cout, report);
            return report.all_passed() ? 0 : 1;
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 64;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
