#include "pderm/engine.hpp"

#include <algorithm>
#include <barrier>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "pderm/kernels.hpp"
#include "pderm/random.hpp"
#include "pderm/transport.hpp"

namespace pderm {

namespace {

constexpr double kDivergenceDrop = 1e6;  // dual falling this far in one round = unsafe sigma'

bool is_measured_round(std::int64_t t, std::int64_t rounds, std::int64_t gap_every) {
    return t % gap_every == 0 || t == rounds;
}

double elapsed_ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

std::vector<double> slice_alpha(std::span<const double> alpha, const Partition& part,
                                std::int64_t k) {
    const auto& ids = part.assignments[std::size_t(k)];
    std::vector<double> out(ids.size());
    for (std::size_t j = 0; j < ids.size(); ++j) out[j] = alpha[std::size_t(ids[j])];
    return out;
}

void place_alpha(std::span<double> alpha, const Partition& part, std::int64_t k,
                 std::span<const double> block) {
    const auto& ids = part.assignments[std::size_t(k)];
    for (std::size_t j = 0; j < ids.size(); ++j) alpha[std::size_t(ids[j])] = block[j];
}

}  // namespace

double RunConfig::resolved_sigma_prime(std::int64_t K) const {
    return sigma_prime > 0.0 ? sigma_prime : safe_sigma_prime(nu, K);
}

void RunConfig::validate() const {
    if (!(nu > 0.0) || nu > 1.0) throw std::invalid_argument("nu must be in (0,1]");
    if (rounds < 0) throw std::invalid_argument("rounds must be >= 0");
    if (gap_tol < 0.0) throw std::invalid_argument("gap tolerance must be >= 0");
    if (gap_every < 1) throw std::invalid_argument("gap-every must be >= 1");
    solver.validate();
}

const char* run_status_name(RunStatus s) {
    switch (s) {
        case RunStatus::converged: return "converged";
        case RunStatus::max_rounds: return "max_rounds";
        case RunStatus::diverged: return "diverged";
    }
    return "?";
}

SolverFactory default_solver_factory(const SolverConfig& config, Loss loss) {
    config.validate();
    validate_solver_loss(config.id, loss);
    return [config, loss](std::int64_t k) {
        SolverConfig cfg = config;
        cfg.seed = mix_seed(config.seed, std::uint64_t(k));
        return make_solver(cfg, loss);
    };
}

RoundWorker::RoundWorker(LocalShard shard, std::unique_ptr<LocalSolver> solver, double nu,
                         double sigma_prime, std::uint64_t run_seed, std::int64_t machine_id,
                         std::vector<double> alpha_local)
    : shard_(std::move(shard)),
      solver_(std::move(solver)),
      nu_(nu),
      sigma_prime_(sigma_prime),
      run_seed_(run_seed),
      machine_id_(machine_id),
      alpha_local_(std::move(alpha_local)) {}

LocalUpdate RoundWorker::round(std::int64_t t, std::span<const double> v) {
    solver_->set_round_seed(mix_seed(run_seed_, std::uint64_t(machine_id_), std::uint64_t(t)));
    const auto view = make_view(shard_, v, alpha_local_, sigma_prime_);
    LocalUpdate up = solver_->solve(view);
    for (std::size_t j = 0; j < alpha_local_.size(); ++j)
        alpha_local_[j] += nu_ * up.h_local[j];
    return up;
}

std::vector<double> aggregate(std::span<const double> v,
                              const std::vector<std::vector<double>>& updates, double nu) {
    std::vector<double> out(v.begin(), v.end());
    for (std::size_t k = 0; k < updates.size(); ++k) {
        if (updates[k].size() != out.size())
            throw std::runtime_error("missing update from machine " + std::to_string(k));
        kern::axpy(out.size(), nu, updates[k].data(), out.data());
    }
    return out;
}

namespace {

// Shared measured-round bookkeeping: evaluates the certificate, appends the
// row, applies the divergence guard and the stopping rule.
struct Monitor {
    const ProblemSpec* spec;
    const RunConfig* config;
    std::chrono::steady_clock::time_point t0;
    RowSink on_row;
    double prev_dual = 0.0;
    bool have_prev = false;

    // returns true when the run should stop, with status set
    bool measure(RunResult& result, std::int64_t t, const std::vector<double>& alpha,
                 const std::vector<double>& v, std::int64_t bytes, std::int64_t iters_total) {
        RoundMetrics row{};
        row.round = t;
        row.bytes_per_machine = bytes;
        row.local_iters_total = iters_total;
        DualState state{alpha, v};
        double dual;
        try {
            dual = dual_value(*spec, state);
        } catch (const std::domain_error&) {
            result.status = RunStatus::diverged;  // NaN/out-of-box iterate
            return true;
        }
        const auto w = primal_from_dual(*spec, state);
        row.primal = primal_value(*spec, w);
        row.dual = dual;
        row.gap = row.primal - row.dual;
        row.elapsed_ms = elapsed_ms_since(t0);
        result.trace.push_back(row);
        if (on_row) on_row(row);
        if (!std::isfinite(dual) || (have_prev && dual < prev_dual - kDivergenceDrop)) {
            result.status = RunStatus::diverged;
            return true;
        }
        prev_dual = dual;
        have_prev = true;
        if (config->gap_tol > 0.0 && row.gap <= config->gap_tol) {
            result.status = RunStatus::converged;
            return true;
        }
        return false;
    }
};

}  // namespace

RunResult run(const ProblemSpec& spec, const Partition& part, const RunConfig& config) {
    return run(spec, part, config, default_solver_factory(config.solver, spec.loss));
}

RunResult run(const ProblemSpec& spec, const Partition& part, const RunConfig& config,
              const SolverFactory& factory, std::vector<double> alpha0, const RowSink& on_row) {
    config.validate();
    const std::int64_t K = part.machines();
    const double sigma_prime = config.resolved_sigma_prime(K);
    if (alpha0.empty()) alpha0.assign(std::size_t(spec.n()), 0.0);
    if (std::int64_t(alpha0.size()) != spec.n())
        throw std::invalid_argument("alpha0 length != n");
    check_alpha_feasible(spec, alpha0);

    RunResult result;
    Monitor monitor{&spec, &config, std::chrono::steady_clock::now(), on_row};

    std::vector<double> v = compute_v(spec, alpha0);
    std::vector<double> alpha = alpha0;

    // round 0 row: the state before any solve
    if (monitor.measure(result, 0, alpha, v, 0, 0) || config.rounds == 0) {
        result.state = DualState{std::move(alpha), std::move(v)};
        return result;
    }

    std::vector<RoundWorker> workers;
    workers.reserve(std::size_t(K));
    for (std::int64_t k = 0; k < K; ++k) {
        workers.emplace_back(make_local_shard(spec, part, k), factory(k), config.nu, sigma_prime,
                             config.seed, k, slice_alpha(alpha0, part, k));
    }

    const std::int64_t bytes_per_round = kFrameHeaderBytes + 8 * spec.d();
    std::vector<std::vector<double>> slots(static_cast<std::size_t>(K));
    std::vector<std::int64_t> iter_slots(std::size_t(K), 0);
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(K));
    std::int64_t current_round = 0;
    bool stop_workers = false;

    std::barrier start_barrier(K + 1);
    std::barrier done_barrier(K + 1);

    std::vector<std::thread> threads;
    threads.reserve(std::size_t(K));
    for (std::int64_t k = 0; k < K; ++k) {
        threads.emplace_back([&, k] {
            for (;;) {
                start_barrier.arrive_and_wait();
                if (stop_workers) return;
                try {
                    LocalUpdate up = workers[std::size_t(k)].round(current_round, v);
                    slots[std::size_t(k)] = std::move(up.delta_v);
                    iter_slots[std::size_t(k)] = up.inner_iterations;
                } catch (...) {
                    errors[std::size_t(k)] = std::current_exception();
                }
                done_barrier.arrive_and_wait();
            }
        });
    }

    std::int64_t iters_total = 0;
    bool done = false;
    for (std::int64_t t = 1; t <= config.rounds && !done; ++t) {
        current_round = t;
        start_barrier.arrive_and_wait();
        done_barrier.arrive_and_wait();
        for (auto& err : errors) {
            if (err) {
                stop_workers = true;
                start_barrier.arrive_and_wait();
                for (auto& th : threads) th.join();
                std::rethrow_exception(err);
            }
        }
        v = aggregate(v, slots, config.nu);
        for (std::int64_t k = 0; k < K; ++k) iters_total += iter_slots[std::size_t(k)];
        result.rounds_completed = t;
        if (is_measured_round(t, config.rounds, config.gap_every)) {
            for (std::int64_t k = 0; k < K; ++k)
                place_alpha(alpha, part, k, workers[std::size_t(k)].alpha_local());
            done = monitor.measure(result, t, alpha, v, bytes_per_round, iters_total);
        }
    }

    stop_workers = true;
    start_barrier.arrive_and_wait();
    for (auto& th : threads) th.join();

    for (std::int64_t k = 0; k < K; ++k)
        place_alpha(alpha, part, k, workers[std::size_t(k)].alpha_local());
    result.state = DualState{std::move(alpha), std::move(v)};
    return result;
}

bool equivalence_check(const ProblemSpec& spec, const Partition& part, const RunConfig& config,
                       double tol) {
    config.validate();
    const std::int64_t K = part.machines();
    const double sigma_prime = config.resolved_sigma_prime(K);
    const auto factory = default_solver_factory(config.solver, spec.loss);

    auto build = [&] {
        std::vector<RoundWorker> ws;
        ws.reserve(std::size_t(K));
        for (std::int64_t k = 0; k < K; ++k) {
            ws.emplace_back(make_local_shard(spec, part, k), factory(k), config.nu, sigma_prime,
                            config.seed, k,
                            std::vector<double>(part.assignments[std::size_t(k)].size(), 0.0));
        }
        return ws;
    };
    auto practical = build();   // maintains v via delta-v updates
    auto analytical = build();  // keeps alpha only, recomputes v each round

    std::vector<double> v2(std::size_t(spec.d()), 0.0);
    std::vector<double> alpha1(std::size_t(spec.n()), 0.0);

    for (std::int64_t t = 1; t <= config.rounds; ++t) {
        std::vector<std::vector<double>> deltas(static_cast<std::size_t>(K));
        for (std::int64_t k = 0; k < K; ++k)
            deltas[std::size_t(k)] = practical[std::size_t(k)].round(t, v2).delta_v;
        v2 = aggregate(v2, deltas, config.nu);

        const std::vector<double> v1 = compute_v(spec, alpha1);
        for (std::int64_t k = 0; k < K; ++k) {
            analytical[std::size_t(k)].round(t, v1);
            place_alpha(alpha1, part, k, analytical[std::size_t(k)].alpha_local());
        }

        std::vector<double> alpha2(std::size_t(spec.n()), 0.0);
        for (std::int64_t k = 0; k < K; ++k)
            place_alpha(alpha2, part, k, practical[std::size_t(k)].alpha_local());
        for (std::size_t i = 0; i < alpha1.size(); ++i) {
            if (std::abs(alpha1[i] - alpha2[i]) > tol) return false;
        }
    }
    return true;
}

RunResult run_tcp_coordinator(const ProblemSpec& spec, const Partition& part,
                              const RunConfig& config, const std::string& listen_addr,
                              const RowSink& on_row) {
    config.validate();
    const std::int64_t K = part.machines();

    RunResult result;
    Monitor monitor{&spec, &config, std::chrono::steady_clock::now(), on_row};

    std::vector<double> alpha(std::size_t(spec.n()), 0.0);
    std::vector<double> v(std::size_t(spec.d()), 0.0);

    TcpListener listener(listen_addr, int(K));
    std::vector<int> socks;
    socks.reserve(std::size_t(K));
    for (std::int64_t k = 0; k < K; ++k) socks.push_back(listener.accept_connection());
    std::vector<std::int64_t> sock_machine(std::size_t(K), -1);

    auto stop_all = [&] {
        Frame stop;
        stop.round = kStopRound;
        stop.payload = v;
        for (std::size_t i = 0; i < socks.size(); ++i) {
            stop.machine_id = std::uint32_t(i);
            try {
                write_frame(socks[i], stop);
            } catch (const TransportError&) {
            }
        }
        // half-close and drain so an early stop never RSTs away the stop
        // frame while a worker is still mid-send
        for (int fd : socks) drain_and_close(fd);
    };

    bool done = monitor.measure(result, 0, alpha, v, 0, 0) || config.rounds == 0;
    const std::int64_t bytes_per_round = kFrameHeaderBytes + 8 * spec.d();
    std::int64_t iters_total = 0;

    try {
        for (std::int64_t t = 1; t <= config.rounds && !done; ++t) {
            const bool measured = is_measured_round(t, config.rounds, config.gap_every);
            std::vector<std::vector<double>> deltas(static_cast<std::size_t>(K));
            for (std::size_t i = 0; i < socks.size(); ++i) {
                Frame f = read_frame(socks[i]);
                if (f.round != std::uint32_t(t)) throw TransportError("round mismatch");
                if (std::int64_t(f.machine_id) >= K) throw TransportError("bad machine id");
                if (sock_machine[i] < 0) sock_machine[i] = f.machine_id;
                if (std::int64_t(f.machine_id) != sock_machine[i])
                    throw TransportError("machine id changed mid-run");
                if (std::int64_t(f.payload.size()) != spec.d())
                    throw TransportError("delta-v length mismatch");
                if (!deltas[f.machine_id].empty())
                    throw TransportError("duplicate machine id " +
                                         std::to_string(f.machine_id));
                deltas[f.machine_id] = std::move(f.payload);
                if (measured) {
                    Frame fa = read_frame(socks[i]);
                    if (fa.round != std::uint32_t(t) || fa.machine_id != std::uint32_t(sock_machine[i]))
                        throw TransportError("alpha frame mismatch");
                    const auto& ids = part.assignments[std::size_t(sock_machine[i])];
                    if (fa.payload.size() != ids.size())
                        throw TransportError("alpha block length mismatch");
                    place_alpha(alpha, part, sock_machine[i], fa.payload);
                }
            }
            v = aggregate(v, deltas, config.nu);
            iters_total += K * config.solver.local_iters;
            result.rounds_completed = t;
            if (measured) done = monitor.measure(result, t, alpha, v, bytes_per_round, iters_total);
            if (done || t == config.rounds) break;
            Frame reply;
            reply.round = std::uint32_t(t);
            reply.payload = v;
            for (std::size_t i = 0; i < socks.size(); ++i) {
                reply.machine_id = std::uint32_t(sock_machine[i]);
                write_frame(socks[i], reply);
            }
        }
    } catch (const TransportError& e) {
        stop_all();
        throw TransportError("round " + std::to_string(result.rounds_completed + 1) + ": " +
                             e.what());
    }

    stop_all();
    result.state = DualState{std::move(alpha), std::move(v)};
    return result;
}

void run_tcp_worker(const LocalShard& shard, const RunConfig& config,
                    const std::string& connect_addr, std::int64_t machine_id) {
    config.validate();
    const double sigma_prime = config.resolved_sigma_prime(shard.machines);
    SolverConfig cfg = config.solver;
    cfg.seed = mix_seed(config.solver.seed, std::uint64_t(machine_id));
    RoundWorker worker(shard, make_solver(cfg, shard.loss), config.nu, sigma_prime, config.seed,
                       machine_id, std::vector<double>(std::size_t(shard.size()), 0.0));

    const int fd = tcp_connect(connect_addr);
    std::vector<double> v(std::size_t(shard.data.d), 0.0);
    try {
        for (std::int64_t t = 1; t <= config.rounds; ++t) {
            LocalUpdate up = worker.round(t, v);
            Frame f;
            f.round = std::uint32_t(t);
            f.machine_id = std::uint32_t(machine_id);
            f.payload = std::move(up.delta_v);
            write_frame(fd, f);
            if (is_measured_round(t, config.rounds, config.gap_every)) {
                Frame fa;
                fa.round = std::uint32_t(t);
                fa.machine_id = std::uint32_t(machine_id);
                fa.payload = worker.alpha_local();
                write_frame(fd, fa);
            }
            Frame reply = read_frame(fd);
            if (reply.round == kStopRound) break;
            if (reply.round != std::uint32_t(t)) throw TransportError("reply round mismatch");
            if (std::int64_t(reply.payload.size()) != shard.data.d)
                throw TransportError("reply v length mismatch");
            v = std::move(reply.payload);
        }
        if (config.rounds == 0) (void)read_frame(fd);  // wait for the stop frame
    } catch (...) {
        close_socket(fd);
        throw;
    }
    close_socket(fd);
}

}  // namespace pderm
