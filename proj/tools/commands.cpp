#include "commands.hpp"

#include <atomic>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "qhyb/net.hpp"
#include "qhyb/pde.hpp"

namespace qhyb::cli {

namespace {

spdlog::level::level_enum g_level = spdlog::level::info;

std::shared_ptr<spdlog::logger> make_logger(std::ostream& os, const std::string& name) {
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(os, true);
    auto log = std::make_shared<spdlog::logger>(name, sink);
    log->set_pattern("[%H:%M:%S.%e] %v");
    log->set_level(g_level);
    return log;
}

std::string fmt_num(double v, const char* spec = "%.6g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string fmt_complex(const std::complex<double>& z) {
    if (z.imag() == 0.0)
        return fmt_num(z.real(), "%.10g");
    return fmt_num(z.real(), "%.10g") + (z.imag() < 0 ? "-" : "+") +
           fmt_num(std::abs(z.imag()), "%.10g") + "i";
}

/// Maps library exceptions to exit codes and prints the message.
template <class F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const SchemaError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

std::unique_ptr<device::Executor> make_executor(const std::string& endpoint) {
    if (endpoint.empty())
        return std::make_unique<device::LocalExecutor>();
    const auto [host, port] = net::parse_endpoint(endpoint);
    return std::make_unique<net::RemoteExecutor>(net::DeviceClient::connect(host, port));
}

void print_phases(std::ostream& out, const hhl::PhaseTimings& p, double total) {
    out << "phase        seconds\n";
    for (std::size_t i = 0; i < hhl::PhaseTimings::names.size(); ++i) {
        std::string name(hhl::PhaseTimings::names[i]);
        name.resize(12, ' ');
        out << name << ' ' << fmt_num(p[i], "%.6f") << '\n';
    }
    out << "total        " << fmt_num(total, "%.6f") << '\n';
}

std::complex<double> read_scalar(const nlohmann::json& v, const std::string& path) {
    if (v.is_number())
        return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
        return {v[0].get<double>(), v[1].get<double>()};
    throw SchemaError(path, "expected a number or a [re, im] pair");
}

std::atomic<net::DeviceServer*> g_server{nullptr};

extern "C" void on_signal(int) {
    if (auto* s = g_server.load())
        s->stop();
}

} // namespace

std::pair<Eigen::MatrixXcd, Eigen::VectorXcd> load_system(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open system file '" + path + "'");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError("$", std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("A") || !doc.contains("b"))
        throw SchemaError("$", "expected an object with fields A and b");
    const auto& a = doc["A"];
    const auto& b = doc["b"];
    if (!a.is_array() || a.empty())
        throw SchemaError("A", "expected a non-empty array of rows");
    if (!b.is_array() || b.size() != a.size())
        throw SchemaError("b", "expected an array with one entry per row of A");
    const auto n = static_cast<Eigen::Index>(a.size());
    Eigen::MatrixXcd m(n, n);
    Eigen::VectorXcd v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = a[static_cast<std::size_t>(i)];
        const std::string rp = "A[" + std::to_string(i) + "]";
        if (!row.is_array() || row.size() != a.size())
            throw SchemaError(rp, "row length differs from the row count");
        for (Eigen::Index j = 0; j < n; ++j)
            m(i, j) = read_scalar(row[static_cast<std::size_t>(j)], rp + "[" + std::to_string(j) + "]");
        v(i) = read_scalar(b[static_cast<std::size_t>(i)], "b[" + std::to_string(i) + "]");
    }
    return {m, v};
}

// ---------------------------------------------------------------------------

int cmd_device(const DeviceArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        auto log = make_logger(out, "device");
        net::ServerOptions opts;
        opts.host = args.host;
        opts.port = args.port;
        opts.max_frame = args.max_frame;
        opts.device.qubit_cap = args.qubit_cap;
        opts.on_request = [log](const net::RequestLog& r) {
            log->info("{} qubits={} amplitudes={} device_time={:.6f}s", r.outcome, r.qubits,
                      r.amplitudes, r.device_time);
        };
        net::DeviceServer server(opts);
        log->info("listening on {}:{} (qubit cap {})", args.host, server.port(), args.qubit_cap);
        if (args.on_listening)
            args.on_listening(server.port());

        g_server = &server;
        auto old_int = std::signal(SIGINT, on_signal);
        auto old_term = std::signal(SIGTERM, on_signal);
        server.serve();
        std::signal(SIGINT, old_int);
        std::signal(SIGTERM, old_term);
        g_server = nullptr;
        log->info("shut down");
        return kExitOk;
    });
}

int cmd_solve(const SolveArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto [a, b] = load_system(args.system_file);
        hhl::HhlConfig cfg;
        cfg.m_clock = args.m_clock;
        cfg.evolution_time = args.evolution_time;
        cfg.readout = args.readout;
        hhl::validate(cfg);

        auto executor = make_executor(args.endpoint);
        const hhl::SolveReport rep = net::qsolve_Axb(a, b, *executor, cfg);
        const Eigen::VectorXcd reference = a.fullPivLu().solve(b);
        const double rel = (rep.x - reference).norm() / reference.norm();

        out << "x =";
        for (Eigen::Index i = 0; i < rep.x.size(); ++i)
            out << ' ' << fmt_complex(rep.x(i));
        out << '\n';
        out << "relative error vs classical solve: " << fmt_num(rel, "%.3e") << '\n';
        out << "p_success: " << fmt_num(rep.p_success, "%.6g") << '\n';
        out << "circuit qubits: " << rep.circuit_qubits << '\n';
        out << "amplitudes read: " << rep.amplitudes_read << '\n';
        out << "transport: " << (executor->remote() ? args.endpoint : std::string("in-process"))
            << '\n';
        print_phases(out, rep.phases, rep.total_time);
        return kExitOk;
    });
}

int cmd_heat(const HeatArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        auto log = make_logger(err, "heat");
        pde::HeatProblem problem;
        problem.nx = args.nx;
        problem.alpha = args.alpha;
        problem.dt = args.dt;
        problem.h = args.h.value_or(1.0 / static_cast<double>(args.nx + 1));
        problem.steps = args.steps;
        if (args.nx < 2 || (args.nx & (args.nx - 1)) != 0)
            throw ValidationError("--nx must be a power of two >= 2");
        problem.u0 = pde::sine_profile(problem.nx, problem.h);
        pde::validate(problem);
        if (args.refine && !(*args.refine > 0.0))
            throw ValidationError("--refine tolerance must be positive");

        hhl::HhlConfig cfg;
        cfg.m_clock = args.m_clock;
        hhl::validate(cfg);

        const Eigen::MatrixXd a =
            pde::discretize_heat_1d(problem.nx, problem.alpha, problem.dt, problem.h);
        auto executor = make_executor(args.endpoint);
        hhl::HhlSolver solver(hhl::to_complex(a), cfg, *executor);
        const pde::Trajectory traj =
            pde::time_step_loop(problem, pde::hhl_step_solver(solver, a, args.refine));
        const pde::Trajectory reference = pde::time_step_loop(problem, pde::classical_solver(a));

        const auto& plan = solver.plan();
        if (solver.op().condition_number > 10.0)
            log->warn("condition number estimate {:.3g} is above 10; expect larger errors "
                      "without --refine",
                      solver.op().condition_number);

        std::filesystem::create_directories(args.out_dir);
        const auto csv = std::filesystem::path(args.out_dir) / "heat_trajectory.csv";
        const auto diag = std::filesystem::path(args.out_dir) / "heat_diagnostics.json";
        {
            std::ofstream f(csv);
            pde::write_trajectory_csv(f, traj);
            if (!f)
                throw TransportError("cannot write " + csv.string());
        }
        {
            std::ofstream f(diag);
            pde::write_diagnostics_json(f, problem, traj, args.timing);
            if (!f)
                throw TransportError("cannot write " + diag.string());
        }

        out << "grid points: " << problem.nx << ", courant number: "
            << fmt_num(problem.courant(), "%.4g") << '\n';
        out << "circuit qubits: " << plan.layout.n_state << " + " << plan.layout.m_clock
            << " + 1 = " << plan.layout.total() << '\n';
        out << "steps: " << problem.steps << '\n';
        double worst_residual = 0.0;
        for (const auto& s : traj.steps)
            worst_residual = std::max(worst_residual, s.residual);
        out << "max relative residual: " << fmt_num(worst_residual, "%.3e") << '\n';
        out << "max deviation vs classical backward Euler: "
            << fmt_num(pde::max_relative_deviation(traj, reference), "%.3e") << '\n';
        if (args.timing && !traj.steps.empty()) {
            const double first = traj.steps.front().phases.synthesis;
            double later = 0.0;
            for (std::size_t k = 1; k < traj.steps.size(); ++k)
                later = std::max(later, traj.steps[k].phases.synthesis);
            out << "matrix block synthesized on step 1 only: step 1 synthesis "
                << fmt_num(first, "%.6f") << " s, later steps at most " << fmt_num(later, "%.6f")
                << " s\n";
        }
        out << "wrote " << csv.string() << " and " << diag.string() << '\n';
        return kExitOk;
    });
}

int cmd_sched(const SchedArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const sched::Workload w = sched::load_jobs(args.jobs_file);
        for (double t : args.snapshots)
            if (!(t >= 0.0))
                throw ValidationError("snapshot times must be non-negative");
        const sched::Timeline tl = sched::simulate(w.cluster, w.jobs, args.policy);
        for (double t : args.snapshots) {
            out << "t = " << fmt_num(t) << " s (" << sched::to_string(args.policy) << ")\n";
            out << sched::render_snapshot(sched::snapshot(tl, w.cluster, t)) << '\n';
        }
        const sched::Metrics m = sched::metrics(tl, w.cluster);
        out << "metrics (" << sched::to_string(args.policy) << "):\n"
            << sched::to_json(m).dump(2) << '\n';

        if (args.compare) {
            const sched::Timeline het = sched::simulate(w.cluster, w.jobs, sched::Policy::Hetjob);
            const sched::Timeline mpmd = sched::simulate(w.cluster, w.jobs, sched::Policy::Mpmd);
            const sched::Metrics mh = sched::metrics(het, w.cluster);
            const sched::Metrics mm = sched::metrics(mpmd, w.cluster);
            for (std::size_t k = 0; k < het.jobs.size(); ++k)
                out << het.jobs[k].spec.name << " wait: " << fmt_num(mh.waits[k].wait)
                    << " s (hetjob) vs " << fmt_num(mm.waits[k].wait) << " s (mpmd)\n";
            out << "Q idle: " << fmt_num(mh.q_idle) << " node-s (hetjob) vs "
                << fmt_num(mm.q_idle) << " node-s (mpmd), delta " << fmt_num(mm.q_idle - mh.q_idle)
                << " node-s\n";
            out << "Q utilization: " << fmt_num(mh.q_utilization, "%.3f") << " (hetjob) vs "
                << fmt_num(mm.q_utilization, "%.3f") << " (mpmd)\n";
        }
        return kExitOk;
    });
}

// ---------------------------------------------------------------------------

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Hybrid classical/quantum linear-solve testbed"};
    app.require_subcommand(1);
    std::string level = "info";
    app.add_option("--log-level", level, "trace, debug, info, warn, error, off")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

    DeviceArgs dev;
    auto* device = app.add_subcommand("device", "Serve the statevector device over TCP");
    device->add_option("--host", dev.host, "Bind address");
    device->add_option("--port", dev.port, "TCP port, 0 picks a free one");
    device->add_option("--qubit-cap", dev.qubit_cap, "Largest circuit accepted")
        ->check(CLI::Range(1u, 30u));
    device->add_option("--max-frame", dev.max_frame, "Frame size limit in bytes");

    SolveArgs solve;
    std::string readout = "full";
    bool solve_local = false;
    auto* solve_cmd = app.add_subcommand("solve", "Solve one linear system with HHL");
    solve_cmd->add_option("--system", solve.system_file, "JSON file with A and b")->required();
    solve_cmd->add_option("--m-clock", solve.m_clock, "Clock register size")
        ->check(CLI::Range(hhl::kMinClockQubits, hhl::kMaxClockQubits));
    solve_cmd->add_option("--evolution-time", solve.evolution_time,
                          "Fix t instead of deriving it from the spectrum");
    auto* solve_endpoint =
        solve_cmd->add_option("--endpoint", solve.endpoint, "Device server as host:port");
    solve_cmd->add_flag("--local", solve_local, "Run the device in-process")
        ->excludes(solve_endpoint);
    solve_cmd->add_option("--readout", readout, "full or solution-only")
        ->check(CLI::IsMember({"full", "solution-only"}));

    HeatArgs heat;
    bool heat_local = false;
    bool no_timing = false;
    auto* heat_cmd = app.add_subcommand("heat", "Backward-Euler heat equation with HHL steps");
    heat_cmd->set_help_flag("--help", "Print this help message and exit");
    heat_cmd->add_option("--nx", heat.nx, "Interior grid points, a power of two");
    heat_cmd->add_option("--alpha", heat.alpha, "Diffusivity");
    heat_cmd->add_option("--dt", heat.dt, "Time step");
    heat_cmd->add_option("--h", heat.h, "Grid spacing, default 1/(nx+1)");
    heat_cmd->add_option("--steps", heat.steps, "Number of time steps");
    auto* heat_endpoint =
        heat_cmd->add_option("--endpoint", heat.endpoint, "Device server as host:port");
    heat_cmd->add_flag("--local", heat_local, "Run the device in-process")->excludes(heat_endpoint);
    heat_cmd->add_option("--refine", heat.refine, "Iterative refinement tolerance");
    heat_cmd->add_option("--m-clock", heat.m_clock, "Clock register size")
        ->check(CLI::Range(hhl::kMinClockQubits, hhl::kMaxClockQubits));
    heat_cmd->add_option("--out-dir", heat.out_dir, "Directory for CSV and diagnostics");
    heat_cmd->add_flag("--no-timing", no_timing, "Leave timings out of the diagnostics");

    SchedArgs sch;
    std::string policy = "hetjob";
    std::string snapshots;
    auto* sched_cmd = app.add_subcommand("sched", "Simulate MPMD vs heterogeneous jobs");
    sched_cmd->add_option("--jobs", sch.jobs_file, "Job document (JSON)")->required();
    sched_cmd->add_option("--policy", policy, "mpmd or hetjob")
        ->check(CLI::IsMember({"mpmd", "hetjob"}));
    sched_cmd->add_option("--snapshots", snapshots, "Comma-separated probe times in seconds");
    sched_cmd->add_flag("--compare", sch.compare, "Run both policies and compare");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }
    g_level = spdlog::level::from_str(level);

    if (*device)
        return cmd_device(dev, out, err);
    if (*solve_cmd) {
        solve.readout = readout == "full" ? hhl::Readout::Full : hhl::Readout::SolutionOnly;
        return cmd_solve(solve, out, err);
    }
    if (*heat_cmd) {
        heat.timing = !no_timing;
        return cmd_heat(heat, out, err);
    }
    sch.policy = sched::parse_policy(policy);
    std::stringstream ss(snapshots);
    for (std::string item; std::getline(ss, item, ',');) {
        try {
            std::size_t used = 0;
            sch.snapshots.push_back(std::stod(item, &used));
            if (used != item.size())
                throw std::invalid_argument(item);
        } catch (const std::exception&) {
            err << "error: bad snapshot time '" << item << "'\n";
            return kExitUsage;
        }
    }
    return cmd_sched(sch, out, err);
}

} // namespace qhyb::cli
