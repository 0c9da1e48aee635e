#pragma once

// Subcommands of the qhyb binary. Each returns a process exit code:
// 0 success, 1 usage or validation error, 2 runtime failure.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qhyb/hhl.hpp"
#include "qhyb/protocol.hpp"
#include "qhyb/sched.hpp"

namespace qhyb::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

struct DeviceArgs {
    std::string host = "127.0.0.1";
    std::uint16_t port = 5555;
    unsigned qubit_cap = statevec::kDefaultQubitCap;
    std::size_t max_frame = protocol::kDefaultMaxFrame;
    std::function<void(std::uint16_t)> on_listening; ///< called once the socket is bound
};

struct SolveArgs {
    std::string system_file;
    unsigned m_clock = hhl::kDefaultClockQubits;
    std::optional<double> evolution_time;
    std::string endpoint; ///< host:port; empty means in-process
    hhl::Readout readout = hhl::Readout::Full;
};

struct HeatArgs {
    Eigen::Index nx = 8;
    double alpha = 1.0;
    double dt = 1e-3;
    std::optional<double> h; ///< defaults to 1 / (nx + 1)
    int steps = 5;
    std::string endpoint;
    std::optional<double> refine;
    unsigned m_clock = hhl::kDefaultClockQubits;
    std::string out_dir = ".";
    bool timing = true;
};

struct SchedArgs {
    std::string jobs_file;
    sched::Policy policy = sched::Policy::Hetjob;
    std::vector<double> snapshots;
    bool compare = false;
};

int cmd_device(const DeviceArgs& args, std::ostream& out, std::ostream& err);
int cmd_solve(const SolveArgs& args, std::ostream& out, std::ostream& err);
int cmd_heat(const HeatArgs& args, std::ostream& out, std::ostream& err);
int cmd_sched(const SchedArgs& args, std::ostream& out, std::ostream& err);

/// Parses the command line (without the program name) and dispatches.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// {"A": [[...]], "b": [...]}; entries are numbers or [re, im] pairs.
std::pair<Eigen::MatrixXcd, Eigen::VectorXcd> load_system(const std::string& path);

} // namespace qhyb::cli
