#pragma once

// Discrete-event model of a cluster with an HPC partition and a small
// quantum partition. Jobs carry one component per partition; the policy
// decides when the quantum nodes are released.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qhyb/error.hpp"

namespace qhyb::sched {

enum class Partition { HPC, Q };
enum class Policy { Mpmd, Hetjob };

std::string_view to_string(Partition p);
std::string_view to_string(Policy p);
/// "mpmd" or "hetjob"; anything else is a ValidationError.
Policy parse_policy(std::string_view name);

struct ClusterSpec {
    int hpc_nodes = 4;
    std::string hpc_prefix = "hpcn";
    int hpc_base = 136;
    int q_nodes = 1;
    std::string q_prefix = "qnode";
    int q_base = 1;
    double completing_delay = 2.0;
    /// Scheduling pass period; jobs start only at multiples of it. 0 = event driven.
    double sched_interval = 0.0;

    int nodes(Partition p) const noexcept { return p == Partition::HPC ? hpc_nodes : q_nodes; }
    std::string node_name(Partition p, int index) const;
};

struct ComponentSpec {
    int nodes = 1;
    double duration = 1.0;
};

struct JobSpec {
    std::int64_t id = 0;
    std::string name;
    std::string user;
    double submit = 0.0;
    ComponentSpec hpc;
    ComponentSpec q;

    const ComponentSpec& component(Partition p) const noexcept { return p == Partition::HPC ? hpc : q; }
};

struct Workload {
    ClusterSpec cluster;
    std::vector<JobSpec> jobs;
};

/// Validates a job document. Errors are SchemaError with the offending field
/// path, e.g. "jobs[1].q.duration_s".
Workload parse_jobs(const nlohmann::json& document);
Workload parse_jobs_text(std::string_view text);
Workload load_jobs(const std::string& path);

enum class Transition { Submit, Start, CompleteBegin, CompleteEnd };
std::string_view to_string(Transition t);

struct Event {
    double time = 0.0;
    std::int64_t job = 0;
    Partition component = Partition::HPC;
    Transition transition = Transition::Submit;
};

struct ComponentRun {
    int nodes = 0;
    double submit = 0.0;
    double start = 0.0;
    double complete_begin = 0.0; ///< enters CG
    double complete_end = 0.0;   ///< nodes freed
    std::vector<int> node_indices; ///< 0-based within the partition
};

struct JobRun {
    JobSpec spec;
    ComponentRun hpc;
    ComponentRun q;

    const ComponentRun& component(Partition p) const noexcept { return p == Partition::HPC ? hpc : q; }
};

struct Timeline {
    Policy policy = Policy::Hetjob;
    std::vector<JobRun> jobs; ///< in scheduling order
    std::vector<Event> events;
};

/// Strict FCFS without backfill; both components of a job start together on
/// the lowest-numbered free nodes.
Timeline simulate(const ClusterSpec& cluster, const std::vector<JobSpec>& jobs, Policy policy);

enum class State { PD, R, CG };
std::string_view to_string(State s);

/// One row per component that is pending, running or completing at `t`.
struct Row {
    std::string jobid; ///< "<id>+0" for HPC, "<id>+1" for Q
    Partition partition = Partition::HPC;
    std::string name;
    std::string user;
    State state = State::PD;
    std::string time; ///< M:SS since start, 0:00 when pending
    int nodes = 0;
    std::string nodelist; ///< compressed node names or "(Resources)"
};

/// Rows are sorted by (state, job id, component).
std::vector<Row> snapshot(const Timeline& timeline, const ClusterSpec& cluster, double t);
std::string render_snapshot(const std::vector<Row>& rows);

/// State of one component at `t`, or nothing when not yet submitted or already gone.
std::optional<State> component_state(const ComponentRun& run, double t);

/// "hpcn[136-137]", "qnode1", "hpcn[1,3-4]".
std::string compress_nodelist(const std::string& prefix, std::vector<int> numbers);

/// M:SS, or H:MM:SS from one hour on.
std::string format_elapsed(double seconds);

struct JobWait {
    std::int64_t id = 0;
    double wait = 0.0;
};

struct Metrics {
    double makespan = 0.0;
    double q_busy = 0.0;       ///< node-seconds of quantum work
    double q_completing = 0.0; ///< node-seconds spent in CG
    double q_idle = 0.0;
    double q_utilization = 0.0;
    std::vector<JobWait> waits;
};

Metrics metrics(const Timeline& timeline, const ClusterSpec& cluster);
nlohmann::ordered_json to_json(const Metrics& m);

} // namespace qhyb::sched
