#pragma once
// Randomized workloads and invariant checks shared by the scheduler tests and
// the acceptance runner.
#include <map>
#include <random>
#include <regex>
#include <set>
#include <string>

#include "qhyb/sched.hpp"

namespace testing {

using namespace qhyb::sched;

inline Workload random_workload(std::mt19937_64& rng) {
    Workload w;
    w.cluster.hpc_nodes = 1 + static_cast<int>(rng() % 8);
    w.cluster.q_nodes = 1 + static_cast<int>(rng() % 2);
    w.cluster.completing_delay = static_cast<double>(rng() % 5);
    w.cluster.sched_interval = rng() % 3 == 0 ? 10.0 : 0.0;
    const int n = 1 + static_cast<int>(rng() % 12);
    for (int i = 0; i < n; ++i) {
        JobSpec j;
        j.id = 1000 + i;
        j.name = "j" + std::to_string(i);
        j.user = "u";
        j.submit = static_cast<double>(rng() % 200);
        j.hpc.nodes = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(w.cluster.hpc_nodes));
        j.q.nodes = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(w.cluster.q_nodes));
        j.q.duration = 1.0 + static_cast<double>(rng() % 60);
        j.hpc.duration = j.q.duration + static_cast<double>(rng() % 120);
        w.jobs.push_back(j);
    }
    return w;
}

/// Capacity and per-component state-sequence checks at every event time and
/// just after it. Returns the number of violations.
inline int check_properties(const Workload& w, const Timeline& tl) {
    int violations = 0;
    std::set<double> probes;
    for (const auto& e : tl.events) {
        probes.insert(e.time);
        probes.insert(e.time + 0.5);
        if (e.time > 0.5)
            probes.insert(e.time - 0.5);
    }
    std::map<std::string, std::string> traces;
    for (double t : probes) {
        for (Partition p : {Partition::HPC, Partition::Q}) {
            int used = 0;
            std::set<int> held;
            for (const auto& job : tl.jobs) {
                const auto& run = job.component(p);
                const auto st = component_state(run, t);
                if (st && *st != State::PD) {
                    used += run.nodes;
                    for (int idx : run.node_indices)
                        if (!held.insert(idx).second)
                            ++violations; // one node held twice
                }
            }
            if (used > w.cluster.nodes(p))
                ++violations;
        }
        for (const auto& job : tl.jobs)
            for (Partition p : {Partition::HPC, Partition::Q}) {
                const auto st = component_state(job.component(p), t);
                if (st)
                    traces[std::to_string(job.spec.id) + std::string(to_string(p))] +=
                        std::string(1, "PRC"[static_cast<int>(*st)]);
            }
    }
    static const std::regex shape("P*R+C?");
    for (const auto& [key, trace] : traces) {
        // collapse repeats before matching
        std::string collapsed;
        for (char c : trace)
            if (collapsed.empty() || collapsed.back() != c)
                collapsed += c;
        if (!std::regex_match(collapsed, shape))
            ++violations;
    }
    return violations;
}

} // namespace testing
