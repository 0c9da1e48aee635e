#include "qhyb/sched.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace qhyb::sched {

using nlohmann::json;

std::string_view to_string(Partition p) { return p == Partition::HPC ? "HPC" : "Q"; }

std::string_view to_string(Policy p) { return p == Policy::Mpmd ? "mpmd" : "hetjob"; }

Policy parse_policy(std::string_view name) {
    if (name == "mpmd")
        return Policy::Mpmd;
    if (name == "hetjob")
        return Policy::Hetjob;
    throw ValidationError("policy must be mpmd or hetjob, got '" + std::string(name) + "'");
}

std::string_view to_string(Transition t) {
    switch (t) {
    case Transition::Submit: return "SUBMIT";
    case Transition::Start: return "START";
    case Transition::CompleteBegin: return "COMPLETE_BEGIN";
    case Transition::CompleteEnd: return "COMPLETE_END";
    }
    return "?";
}

std::string_view to_string(State s) {
    switch (s) {
    case State::PD: return "PD";
    case State::R: return "R";
    case State::CG: return "CG";
    }
    return "?";
}

std::string ClusterSpec::node_name(Partition p, int index) const {
    return p == Partition::HPC ? hpc_prefix + std::to_string(hpc_base + index)
                               : q_prefix + std::to_string(q_base + index);
}

// ---------------------------------------------------------------------------
// job document

namespace {

struct Reader {
    const json& node;
    std::string path;

    Reader(const json& n, std::string p) : node(n), path(std::move(p)) {
        if (!node.is_object())
            throw SchemaError(path.empty() ? "$" : path, "expected an object");
    }

    std::string at(const char* key) const { return path.empty() ? key : path + "." + key; }

    void only(std::initializer_list<const char*> keys) const {
        for (const auto& item : node.items()) {
            const bool known = std::any_of(keys.begin(), keys.end(),
                                           [&](const char* k) { return item.key() == k; });
            if (!known)
                throw SchemaError(at(item.key().c_str()), "unknown field");
        }
    }

    const json* find(const char* key) const {
        const auto it = node.find(key);
        return it == node.end() ? nullptr : &*it;
    }

    const json& need(const char* key) const {
        const json* v = find(key);
        if (!v)
            throw SchemaError(at(key), "missing field");
        return *v;
    }

    std::int64_t integer(const char* key, std::int64_t min) const {
        const json& v = need(key);
        if (!v.is_number_integer())
            throw SchemaError(at(key), "expected an integer");
        const auto x = v.get<std::int64_t>();
        if (x < min)
            throw SchemaError(at(key), "must be >= " + std::to_string(min));
        return x;
    }

    int count(const char* key) const {
        const auto x = integer(key, 1);
        if (x > 1'000'000)
            throw SchemaError(at(key), "unreasonably large");
        return static_cast<int>(x);
    }

    double number(const json& v, const char* key, bool strictly_positive) const {
        if (!v.is_number())
            throw SchemaError(at(key), "expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x) || (strictly_positive ? !(x > 0.0) : !(x >= 0.0)))
            throw SchemaError(at(key), strictly_positive ? "must be > 0" : "must be >= 0");
        return x;
    }

    double number(const char* key, bool strictly_positive) const {
        return number(need(key), key, strictly_positive);
    }

    double number_or(const char* key, double fallback) const {
        const json* v = find(key);
        return v ? number(*v, key, false) : fallback;
    }

    std::string text(const char* key) const {
        const json& v = need(key);
        if (!v.is_string() || v.get_ref<const std::string&>().empty())
            throw SchemaError(at(key), "expected a non-empty string");
        return v.get<std::string>();
    }
};

ComponentSpec read_component(const Reader& job, const char* key) {
    const Reader r(job.need(key), job.at(key));
    r.only({"nodes", "duration_s"});
    ComponentSpec c;
    c.nodes = r.count("nodes");
    c.duration = r.number("duration_s", true);
    return c;
}

} // namespace

Workload parse_jobs(const json& document) {
    const Reader root(document, "");
    root.only({"cluster", "jobs"});
    Workload w;

    const Reader c(root.need("cluster"), "cluster");
    c.only({"hpc_nodes", "hpc_prefix", "hpc_base", "q_nodes", "q_prefix", "q_base",
            "completing_delay_s", "sched_interval_s"});
    w.cluster.hpc_nodes = c.count("hpc_nodes");
    w.cluster.hpc_prefix = c.text("hpc_prefix");
    w.cluster.hpc_base = static_cast<int>(c.integer("hpc_base", 0));
    w.cluster.q_nodes = c.count("q_nodes");
    w.cluster.q_prefix = c.text("q_prefix");
    w.cluster.q_base = c.find("q_base") ? static_cast<int>(c.integer("q_base", 0)) : 1;
    w.cluster.completing_delay = c.number("completing_delay_s", false);
    w.cluster.sched_interval = c.number_or("sched_interval_s", 0.0);

    const json& jobs = root.need("jobs");
    if (!jobs.is_array())
        throw SchemaError("jobs", "expected an array");
    std::set<std::int64_t> seen;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const std::string path = "jobs[" + std::to_string(i) + "]";
        const Reader r(jobs[i], path);
        r.only({"id", "name", "user", "submit_s", "hpc", "q"});
        JobSpec j;
        j.id = r.integer("id", 0);
        if (!seen.insert(j.id).second)
            throw SchemaError(r.at("id"), "duplicate job id " + std::to_string(j.id));
        j.name = r.text("name");
        j.user = r.text("user");
        j.submit = r.number_or("submit_s", 0.0);
        const bool has_hpc = r.find("hpc") != nullptr;
        const bool has_q = r.find("q") != nullptr;
        if (!has_hpc || !has_q)
            throw SchemaError(r.at(has_hpc ? "q" : "hpc"),
                              "a job needs exactly two components, hpc and q");
        j.hpc = read_component(r, "hpc");
        j.q = read_component(r, "q");
        if (j.hpc.duration < j.q.duration)
            throw SchemaError(r.at("hpc") + ".duration_s",
                              "classical component must not end before the quantum component");
        if (j.hpc.nodes > w.cluster.hpc_nodes)
            throw SchemaError(r.at("hpc") + ".nodes",
                              "infeasible: requests " + std::to_string(j.hpc.nodes) +
                                  " nodes, cluster has " + std::to_string(w.cluster.hpc_nodes));
        if (j.q.nodes > w.cluster.q_nodes)
            throw SchemaError(r.at("q") + ".nodes",
                              "infeasible: requests " + std::to_string(j.q.nodes) +
                                  " nodes, cluster has " + std::to_string(w.cluster.q_nodes));
        w.jobs.push_back(std::move(j));
    }
    return w;
}

Workload parse_jobs_text(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw SchemaError("$", std::string("invalid JSON: ") + e.what());
    }
    return parse_jobs(doc);
}

Workload load_jobs(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open job file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_jobs_text(ss.str());
}

// ---------------------------------------------------------------------------
// simulation

namespace {

double on_grid(double t, double interval) {
    if (interval <= 0.0)
        return t;
    return std::ceil(t / interval - 1e-9) * interval + 0.0; // no negative zero
}

int free_count(const std::vector<double>& free_at, double t) {
    return static_cast<int>(std::count_if(free_at.begin(), free_at.end(),
                                          [t](double f) { return f <= t; }));
}

std::vector<int> take_nodes(std::vector<double>& free_at, int need, double t, double release) {
    std::vector<int> picked;
    for (int i = 0; i < static_cast<int>(free_at.size()) && static_cast<int>(picked.size()) < need;
         ++i)
        if (free_at[i] <= t) {
            picked.push_back(i);
            free_at[i] = release;
        }
    return picked;
}

} // namespace

Timeline simulate(const ClusterSpec& cluster, const std::vector<JobSpec>& jobs, Policy policy) {
    Timeline tl;
    tl.policy = policy;

    std::vector<std::size_t> order(jobs.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return jobs[a].submit < jobs[b].submit; });

    std::vector<double> hpc_free(static_cast<std::size_t>(cluster.hpc_nodes), 0.0);
    std::vector<double> q_free(static_cast<std::size_t>(cluster.q_nodes), 0.0);
    double previous_start = 0.0;

    for (std::size_t idx : order) {
        const JobSpec& j = jobs[idx];
        if (j.hpc.nodes > cluster.hpc_nodes || j.q.nodes > cluster.q_nodes)
            throw ValidationError("job " + std::to_string(j.id) + " can never fit on the cluster");

        // no job overtakes an earlier one
        const double earliest = std::max(j.submit, previous_start);
        std::vector<double> candidates{earliest};
        for (double f : hpc_free)
            if (f > earliest)
                candidates.push_back(f);
        for (double f : q_free)
            if (f > earliest)
                candidates.push_back(f);
        for (double& c : candidates)
            c = on_grid(c, cluster.sched_interval);
        std::sort(candidates.begin(), candidates.end());

        double start = std::numeric_limits<double>::infinity();
        for (double t : candidates)
            if (free_count(hpc_free, t) >= j.hpc.nodes && free_count(q_free, t) >= j.q.nodes) {
                start = t;
                break;
            }

        JobRun run;
        run.spec = j;
        const double delay = cluster.completing_delay;
        run.hpc.nodes = j.hpc.nodes;
        run.hpc.submit = j.submit;
        run.hpc.start = start;
        run.hpc.complete_begin = start + j.hpc.duration;
        run.hpc.complete_end = run.hpc.complete_begin + delay;
        run.q.nodes = j.q.nodes;
        run.q.submit = j.submit;
        run.q.start = start;
        run.q.complete_begin =
            policy == Policy::Hetjob ? start + j.q.duration : run.hpc.complete_begin;
        run.q.complete_end = run.q.complete_begin + delay;
        run.hpc.node_indices = take_nodes(hpc_free, j.hpc.nodes, start, run.hpc.complete_end);
        run.q.node_indices = take_nodes(q_free, j.q.nodes, start, run.q.complete_end);

        previous_start = start;
        tl.jobs.push_back(std::move(run));
    }

    for (std::size_t k = 0; k < tl.jobs.size(); ++k) {
        const JobRun& r = tl.jobs[k];
        for (Partition p : {Partition::HPC, Partition::Q}) {
            const ComponentRun& c = r.component(p);
            tl.events.push_back({c.submit, r.spec.id, p, Transition::Submit});
            tl.events.push_back({c.start, r.spec.id, p, Transition::Start});
            tl.events.push_back({c.complete_begin, r.spec.id, p, Transition::CompleteBegin});
            tl.events.push_back({c.complete_end, r.spec.id, p, Transition::CompleteEnd});
        }
    }
    // ties: submission order, then job id, component, transition
    auto rank = [&](std::int64_t id) {
        for (std::size_t k = 0; k < tl.jobs.size(); ++k)
            if (tl.jobs[k].spec.id == id)
                return k;
        return tl.jobs.size();
    };
    std::stable_sort(tl.events.begin(), tl.events.end(), [&](const Event& a, const Event& b) {
        if (a.time != b.time)
            return a.time < b.time;
        if (a.job != b.job)
            return rank(a.job) < rank(b.job);
        if (a.component != b.component)
            return a.component < b.component;
        return a.transition < b.transition;
    });
    return tl;
}

// ---------------------------------------------------------------------------
// snapshots

std::optional<State> component_state(const ComponentRun& run, double t) {
    if (t < run.submit)
        return std::nullopt;
    if (t < run.start)
        return State::PD;
    if (t < run.complete_begin)
        return State::R;
    if (t < run.complete_end)
        return State::CG;
    return std::nullopt;
}

std::string format_elapsed(double seconds) {
    const auto s = static_cast<long long>(std::floor(std::max(0.0, seconds)));
    char buf[32];
    if (s >= 3600)
        std::snprintf(buf, sizeof buf, "%lld:%02lld:%02lld", s / 3600, (s / 60) % 60, s % 60);
    else
        std::snprintf(buf, sizeof buf, "%lld:%02lld", s / 60, s % 60);
    return buf;
}

std::string compress_nodelist(const std::string& prefix, std::vector<int> numbers) {
    if (numbers.empty())
        return "";
    std::sort(numbers.begin(), numbers.end());
    numbers.erase(std::unique(numbers.begin(), numbers.end()), numbers.end());
    if (numbers.size() == 1)
        return prefix + std::to_string(numbers.front());
    std::string out = prefix + "[";
    for (std::size_t i = 0; i < numbers.size();) {
        std::size_t k = i;
        while (k + 1 < numbers.size() && numbers[k + 1] == numbers[k] + 1)
            ++k;
        if (i > 0)
            out += ",";
        out += std::to_string(numbers[i]);
        if (k > i)
            out += "-" + std::to_string(numbers[k]);
        i = k + 1;
    }
    return out + "]";
}

std::vector<Row> snapshot(const Timeline& timeline, const ClusterSpec& cluster, double t) {
    std::vector<Row> rows;
    for (const JobRun& r : timeline.jobs) {
        for (Partition p : {Partition::HPC, Partition::Q}) {
            const ComponentRun& c = r.component(p);
            const auto st = component_state(c, t);
            if (!st)
                continue;
            Row row;
            row.jobid = std::to_string(r.spec.id) + (p == Partition::HPC ? "+0" : "+1");
            row.partition = p;
            row.name = r.spec.name;
            row.user = r.spec.user;
            row.state = *st;
            row.nodes = c.nodes;
            if (*st == State::PD) {
                row.time = format_elapsed(0.0);
                row.nodelist = "(Resources)";
            } else {
                row.time = format_elapsed(t - c.start);
                const int base = p == Partition::HPC ? cluster.hpc_base : cluster.q_base;
                std::vector<int> numbers;
                for (int i : c.node_indices)
                    numbers.push_back(base + i);
                row.nodelist = compress_nodelist(
                    p == Partition::HPC ? cluster.hpc_prefix : cluster.q_prefix, numbers);
            }
            rows.push_back(std::move(row));
        }
    }
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        const auto sa = to_string(a.state), sb = to_string(b.state);
        if (sa != sb)
            return sa < sb;
        const auto ia = std::stoll(a.jobid), ib = std::stoll(b.jobid);
        if (ia != ib)
            return ia < ib;
        return a.partition < b.partition;
    });
    return rows;
}

std::string render_snapshot(const std::vector<Row>& rows) {
    static constexpr std::string_view header =
        "JOBID PARTITION  NAME   USER ST  TIME NODES NODELIST(REASON)";
    // right edge of each column after JOBID, taken from the header
    static constexpr int edges[] = {15, 21, 28, 31, 37, 43, 60};
    std::string out(header);
    out += '\n';
    for (const Row& r : rows) {
        std::string line = r.jobid;
        const std::string cells[] = {std::string(to_string(r.partition)),
                                     r.name,
                                     r.user,
                                     std::string(to_string(r.state)),
                                     r.time,
                                     std::to_string(r.nodes),
                                     r.nodelist};
        for (std::size_t i = 0; i < std::size(cells); ++i) {
            const int pad = std::max<int>(1, edges[i] - static_cast<int>(line.size()) -
                                                 static_cast<int>(cells[i].size()));
            line.append(static_cast<std::size_t>(pad), ' ');
            line += cells[i];
        }
        out += line;
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// metrics

Metrics metrics(const Timeline& timeline, const ClusterSpec& cluster) {
    Metrics m;
    if (timeline.jobs.empty())
        return m;
    double first = std::numeric_limits<double>::infinity();
    double last = 0.0;
    for (const JobRun& r : timeline.jobs) {
        first = std::min(first, r.hpc.submit);
        last = std::max({last, r.hpc.complete_end, r.q.complete_end});
        m.q_busy += r.spec.q.duration * r.q.nodes;
        m.q_completing += (r.q.complete_end - r.q.complete_begin) * r.q.nodes;
        m.waits.push_back({r.spec.id, std::max(r.hpc.start, r.q.start) - r.spec.submit});
    }
    m.makespan = last - first;
    const double capacity = m.makespan * cluster.q_nodes;
    m.q_idle = capacity - m.q_busy - m.q_completing;
    m.q_utilization = capacity > 0.0 ? m.q_busy / capacity : 0.0;
    return m;
}

nlohmann::ordered_json to_json(const Metrics& m) {
    nlohmann::ordered_json j;
    j["makespan_s"] = m.makespan;
    j["q_busy_node_s"] = m.q_busy;
    j["q_completing_node_s"] = m.q_completing;
    j["q_idle_node_s"] = m.q_idle;
    j["q_utilization"] = m.q_utilization;
    auto& waits = j["wait_s"] = nlohmann::ordered_json::object();
    for (const JobWait& w : m.waits)
        waits[std::to_string(w.id)] = w.wait;
    return j;
}

} // namespace qhyb::sched
