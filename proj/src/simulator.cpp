/*
 * Copyright 2026 The Contra Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "contra/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <sstream>

namespace contra {

namespace {

constexpr std::int64_t kInf64 = std::numeric_limits<std::int64_t>::max();

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::uint32_t mix32(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::uint64_t h = 1469598103934665603ull;
    for (std::uint64_t v : {a, b, c})
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xff;
            h *= 1099511628211ull;
        }
    return static_cast<std::uint32_t>(h ^ (h >> 32));
}

std::string fmt(double v, int prec = 3) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

// All-pairs shortest propagation latency (Dijkstra per source).
std::vector<std::vector<std::int64_t>> latency_matrix(const Topology& t) {
    const int n = t.num_nodes();
    std::vector<std::vector<std::int64_t>> d(static_cast<std::size_t>(n), std::vector<std::int64_t>(n, kInf64));
    for (int s = 0; s < n; ++s) {
        auto& ds = d[static_cast<std::size_t>(s)];
        using Item = std::pair<std::int64_t, int>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
        ds[static_cast<std::size_t>(s)] = 0;
        pq.push({0, s});
        while (!pq.empty()) {
            auto [dist, u] = pq.top();
            pq.pop();
            if (dist > ds[static_cast<std::size_t>(u)]) continue;
            for (int l : t.out_links(u)) {
                const auto& L = t.link(l);
                std::int64_t nd = dist + L.latency_ns;
                if (nd < ds[static_cast<std::size_t>(L.to)]) {
                    ds[static_cast<std::size_t>(L.to)] = nd;
                    pq.push({nd, L.to});
                }
            }
        }
    }
    return d;
}

}  // namespace

// ------------------------------------------------------------------ schemes

Scheme parse_scheme(std::string_view name) {
    if (name == "contra") return Scheme::contra;
    if (name == "ecmp") return Scheme::ecmp;
    if (name == "hula") return Scheme::hula;
    if (name == "spain") return Scheme::spain;
    if (name == "sp") return Scheme::sp;
    throw ConfigError("unknown scheme '" + std::string(name) + "'");
}

const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::contra: return "contra";
        case Scheme::ecmp: return "ecmp";
        case Scheme::hula: return "hula";
        case Scheme::spain: return "spain";
        case Scheme::sp: return "sp";
    }
    return "?";
}

// ------------------------------------------------------------------ workload

double FlowSizeCdf::mean_bytes() const {
    if (points.empty()) return 0;
    double m = points.front().first * points.front().second;
    for (std::size_t i = 1; i < points.size(); ++i)
        m += (points[i].second - points[i - 1].second) * (points[i].first + points[i - 1].first) / 2;
    return m;
}

std::int64_t FlowSizeCdf::sample(std::mt19937_64& rng) const {
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (u <= points[i].second) {
            if (i == 0) return static_cast<std::int64_t>(std::llround(points[0].first));
            auto [x0, p0] = points[i - 1];
            auto [x1, p1] = points[i];
            double x = p1 > p0 ? x0 + (x1 - x0) * (u - p0) / (p1 - p0) : x1;
            return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::llround(x)));
        }
    }
    return static_cast<std::int64_t>(std::llround(points.back().first));
}

FlowSizeCdf parse_cdf(std::string_view text) {
    FlowSizeCdf cdf;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        std::istringstream ls(line);
        double size, p;
        if (!(ls >> size)) continue;
        if (!(ls >> p)) throw ConfigError("cdf line " + std::to_string(lineno) + ": expected '<bytes> <cdf>'");
        if (p < 0 || p > 1 || size <= 0) throw ConfigError("cdf line " + std::to_string(lineno) + ": out of range");
        if (!cdf.points.empty() && (p < cdf.points.back().second || size < cdf.points.back().first))
            throw ConfigError("cdf line " + std::to_string(lineno) + ": not monotone");
        cdf.points.emplace_back(size, p);
    }
    if (cdf.points.empty() || cdf.points.back().second != 1.0) throw ConfigError("cdf must end at probability 1");
    return cdf;
}

FlowSizeCdf load_cdf(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open workload file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_cdf(ss.str());
}

// ------------------------------------------------------------------ config

std::string SimConfig::canonical() const {
    std::ostringstream os;
    os << "scheme=" << scheme_name(scheme) << "\npolicy=" << policy << "\nseed=" << seed
       << "\nduration_ns=" << duration_ns << "\nprobe_period_ns=" << runtime.probe_period_ns
       << "\nflowlet_timeout_ns=" << runtime.flowlet_timeout_ns << "\nk_failure=" << runtime.k_failure
       << "\ndelta_threshold=" << runtime.delta_threshold << "\nversioning=" << runtime.versioning
       << "\npolicy_aware_flowlets=" << runtime.policy_aware_flowlets << "\nloop_detection=" << runtime.loop_detection
       << "\ntagging=" << tagging << "\nmss=" << mss_bytes << "\nprobe_bytes=" << probe_bytes
       << "\nbuffer_mss=" << buffer_mss << "\nutil_tau_ns=" << util_tau_ns << "\nhost_gbps=" << fmt(host_gbps, 6)
       << "\nhost_latency_ns=" << host_latency_ns << "\nwindow=" << init_window << "," << max_window
       << "\nload=" << fmt(load, 6) << "," << fmt(load_reference_gbps, 6) << "\nworkload=" << workload.has_value() << ","
       << (workload ? fmt(workload->mean_bytes(), 3) : "") << "," << workload_start_ns << "," << workload_stop_ns
       << "," << workload_pairs << "," << workload_halves << "\nsample_ns=" << sample_ns << "\n";
    for (int i = 0; i < topo.num_nodes(); ++i) os << "node " << topo.name(i) << " hosts=" << topo.hosts(i) << "\n";
    for (int l = 0; l < topo.num_links(); l += 2) {
        const auto& L = topo.link(l);
        os << "link " << topo.name(L.from) << " " << topo.name(L.to) << " " << L.capacity_bps << " " << L.latency_ns
           << "\n";
    }
    for (const auto& [l, u] : topo.fixed_util) os << "util " << l << " " << u.str() << "\n";
    for (const auto& u : util_script) os << "util_at " << u.t_ns << " " << u.link << " " << u.util.str() << "\n";
    for (const auto& p : probe_delays)
        os << "probe_delay " << p.link << " " << p.extra_ns << " " << p.from_ns << " " << p.to_ns << "\n";
    for (const auto& f : failures) os << "fail " << f.link << " " << f.down_ns << " " << f.up_ns << "\n";
    for (const auto& c : cbr)
        os << "cbr " << c.src << " " << c.dst << " " << fmt(c.gbps, 6) << " " << c.start_ns << " " << c.stop_ns
           << "\n";
    for (const auto& j : injections)
        os << "inject " << j.t_ns << " " << j.src << " " << j.dst << " " << j.count << " " << j.gap_ns << " " << j.fid
           << "\n";
    return os.str();
}

std::uint64_t SimConfig::hash() const { return fnv1a(canonical()); }

namespace {

std::string trim(std::string s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::string join_path(const std::string& dir, const std::string& p) {
    if (p.empty() || p[0] == '/' || dir.empty()) return p;
    return dir + "/" + p;
}

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("expected a boolean, got '" + v + "'");
}

std::int64_t us_to_ns(const std::string& v) { return static_cast<std::int64_t>(std::llround(std::stod(v) * 1e3)); }
std::int64_t ms_to_ns(const std::string& v) { return static_cast<std::int64_t>(std::llround(std::stod(v) * 1e6)); }

}  // namespace

SimConfig parse_scenario(std::string_view text, const std::string& base_dir) {
    SimConfig cfg;
    std::vector<std::pair<std::string, std::string>> kv;
    {
        std::istringstream in{std::string(text)};
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
            line = trim(line);
            if (line.empty()) continue;
            auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("scenario line " + std::to_string(lineno) + ": expected 'key = value'");
            kv.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        }
    }
    // Topology first: later keys refer to node names.
    double gen_gbps = 10, gen_us = 1;
    bool have_us = false;
    for (const auto& [k, v] : kv) {
        if (k == "link_gbps") gen_gbps = std::stod(v);
        if (k == "link_us") gen_us = std::stod(v), have_us = true;
    }
    bool have_topo = false;
    for (const auto& [k, v] : kv) {
        if (k != "topology") continue;
        std::istringstream ws(v);
        std::string kind;
        ws >> kind;
        auto cap = static_cast<std::int64_t>(std::llround(gen_gbps * 1e9));
        auto lat = static_cast<std::int64_t>(std::llround(gen_us * 1e3));
        if (kind == "fattree") {
            int k = 4, hosts = -1;
            ws >> k;
            if (!(ws >> hosts)) hosts = k / 2;
            cfg.topo = make_fattree(k, cap, lat, hosts);
        } else if (kind == "abilene") {
            cfg.topo = make_abilene(cap, have_us ? lat : 0);
        } else if (kind == "random") {
            int n = 10;
            double deg = 3;
            std::uint64_t seed = 1;
            ws >> n >> deg >> seed;
            cfg.topo = make_random(n, deg, seed, cap, lat);
        } else {
            cfg.topo = load_topology(join_path(base_dir, v));
        }
        have_topo = true;
    }
    if (!have_topo) throw ConfigError("scenario needs a topology");
    const Topology& t = cfg.topo;
    auto node = [&](const std::string& n) {
        if (!t.has_node(n)) throw ConfigError("unknown node '" + n + "'");
        return t.node(n);
    };
    auto link = [&](const std::string& a, const std::string& b) {
        int l = t.link_between(node(a), node(b));
        if (l < 0) throw ConfigError("no link " + a + "-" + b);
        return l;
    };
    std::uint32_t next_fid = 1;
    for (const auto& [k, v] : kv) {
        std::istringstream ws(v);
        std::vector<std::string> f;
        for (std::string w; ws >> w;) f.push_back(w);
        auto need = [&](std::size_t n) {
            if (f.size() < n) throw ConfigError("key '" + k + "' expects " + std::to_string(n) + " fields");
        };
        try {
            if (k == "topology" || k == "link_gbps" || k == "link_us") {
            } else if (k == "policy") {
                std::ifstream pf(join_path(base_dir, v));
                if (!pf) throw ConfigError("cannot open policy file " + v);
                std::stringstream ss;
                ss << pf.rdbuf();
                cfg.policy = ss.str();
            } else if (k == "policy_text") {
                cfg.policy = v;
            } else if (k == "scheme") {
                cfg.scheme = parse_scheme(v);
            } else if (k == "seed") {
                cfg.seed = std::stoull(v);
            } else if (k == "duration_ms") {
                cfg.duration_ns = ms_to_ns(v);
            } else if (k == "probe_period_us") {
                cfg.runtime.probe_period_ns = us_to_ns(v);
            } else if (k == "flowlet_timeout_us") {
                cfg.runtime.flowlet_timeout_ns = us_to_ns(v);
            } else if (k == "k_failure") {
                cfg.runtime.k_failure = std::stoi(v);
            } else if (k == "delta_threshold") {
                cfg.runtime.delta_threshold = std::stoi(v);
            } else if (k == "versioning") {
                cfg.runtime.versioning = parse_bool(v);
            } else if (k == "policy_aware_flowlets") {
                cfg.runtime.policy_aware_flowlets = parse_bool(v);
            } else if (k == "loop_detection") {
                cfg.runtime.loop_detection = parse_bool(v);
            } else if (k == "tagging") {
                cfg.tagging = parse_bool(v);
            } else if (k == "mss") {
                cfg.mss_bytes = std::stoll(v);
            } else if (k == "probe_bytes") {
                cfg.probe_bytes = std::stoll(v);
            } else if (k == "buffer_mss") {
                cfg.buffer_mss = std::stoll(v);
            } else if (k == "util_tau_us") {
                cfg.util_tau_ns = us_to_ns(v);
            } else if (k == "host_gbps") {
                cfg.host_gbps = std::stod(v);
            } else if (k == "host_latency_us") {
                cfg.host_latency_ns = us_to_ns(v);
            } else if (k == "init_window") {
                cfg.init_window = std::stoi(v);
            } else if (k == "max_window") {
                cfg.max_window = std::stoi(v);
            } else if (k == "workload") {
                cfg.workload = load_cdf(join_path(base_dir, v));
            } else if (k == "load") {
                cfg.load = std::stod(v);
            } else if (k == "workload_start_ms") {
                cfg.workload_start_ns = ms_to_ns(v);
            } else if (k == "workload_stop_ms") {
                cfg.workload_stop_ns = ms_to_ns(v);
            } else if (k == "workload_pairs") {
                cfg.workload_pairs = std::stoi(v);
            } else if (k == "load_reference_gbps") {
                cfg.load_reference_gbps = std::stod(v);
            } else if (k == "workload_halves") {
                cfg.workload_halves = parse_bool(v);
            } else if (k == "util") {
                need(3);
                cfg.topo.fixed_util[link(f[0], f[1])] = Rational::parse(f[2]);
            } else if (k == "util_at") {
                need(4);
                cfg.util_script.push_back({us_to_ns(f[0]), link(f[1], f[2]), Rational::parse(f[3])});
            } else if (k == "probe_delay") {
                need(3);
                ProbeDelay d{link(f[0], f[1]), us_to_ns(f[2]), 0, INT64_MAX};
                if (f.size() >= 5) {
                    d.from_ns = us_to_ns(f[3]);
                    d.to_ns = us_to_ns(f[4]);
                }
                cfg.probe_delays.push_back(d);
            } else if (k == "fail") {
                need(3);
                LinkFailure lf{link(f[0], f[1]) & ~1, ms_to_ns(f[2]), -1};
                if (f.size() >= 4) lf.up_ns = ms_to_ns(f[3]);
                cfg.failures.push_back(lf);
            } else if (k == "cbr") {
                need(5);
                cfg.cbr.push_back({node(f[0]), node(f[1]), std::stod(f[2]), ms_to_ns(f[3]), ms_to_ns(f[4])});
            } else if (k == "inject") {
                need(5);
                Injection j{us_to_ns(f[0]), node(f[1]), node(f[2]), std::stoi(f[3]), us_to_ns(f[4]), next_fid};
                if (f.size() >= 6) j.fid = static_cast<std::uint32_t>(std::stoul(f[5]));
                else ++next_fid;
                cfg.injections.push_back(j);
            } else if (k == "record_paths") {
                cfg.record_paths = parse_bool(v);
            } else if (k == "sample_us") {
                cfg.sample_ns = us_to_ns(v);
            } else if (k == "check_probe_period") {
                cfg.check_probe_period = parse_bool(v);
            } else {
                throw ConfigError("unknown key '" + k + "'");
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError("key '" + k + "': " + e.what());
        }
    }
    return cfg;
}

SimConfig load_scenario(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open scenario file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    auto slash = path.find_last_of('/');
    return parse_scenario(ss.str(), slash == std::string::npos ? std::string(".") : path.substr(0, slash));
}

// ------------------------------------------------------------------ engine

struct Simulator::Impl {
    enum class Ev : std::uint8_t {
        pkt_at_switch,
        pkt_at_host,
        probe_at,
        probe_round,
        liveness,
        flow_arrival,
        ack,
        loss,
        cbr_tick,
        inject,
        link_down,
        link_up,
        util_set,
        sample
    };
    struct Event {
        std::int64_t t;
        std::uint64_t seq;
        Ev kind;
        int a, b, c;
        bool operator>(const Event& o) const { return t != o.t ? t > o.t : seq > o.seq; }
    };

    struct Port {
        std::int64_t bps = 0;
        std::int64_t latency_ns = 0;
        std::int64_t busy_until = 0;
        bool failed = false;
        double dre = 0;  // decayed byte counter
        std::int64_t dre_t = 0;
        std::optional<Rational> override_util;
        std::int64_t peak = 0;
    };

    struct Packet {
        int flow = -1;  // workload flow, -1 for CBR and injected packets
        int seq = 0;
        std::int64_t bytes = 0;
        int dst_sw = -1;
        int dst_host = -1;
        PacketHeader hdr;
        int route = -1;  // SPAIN source route
        int route_pos = 0;
        bool looped = false;
        std::vector<int> path;
        std::vector<int> tags;
    };

    struct Flow {
        FlowRecord rec;
        int src_sw = -1, dst_sw = -1;
        int npkts = 0;
        int next_seq = 0;
        int inflight = 0;
        int delivered = 0;
        double cwnd = 10;
        double ssthresh = 1e18;
        std::int64_t last_cut = -kInf64;
        std::int64_t rtt = 0;
        std::int64_t ack_delay = 0;
        std::uint32_t fid = 0;
        std::vector<char> got;
        std::deque<int> retx;
    };

    struct Flowlet {
        int link = -1;
        int route = -1;
        std::int64_t t = 0;
    };

    SimConfig cfg;
    const Topology& topo;
    std::unique_ptr<CompiledPolicy> compiled;
    std::vector<SwitchRuntime> switches;
    std::vector<int> probe_origins;

    std::int64_t now = 0;
    std::uint64_t seq = 0;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> events;

    std::vector<Port> ports;       // per directed link
    std::vector<Port> host_up;     // per host
    std::vector<Port> host_down;   // per host
    std::vector<int> host_switch;  // per host
    std::vector<std::vector<int>> switch_hosts;
    std::vector<std::vector<std::int64_t>> lat;
    std::vector<std::vector<int>> live_dist;

    std::vector<Packet> pkts;
    std::vector<int> free_pkts;
    std::vector<Probe> probes;
    std::vector<int> free_probes;

    std::vector<Flow> flows;
    std::vector<std::pair<int, int>> host_pairs;
    std::mt19937_64 wl_rng;
    std::mt19937_64 route_rng;

    std::vector<std::map<std::uint32_t, Flowlet>> flowlets;  // baselines
    std::vector<std::vector<int>> routes;
    std::map<std::pair<int, int>, std::vector<int>> route_sets;
    std::map<std::pair<int, int>, std::size_t> rr;

    std::int64_t tau = 0;
    std::int64_t buffer_bytes = 0;
    double host_bps = 0;
    int max_window = 64;
    std::uint32_t version = 0;
    std::uint64_t bin_bytes = 0;
    std::vector<std::int64_t> fail_time;  // per undirected link, last scripted down time

    MetricsReport m;

    explicit Impl(SimConfig c)
        : cfg(std::move(c)), topo(cfg.topo), wl_rng(cfg.seed), route_rng(cfg.seed * 0x9e3779b97f4a7c15ull + 7) {
        const auto& rc = cfg.runtime;
        if (rc.probe_period_ns <= 0) throw ConfigError("probe period must be positive");
        if (!topo.connected()) m.warnings.push_back("topology is not connected");
        const std::int64_t rtt = topo.max_rtt_ns();
        if (uses_probes() && 2 * rc.probe_period_ns < rtt) {
            std::string msg = "probe period " + std::to_string(rc.probe_period_ns) + " ns is below half the max RTT (" +
                              std::to_string(rtt) + " ns)";
            if (cfg.check_probe_period) throw ConfigError(msg);
            m.warnings.push_back(msg);
        }
        tau = cfg.util_tau_ns > 0 ? cfg.util_tau_ns : rc.probe_period_ns;
        buffer_bytes = cfg.buffer_mss * cfg.mss_bytes;

        ports.resize(static_cast<std::size_t>(topo.num_links()));
        std::int64_t fastest = 1;
        for (int l = 0; l < topo.num_links(); ++l) {
            const auto& L = topo.link(l);
            ports[static_cast<std::size_t>(l)].bps = L.capacity_bps;
            ports[static_cast<std::size_t>(l)].latency_ns = L.latency_ns;
            fastest = std::max(fastest, L.capacity_bps);
        }
        for (const auto& [l, u] : topo.fixed_util) ports[static_cast<std::size_t>(l)].override_util = u;
        host_bps = cfg.host_gbps > 0 ? cfg.host_gbps * 1e9 : static_cast<double>(fastest);

        switch_hosts.resize(static_cast<std::size_t>(topo.num_nodes()));
        for (const auto& [sw, count] : topo.host_map())
            for (int i = 0; i < count; ++i) {
                switch_hosts[static_cast<std::size_t>(sw)].push_back(static_cast<int>(host_switch.size()));
                host_switch.push_back(sw);
            }
        Port hp;
        hp.bps = static_cast<std::int64_t>(host_bps);
        hp.latency_ns = cfg.host_latency_ns;
        host_up.assign(host_switch.size(), hp);
        host_down.assign(host_switch.size(), hp);

        lat = latency_matrix(topo);
        live_dist = topo.hop_distances();
        flowlets.resize(static_cast<std::size_t>(topo.num_nodes()));
        fail_time.assign(static_cast<std::size_t>(topo.num_links() / 2 + 1), -1);

        const double bdp_pkts = host_bps * static_cast<double>(rtt) / 8e9 / static_cast<double>(cfg.mss_bytes);
        max_window = cfg.max_window > 0 ? cfg.max_window : std::max(64, static_cast<int>(std::ceil(2 * bdp_pkts)));

        if (uses_probes()) {
            RuntimeConfig r = rc;
            CompileOptions opts;
            if (cfg.scheme == Scheme::hula) {
                r.shortest_only = true;
                compiled = std::make_unique<CompiledPolicy>(compile_policy(std::string(kHulaPolicy), topo, opts));
            } else {
                Policy p = parse_policy(cfg.policy, topo.names());
                if (!cfg.tagging) p = erase_regex_tests(p);
                compiled = std::make_unique<CompiledPolicy>(compile_policy(p, topo, opts));
            }
            switches.reserve(static_cast<std::size_t>(topo.num_nodes()));
            for (int i = 0; i < topo.num_nodes(); ++i) switches.emplace_back(i, *compiled, topo, r);
            // With hosts declared, only switches with hosts originate probes.
            for (int i = 0; i < topo.num_nodes(); ++i)
                if (compiled->pg.sender[static_cast<std::size_t>(i)] >= 0 &&
                    (topo.host_map().empty() || topo.hosts(i) > 0))
                    probe_origins.push_back(i);
            push(0, Ev::probe_round, 0);
            push(std::max<std::int64_t>(1, rc.probe_period_ns / 8), Ev::liveness, 0);
        }

        for (std::size_t i = 0; i < cfg.util_script.size(); ++i)
            push(cfg.util_script[i].t_ns, Ev::util_set, static_cast<int>(i));
        for (std::size_t i = 0; i < cfg.failures.size(); ++i) {
            push(cfg.failures[i].down_ns, Ev::link_down, static_cast<int>(i));
            if (cfg.failures[i].up_ns >= 0) push(cfg.failures[i].up_ns, Ev::link_up, static_cast<int>(i));
        }
        for (std::size_t i = 0; i < cfg.cbr.size(); ++i) push(cfg.cbr[i].start_ns, Ev::cbr_tick, static_cast<int>(i));
        for (std::size_t i = 0; i < cfg.injections.size(); ++i)
            push(cfg.injections[i].t_ns, Ev::inject, static_cast<int>(i), 0);
        if (cfg.workload && cfg.load > 0) {
            if (host_switch.size() < 2) throw ConfigError("workload needs at least two hosts");
            if (cfg.workload_pairs > 0) {
                std::vector<int> hosts(host_switch.size());
                for (std::size_t i = 0; i < hosts.size(); ++i) hosts[i] = static_cast<int>(i);
                std::shuffle(hosts.begin(), hosts.end(), wl_rng);
                if (static_cast<std::size_t>(2 * cfg.workload_pairs) > hosts.size())
                    throw ConfigError("not enough hosts for the requested pairs");
                for (int i = 0; i < cfg.workload_pairs; ++i)
                    host_pairs.emplace_back(hosts[static_cast<std::size_t>(2 * i)],
                                            hosts[static_cast<std::size_t>(2 * i + 1)]);
            }
            if (cfg.workload_pairs > 0 && cfg.workload_halves)
                throw ConfigError("workload_pairs and workload_halves are exclusive");
            push(cfg.workload_start_ns, Ev::flow_arrival, 0);
        }
        if (cfg.sample_ns > 0) push(cfg.sample_ns, Ev::sample, 0);

        m.scheme = scheme_name(cfg.scheme);
        m.seed = cfg.seed;
        m.config_hash = cfg.hash();
        m.peak_queue_bytes.assign(ports.size(), 0);
        m.link_drops.assign(ports.size(), 0);
        m.link_bytes.assign(ports.size(), 0);
    }

    bool uses_probes() const { return cfg.scheme == Scheme::contra || cfg.scheme == Scheme::hula; }

    void push(std::int64_t t, Ev k, int a, int b = 0, int c = 0) { events.push(Event{t, seq++, k, a, b, c}); }

    // ---------------------------------------------------------- links

    double dre_value(const Port& p) const {
        if (p.dre <= 0) return 0;
        return p.dre * std::exp(-static_cast<double>(now - p.dre_t) / static_cast<double>(tau));
    }

    Rational util_of(int link) const {
        const Port& p = ports[static_cast<std::size_t>(link)];
        if (p.override_util) return *p.override_util;
        double rate = dre_value(p) / static_cast<double>(tau);  // bytes per ns
        double u = rate * 8e9 / static_cast<double>(p.bps);
        return Rational::quantize(std::clamp(u, 0.0, 1.0));
    }

    // Returns arrival time at the far end, or -1 when dropped.
    std::int64_t enqueue(Port& p, std::int64_t bytes, bool bounded, std::int64_t* peak_slot) {
        const std::int64_t backlog_ns = std::max<std::int64_t>(0, p.busy_until - now);
        const std::int64_t backlog = static_cast<std::int64_t>(static_cast<double>(backlog_ns) *
                                                               static_cast<double>(p.bps) / 8e9);
        if (bounded && backlog + bytes > buffer_bytes) return -1;
        const std::int64_t tx = (bytes * 8'000'000'000 + p.bps - 1) / p.bps;
        p.busy_until = std::max(now, p.busy_until) + tx;
        p.dre = dre_value(p) + static_cast<double>(bytes);
        p.dre_t = now;
        if (peak_slot) *peak_slot = std::max(*peak_slot, backlog + bytes);
        return p.busy_until + p.latency_ns;
    }

    void recompute_live_dist() {
        Topology live;
        for (int i = 0; i < topo.num_nodes(); ++i) live.add_node(topo.name(i));
        for (int l = 0; l < topo.num_links(); l += 2) {
            if (ports[static_cast<std::size_t>(l)].failed) continue;
            const auto& L = topo.link(l);
            live.add_link(L.from, L.to, L.capacity_bps, L.latency_ns);
        }
        live_dist = live.hop_distances();
    }

    // ---------------------------------------------------------- packets

    int alloc_packet() {
        int id;
        if (!free_pkts.empty()) {
            id = free_pkts.back();
            free_pkts.pop_back();
            auto& p = pkts[static_cast<std::size_t>(id)];
            p.path.clear();
            p.tags.clear();
            p.flow = -1;
            p.route = -1;
            p.route_pos = 0;
            p.looped = false;
            p.hdr = PacketHeader{};
            p.dst_host = -1;
        } else {
            id = static_cast<int>(pkts.size());
            pkts.emplace_back();
        }
        return id;
    }

    void release(int id) { free_pkts.push_back(id); }

    void inject_packet(int id, int src_sw, int src_host) {
        auto& p = pkts[static_cast<std::size_t>(id)];
        ++m.packets_injected;
        m.data_bytes_injected += static_cast<std::uint64_t>(p.bytes);
        if (src_host >= 0) {
            std::int64_t at = enqueue(host_up[static_cast<std::size_t>(src_host)], p.bytes, false, nullptr);
            push(at, Ev::pkt_at_switch, id, src_sw, -1);
        } else {
            push(now, Ev::pkt_at_switch, id, src_sw, -1);
        }
    }

    enum class Drop { buffer, unroutable, ttl, failed };

    void drop(int id, Drop why) {
        auto& p = pkts[static_cast<std::size_t>(id)];
        switch (why) {
            case Drop::buffer: ++m.drops_buffer; break;
            case Drop::unroutable: ++m.drops_unroutable; break;
            case Drop::ttl: ++m.drops_ttl; break;
            case Drop::failed: ++m.drops_failed_link; break;
        }
        m.data_bytes_dropped += static_cast<std::uint64_t>(p.bytes);
        if (p.looped) ++m.looped_packets;
        if (p.flow >= 0) {
            const auto& f = flows[static_cast<std::size_t>(p.flow)];
            push(now + f.rtt, Ev::loss, p.flow, p.seq);
        }
        release(id);
    }

    void send_on_link(int id, int link) {
        Port& port = ports[static_cast<std::size_t>(link)];
        if (port.failed) return drop(id, Drop::failed);
        auto& p = pkts[static_cast<std::size_t>(id)];
        std::int64_t at = enqueue(port, p.bytes, true, &m.peak_queue_bytes[static_cast<std::size_t>(link)]);
        if (at < 0) {
            ++m.link_drops[static_cast<std::size_t>(link)];
            return drop(id, Drop::buffer);
        }
        m.data_link_bytes += static_cast<std::uint64_t>(p.bytes);
        m.link_bytes[static_cast<std::size_t>(link)] += static_cast<std::uint64_t>(p.bytes);
        push(at, Ev::pkt_at_switch, id, topo.link(link).to, link);
    }

    void deliver_local(int id) {
        auto& p = pkts[static_cast<std::size_t>(id)];
        if (p.dst_host >= 0) {
            std::int64_t at = enqueue(host_down[static_cast<std::size_t>(p.dst_host)], p.bytes, true, nullptr);
            if (at < 0) {
                ++m.host_drops;
                return drop(id, Drop::buffer);
            }
            push(at, Ev::pkt_at_host, id);
        } else {
            on_host_delivery(id);
        }
    }

    void on_host_delivery(int id) {
        auto& p = pkts[static_cast<std::size_t>(id)];
        ++m.packets_delivered;
        m.data_bytes_delivered += static_cast<std::uint64_t>(p.bytes);
        bin_bytes += static_cast<std::uint64_t>(p.bytes);
        if (p.looped) ++m.looped_packets;
        if (cfg.record_paths) m.paths.push_back(DeliveredPath{p.hdr.fid, now, p.path, p.tags});
        if (p.flow >= 0) {
            auto& f = flows[static_cast<std::size_t>(p.flow)];
            if (!f.got[static_cast<std::size_t>(p.seq)]) {
                f.got[static_cast<std::size_t>(p.seq)] = 1;
                if (++f.delivered == f.npkts) f.rec.end_ns = now;
            }
            push(now + f.ack_delay, Ev::ack, p.flow, p.seq);
        }
        release(id);
    }

    std::vector<int> shortest_next_links(int sw, int dst) const {
        std::vector<int> out;
        const int d = live_dist[static_cast<std::size_t>(sw)][static_cast<std::size_t>(dst)];
        if (d <= 0) return out;
        for (int l : topo.out_links(sw)) {
            if (ports[static_cast<std::size_t>(l)].failed) continue;
            int nb = topo.link(l).to;
            if (live_dist[static_cast<std::size_t>(nb)][static_cast<std::size_t>(dst)] == d - 1) out.push_back(l);
        }
        return out;
    }

    const std::vector<int>& spain_routes(int src, int dst) {
        auto key = std::make_pair(src, dst);
        auto it = route_sets.find(key);
        if (it != route_sets.end()) return it->second;
        std::vector<int> ids;
        std::set<int> used;  // undirected link index
        for (int k = 0; k < 4; ++k) {
            // BFS avoiding used links.
            std::vector<int> prev(static_cast<std::size_t>(topo.num_nodes()), -2);
            std::deque<int> q{src};
            prev[static_cast<std::size_t>(src)] = -1;
            while (!q.empty() && prev[static_cast<std::size_t>(dst)] == -2) {
                int u = q.front();
                q.pop_front();
                for (int l : topo.out_links(u)) {
                    int v = topo.link(l).to;
                    if (used.count(l / 2) || prev[static_cast<std::size_t>(v)] != -2) continue;
                    prev[static_cast<std::size_t>(v)] = l;
                    q.push_back(v);
                }
            }
            if (prev[static_cast<std::size_t>(dst)] == -2) break;
            std::vector<int> path{dst};
            for (int v = dst; v != src;) {
                int l = prev[static_cast<std::size_t>(v)];
                used.insert(l / 2);
                v = topo.link(l).from;
                path.push_back(v);
            }
            std::reverse(path.begin(), path.end());
            ids.push_back(static_cast<int>(routes.size()));
            routes.push_back(std::move(path));
        }
        return route_sets.emplace(key, std::move(ids)).first->second;
    }

    bool route_alive(int r) const {
        const auto& path = routes[static_cast<std::size_t>(r)];
        for (std::size_t i = 0; i + 1 < path.size(); ++i)
            if (ports[static_cast<std::size_t>(topo.link_between(path[i], path[i + 1]))].failed) return false;
        return true;
    }

    void on_packet_at_switch(int id, int sw, int in_link) {
        if (in_link >= 0 && ports[static_cast<std::size_t>(in_link)].failed) return drop(id, Drop::failed);
        auto& p = pkts[static_cast<std::size_t>(id)];
        const bool from_host = in_link < 0;
        if (std::find(p.path.begin(), p.path.end(), sw) != p.path.end()) p.looped = true;
        p.path.push_back(sw);
        if (cfg.record_paths && uses_probes()) p.tags.push_back(from_host ? -1 : p.hdr.tag);

        if (uses_probes()) {
            Decision d = switches[static_cast<std::size_t>(sw)].forward_packet(p.hdr, from_host, now);
            switch (d.kind) {
                case Decision::Kind::deliver: return deliver_local(id);
                case Decision::Kind::drop_ttl: return drop(id, Drop::ttl);
                case Decision::Kind::drop_unroutable: return drop(id, Drop::unroutable);
                case Decision::Kind::send: break;
            }
            if (cfg.record_paths && from_host) p.tags.back() = d.tag;
            const auto& pg = compiled->pg;
            int here = pg.node_at(sw, d.tag);
            int there = pg.node_at(topo.link(d.link).to, p.hdr.tag);
            if (here < 0 || there < 0 ||
                std::find(pg.succ[static_cast<std::size_t>(there)].begin(),
                          pg.succ[static_cast<std::size_t>(there)].end(),
                          here) == pg.succ[static_cast<std::size_t>(there)].end())
                ++m.pg_edge_violations;
            return send_on_link(id, d.link);
        }

        if (sw == p.dst_sw) return deliver_local(id);
        if (!from_host && --p.hdr.ttl <= 0) return drop(id, Drop::ttl);
        auto& table = flowlets[static_cast<std::size_t>(sw)];
        const std::int64_t timeout = cfg.runtime.flowlet_timeout_ns;
        int link = -1;
        if (cfg.scheme == Scheme::spain) {
            if (from_host) {
                auto it = table.find(p.hdr.fid);
                bool live = it != table.end() && now - it->second.t <= timeout && route_alive(it->second.route);
                if (live) {
                    it->second.t = now;
                    p.route = it->second.route;
                } else {
                    const auto& set = spain_routes(sw, p.dst_sw);
                    std::size_t& next = rr[{sw, p.dst_sw}];
                    p.route = -1;
                    for (std::size_t i = 0; i < set.size(); ++i) {
                        int r = set[(next + i) % set.size()];
                        if (route_alive(r)) {
                            p.route = r;
                            next = (next + i + 1) % set.size();
                            break;
                        }
                    }
                    if (p.route < 0) return drop(id, Drop::unroutable);
                    if (timeout > 0) table[p.hdr.fid] = Flowlet{-1, p.route, now};
                }
                p.route_pos = 0;
            }
            const auto& path = routes[static_cast<std::size_t>(p.route)];
            if (p.route_pos + 1 >= static_cast<int>(path.size())) return drop(id, Drop::unroutable);
            link = topo.link_between(sw, path[static_cast<std::size_t>(++p.route_pos)]);
        } else {
            auto it = table.find(p.hdr.fid);
            if (timeout > 0 && it != table.end() && now - it->second.t <= timeout &&
                !ports[static_cast<std::size_t>(it->second.link)].failed &&
                live_dist[static_cast<std::size_t>(topo.link(it->second.link).to)][static_cast<std::size_t>(
                    p.dst_sw)] >= 0) {
                it->second.t = now;
                link = it->second.link;
            } else {
                auto cands = shortest_next_links(sw, p.dst_sw);
                if (cands.empty()) return drop(id, Drop::unroutable);
                if (cfg.scheme == Scheme::ecmp)
                    link = cands[std::uniform_int_distribution<std::size_t>(0, cands.size() - 1)(route_rng)];
                else
                    link = cands.front();
                if (timeout > 0) table[p.hdr.fid] = Flowlet{link, -1, now};
            }
        }
        send_on_link(id, link);
    }

    // ---------------------------------------------------------- probes

    void send_probes(const std::vector<OutProbe>& outs) {
        for (const auto& o : outs) {
            const Port& port = ports[static_cast<std::size_t>(o.link)];
            if (port.failed) continue;
            m.probe_link_bytes += static_cast<std::uint64_t>(cfg.probe_bytes);
            std::int64_t delay = (cfg.probe_bytes * 8'000'000'000 + port.bps - 1) / port.bps + port.latency_ns;
            for (const auto& d : cfg.probe_delays)
                if (d.link == o.link && now >= d.from_ns && now < d.to_ns) delay += d.extra_ns;
            int id;
            if (!free_probes.empty()) {
                id = free_probes.back();
                free_probes.pop_back();
                probes[static_cast<std::size_t>(id)] = o.probe;
            } else {
                id = static_cast<int>(probes.size());
                probes.push_back(o.probe);
            }
            push(now + delay, Ev::probe_at, id, o.link);
        }
    }

    void on_probe(int id, int link) {
        Probe p = probes[static_cast<std::size_t>(id)];
        free_probes.push_back(id);
        if (ports[static_cast<std::size_t>(link)].failed) return;
        auto& sw = switches[static_cast<std::size_t>(topo.link(link).to)];
        send_probes(sw.process_probe(p, link, now, [this](int l) { return util_of(l); }));
    }

    // ---------------------------------------------------------- flows

    void start_flow() {
        Flow f;
        f.rec.id = static_cast<int>(flows.size());
        if (!host_pairs.empty()) {
            auto pr = host_pairs[std::uniform_int_distribution<std::size_t>(0, host_pairs.size() - 1)(wl_rng)];
            f.rec.src_host = pr.first;
            f.rec.dst_host = pr.second;
        } else if (cfg.workload_halves) {
            const std::size_t half = host_switch.size() / 2;
            f.rec.src_host = static_cast<int>(std::uniform_int_distribution<std::size_t>(0, half - 1)(wl_rng));
            f.rec.dst_host =
                static_cast<int>(half + std::uniform_int_distribution<std::size_t>(0, host_switch.size() - half - 1)(wl_rng));
        } else {
            const std::size_t nh = host_switch.size();
            f.rec.src_host = static_cast<int>(std::uniform_int_distribution<std::size_t>(0, nh - 1)(wl_rng));
            auto d = static_cast<int>(std::uniform_int_distribution<std::size_t>(0, nh - 2)(wl_rng));
            f.rec.dst_host = d >= f.rec.src_host ? d + 1 : d;
        }
        f.rec.bytes = cfg.workload->sample(wl_rng);
        f.rec.start_ns = now;
        f.src_sw = host_switch[static_cast<std::size_t>(f.rec.src_host)];
        f.dst_sw = host_switch[static_cast<std::size_t>(f.rec.dst_host)];
        const std::int64_t payload = cfg.mss_bytes - cfg.header_bytes;
        f.npkts = static_cast<int>((f.rec.bytes + payload - 1) / payload);
        f.got.assign(static_cast<std::size_t>(f.npkts), 0);
        f.cwnd = cfg.init_window;
        const std::int64_t one_way = lat[static_cast<std::size_t>(f.src_sw)][static_cast<std::size_t>(f.dst_sw)] +
                                     2 * cfg.host_latency_ns;
        const std::int64_t tx = static_cast<std::int64_t>(static_cast<double>(cfg.mss_bytes) * 8e9 / host_bps);
        f.ack_delay = one_way;
        f.rtt = 2 * one_way + 2 * tx;
        f.fid = mix32(static_cast<std::uint64_t>(f.rec.id), static_cast<std::uint64_t>(f.rec.src_host),
                      static_cast<std::uint64_t>(f.rec.dst_host));
        flows.push_back(std::move(f));
        try_send(static_cast<int>(flows.size()) - 1);
    }

    void try_send(int fi) {
        auto& f = flows[static_cast<std::size_t>(fi)];
        const std::int64_t payload = cfg.mss_bytes - cfg.header_bytes;
        while (f.inflight < static_cast<int>(f.cwnd) && (!f.retx.empty() || f.next_seq < f.npkts)) {
            int s;
            bool retx = !f.retx.empty();
            if (retx) {
                s = f.retx.front();
                f.retx.pop_front();
            } else {
                s = f.next_seq++;
            }
            int id = alloc_packet();
            auto& p = pkts[static_cast<std::size_t>(id)];
            p.flow = fi;
            p.seq = s;
            std::int64_t last = f.rec.bytes - payload * (f.npkts - 1);
            p.bytes = (s == f.npkts - 1 ? last : payload) + cfg.header_bytes;
            p.dst_sw = f.dst_sw;
            p.dst_host = f.rec.dst_host;
            p.hdr.dst = f.dst_sw;
            p.hdr.fid = f.fid;
            p.hdr.pkt_hash = mix32(f.fid, static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(f.rec.retransmits));
            ++f.inflight;
            inject_packet(id, f.src_sw, f.rec.src_host);
        }
    }

    void on_ack(int fi) {
        auto& f = flows[static_cast<std::size_t>(fi)];
        --f.inflight;
        if (f.cwnd < f.ssthresh) f.cwnd += 1;
        else f.cwnd += 1.0 / f.cwnd;
        f.cwnd = std::min<double>(f.cwnd, max_window);
        try_send(fi);
    }

    void on_loss(int fi, int s) {
        auto& f = flows[static_cast<std::size_t>(fi)];
        --f.inflight;
        ++f.rec.retransmits;
        f.retx.push_back(s);
        if (now - f.last_cut >= f.rtt) {
            f.ssthresh = std::max(2.0, f.cwnd / 2);
            f.cwnd = f.ssthresh;
            f.last_cut = now;
        }
        try_send(fi);
    }

    int make_raw_packet(int src, int dst, std::uint32_t fid, std::uint32_t hash) {
        int id = alloc_packet();
        auto& p = pkts[static_cast<std::size_t>(id)];
        p.bytes = cfg.mss_bytes;
        p.dst_sw = dst;
        p.hdr.dst = dst;
        p.hdr.fid = fid;
        p.hdr.pkt_hash = hash;
        (void)src;
        return id;
    }

    // ---------------------------------------------------------- loop

    void step(const Event& e) {
        switch (e.kind) {
            case Ev::pkt_at_switch: on_packet_at_switch(e.a, e.b, e.c); break;
            case Ev::pkt_at_host: on_host_delivery(e.a); break;
            case Ev::probe_at: on_probe(e.a, e.b); break;
            case Ev::probe_round: {
                ++version;
                for (int o : probe_origins) send_probes(switches[static_cast<std::size_t>(o)].init_probes(version, now));
                push(now + cfg.runtime.probe_period_ns, Ev::probe_round, 0);
                break;
            }
            case Ev::liveness: {
                for (auto& sw : switches)
                    for (int l : sw.check_liveness(now)) {
                        DetectionRecord r;
                        r.link = l;
                        r.node = sw.node();
                        r.t_fail = fail_time[static_cast<std::size_t>(l / 2)];
                        r.t_last_probe = sw.last_probe(l);
                        r.t_detect = now;
                        m.detections.push_back(r);
                    }
                push(now + std::max<std::int64_t>(1, cfg.runtime.probe_period_ns / 8), Ev::liveness, 0);
                break;
            }
            case Ev::flow_arrival: {
                if (cfg.workload_stop_ns > 0 && now >= cfg.workload_stop_ns) break;
                start_flow();
                double senders = static_cast<double>(host_switch.size());
                if (!host_pairs.empty()) senders = static_cast<double>(host_pairs.size());
                else if (cfg.workload_halves) senders = static_cast<double>(host_switch.size() / 2);
                const double offered_bps =
                    cfg.load * (cfg.load_reference_gbps > 0 ? cfg.load_reference_gbps * 1e9 : host_bps * senders);
                const double rate_per_ns = offered_bps / 8.0 / cfg.workload->mean_bytes() / 1e9;
                double gap = std::exponential_distribution<double>(rate_per_ns)(wl_rng);
                push(now + std::max<std::int64_t>(1, static_cast<std::int64_t>(gap)), Ev::flow_arrival, 0);
                break;
            }
            case Ev::ack: on_ack(e.a); break;
            case Ev::loss: on_loss(e.a, e.b); break;
            case Ev::cbr_tick: {
                const auto& c = cfg.cbr[static_cast<std::size_t>(e.a)];
                if (now >= c.stop_ns) break;
                auto fid = mix32(0xcb, static_cast<std::uint64_t>(e.a), 0);
                int id = make_raw_packet(c.src, c.dst, fid, mix32(fid, static_cast<std::uint64_t>(e.b), 1));
                const auto& hs = switch_hosts[static_cast<std::size_t>(c.dst)];
                pkts[static_cast<std::size_t>(id)].dst_host = hs.empty() ? -1 : hs.front();
                const auto& src_hosts = switch_hosts[static_cast<std::size_t>(c.src)];
                inject_packet(id, c.src, src_hosts.empty() ? -1 : src_hosts.front());
                auto gap = static_cast<std::int64_t>(static_cast<double>(cfg.mss_bytes) * 8.0 / c.gbps);
                push(now + std::max<std::int64_t>(1, gap), Ev::cbr_tick, e.a, e.b + 1);
                break;
            }
            case Ev::inject: {
                const auto& j = cfg.injections[static_cast<std::size_t>(e.a)];
                int id = make_raw_packet(j.src, j.dst, j.fid,
                                         mix32(j.fid, static_cast<std::uint64_t>(e.a), static_cast<std::uint64_t>(e.b)));
                inject_packet(id, j.src, -1);
                if (e.b + 1 < j.count) push(now + j.gap_ns, Ev::inject, e.a, e.b + 1);
                break;
            }
            case Ev::link_down:
            case Ev::link_up: {
                const auto& f = cfg.failures[static_cast<std::size_t>(e.a)];
                const bool down = e.kind == Ev::link_down;
                ports[static_cast<std::size_t>(f.link)].failed = down;
                ports[static_cast<std::size_t>(f.link ^ 1)].failed = down;
                if (down) fail_time[static_cast<std::size_t>(f.link / 2)] = now;
                recompute_live_dist();
                break;
            }
            case Ev::util_set: {
                const auto& u = cfg.util_script[static_cast<std::size_t>(e.a)];
                ports[static_cast<std::size_t>(u.link)].override_util = u.util;
                break;
            }
            case Ev::sample: {
                m.throughput.push_back(
                    {now, static_cast<double>(bin_bytes) * 8.0 / static_cast<double>(cfg.sample_ns)});
                bin_bytes = 0;
                push(now + cfg.sample_ns, Ev::sample, 0);
                break;
            }
        }
    }

    void run(std::int64_t until) {
        while (!events.empty() && events.top().t <= until) {
            Event e = events.top();
            events.pop();
            now = e.t;
            step(e);
        }
        now = std::max(now, until);
    }

    MetricsReport report() const {
        MetricsReport r = m;
        r.end_ns = now;
        for (const auto& f : flows) r.flows.push_back(f.rec);
        std::vector<double> fct;
        for (const auto& f : r.flows) {
            if (f.end_ns >= 0) ++r.flows_completed;
            fct.push_back(static_cast<double>((f.end_ns >= 0 ? f.end_ns : now) - f.start_ns) / 1e3);
        }
        if (!fct.empty()) {
            double sum = 0;
            for (double v : fct) sum += v;
            r.fct_mean_us = sum / static_cast<double>(fct.size());
            std::sort(fct.begin(), fct.end());
            auto pct = [&](double q) {
                auto i = static_cast<std::size_t>(std::ceil(q * static_cast<double>(fct.size()))) - 1;
                return fct[std::min(i, fct.size() - 1)];
            };
            r.fct_p50_us = pct(0.5);
            r.fct_p99_us = pct(0.99);
        }
        std::set<int> free(free_pkts.begin(), free_pkts.end());
        for (std::size_t i = 0; i < pkts.size(); ++i)
            if (!free.count(static_cast<int>(i))) r.data_bytes_in_flight += static_cast<std::uint64_t>(pkts[i].bytes);
        const double total = static_cast<double>(r.data_link_bytes + r.probe_link_bytes);
        r.probe_overhead = total > 0 ? static_cast<double>(r.probe_link_bytes) / total : 0;
        r.looped_fraction =
            r.packets_injected > 0 ? static_cast<double>(r.looped_packets) / static_cast<double>(r.packets_injected) : 0;
        for (auto q : r.peak_queue_bytes) r.max_queue_bytes = std::max(r.max_queue_bytes, q);
        for (const auto& sw : switches) {
            const auto& c = sw.counters();
            auto& t = r.counters;
            t.probes_sent += c.probes_sent;
            t.probes_received += c.probes_received;
            t.probes_discarded_stale += c.probes_discarded_stale;
            t.probes_not_better += c.probes_not_better;
            t.probes_unresolved += c.probes_unresolved;
            t.packets_forwarded += c.packets_forwarded;
            t.packets_delivered += c.packets_delivered;
            t.packets_unroutable += c.packets_unroutable;
            t.packets_ttl_expired += c.packets_ttl_expired;
            t.flowlet_flushes += c.flowlet_flushes;
            t.loop_detections += c.loop_detections;
            t.failure_detections += c.failure_detections;
            t.pareto_overflows += c.pareto_overflows;
        }
        return r;
    }

    DeliveredPath trace(int src, int dst) const {
        DeliveredPath out;
        if (!uses_probes()) return out;
        const auto& first = switches[static_cast<std::size_t>(src)];
        if (src == dst) {
            out.nodes.push_back(src);
            return out;
        }
        auto key = first.best(dst);
        if (!key) return out;
        int at = src;
        const int limit = 4 * topo.num_nodes() + 4;
        for (int hops = 0; hops < limit; ++hops) {
            out.nodes.push_back(at);
            out.tags.push_back(key->tag);
            const auto& table = switches[static_cast<std::size_t>(at)].fwd_table();
            auto it = table.find(*key);
            if (it == table.end()) return out;
            at = it->second.nhop;
            *key = FwdKey{dst, it->second.ntag, key->pid, it->second.nslot};
            if (at == dst) {
                out.nodes.push_back(at);
                out.tags.push_back(key->tag);
                return out;
            }
        }
        return out;
    }
};

Simulator::Simulator(SimConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {}
Simulator::~Simulator() = default;

void Simulator::run(std::int64_t t_ns) { impl_->run(t_ns < 0 ? impl_->cfg.duration_ns : t_ns); }
std::int64_t Simulator::now() const { return impl_->now; }
MetricsReport Simulator::report() const { return impl_->report(); }
const SimConfig& Simulator::config() const { return impl_->cfg; }
const CompiledPolicy* Simulator::compiled() const { return impl_->compiled.get(); }
const SwitchRuntime& Simulator::switch_at(int node) const {
    return impl_->switches.at(static_cast<std::size_t>(node));
}
DeliveredPath Simulator::trace(int src, int dst) const { return impl_->trace(src, dst); }
Rational Simulator::link_util(int link) const { return impl_->util_of(link); }

MetricsReport run_simulation(const SimConfig& cfg) {
    Simulator sim(cfg);
    sim.run();
    return sim.report();
}

namespace {
MetricsReport with_scheme(SimConfig cfg, Scheme s) {
    cfg.scheme = s;
    return run_simulation(cfg);
}
}  // namespace

MetricsReport baseline_ecmp(SimConfig cfg) { return with_scheme(std::move(cfg), Scheme::ecmp); }
MetricsReport baseline_hula_like(SimConfig cfg) { return with_scheme(std::move(cfg), Scheme::hula); }
MetricsReport baseline_spain_like(SimConfig cfg) { return with_scheme(std::move(cfg), Scheme::spain); }
MetricsReport baseline_sp(SimConfig cfg) { return with_scheme(std::move(cfg), Scheme::sp); }

std::string sweep(const SimConfig& base, const std::vector<double>& loads, const std::vector<Scheme>& schemes) {
    std::ostringstream os;
    os << "scheme,load,seed,flows,completed,mean_fct_us,p99_fct_us,drops\n";
    for (double load : loads) {
        if (!(load > 0 && load <= 1)) throw ConfigError("load must lie in (0, 1]");
        for (Scheme s : schemes) {
            SimConfig c = base;
            c.load = load;
            c.scheme = s;
            auto r = run_simulation(c);
            os << scheme_name(s) << "," << fmt(load, 2) << "," << r.seed << "," << r.flows.size() << ","
               << r.flows_completed << "," << fmt(r.fct_mean_us) << "," << fmt(r.fct_p99_us) << ","
               << (r.drops_buffer + r.drops_unroutable + r.drops_ttl + r.drops_failed_link) << "\n";
        }
    }
    return os.str();
}

// ------------------------------------------------------------------ output

std::string MetricsReport::to_text() const {
    std::ostringstream os;
    os << "scheme            " << scheme << "\n"
       << "seed              " << seed << "\n"
       << "config_hash       " << std::hex << config_hash << std::dec << "\n"
       << "end_ms            " << fmt(static_cast<double>(end_ns) / 1e6) << "\n"
       << "flows             " << flows.size() << " (" << flows_completed << " completed)\n"
       << "fct_us            mean " << fmt(fct_mean_us) << "  p50 " << fmt(fct_p50_us) << "  p99 "
       << fmt(fct_p99_us) << "\n"
       << "packets           injected " << packets_injected << "  delivered " << packets_delivered << "\n"
       << "drops             buffer " << drops_buffer << "  unroutable " << drops_unroutable << "  ttl " << drops_ttl
       << "  failed_link " << drops_failed_link << "\n"
       << "bytes             injected " << data_bytes_injected << "  delivered " << data_bytes_delivered
       << "  dropped " << data_bytes_dropped << "  in_flight " << data_bytes_in_flight << "\n"
       << "probe_overhead    " << fmt(100 * probe_overhead, 4) << " %\n"
       << "looped_fraction   " << fmt(100 * looped_fraction, 4) << " %\n"
       << "max_queue_bytes   " << max_queue_bytes << "\n"
       << "detections        " << detections.size() << "\n"
       << "probes            sent " << counters.probes_sent << "  stale " << counters.probes_discarded_stale
       << "  unresolved " << counters.probes_unresolved << "\n"
       << "loop_detections   " << counters.loop_detections << "  flowlet_flushes " << counters.flowlet_flushes
       << "\n";
    for (const auto& w : warnings) os << "warning           " << w << "\n";
    return os.str();
}

std::string MetricsReport::to_records() const {
    std::ostringstream os;
    os << "scheme=" << scheme << "\nseed=" << seed << "\nconfig_hash=" << std::hex << config_hash << std::dec
       << "\nend_ns=" << end_ns << "\nflows=" << flows.size() << "\nflows_completed=" << flows_completed
       << "\nfct_mean_us=" << fmt(fct_mean_us) << "\nfct_p50_us=" << fmt(fct_p50_us)
       << "\nfct_p99_us=" << fmt(fct_p99_us) << "\npackets_injected=" << packets_injected
       << "\npackets_delivered=" << packets_delivered << "\ndrops_buffer=" << drops_buffer
       << "\ndrops_unroutable=" << drops_unroutable << "\ndrops_ttl=" << drops_ttl
       << "\ndrops_failed_link=" << drops_failed_link << "\ndrops_host_port=" << host_drops
       << "\ndata_bytes_injected=" << data_bytes_injected
       << "\ndata_bytes_delivered=" << data_bytes_delivered << "\ndata_bytes_dropped=" << data_bytes_dropped
       << "\ndata_bytes_in_flight=" << data_bytes_in_flight << "\ndata_link_bytes=" << data_link_bytes
       << "\nprobe_link_bytes=" << probe_link_bytes << "\nprobe_overhead=" << fmt(probe_overhead, 6)
       << "\nlooped_packets=" << looped_packets << "\nlooped_fraction=" << fmt(looped_fraction, 6)
       << "\npg_edge_violations=" << pg_edge_violations << "\nmax_queue_bytes=" << max_queue_bytes
       << "\nprobes_sent=" << counters.probes_sent << "\nprobes_received=" << counters.probes_received
       << "\nprobes_discarded_stale=" << counters.probes_discarded_stale
       << "\nprobes_unresolved=" << counters.probes_unresolved << "\nflowlet_flushes=" << counters.flowlet_flushes
       << "\nloop_detections=" << counters.loop_detections
       << "\nfailure_detections=" << counters.failure_detections
       << "\npareto_overflows=" << counters.pareto_overflows << "\n";
    for (std::size_t i = 0; i < detections.size(); ++i) {
        const auto& d = detections[i];
        os << "detection." << i << "=link:" << d.link << ",node:" << d.node << ",t_fail:" << d.t_fail
           << ",t_last_probe:" << d.t_last_probe << ",t_detect:" << d.t_detect << "\n";
    }
    for (std::size_t l = 0; l < link_drops.size(); ++l)
        if (link_drops[l]) os << "link_drops." << l << "=" << link_drops[l] << "\n";
    for (std::size_t l = 0; l < link_bytes.size(); ++l)
        if (link_bytes[l]) os << "link_bytes." << l << "=" << link_bytes[l] << "\n";
    for (std::size_t i = 0; i < warnings.size(); ++i) os << "warning." << i << "=" << warnings[i] << "\n";
    return os.str();
}

std::string MetricsReport::fct_csv() const {
    std::ostringstream os;
    os << "id,src_host,dst_host,bytes,start_ns,end_ns,fct_us,retransmits\n";
    for (const auto& f : flows) {
        os << f.id << "," << f.src_host << "," << f.dst_host << "," << f.bytes << "," << f.start_ns << "," << f.end_ns
           << "," << (f.end_ns >= 0 ? fmt(static_cast<double>(f.end_ns - f.start_ns) / 1e3) : std::string("")) << ","
           << f.retransmits << "\n";
    }
    return os.str();
}

}  // namespace contra
