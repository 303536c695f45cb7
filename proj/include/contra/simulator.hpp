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

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "contra/compiler.hpp"
#include "contra/switch_runtime.hpp"
#include "contra/topology.hpp"

namespace contra {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Scheme { contra, ecmp, hula, spain, sp };
Scheme parse_scheme(std::string_view name);
const char* scheme_name(Scheme s);

// Policy used by the Hula-like baseline (probes restricted to shortest paths).
inline constexpr const char* kHulaPolicy = "minimize((path.len, path.util))";

// Empirical flow-size distribution: (size_bytes, cumulative probability)
// points, linearly interpolated.
struct FlowSizeCdf {
    std::vector<std::pair<double, double>> points;

    double mean_bytes() const;
    std::int64_t sample(std::mt19937_64& rng) const;
};
FlowSizeCdf parse_cdf(std::string_view text);
FlowSizeCdf load_cdf(const std::string& path);

// Scripted change of one directed link's utilization.
struct UtilEvent {
    std::int64_t t_ns = 0;
    int link = -1;
    Rational util;
};

// Extra delay for probes sent on `link` while the send time is in [from, to).
struct ProbeDelay {
    int link = -1;
    std::int64_t extra_ns = 0;
    std::int64_t from_ns = 0;
    std::int64_t to_ns = INT64_MAX;
};

// Takes both directions of the link down; up_ns < 0 means never restored.
struct LinkFailure {
    int link = -1;
    std::int64_t down_ns = 0;
    std::int64_t up_ns = -1;
};

// Constant-rate UDP stream between the first hosts of two switches.
struct CbrSpec {
    int src = -1;
    int dst = -1;
    double gbps = 1.0;
    std::int64_t start_ns = 0;
    std::int64_t stop_ns = 0;
};

// `count` single packets, `gap_ns` apart, all in one flow.
struct Injection {
    std::int64_t t_ns = 0;
    int src = -1;
    int dst = -1;
    int count = 1;
    std::int64_t gap_ns = 0;
    std::uint32_t fid = 1;
};

struct SimConfig {
    Topology topo;
    std::string policy = "minimize(path.util)";
    Scheme scheme = Scheme::contra;
    RuntimeConfig runtime;
    bool tagging = true;  // false compiles the policy with regex tests erased
    std::uint64_t seed = 1;
    std::int64_t duration_ns = 10'000'000;

    std::int64_t mss_bytes = 1500;  // wire size of a full data packet
    std::int64_t header_bytes = 40;
    std::int64_t probe_bytes = 64;
    std::int64_t buffer_mss = 1000;
    std::int64_t util_tau_ns = 0;  // 0: probe period
    double host_gbps = 0;          // 0: fastest topology link
    std::int64_t host_latency_ns = 1'000;
    int init_window = 10;
    int max_window = 0;  // 0: twice the largest bandwidth-delay product, at least 64

    std::optional<FlowSizeCdf> workload;
    double load = 0;
    double load_reference_gbps = 0;  // offered load = load x this; 0: sum of sender host links
    std::int64_t workload_start_ns = 0;
    std::int64_t workload_stop_ns = 0;
    int workload_pairs = 0;  // > 0: traffic only between this many random host pairs
    bool workload_halves = false;  // first half of the hosts send, second half receive

    std::vector<UtilEvent> util_script;
    std::vector<ProbeDelay> probe_delays;
    std::vector<LinkFailure> failures;
    std::vector<CbrSpec> cbr;
    std::vector<Injection> injections;

    bool record_paths = false;
    std::int64_t sample_ns = 100'000;
    bool check_probe_period = true;

    // Stable text form, used for the config hash.
    std::string canonical() const;
    std::uint64_t hash() const;
};

// Line-oriented `key = value` scenario file. Relative paths resolve
// against `base_dir`.
SimConfig parse_scenario(std::string_view text, const std::string& base_dir);
SimConfig load_scenario(const std::string& path);

struct FlowRecord {
    int id = 0;
    int src_host = -1;
    int dst_host = -1;
    std::int64_t bytes = 0;
    std::int64_t start_ns = 0;
    std::int64_t end_ns = -1;  // -1 while incomplete
    int retransmits = 0;
};

struct DeliveredPath {
    std::uint32_t fid = 0;
    std::int64_t t_ns = 0;
    std::vector<int> nodes;
    std::vector<int> tags;  // tag carried on arrival at each node (contra only)
};

struct DetectionRecord {
    int link = -1;
    int node = -1;
    std::int64_t t_fail = -1;  // scripted failure time, -1 if none
    std::int64_t t_last_probe = 0;
    std::int64_t t_detect = 0;
};

struct ThroughputSample {
    std::int64_t t_ns = 0;
    double gbps = 0;
};

struct MetricsReport {
    std::string scheme;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
    std::int64_t end_ns = 0;

    std::vector<FlowRecord> flows;
    int flows_completed = 0;
    double fct_mean_us = 0;  // incomplete flows count up to end_ns
    double fct_p50_us = 0;
    double fct_p99_us = 0;

    std::uint64_t data_bytes_injected = 0;
    std::uint64_t data_bytes_delivered = 0;
    std::uint64_t data_bytes_dropped = 0;
    std::uint64_t data_bytes_in_flight = 0;
    std::uint64_t data_link_bytes = 0;
    std::uint64_t probe_link_bytes = 0;
    double probe_overhead = 0;  // probe bytes / all bytes put on links

    std::uint64_t packets_injected = 0;
    std::uint64_t packets_delivered = 0;
    std::uint64_t drops_buffer = 0;
    std::uint64_t drops_unroutable = 0;
    std::uint64_t drops_ttl = 0;
    std::uint64_t drops_failed_link = 0;
    std::uint64_t looped_packets = 0;
    double looped_fraction = 0;
    std::uint64_t pg_edge_violations = 0;

    std::vector<std::int64_t> peak_queue_bytes;  // per directed link
    std::vector<std::uint64_t> link_drops;       // buffer drops per directed link
    std::vector<std::uint64_t> link_bytes;       // data bytes sent per directed link
    std::uint64_t host_drops = 0;                // buffer drops on switch-to-host ports
    std::int64_t max_queue_bytes = 0;

    std::vector<DetectionRecord> detections;
    std::vector<ThroughputSample> throughput;
    std::vector<DeliveredPath> paths;
    RuntimeCounters counters;
    std::vector<std::string> warnings;

    std::string to_text() const;
    std::string to_records() const;
    std::string fct_csv() const;
};

class Simulator {
public:
    explicit Simulator(SimConfig cfg);
    ~Simulator();
    Simulator(const Simulator&) = delete;
    Simulator& operator=(const Simulator&) = delete;

    // Runs until the configured duration (or until `t_ns` when given).
    void run(std::int64_t t_ns = -1);
    std::int64_t now() const;
    MetricsReport report() const;

    const SimConfig& config() const;
    const CompiledPolicy* compiled() const;  // null for non-contra schemes
    const SwitchRuntime& switch_at(int node) const;
    // Path a host packet from `src` would take right now under the
    // installed tables (contra and hula only); nodes and tags in order.
    DeliveredPath trace(int src, int dst) const;
    // Current utilization seen by probes on a directed link.
    Rational link_util(int link) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

MetricsReport run_simulation(const SimConfig& cfg);

MetricsReport baseline_ecmp(SimConfig cfg);
MetricsReport baseline_hula_like(SimConfig cfg);
MetricsReport baseline_spain_like(SimConfig cfg);
MetricsReport baseline_sp(SimConfig cfg);

// One run per (load, scheme); CSV rows `scheme,load,seed,flows,completed,mean_fct_us,p99_fct_us,drops`.
std::string sweep(const SimConfig& base, const std::vector<double>& loads, const std::vector<Scheme>& schemes);

}  // namespace contra
