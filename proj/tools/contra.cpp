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

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>
#include <set>
#include <sstream>

#include "contra/compiler.hpp"
#include "contra/simulator.hpp"

namespace fs = std::filesystem;
using namespace contra;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << text;
}

// Without a topology, every identifier that is not a keyword names a node.
std::vector<std::string> guess_alphabet(const std::string& text) {
    static const std::set<std::string> kw = {"minimize", "if",  "then", "else", "not",      "and",
                                             "or",       "inf", "path", "util", "infinity", "len", "lat"};
    std::set<std::string> names;
    std::regex ident("[A-Za-z_][A-Za-z0-9_]*");
    for (auto it = std::sregex_iterator(text.begin(), text.end(), ident); it != std::sregex_iterator(); ++it)
        if (!kw.count(it->str())) names.insert(it->str());
    if (names.empty()) names.insert("_");
    return {names.begin(), names.end()};
}

struct RankedPath {
    RankValue rank;
    std::vector<int> nodes;
    PathAttributes attrs;
};

std::vector<RankedPath> rank_simple_paths(const CompiledPolicy& c, const Topology& t, int src, int dst) {
    std::vector<RankedPath> out;
    std::vector<int> path{src};
    std::vector<char> on(static_cast<std::size_t>(t.num_nodes()), 0);
    on[static_cast<std::size_t>(src)] = 1;
    auto util = [&](int l) {
        auto it = t.fixed_util.find(l);
        return it == t.fixed_util.end() ? Rational(0) : it->second;
    };
    auto rec = [&](auto& self, int u, const PathAttributes& a) -> void {
        if (u == dst) {
            RankValue r = evaluate_rank(c.policy, a, path_verdicts(c.dfas, t, path));
            if (!r.is_infinite()) out.push_back({r, path, a});
            return;
        }
        for (int l : t.out_links(u)) {
            int v = t.link(l).to;
            if (on[static_cast<std::size_t>(v)]) continue;
            on[static_cast<std::size_t>(v)] = 1;
            path.push_back(v);
            self(self, v, extend(a, LinkSample{util(l), Rational(t.link(l).latency_ns, 1000)}));
            path.pop_back();
            on[static_cast<std::size_t>(v)] = 0;
        }
    };
    rec(rec, src, PathAttributes{});
    std::stable_sort(out.begin(), out.end(),
                     [](const RankedPath& a, const RankedPath& b) { return compare_rank(a.rank, b.rank) < 0; });
    return out;
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) out.push_back(item);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Policy compiler and protocol simulator for programmable-dataplane routing"};
    app.require_subcommand(1);

    std::optional<std::uint64_t> seed;
    std::optional<double> probe_period_us, flowlet_timeout_us;
    std::optional<int> k_failure, delta_threshold;
    std::optional<std::string> scheme;
    std::string out_dir;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", seed, "random seed");
        sub->add_option("--probe-period", probe_period_us, "probe period in microseconds");
        sub->add_option("--flowlet-timeout", flowlet_timeout_us, "flowlet timeout in microseconds");
        sub->add_option("--k-failure", k_failure, "missed probe periods before a link is declared failed");
        sub->add_option("--delta-threshold", delta_threshold, "TTL spread that signals a transient loop");
        sub->add_option("--scheme", scheme, "contra|ecmp|hula|spain|sp");
        sub->add_option("--out", out_dir, "output directory");
    };

    std::string policy_file, topo_file, scenario_file, src_name, dst_name, loads_arg, schemes_arg;

    auto* compile = app.add_subcommand("compile", "compile a policy for a topology into a table bundle");
    compile->add_option("policy", policy_file)->required();
    compile->add_option("topology", topo_file)->required();
    add_common(compile);

    auto* analyze = app.add_subcommand("analyze", "report monotonicity, isotonicity and the decomposition");
    analyze->add_option("policy", policy_file)->required();
    analyze->add_option("--topology", topo_file, "topology supplying the node alphabet");
    add_common(analyze);

    auto* oracle = app.add_subcommand("oracle", "rank every compliant simple path between two nodes");
    oracle->add_option("policy", policy_file)->required();
    oracle->add_option("topology", topo_file)->required();
    oracle->add_option("src", src_name)->required();
    oracle->add_option("dst", dst_name)->required();
    add_common(oracle);

    auto* simulate = app.add_subcommand("simulate", "run one scenario");
    simulate->add_option("scenario", scenario_file)->required();
    add_common(simulate);

    auto* sweep_cmd = app.add_subcommand("sweep", "run a scenario at several loads and schemes");
    sweep_cmd->add_option("scenario", scenario_file)->required();
    sweep_cmd->add_option("--loads", loads_arg, "comma-separated loads in (0,1]")->required();
    sweep_cmd->add_option("--schemes", schemes_arg, "comma-separated schemes (default: the scenario's)");
    add_common(sweep_cmd);

    CLI11_PARSE(app, argc, argv);

    auto emit = [&](const std::string& name, const std::string& text) {
        if (out_dir.empty()) {
            std::cout << text;
            return;
        }
        fs::create_directories(out_dir);
        write_file(fs::path(out_dir) / name, text);
    };
    auto apply_overrides = [&](SimConfig& cfg) {
        if (seed) cfg.seed = *seed;
        if (probe_period_us) cfg.runtime.probe_period_ns = static_cast<std::int64_t>(*probe_period_us * 1e3);
        if (flowlet_timeout_us) cfg.runtime.flowlet_timeout_ns = static_cast<std::int64_t>(*flowlet_timeout_us * 1e3);
        if (k_failure) cfg.runtime.k_failure = *k_failure;
        if (delta_threshold) cfg.runtime.delta_threshold = *delta_threshold;
        if (scheme) cfg.scheme = parse_scheme(*scheme);
    };

    try {
        if (*compile) {
            Topology t = load_topology(topo_file);
            auto c = compile_policy(read_file(policy_file), t);
            emit("bundle.json", bundle_json(c, t).dump(2) + "\n");
        } else if (*analyze) {
            std::string text = read_file(policy_file);
            auto alphabet = topo_file.empty() ? guess_alphabet(text) : load_topology(topo_file).names();
            Policy p = parse_policy(text, alphabet);
            FalsifierOptions fo;
            if (seed) fo.seed = *seed;
            auto report = contra::analyze(p, fo);
            std::optional<Decomposition> dec;
            if (report.monotone) dec = decompose(p, report);
            emit("analysis.txt", format_report(p, report, dec ? &*dec : nullptr));
        } else if (*oracle) {
            Topology t = load_topology(topo_file);
            if (t.num_nodes() > 12) throw std::runtime_error("oracle is limited to topologies of at most 12 nodes");
            if (!t.has_node(src_name) || !t.has_node(dst_name)) throw std::runtime_error("unknown endpoint");
            auto c = compile_policy(read_file(policy_file), t);
            std::ostringstream os;
            for (const auto& rp : rank_simple_paths(c, t, t.node(src_name), t.node(dst_name))) {
                os << rp.rank.str() << " ";
                for (std::size_t i = 0; i < rp.nodes.size(); ++i) os << (i ? "-" : "") << t.name(rp.nodes[i]);
                os << " util=" << rp.attrs.util.str() << " len=" << rp.attrs.len << " lat=" << rp.attrs.lat.str()
                   << "\n";
            }
            emit("oracle.txt", os.str());
        } else if (*simulate) {
            SimConfig cfg = load_scenario(scenario_file);
            apply_overrides(cfg);
            Simulator sim(cfg);
            sim.run();
            auto r = sim.report();
            if (out_dir.empty()) {
                std::cout << r.to_text();
            } else {
                emit("report.txt", r.to_records());
                emit("fct.csv", r.fct_csv());
                std::ostringstream tp;
                tp << "t_us,gbps\n";
                for (const auto& s : r.throughput) tp << s.t_ns / 1000 << "," << s.gbps << "\n";
                emit("throughput.csv", tp.str());
                if (cfg.record_paths) {
                    std::ostringstream ps;
                    for (const auto& dp : r.paths) {
                        ps << dp.t_ns << " fid=" << dp.fid << " ";
                        for (std::size_t i = 0; i < dp.nodes.size(); ++i)
                            ps << (i ? "-" : "") << cfg.topo.name(dp.nodes[i]);
                        ps << "\n";
                    }
                    emit("paths.txt", ps.str());
                }
                std::cout << r.to_text();
            }
        } else if (*sweep_cmd) {
            SimConfig cfg = load_scenario(scenario_file);
            apply_overrides(cfg);
            std::vector<double> loads;
            for (const auto& s : split_csv(loads_arg)) loads.push_back(std::stod(s));
            std::vector<Scheme> schemes;
            for (const auto& s : split_csv(schemes_arg)) schemes.push_back(parse_scheme(s));
            if (schemes.empty()) schemes.push_back(cfg.scheme);
            emit("sweep.csv", sweep(cfg, loads, schemes));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
