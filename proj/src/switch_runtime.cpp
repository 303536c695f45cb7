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

#include "contra/switch_runtime.hpp"

#include <algorithm>
#include <sstream>

namespace contra {

namespace {

constexpr int kIngressTag = -1;

bool dominates(const PathAttributes& a, const PathAttributes& b, const std::set<Attr>& dims) {
    for (Attr d : dims)
        if (a.get(d) > b.get(d)) return false;
    return true;
}

std::string mv_str(const PathAttributes& mv, const std::set<Attr>& attrs) {
    std::string out;
    for (Attr a : attrs) {
        if (!out.empty()) out += ",";
        out += std::string(attr_name(a)) + ":" + (a == Attr::len ? std::to_string(mv.len) : mv.get(a).str());
    }
    return out.empty() ? "-" : out;
}

}  // namespace

SwitchRuntime::SwitchRuntime(int node, const CompiledPolicy& compiled, const Topology& topo, RuntimeConfig cfg)
    : node_(node), c_(compiled), topo_(topo), cfg_(cfg), loops_(std::max<std::size_t>(1, cfg.loop_table_size)) {
    if (cfg_.shortest_only) hops_ = topo_.hop_distances();
    for (int l : topo_.out_links(node_)) last_probe_[l] = 0;
}

RankValue SwitchRuntime::f_value(int pid, const PathAttributes& mv) const {
    const auto& sp = c_.decomposition.subpolicies.at(static_cast<std::size_t>(pid));
    try {
        return evaluate_expr(*sp.branch_rank, mv, 0, c_.policy.arity);
    } catch (const EvalError&) {
        return RankValue{std::vector<Extended>(c_.policy.arity, Extended::infinity())};
    }
}

RankValue SwitchRuntime::s_value(const FwdKey& key, const FwdEntry& e) const {
    int id = c_.pg.node_at(node_, key.tag);
    VerdictMask v = id >= 0 ? c_.pg.nodes[static_cast<std::size_t>(id)].accept : 0;
    try {
        return evaluate_rank(c_.policy, e.mv, v);
    } catch (const EvalError&) {
        return RankValue{std::vector<Extended>(c_.policy.arity, Extended::infinity())};
    }
}

std::optional<FwdKey> SwitchRuntime::best(int dst) const {
    auto it = best_.find(dst);
    if (it == best_.end()) return std::nullopt;
    return it->second;
}

bool SwitchRuntime::link_marked_failed(int link) const {
    auto it = failed_.find(link);
    return it != failed_.end() && it->second;
}

std::int64_t SwitchRuntime::last_probe(int link) const {
    auto it = last_probe_.find(link);
    return it == last_probe_.end() ? 0 : it->second;
}

bool SwitchRuntime::check_link_failed(int link, std::int64_t now) const {
    auto it = last_probe_.find(link);
    std::int64_t last = it == last_probe_.end() ? 0 : it->second;
    return now - last > static_cast<std::int64_t>(cfg_.k_failure) * cfg_.probe_period_ns;
}

std::vector<OutProbe> SwitchRuntime::multicast(int pg_node, const Probe& p) {
    std::vector<OutProbe> out;
    const int here = node_;
    for (int m : c_.pg.succ[static_cast<std::size_t>(pg_node)]) {
        int z = c_.pg.nodes[static_cast<std::size_t>(m)].loc;
        if (z == p.origin) continue;
        if (cfg_.shortest_only &&
            hops_[static_cast<std::size_t>(z)][static_cast<std::size_t>(p.origin)] !=
                hops_[static_cast<std::size_t>(here)][static_cast<std::size_t>(p.origin)] + 1)
            continue;
        int link = topo_.link_between(here, z);
        if (link < 0) continue;
        out.push_back({link, p});
        ++counters_.probes_sent;
    }
    return out;
}

std::vector<OutProbe> SwitchRuntime::init_probes(std::uint32_t version, std::int64_t) {
    std::vector<OutProbe> out;
    int s = c_.pg.sender[static_cast<std::size_t>(node_)];
    if (s < 0) return out;
    latest_[node_] = version;
    for (const auto& sp : c_.decomposition.subpolicies) {
        Probe p;
        p.origin = node_;
        p.pid = sp.pid;
        p.tag = c_.pg.nodes[static_cast<std::size_t>(s)].tag;
        p.version = version;
        auto m = multicast(s, p);
        out.insert(out.end(), m.begin(), m.end());
    }
    return out;
}

std::vector<OutProbe> SwitchRuntime::process_probe(Probe p, int in_link, std::int64_t now, const UtilFn& util) {
    ++counters_.probes_received;
    const auto& in = topo_.link(in_link);
    const int from = in.from;
    const int egress = Topology::reverse(in_link);
    last_probe_[egress] = now;
    if (link_marked_failed(egress)) failed_[egress] = false;
    if (p.origin == node_) return {};

    int prev = c_.pg.node_at(from, p.tag);
    int n = prev >= 0 ? c_.pg.next(prev, node_) : -1;
    if (n < 0) {
        ++counters_.probes_unresolved;
        return {};
    }
    const auto& eg = topo_.link(egress);
    const auto& carried = c_.decomposition.carried_attrs;
    if (carried.count(Attr::util)) {
        Rational u = util(egress);
        if (u > p.mv.util) p.mv.util = u;
    }
    if (carried.count(Attr::len)) p.mv.len += 1;
    if (carried.count(Attr::lat)) p.mv.lat = p.mv.lat + Rational(eg.latency_ns, 1000);

    auto& latest = latest_[p.origin];
    latest = std::max(latest, p.version);

    const int my_tag = c_.pg.nodes[static_cast<std::size_t>(n)].tag;
    FwdKey key{p.origin, my_tag, p.pid, 0};
    int out_slot = 0;
    if (c_.decomposition.subpolicies.at(static_cast<std::size_t>(p.pid)).pareto) {
        auto slot = process_pareto(p, key, from, egress);
        if (!slot) return {};
        out_slot = *slot;
    } else if (!process_scalar(p, key, from, egress, now)) {
        return {};
    }
    recompute_best(p.origin);
    Probe fwd = p;
    fwd.tag = my_tag;
    fwd.slot = out_slot;
    return multicast(n, fwd);
}

bool SwitchRuntime::process_scalar(const Probe& p, const FwdKey& key, int nhop, int link, std::int64_t) {
    auto it = fwd_.find(key);
    bool install = false;
    if (it == fwd_.end() || link_marked_failed(it->second.link)) {
        install = true;
    } else {
        const FwdEntry& e = it->second;
        if (cfg_.versioning && p.version < e.version) {
            ++counters_.probes_discarded_stale;
            return false;
        }
        const bool same_upstream = e.nhop == nhop && e.ntag == p.tag && e.nslot == p.slot;
        if (compare_rank(f_value(p.pid, p.mv), f_value(p.pid, e.mv)) < 0) {
            install = true;
        } else if (cfg_.versioning) {
            const std::int64_t pv = p.version, ev = e.version;
            install = (pv > ev && same_upstream) || ev < pv - 1;
        } else {
            // Plain distance vector: the current next hop may always refresh.
            install = same_upstream && !(e.mv == p.mv);
        }
    }
    if (!install) {
        ++counters_.probes_not_better;
        return false;
    }
    fwd_[key] = FwdEntry{p.mv, p.tag, nhop, link, p.slot, p.version};
    return true;
}

std::optional<int> SwitchRuntime::process_pareto(const Probe& p, const FwdKey& base, int nhop, int link) {
    const auto& dims = c_.decomposition.subpolicies.at(static_cast<std::size_t>(p.pid)).order_attrs;
    const int cap = static_cast<int>(cfg_.pareto_cap);
    auto slot_key = [&](int s) { return FwdKey{base.dst, base.tag, base.pid, s}; };
    const std::int64_t pv = p.version;

    // Age out elements that missed a whole round.
    if (cfg_.versioning)
        for (int s = 0; s < cap; ++s) {
            auto it = fwd_.find(slot_key(s));
            if (it != fwd_.end() && static_cast<std::int64_t>(it->second.version) < pv - 1) fwd_.erase(it);
        }
    for (int s = 0; s < cap; ++s) {
        auto it = fwd_.find(slot_key(s));
        if (it != fwd_.end() && link_marked_failed(it->second.link)) fwd_.erase(it);
    }

    int same = -1;
    for (int s = 0; s < cap; ++s) {
        auto it = fwd_.find(slot_key(s));
        if (it != fwd_.end() && it->second.nhop == nhop && it->second.ntag == p.tag && it->second.nslot == p.slot)
            same = s;
    }
    auto dominated_by_other = [&](int except) {
        for (int s = 0; s < cap; ++s) {
            if (s == except) continue;
            auto it = fwd_.find(slot_key(s));
            if (it != fwd_.end() && dominates(it->second.mv, p.mv, dims)) return true;
        }
        return false;
    };
    auto prune_dominated = [&](int keep) {
        for (int s = 0; s < cap; ++s) {
            if (s == keep) continue;
            auto it = fwd_.find(slot_key(s));
            if (it != fwd_.end() && dominates(p.mv, it->second.mv, dims)) fwd_.erase(it);
        }
    };
    FwdEntry fresh{p.mv, p.tag, nhop, link, p.slot, p.version};

    if (same >= 0) {
        FwdEntry& e = fwd_[slot_key(same)];
        if (cfg_.versioning && p.version < e.version) {
            ++counters_.probes_discarded_stale;
            return std::nullopt;
        }
        if (e.mv == p.mv && (!cfg_.versioning || p.version == e.version)) {
            ++counters_.probes_not_better;
            return std::nullopt;
        }
        if (dominated_by_other(same)) {
            fwd_.erase(slot_key(same));
            ++counters_.probes_not_better;
            return std::nullopt;
        }
        e = fresh;
        prune_dominated(same);
        return same;
    }
    if (dominated_by_other(-1)) {
        ++counters_.probes_not_better;
        return std::nullopt;
    }
    prune_dominated(-1);
    for (int s = 0; s < cap; ++s) {
        if (!fwd_.count(slot_key(s))) {
            fwd_[slot_key(s)] = fresh;
            return s;
        }
    }
    // Full: evict the lexicographically largest element.
    ++counters_.pareto_overflows;
    int worst = -1;
    RankValue worst_rank = f_value(p.pid, p.mv);
    for (int s = 0; s < cap; ++s) {
        RankValue r = f_value(p.pid, fwd_[slot_key(s)].mv);
        if (compare_rank(r, worst_rank) > 0) {
            worst_rank = r;
            worst = s;
        }
    }
    if (worst < 0) return std::nullopt;
    fwd_[slot_key(worst)] = fresh;
    return worst;
}

bool SwitchRuntime::entry_usable(const FwdKey& k, const FwdEntry& e) const {
    if (link_marked_failed(e.link)) return false;
    if (cfg_.versioning) {
        auto it = latest_.find(k.dst);
        if (it != latest_.end() && static_cast<std::int64_t>(e.version) < static_cast<std::int64_t>(it->second) - 1)
            return false;
    }
    return true;
}

void SwitchRuntime::recompute_best(int dst) {
    std::optional<FwdKey> chosen;
    RankValue chosen_rank;
    auto consider = [&](const FwdKey& k, const FwdEntry& e) {
        if (!entry_usable(k, e)) return;
        RankValue r = s_value(k, e);
        if (r.is_infinite()) return;
        if (!chosen || compare_rank(r, chosen_rank) < 0) {
            chosen = k;
            chosen_rank = std::move(r);
        }
    };
    // The incumbent goes first so that ties keep it.
    if (auto it = best_.find(dst); it != best_.end()) {
        auto f = fwd_.find(it->second);
        if (f != fwd_.end()) consider(f->first, f->second);
    }
    for (auto it = fwd_.lower_bound(FwdKey{dst, -1, -1, -1}); it != fwd_.end() && it->first.dst == dst; ++it)
        consider(it->first, it->second);
    if (chosen) best_[dst] = *chosen;
    else best_.erase(dst);
}

void SwitchRuntime::invalidate_link(int link) {
    std::set<int> dsts;
    for (auto it = fwd_.begin(); it != fwd_.end();) {
        if (it->second.link == link) {
            dsts.insert(it->first.dst);
            it = fwd_.erase(it);
        } else {
            ++it;
        }
    }
    for (auto it = flowlets_.begin(); it != flowlets_.end();) {
        if (it->second.link == link) it = flowlets_.erase(it);
        else ++it;
    }
    for (auto& [dst, key] : best_) dsts.insert(dst);
    for (int d : dsts) recompute_best(d);
}

std::vector<int> SwitchRuntime::check_liveness(std::int64_t now) {
    std::vector<int> out;
    for (int l : topo_.out_links(node_)) {
        if (link_marked_failed(l) || !check_link_failed(l, now)) continue;
        failed_[l] = true;
        ++counters_.failure_detections;
        invalidate_link(l);
        out.push_back(l);
    }
    return out;
}

Decision SwitchRuntime::forward_packet(PacketHeader& pkt, bool from_host, std::int64_t now) {
    if (pkt.dst == node_) {
        ++counters_.packets_delivered;
        return {Decision::Kind::deliver, -1};
    }
    if (!from_host) {
        if (--pkt.ttl <= 0) {
            ++counters_.packets_ttl_expired;
            return {Decision::Kind::drop_ttl, -1};
        }
    }
    FlowletKey fk;
    if (cfg_.policy_aware_flowlets) fk = FlowletKey{from_host ? kIngressTag : pkt.tag, from_host ? 0 : pkt.pid, pkt.fid};
    else fk = FlowletKey{0, 0, pkt.fid};

    if (cfg_.loop_detection && !from_host) {
        auto& le = loops_[pkt.pkt_hash % loops_.size()];
        if (!le.used || le.hash != pkt.pkt_hash || now - le.t > cfg_.loop_entry_window_ns) {
            le = LoopEntry{pkt.pkt_hash, pkt.ttl, pkt.ttl, now, true};
        } else {
            le.maxttl = std::max(le.maxttl, pkt.ttl);
            le.minttl = std::min(le.minttl, pkt.ttl);
            le.t = now;
            if (le.maxttl - le.minttl > cfg_.delta_threshold) {
                ++counters_.loop_detections;
                if (flowlets_.erase(fk)) ++counters_.flowlet_flushes;
                le = LoopEntry{pkt.pkt_hash, pkt.ttl, pkt.ttl, now, true};
            }
        }
    }

    const bool use_flowlets = cfg_.flowlet_timeout_ns > 0;
    if (use_flowlets) {
        auto it = flowlets_.find(fk);
        if (it != flowlets_.end()) {
            FlowletEntry& fe = it->second;
            bool live = now - fe.t <= cfg_.flowlet_timeout_ns;
            bool down = link_marked_failed(fe.link) || check_link_failed(fe.link, now);
            if (live && !down) {
                fe.t = now;
                if (from_host) pkt.pid = fe.key.pid;
                pkt.tag = fe.ntag;
                pkt.slot = fe.nslot;
                ++counters_.packets_forwarded;
                return {Decision::Kind::send, fe.link, fe.key.tag};
            }
            flowlets_.erase(it);
        }
    }

    FwdKey key;
    if (from_host) {
        auto b = best_.find(pkt.dst);
        if (b == best_.end()) {
            ++counters_.packets_unroutable;
            return {Decision::Kind::drop_unroutable, -1};
        }
        key = b->second;
        pkt.pid = key.pid;
    } else {
        key = FwdKey{pkt.dst, pkt.tag, pkt.pid, pkt.slot};
    }
    auto e = fwd_.find(key);
    if (e == fwd_.end() || link_marked_failed(e->second.link)) {
        ++counters_.packets_unroutable;
        return {Decision::Kind::drop_unroutable, -1};
    }
    if (use_flowlets) flowlets_[fk] = FlowletEntry{key, e->second.link, e->second.ntag, e->second.nslot, now};
    pkt.tag = e->second.ntag;
    pkt.slot = e->second.nslot;
    ++counters_.packets_forwarded;
    return {Decision::Kind::send, e->second.link, key.tag};
}

std::string SwitchRuntime::tag_label(int loc, int tag) const {
    return topo_.name(loc) + std::to_string(tag);
}

std::string SwitchRuntime::dump() const {
    std::ostringstream os;
    const auto& sw = topo_.name(node_);
    for (const auto& [k, e] : fwd_) {
        auto b = best_.find(k.dst);
        bool star = b != best_.end() && b->second == k;
        os << "FWD " << sw << " dst=" << topo_.name(k.dst) << " tag=" << tag_label(node_, k.tag) << " pid=" << k.pid;
        if (c_.decomposition.subpolicies.at(static_cast<std::size_t>(k.pid)).pareto) os << " slot=" << k.slot;
        os << " mv=" << mv_str(e.mv, c_.decomposition.carried_attrs) << " ntag=" << tag_label(e.nhop, e.ntag)
           << " nhop=" << topo_.name(e.nhop) << " version=" << e.version << (star ? " *" : "") << '\n';
    }
    for (const auto& [dst, k] : best_) {
        auto e = fwd_.find(k);
        os << "BEST " << sw << " dst=" << topo_.name(dst) << " tag=" << tag_label(node_, k.tag) << " pid=" << k.pid;
        if (e != fwd_.end()) os << " rank=" << s_value(k, e->second).str();
        os << '\n';
    }
    for (const auto& [k, f] : flowlets_) {
        os << "FLOWLET " << sw << " tag=" << (k.tag == kIngressTag ? std::string("ingress") : std::to_string(k.tag))
           << " pid=" << k.pid << " fid=" << k.fid << " nhop=" << topo_.name(topo_.link(f.link).to) << " t=" << f.t
           << '\n';
    }
    return os.str();
}

}  // namespace contra
