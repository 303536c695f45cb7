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

#include "contra/automata.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <map>
#include <sstream>
#include <stdexcept>

namespace contra {

int Dfa::symbol(const std::string& name) const {
    auto it = index.find(name);
    if (it == index.end()) throw std::out_of_range("symbol not in alphabet: " + name);
    return it->second;
}

int Dfa::step(int q, int sym) const {
    if (q < 0 || q >= num_states || sym < 0 || sym >= static_cast<int>(alphabet.size()))
        throw std::out_of_range("dfa step out of range");
    return delta[static_cast<std::size_t>(q) * alphabet.size() + static_cast<std::size_t>(sym)];
}

bool Dfa::accepts(int q) const {
    if (q < 0 || q >= num_states) throw std::out_of_range("dfa state out of range");
    return accepting[static_cast<std::size_t>(q)] != 0;
}

bool Dfa::matches(const std::vector<std::string>& word) const {
    int q = initial;
    for (const auto& w : word) q = step(q, w);
    return accepts(q);
}

RegexPtr reverse_regex(const RegexPtr& r) {
    switch (r->kind) {
        case Regex::Kind::node:
        case Regex::Kind::any: return r;
        case Regex::Kind::alt: return Regex::make_alt(reverse_regex(r->lhs), reverse_regex(r->rhs));
        case Regex::Kind::concat: return Regex::make_concat(reverse_regex(r->rhs), reverse_regex(r->lhs));
        case Regex::Kind::star: return Regex::make_star(reverse_regex(r->lhs));
    }
    return r;
}

namespace {

constexpr int kAnySymbol = -1;

struct Nfa {
    struct Edge {
        int sym;  // -2 epsilon, -1 any, else symbol index
        int to;
    };
    std::vector<std::vector<Edge>> edges;

    int add() {
        edges.emplace_back();
        return static_cast<int>(edges.size()) - 1;
    }
};

constexpr int kEpsilon = -2;

// Returns (start, end) of the fragment.
std::pair<int, int> thompson(const Regex& r, const Dfa& dfa, Nfa& nfa) {
    switch (r.kind) {
        case Regex::Kind::node: {
            int s = nfa.add(), e = nfa.add();
            nfa.edges[s].push_back({dfa.symbol(r.node), e});
            return {s, e};
        }
        case Regex::Kind::any: {
            int s = nfa.add(), e = nfa.add();
            nfa.edges[s].push_back({kAnySymbol, e});
            return {s, e};
        }
        case Regex::Kind::concat: {
            auto a = thompson(*r.lhs, dfa, nfa);
            auto b = thompson(*r.rhs, dfa, nfa);
            nfa.edges[a.second].push_back({kEpsilon, b.first});
            return {a.first, b.second};
        }
        case Regex::Kind::alt: {
            auto a = thompson(*r.lhs, dfa, nfa);
            auto b = thompson(*r.rhs, dfa, nfa);
            int s = nfa.add(), e = nfa.add();
            nfa.edges[s].push_back({kEpsilon, a.first});
            nfa.edges[s].push_back({kEpsilon, b.first});
            nfa.edges[a.second].push_back({kEpsilon, e});
            nfa.edges[b.second].push_back({kEpsilon, e});
            return {s, e};
        }
        case Regex::Kind::star: {
            auto a = thompson(*r.lhs, dfa, nfa);
            int s = nfa.add(), e = nfa.add();
            nfa.edges[s].push_back({kEpsilon, a.first});
            nfa.edges[s].push_back({kEpsilon, e});
            nfa.edges[a.second].push_back({kEpsilon, a.first});
            nfa.edges[a.second].push_back({kEpsilon, e});
            return {s, e};
        }
    }
    throw std::logic_error("bad regex");
}

using StateSet = std::vector<int>;  // sorted

StateSet closure(const Nfa& nfa, StateSet set) {
    std::vector<char> seen(nfa.edges.size(), 0);
    std::vector<int> stack = set;
    for (int s : set) seen[s] = 1;
    while (!stack.empty()) {
        int s = stack.back();
        stack.pop_back();
        for (const auto& e : nfa.edges[s]) {
            if (e.sym == kEpsilon && !seen[e.to]) {
                seen[e.to] = 1;
                set.push_back(e.to);
                stack.push_back(e.to);
            }
        }
    }
    std::sort(set.begin(), set.end());
    return set;
}

}  // namespace

Dfa compile_regex(const Regex& r, const std::vector<std::string>& alphabet) {
    if (alphabet.empty()) throw std::invalid_argument("empty alphabet");
    Dfa out;
    out.alphabet = alphabet;
    for (std::size_t i = 0; i < alphabet.size(); ++i) out.index.emplace(alphabet[i], static_cast<int>(i));
    const std::size_t sigma = alphabet.size();

    Nfa nfa;
    auto [start, final_state] = thompson(r, out, nfa);

    // Subset construction. Raw state 0 is the empty set.
    std::map<StateSet, int> ids;
    std::vector<StateSet> sets;
    std::vector<int> raw_delta;
    auto intern = [&](StateSet s) {
        auto [it, inserted] = ids.emplace(s, static_cast<int>(sets.size()));
        if (inserted) {
            sets.push_back(std::move(s));
            raw_delta.resize(sets.size() * sigma, -1);
        }
        return it->second;
    };
    intern({});
    int raw_start = intern(closure(nfa, {start}));
    for (std::size_t cur = 0; cur < sets.size(); ++cur) {
        std::vector<StateSet> moves(sigma);
        StateSet any_targets;
        for (int s : sets[cur]) {
            for (const auto& e : nfa.edges[s]) {
                if (e.sym == kAnySymbol) any_targets.push_back(e.to);
                else if (e.sym >= 0) moves[static_cast<std::size_t>(e.sym)].push_back(e.to);
            }
        }
        for (std::size_t a = 0; a < sigma; ++a) {
            StateSet m = moves[a];
            m.insert(m.end(), any_targets.begin(), any_targets.end());
            std::sort(m.begin(), m.end());
            m.erase(std::unique(m.begin(), m.end()), m.end());
            int to = intern(m.empty() ? StateSet{} : closure(nfa, std::move(m)));
            raw_delta[cur * sigma + a] = to;
        }
    }
    const std::size_t n = sets.size();
    std::vector<char> raw_acc(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        raw_acc[i] = std::binary_search(sets[i].begin(), sets[i].end(), final_state) ? 1 : 0;

    // Moore refinement.
    std::vector<int> cls(n);
    for (std::size_t i = 0; i < n; ++i) cls[i] = raw_acc[i];
    int num_classes = 0;
    while (true) {
        std::map<std::vector<int>, int> sig_ids;
        std::vector<int> next(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<int> sig;
            sig.reserve(sigma + 1);
            sig.push_back(cls[i]);
            for (std::size_t a = 0; a < sigma; ++a) sig.push_back(cls[raw_delta[i * sigma + a]]);
            auto it = sig_ids.emplace(std::move(sig), static_cast<int>(sig_ids.size())).first;
            next[i] = it->second;
        }
        int count = static_cast<int>(sig_ids.size());
        cls = std::move(next);
        if (count == num_classes) break;
        num_classes = count;
    }

    // Class of the empty set is the dead class; any class that cannot
    // reach acceptance is equivalent to it after minimization.
    const int dead = cls[0];
    std::vector<int> rep(num_classes, -1);
    for (std::size_t i = 0; i < n; ++i)
        if (rep[cls[i]] < 0) rep[cls[i]] = static_cast<int>(i);

    // Canonical numbering: BFS over live classes from the start.
    std::vector<int> number(num_classes, -1);
    std::vector<int> order;
    std::deque<int> queue;
    int start_cls = cls[raw_start];
    if (start_cls != dead) {
        number[start_cls] = 0;
        order.push_back(start_cls);
        queue.push_back(start_cls);
    }
    while (!queue.empty()) {
        int c = queue.front();
        queue.pop_front();
        for (std::size_t a = 0; a < sigma; ++a) {
            int t = cls[raw_delta[static_cast<std::size_t>(rep[c]) * sigma + a]];
            if (t != dead && number[t] < 0) {
                number[t] = static_cast<int>(order.size());
                order.push_back(t);
                queue.push_back(t);
            }
        }
    }
    number[dead] = static_cast<int>(order.size());
    order.push_back(dead);

    out.num_states = static_cast<int>(order.size());
    out.garbage = number[dead];
    out.initial = number[start_cls];
    out.accepting.assign(order.size(), 0);
    out.delta.assign(order.size() * sigma, out.garbage);
    for (std::size_t q = 0; q < order.size(); ++q) {
        int c = order[q];
        out.accepting[q] = raw_acc[static_cast<std::size_t>(rep[c])];
        for (std::size_t a = 0; a < sigma; ++a)
            out.delta[q * sigma + a] = number[cls[raw_delta[static_cast<std::size_t>(rep[c]) * sigma + a]]];
    }
    return out;
}

std::string dump_dfa(const Dfa& dfa) {
    std::ostringstream os;
    for (int q = 0; q < dfa.num_states; ++q) {
        os << 'q' << q;
        if (dfa.accepts(q)) os << '*';
        if (q == dfa.initial) os << " (start)";
        if (q == dfa.garbage) os << " (garbage)";
        os << ':';
        for (std::size_t a = 0; a < dfa.alphabet.size(); ++a)
            os << ' ' << dfa.alphabet[a] << "->" << dfa.step(q, static_cast<int>(a));
        os << '\n';
    }
    return os.str();
}

}  // namespace contra
