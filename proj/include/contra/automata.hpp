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

#include <string>
#include <unordered_map>
#include <vector>

#include "contra/policy.hpp"

namespace contra {

// Minimal total DFA over node names. States are numbered breadth-first
// from the initial state (symbols in alphabet order); the dead state is
// always present and always last.
struct Dfa {
    std::vector<std::string> alphabet;
    int num_states = 0;
    int initial = 0;
    int garbage = 0;
    std::vector<char> accepting;  // per state
    std::vector<int> delta;       // num_states x alphabet.size()

    int symbol(const std::string& name) const;
    int step(int q, int sym) const;
    int step(int q, const std::string& name) const { return step(q, symbol(name)); }
    bool accepts(int q) const;

    // Runs the word from the initial state.
    bool matches(const std::vector<std::string>& word) const;

    std::unordered_map<std::string, int> index;
};

RegexPtr reverse_regex(const RegexPtr& r);

// Thompson construction, subset construction, Moore minimization.
Dfa compile_regex(const Regex& r, const std::vector<std::string>& alphabet);

// One line per state: `q<i>[*][ (start)][ (garbage)]: A->j B->k ...`.
std::string dump_dfa(const Dfa& dfa);

}  // namespace contra
