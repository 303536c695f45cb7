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

#include <compare>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace contra {

/// Exact rational number with 64-bit numerator/denominator.
/// Always normalized: gcd(num, den) == 1 and den > 0.
/// Arithmetic throws std::overflow_error instead of wrapping.
class Rational {
public:
    constexpr Rational() = default;
    constexpr Rational(std::int64_t n) : num_(n), den_(1) {}  // NOLINT: implicit by design of literals
    Rational(std::int64_t n, std::int64_t d);

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }

    bool is_zero() const { return num_ == 0; }
    bool is_negative() const { return num_ < 0; }

    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    /// Nearest multiple of 1/2^bits (round half up).
    static Rational quantize(double x, int bits = 16);

    /// Parses "3", "0.8", ".8", "12.25", "3/4".
    static Rational parse(std::string_view text);

    std::string str() const;

    friend Rational operator+(const Rational& a, const Rational& b);
    friend Rational operator-(const Rational& a, const Rational& b);
    friend Rational operator*(const Rational& a, const Rational& b);
    friend Rational operator/(const Rational& a, const Rational& b);
    Rational operator-() const { return Rational(-num_, den_); }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

private:
    static Rational from_wide(__int128 n, __int128 d);

    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

std::ostream& operator<<(std::ostream& os, const Rational& r);

/// Extended non-negative rational: a finite value or infinity.
struct Extended {
    bool inf = false;
    Rational value;

    static Extended infinity() { return Extended{true, Rational(0)}; }
    static Extended finite(Rational r) { return Extended{false, r}; }

    std::string str() const { return inf ? std::string("inf") : value.str(); }

    friend bool operator==(const Extended& a, const Extended& b) {
        if (a.inf || b.inf) return a.inf == b.inf;
        return a.value == b.value;
    }
    friend std::strong_ordering operator<=>(const Extended& a, const Extended& b) {
        if (a.inf && b.inf) return std::strong_ordering::equal;
        if (a.inf) return std::strong_ordering::greater;
        if (b.inf) return std::strong_ordering::less;
        return a.value <=> b.value;
    }
};

std::ostream& operator<<(std::ostream& os, const Extended& e);

}  // namespace contra
