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

#include "contra/rational.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace contra {

namespace {

__int128 gcd128(__int128 a, __int128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
        __int128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

constexpr __int128 kMax = std::numeric_limits<std::int64_t>::max();
constexpr __int128 kMin = std::numeric_limits<std::int64_t>::min();

}  // namespace

Rational::Rational(std::int64_t n, std::int64_t d) {
    *this = from_wide(n, d);
}

Rational Rational::from_wide(__int128 n, __int128 d) {
    if (d == 0) throw std::domain_error("rational with zero denominator");
    if (d < 0) {
        n = -n;
        d = -d;
    }
    __int128 g = gcd128(n, d);
    if (g > 1) {
        n /= g;
        d /= g;
    }
    if (n > kMax || n < kMin || d > kMax)
        throw std::overflow_error("rational arithmetic overflow");
    Rational r;
    r.num_ = static_cast<std::int64_t>(n);
    r.den_ = static_cast<std::int64_t>(d);
    return r;
}

Rational operator+(const Rational& a, const Rational& b) {
    if (a.den_ == b.den_) return Rational::from_wide(static_cast<__int128>(a.num_) + b.num_, a.den_);
    return Rational::from_wide(static_cast<__int128>(a.num_) * b.den_ + static_cast<__int128>(b.num_) * a.den_,
                               static_cast<__int128>(a.den_) * b.den_);
}

Rational operator-(const Rational& a, const Rational& b) {
    return a + (-b);
}

Rational operator*(const Rational& a, const Rational& b) {
    return Rational::from_wide(static_cast<__int128>(a.num_) * b.num_,
                               static_cast<__int128>(a.den_) * b.den_);
}

Rational operator/(const Rational& a, const Rational& b) {
    return Rational::from_wide(static_cast<__int128>(a.num_) * b.den_,
                               static_cast<__int128>(a.den_) * b.num_);
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    __int128 l = static_cast<__int128>(a.num_) * b.den_;
    __int128 r = static_cast<__int128>(b.num_) * a.den_;
    if (l < r) return std::strong_ordering::less;
    if (l > r) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
}

Rational Rational::quantize(double x, int bits) {
    const std::int64_t scale = std::int64_t{1} << bits;
    return Rational(static_cast<std::int64_t>(std::floor(x * static_cast<double>(scale) + 0.5)), scale);
}

Rational Rational::parse(std::string_view text) {
    if (text.empty()) throw std::invalid_argument("empty number");
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        Rational n = parse(text.substr(0, slash));
        Rational d = parse(text.substr(slash + 1));
        return n / d;
    }
    bool neg = false;
    if (text.front() == '-') {
        neg = true;
        text.remove_prefix(1);
    }
    __int128 num = 0;
    __int128 den = 1;
    bool seen_dot = false;
    bool any_digit = false;
    for (char c : text) {
        if (c == '.') {
            if (seen_dot) throw std::invalid_argument("malformed number: " + std::string(text));
            seen_dot = true;
            continue;
        }
        if (c < '0' || c > '9') throw std::invalid_argument("malformed number: " + std::string(text));
        any_digit = true;
        num = num * 10 + (c - '0');
        if (seen_dot) den *= 10;
        if (num > kMax || den > kMax) throw std::overflow_error("number too large: " + std::string(text));
    }
    if (!any_digit) throw std::invalid_argument("malformed number: " + std::string(text));
    return from_wide(neg ? -num : num, den);
}

std::string Rational::str() const {
    if (den_ == 1) return std::to_string(num_);
    // Exact decimal when the denominator has only 2 and 5 as factors.
    std::int64_t d = den_;
    int twos = 0, fives = 0;
    while (d % 2 == 0) { d /= 2; ++twos; }
    while (d % 5 == 0) { d /= 5; ++fives; }
    if (d == 1) {
        int digits = std::max(twos, fives);
        if (digits <= 18) {
            __int128 scale = 1;
            for (int i = 0; i < digits; ++i) scale *= 10;
            __int128 scaled = static_cast<__int128>(num_) * (scale / den_);
            bool neg = scaled < 0;
            if (neg) scaled = -scaled;
            __int128 whole = scaled / scale;
            __int128 frac = scaled % scale;
            std::string fs(static_cast<std::size_t>(digits), '0');
            for (int i = digits - 1; i >= 0; --i) {
                fs[static_cast<std::size_t>(i)] = static_cast<char>('0' + static_cast<int>(frac % 10));
                frac /= 10;
            }
            while (!fs.empty() && fs.back() == '0') fs.pop_back();
            std::string out = neg ? "-" : "";
            out += std::to_string(static_cast<std::int64_t>(whole));
            if (!fs.empty()) out += "." + fs;
            return out;
        }
    }
    return std::to_string(num_) + "/" + std::to_string(den_);
}

std::ostream& operator<<(std::ostream& os, const Rational& r) {
    return os << r.str();
}

std::ostream& operator<<(std::ostream& os, const Extended& e) {
    return os << e.str();
}

}  // namespace contra
