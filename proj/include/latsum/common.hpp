#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace latsum {

using i64 = std::int64_t;
using u64 = std::uint64_t;
using i128 = __int128_t;
using u128 = __uint128_t;
using cplx = std::complex<double>;

inline std::string i128_str(i128 v) {
    if (v == 0) return "0";
    bool neg = v < 0;
    u128 m = neg ? u128(-(v + 1)) + 1 : u128(v);
    char buf[48];
    int pos = 48;
    while (m > 0) {
        buf[--pos] = char('0' + int(m % 10));
        m /= 10;
    }
    std::string s(buf + pos, buf + 48);
    return neg ? "-" + s : s;
}

inline i128 i128_parse(const std::string& s) {
    if (s.empty()) throw std::invalid_argument("empty i128 literal");
    size_t i = 0;
    bool neg = false;
    if (s[0] == '-' || s[0] == '+') { neg = s[0] == '-'; i = 1; }
    if (i == s.size()) throw std::invalid_argument("bad i128 literal: " + s);
    i128 v = 0;
    for (; i < s.size(); ++i) {
        if (s[i] < '0' || s[i] > '9') throw std::invalid_argument("bad i128 literal: " + s);
        v = v * 10 + (s[i] - '0');
    }
    return neg ? -v : v;
}

// e(x) = exp(2*pi*i*x), the additive character used throughout.
inline cplx e_of(double x) {
    double f = x - std::floor(x);
    return std::polar(1.0, 2.0 * std::numbers::pi * f);
}

inline i128 i128_pow(i128 base, unsigned exp) {
    i128 r = 1;
    while (exp--) r *= base;
    return r;
}

// Checked u64 power: throws if p^e overflows.
inline u64 u64_pow_checked(u64 p, unsigned e) {
    u128 r = 1;
    while (e--) {
        r *= p;
        if (r > u128(UINT64_MAX)) throw std::overflow_error("u64 power overflow");
    }
    return u64(r);
}

struct BudgetExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ModelDomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace latsum
