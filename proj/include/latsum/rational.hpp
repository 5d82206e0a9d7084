#pragma once

#include <stdexcept>
#include <string>

#include "common.hpp"

namespace latsum {

namespace detail {

inline i128 gcd_i128(i128 a, i128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b) {
        i128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

inline i128 mul_checked(i128 a, i128 b) {
    i128 r;
    if (__builtin_mul_overflow(a, b, &r)) throw std::overflow_error("Rat128 multiply overflow");
    return r;
}

inline i128 add_checked(i128 a, i128 b) {
    i128 r;
    if (__builtin_add_overflow(a, b, &r)) throw std::overflow_error("Rat128 add overflow");
    return r;
}

} // namespace detail

// Exact rational with 128-bit numerator/denominator.  Every arithmetic op is
// overflow-checked; the identity suites stay far inside this range.
struct Rat128 {
    i128 num = 0;
    i128 den = 1;

    Rat128() = default;
    Rat128(i64 v) : num(v) {}
    Rat128(i128 n, i128 d) : num(n), den(d) { normalize(); }

    void normalize() {
        if (den == 0) throw std::domain_error("rational with zero denominator");
        if (den < 0) { num = -num; den = -den; }
        if (num == 0) { den = 1; return; }
        i128 g = detail::gcd_i128(num, den);
        num /= g;
        den /= g;
    }

    friend Rat128 operator+(const Rat128& a, const Rat128& b) {
        i128 g = detail::gcd_i128(a.den, b.den);
        i128 bd = b.den / g;
        i128 n = detail::add_checked(detail::mul_checked(a.num, bd),
                                     detail::mul_checked(b.num, a.den / g));
        return Rat128(n, detail::mul_checked(a.den, bd));
    }
    friend Rat128 operator-(const Rat128& a, const Rat128& b) {
        return a + Rat128(-b.num, b.den);
    }
    friend Rat128 operator*(const Rat128& a, const Rat128& b) {
        i128 g1 = detail::gcd_i128(a.num, b.den);
        i128 g2 = detail::gcd_i128(b.num, a.den);
        return Rat128(detail::mul_checked(a.num / g1, b.num / g2),
                      detail::mul_checked(a.den / g2, b.den / g1));
    }
    friend Rat128 operator/(const Rat128& a, const Rat128& b) {
        if (b.num == 0) throw std::domain_error("rational division by zero");
        return a * Rat128(b.den, b.num);
    }
    Rat128& operator+=(const Rat128& b) { return *this = *this + b; }
    Rat128& operator-=(const Rat128& b) { return *this = *this - b; }
    Rat128& operator*=(const Rat128& b) { return *this = *this * b; }
    Rat128& operator/=(const Rat128& b) { return *this = *this / b; }

    friend bool operator==(const Rat128& a, const Rat128& b) {
        return a.num == b.num && a.den == b.den;
    }
    friend bool operator!=(const Rat128& a, const Rat128& b) { return !(a == b); }
    friend bool operator<(const Rat128& a, const Rat128& b) {
        return detail::mul_checked(a.num, b.den) < detail::mul_checked(b.num, a.den);
    }
    friend bool operator<=(const Rat128& a, const Rat128& b) { return a == b || a < b; }

    double to_double() const { return double(num) / double(den); }

    std::string str() const {
        if (den == 1) return i128_str(num);
        return i128_str(num) + "/" + i128_str(den);
    }
};

} // namespace latsum
