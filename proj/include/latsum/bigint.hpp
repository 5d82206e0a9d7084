#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "common.hpp"

namespace latsum {

// Signed arbitrary-precision integer, base 2^32 little-endian magnitude.
// Supports exactly what the toolkit needs: +, -, *, comparison, decimal
// conversion, reduction mod a machine word.  No general division.
class BigInt {
public:
    BigInt() = default;

    BigInt(i64 v) {
        if (v == 0) return;
        sign_ = v < 0 ? -1 : 1;
        u64 m = v < 0 ? u64(-(v + 1)) + 1 : u64(v);
        mag_.push_back(uint32_t(m));
        if (m >> 32) mag_.push_back(uint32_t(m >> 32));
    }

    static BigInt from_i128(i128 v) {
        BigInt r;
        if (v == 0) return r;
        r.sign_ = v < 0 ? -1 : 1;
        u128 m = v < 0 ? u128(-(v + 1)) + 1 : u128(v);
        while (m > 0) {
            r.mag_.push_back(uint32_t(m));
            m >>= 32;
        }
        return r;
    }

    static BigInt parse(const std::string& s) {
        size_t i = 0;
        int sign = 1;
        if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
            if (s[i] == '-') sign = -1;
            ++i;
        }
        if (i == s.size()) throw std::invalid_argument("bad integer literal: " + s);
        BigInt r;
        for (; i < s.size(); ++i) {
            if (s[i] < '0' || s[i] > '9') throw std::invalid_argument("bad integer literal: " + s);
            r = r.mul_small(10);
            r = r + BigInt(s[i] - '0');
        }
        if (r.sign_ != 0) r.sign_ = sign;
        return r;
    }

    bool is_zero() const { return sign_ == 0; }
    int sign() const { return sign_; }

    BigInt operator-() const {
        BigInt r = *this;
        r.sign_ = -r.sign_;
        return r;
    }

    BigInt abs() const {
        BigInt r = *this;
        if (r.sign_ < 0) r.sign_ = 1;
        return r;
    }

    friend BigInt operator+(const BigInt& a, const BigInt& b) {
        if (a.sign_ == 0) return b;
        if (b.sign_ == 0) return a;
        BigInt r;
        if (a.sign_ == b.sign_) {
            r.mag_ = add_mag(a.mag_, b.mag_);
            r.sign_ = a.sign_;
        } else {
            int c = cmp_mag(a.mag_, b.mag_);
            if (c == 0) return BigInt();
            if (c > 0) {
                r.mag_ = sub_mag(a.mag_, b.mag_);
                r.sign_ = a.sign_;
            } else {
                r.mag_ = sub_mag(b.mag_, a.mag_);
                r.sign_ = b.sign_;
            }
        }
        return r;
    }

    friend BigInt operator-(const BigInt& a, const BigInt& b) { return a + (-b); }

    friend BigInt operator*(const BigInt& a, const BigInt& b) {
        if (a.sign_ == 0 || b.sign_ == 0) return BigInt();
        BigInt r;
        r.mag_.assign(a.mag_.size() + b.mag_.size(), 0);
        for (size_t i = 0; i < a.mag_.size(); ++i) {
            u64 carry = 0;
            for (size_t j = 0; j < b.mag_.size(); ++j) {
                u64 cur = u64(a.mag_[i]) * b.mag_[j] + r.mag_[i + j] + carry;
                r.mag_[i + j] = uint32_t(cur);
                carry = cur >> 32;
            }
            size_t k = i + b.mag_.size();
            while (carry) {
                u64 cur = u64(r.mag_[k]) + carry;
                r.mag_[k] = uint32_t(cur);
                carry = cur >> 32;
                ++k;
            }
        }
        r.trim();
        r.sign_ = a.sign_ * b.sign_;
        return r;
    }

    BigInt& operator+=(const BigInt& b) { return *this = *this + b; }
    BigInt& operator-=(const BigInt& b) { return *this = *this - b; }
    BigInt& operator*=(const BigInt& b) { return *this = *this * b; }

    BigInt mul_small(u64 f) const {
        if (f == 0 || sign_ == 0) return BigInt();
        BigInt r;
        r.sign_ = sign_;
        r.mag_.assign(mag_.size() + 2, 0);
        u128 carry = 0;
        for (size_t i = 0; i < mag_.size(); ++i) {
            u128 cur = u128(mag_[i]) * f + carry;
            r.mag_[i] = uint32_t(cur);
            carry = cur >> 32;
        }
        for (size_t i = mag_.size(); carry; ++i) {
            r.mag_[i] = uint32_t(carry);
            carry >>= 32;
        }
        r.trim();
        return r;
    }

    // three-way compare
    friend int cmp(const BigInt& a, const BigInt& b) {
        if (a.sign_ != b.sign_) return a.sign_ < b.sign_ ? -1 : 1;
        int c = cmp_mag(a.mag_, b.mag_);
        return a.sign_ >= 0 ? c : -c;
    }
    friend bool operator==(const BigInt& a, const BigInt& b) { return cmp(a, b) == 0; }
    friend bool operator!=(const BigInt& a, const BigInt& b) { return cmp(a, b) != 0; }
    friend bool operator<(const BigInt& a, const BigInt& b) { return cmp(a, b) < 0; }
    friend bool operator<=(const BigInt& a, const BigInt& b) { return cmp(a, b) <= 0; }
    friend bool operator>(const BigInt& a, const BigInt& b) { return cmp(a, b) > 0; }
    friend bool operator>=(const BigInt& a, const BigInt& b) { return cmp(a, b) >= 0; }

    // value mod m in [0, m), m > 0
    u64 mod_u64(u64 m) const {
        if (m == 0) throw std::invalid_argument("mod 0");
        u128 rem = 0;
        for (size_t i = mag_.size(); i-- > 0;)
            rem = ((rem << 32) | mag_[i]) % m;
        u64 r = u64(rem);
        if (sign_ < 0 && r != 0) r = m - r;
        return r;
    }

    bool fits_i128() const {
        if (mag_.size() < 4) return true;
        if (mag_.size() > 4) return false;
        // 4 words: magnitude must stay below 2^127 (or equal for the minimum)
        return mag_[3] < 0x80000000u;
    }

    i128 to_i128() const {
        if (!fits_i128()) throw std::overflow_error("BigInt does not fit in 128 bits");
        u128 m = 0;
        for (size_t i = mag_.size(); i-- > 0;) m = (m << 32) | mag_[i];
        return sign_ < 0 ? -i128(m) : i128(m);
    }

    double to_double() const {
        double r = 0;
        for (size_t i = mag_.size(); i-- > 0;) r = r * 4294967296.0 + mag_[i];
        return sign_ < 0 ? -r : r;
    }

    std::string str() const {
        if (sign_ == 0) return "0";
        std::vector<uint32_t> m = mag_;
        std::string digits;
        while (!m.empty()) {
            // divide magnitude by 10^9, emit remainder
            u64 rem = 0;
            for (size_t i = m.size(); i-- > 0;) {
                u64 cur = (rem << 32) | m[i];
                m[i] = uint32_t(cur / 1000000000u);
                rem = cur % 1000000000u;
            }
            while (!m.empty() && m.back() == 0) m.pop_back();
            char chunk[10];
            for (int k = 0; k < 9; ++k) {
                chunk[8 - k] = char('0' + rem % 10);
                rem /= 10;
            }
            digits.append(chunk, 9);
        }
        // digits holds 9-digit groups least-significant first, each reversed already
        std::string out;
        for (size_t g = digits.size() / 9; g-- > 0;) out.append(digits, g * 9, 9);
        size_t nz = out.find_first_not_of('0');
        out = out.substr(nz);
        return sign_ < 0 ? "-" + out : out;
    }

    size_t bit_length() const {
        if (mag_.empty()) return 0;
        uint32_t top = mag_.back();
        size_t bits = (mag_.size() - 1) * 32;
        while (top) { ++bits; top >>= 1; }
        return bits;
    }

private:
    int sign_ = 0;
    std::vector<uint32_t> mag_;

    void trim() {
        while (!mag_.empty() && mag_.back() == 0) mag_.pop_back();
        if (mag_.empty()) sign_ = 0;
    }

    static int cmp_mag(const std::vector<uint32_t>& a, const std::vector<uint32_t>& b) {
        if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
        for (size_t i = a.size(); i-- > 0;)
            if (a[i] != b[i]) return a[i] < b[i] ? -1 : 1;
        return 0;
    }

    static std::vector<uint32_t> add_mag(const std::vector<uint32_t>& a,
                                         const std::vector<uint32_t>& b) {
        const auto& big = a.size() >= b.size() ? a : b;
        const auto& small = a.size() >= b.size() ? b : a;
        std::vector<uint32_t> r(big.size() + 1, 0);
        u64 carry = 0;
        for (size_t i = 0; i < big.size(); ++i) {
            u64 cur = u64(big[i]) + (i < small.size() ? small[i] : 0) + carry;
            r[i] = uint32_t(cur);
            carry = cur >> 32;
        }
        r[big.size()] = uint32_t(carry);
        while (!r.empty() && r.back() == 0) r.pop_back();
        return r;
    }

    // requires |a| >= |b|
    static std::vector<uint32_t> sub_mag(const std::vector<uint32_t>& a,
                                         const std::vector<uint32_t>& b) {
        std::vector<uint32_t> r(a.size(), 0);
        i64 borrow = 0;
        for (size_t i = 0; i < a.size(); ++i) {
            i64 cur = i64(a[i]) - (i < b.size() ? i64(b[i]) : 0) - borrow;
            if (cur < 0) { cur += (i64(1) << 32); borrow = 1; } else borrow = 0;
            r[i] = uint32_t(cur);
        }
        while (!r.empty() && r.back() == 0) r.pop_back();
        return r;
    }
};

inline BigInt bigint_pow(const BigInt& base, unsigned e) {
    BigInt r(1), b = base;
    while (e) {
        if (e & 1) r *= b;
        e >>= 1;
        if (e) b *= b;
    }
    return r;
}

} // namespace latsum
