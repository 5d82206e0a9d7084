#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "common.hpp"

namespace latsum {

inline std::vector<u64> sieve_primes(u64 limit) {
    std::vector<u64> primes;
    if (limit < 2) return primes;
    std::vector<bool> comp(limit + 1, false);
    for (u64 p = 2; p <= limit; ++p) {
        if (comp[p]) continue;
        primes.push_back(p);
        for (u64 q = p * p; q <= limit; q += p) comp[q] = true;
    }
    return primes;
}

inline bool is_prime_u64(u64 n) {
    if (n < 2) return false;
    for (u64 p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull}) {
        if (n == p) return true;
        if (n % p == 0) return false;
    }
    for (u64 d = 37; d * d <= n; d += 2)
        if (n % d == 0) return false;
    return true;
}

inline u64 mulmod(u64 a, u64 b, u64 m) { return u64(u128(a) * b % m); }

inline u64 powmod(u64 base, u64 exp, u64 m) {
    if (m == 1) return 0;
    u64 r = 1;
    base %= m;
    while (exp) {
        if (exp & 1) r = mulmod(r, base, m);
        base = mulmod(base, base, m);
        exp >>= 1;
    }
    return r;
}

// v_p(n) for n > 0
inline unsigned valuation(u64 n, u64 p) {
    unsigned v = 0;
    while (n % p == 0) { n /= p; ++v; }
    return v;
}

inline std::vector<std::pair<u64, unsigned>> factorize(u64 n) {
    std::vector<std::pair<u64, unsigned>> f;
    for (u64 p = 2; p * p <= n; p += (p == 2 ? 1 : 2)) {
        if (n % p) continue;
        unsigned e = 0;
        while (n % p == 0) { n /= p; ++e; }
        f.push_back({p, e});
    }
    if (n > 1) f.push_back({n, 1});
    return f;
}

inline std::vector<u64> divisors(u64 n) {
    std::vector<u64> d{1};
    for (auto [p, e] : factorize(n)) {
        size_t sz = d.size();
        u64 pk = 1;
        for (unsigned k = 1; k <= e; ++k) {
            pk *= p;
            for (size_t i = 0; i < sz; ++i) d.push_back(d[i] * pk);
        }
    }
    std::sort(d.begin(), d.end());
    return d;
}

inline u64 euler_phi(u64 n) {
    u64 r = n;
    for (auto [p, e] : factorize(n)) r = r / p * (p - 1);
    return r;
}

// Multiplicative order of a mod m, gcd(a,m)=1.  Iterated multiplication; the
// walk returns to 1 after at most phi(m) steps, which doubles as the cycle
// detector.
inline u64 multiplicative_order(u64 a, u64 m) {
    if (m == 1) return 1;
    if (std::gcd(a, m) != 1) throw std::domain_error("order of non-unit");
    u64 x = a % m, ord = 1;
    while (x != 1) {
        x = mulmod(x, a, m);
        if (++ord > m) throw std::logic_error("order search exceeded modulus");
    }
    return ord;
}

// Moebius function on [0, x], block-sieved.
inline std::vector<int8_t> moebius_sieve(u64 x) {
    std::vector<int8_t> mu(x + 1, 1);
    if (x >= 1) mu[0] = 0;
    u64 root = 1;
    while ((root + 1) * (root + 1) <= x) ++root;
    auto primes = sieve_primes(root);
    const u64 block = 1u << 18;
    std::vector<u64> rem(block);
    for (u64 lo = 1; lo <= x; lo += block) {
        u64 hi = std::min(x, lo + block - 1);
        for (u64 i = lo; i <= hi; ++i) rem[i - lo] = i;
        for (u64 p : primes) {
            for (u64 j = (lo + p - 1) / p * p; j <= hi; j += p) {
                unsigned cnt = 0;
                u64& r = rem[j - lo];
                while (r % p == 0) { r /= p; ++cnt; }
                if (cnt >= 2) mu[j] = 0;
                else if (mu[j] != 0) mu[j] = -mu[j];
            }
        }
        for (u64 i = lo; i <= hi; ++i)
            if (rem[i - lo] > 1 && mu[i] != 0) mu[i] = -mu[i];
    }
    return mu;
}

// tau(m) on [0, x]
inline std::vector<uint16_t> divisor_count_sieve(u64 x) {
    std::vector<uint16_t> tau(x + 1, 0);
    for (u64 d = 1; d <= x; ++d)
        for (u64 m = d; m <= x; m += d) ++tau[m];
    return tau;
}

// r(m) = #{(a,b) in Z^2 : a^2 + b^2 = m} on [0, x], by walking the lattice.
inline std::vector<uint16_t> sum_two_squares_sieve(u64 x) {
    std::vector<uint16_t> r(x + 1, 0);
    r[0] = 1;
    for (u64 a = 1; a * a <= x; ++a) {
        r[a * a] += 4; // (0,+-a),(+-a,0)
        for (u64 b = 1; a * a + b * b <= x; ++b) r[a * a + b * b] += 4;
    }
    return r;
}

inline u64 integer_kth_root(u64 n, unsigned k) {
    if (n == 0) return 0;
    if (k == 1) return n;
    u64 r = u64(std::pow(double(n), 1.0 / k));
    while (r > 0) {
        u128 p = 1;
        bool over = false;
        for (unsigned i = 0; i < k; ++i) {
            p *= r;
            if (p > n) { over = true; break; }
        }
        if (!over) break;
        --r;
    }
    while (true) {
        u128 p = 1;
        bool over = false;
        for (unsigned i = 0; i < k; ++i) {
            p *= r + 1;
            if (p > n) { over = true; break; }
        }
        if (over) break;
        ++r;
    }
    return r;
}

inline bool is_perfect_kth_power(u64 n, unsigned k) {
    if (n == 0) return false;
    u64 r = integer_kth_root(n, k);
    u128 p = 1;
    for (unsigned i = 0; i < k; ++i) p *= r;
    return p == n;
}

// m-full: every prime factor has exponent >= m.  Trial division up to the
// cube root leaves a cofactor that is 1, p, p^2 or pq; only the perfect
// square case can still be m-full (and only for m = 2).
inline bool is_m_full(u64 n, unsigned m) {
    if (n == 0) return false;
    if (n == 1) return true;
    for (u64 p = 2; p * p * p <= n; p += (p == 2 ? 1 : 2)) {
        if (n % p) continue;
        unsigned e = 0;
        while (n % p == 0) { n /= p; ++e; }
        if (e < m) return false;
        if (n == 1) return true;
    }
    if (n == 1) return true;
    if (is_perfect_kth_power(n, 2)) return m <= 2;
    return false; // prime or product of two distinct primes
}

// CRT for pairwise steps: x = a1 (mod m1), x = a2 (mod m2) -> x mod lcm, or
// nullopt when incompatible.
inline bool crt_pair(u64 a1, u64 m1, u64 a2, u64 m2, u64& out_a, u64& out_m) {
    u64 g = std::gcd(m1, m2);
    if ((a1 % g) != (a2 % g)) return false;
    u64 l = m1 / g * m2;
    // solve a1 + m1*t = a2 (mod m2)
    u64 m2g = m2 / g;
    u64 diff = ((a2 % m2) + m2 - (a1 % m2)) % m2;
    diff /= g;
    // inverse of (m1/g) mod m2g
    u64 m1g = (m1 / g) % m2g;
    u64 inv = m2g == 1 ? 0 : powmod(m1g, euler_phi(m2g) - 1, m2g);
    u64 t = m2g == 1 ? 0 : mulmod(diff % m2g, inv, m2g);
    out_m = l;
    out_a = (a1 + u64(u128(m1) * t % l)) % l;
    return true;
}

} // namespace latsum
