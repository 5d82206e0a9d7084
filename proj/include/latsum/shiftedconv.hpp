#pragma once

#include <map>
#include <mutex>
#include <numeric>
#include <vector>

#include "numtheory.hpp"
#include "rational.hpp"

namespace latsum {

// eta_q(b) = #{(y1,y2) in (Z/q)^2 : y1^2 + y2^2 = b}, multiplicative in q.
struct EtaTable {
    u64 q = 1;
    std::vector<u64> values;

    u64 at(i64 b) const { return values[u64(((b % i64(q)) + i64(q)) % i64(q))]; }
};

namespace detail {

inline EtaTable eta_brute(u64 q) {
    EtaTable t;
    t.q = q;
    t.values.assign(q, 0);
    std::vector<u64> sq(q);
    for (u64 y = 0; y < q; ++y) sq[y] = mulmod(y, y, q);
    for (u64 y1 = 0; y1 < q; ++y1)
        for (u64 y2 = 0; y2 < q; ++y2) {
            u64 v = sq[y1] + sq[y2];
            if (v >= q) v -= q;
            ++t.values[v];
        }
    return t;
}

} // namespace detail

// Cached eta tables; composite moduli assembled by CRT from prime powers.
inline const EtaTable& eta_table(u64 q) {
    if (q == 0) throw std::invalid_argument("eta needs q >= 1");
    static std::map<u64, EtaTable> cache;
    static std::mutex mu;
    std::lock_guard lock(mu);
    auto it = cache.find(q);
    if (it != cache.end()) return it->second;

    auto fac = factorize(q);
    EtaTable t;
    if (fac.size() <= 1) {
        t = detail::eta_brute(q);
    } else {
        t.q = q;
        t.values.assign(q, 1);
        for (auto [p, e] : fac) {
            u64 pe = u64_pow_checked(p, e);
            auto pit = cache.find(pe);
            if (pit == cache.end()) pit = cache.emplace(pe, detail::eta_brute(pe)).first;
            const EtaTable& part = pit->second;
            for (u64 v = 0; v < q; ++v) t.values[v] *= part.values[v % part.q];
        }
    }
    return cache.emplace(q, std::move(t)).first->second;
}

inline u64 eta(u64 q, i64 b) { return eta_table(q).at(b); }

// S(x;q,a) = sum_{m<=x, m=a mod q} r(m) r(m+1) from a sieved r table
// (rtab must cover [0, x+1]).
inline i64 shifted_exact(const std::vector<uint16_t>& rtab, u64 x, u64 q, u64 a) {
    if (x + 1 >= rtab.size()) throw BudgetExceeded("r table does not cover x + 1");
    i64 total = 0;
    for (u64 m = (a % q == 0) ? q : a % q; m <= x; m += q)
        total += i64(rtab[m]) * i64(rtab[m + 1]);
    return total;
}

// Validity region of the main-term formula: 4 | q plus per-odd-prime
// valuation constraints on a (when a = 1 mod 4) or on a+1 (when a = 0 mod 4).
// Residues 2, 3 mod 4 are valid with value 0.
inline bool shifted_model_defined(u64 q, u64 a) {
    if (q % 4 != 0) return false;
    u64 r4 = a % 4;
    if (r4 == 2 || r4 == 3) return true;
    u64 probe = (r4 == 1) ? a : a + 1; // the odd partner carries the conditions
    for (auto [p, e] : factorize(q)) {
        if (p == 2) continue;
        u64 pr = probe % u64_pow_checked(p, e);
        if (pr == 0) return false; // v_p would reach v_p(q)
        if (valuation(pr, p) + 1 > e) return false;
    }
    return true;
}

// Exact rational coefficient C(q,a) with main term = pi^2 x C / pi^2-folded:
// S(x;q,a) ~ pi^2 x eta_q(a) eta_q(a+1) / q^3 * prod_{p !| q}(1 - p^-2).
// Using prod_p (1-p^-2) = 6/pi^2 the pi^2 cancels and the coefficient is the
// rational  6 eta_q(a) eta_q(a+1) / q^3 * prod_{p|q} p^2/(p^2-1).
inline Rat128 shifted_main_coefficient(u64 q, u64 a) {
    if (!shifted_model_defined(q, a))
        throw ModelDomainError("shifted convolution model undefined at (a=" + std::to_string(a) +
                               ", q=" + std::to_string(q) + ")");
    u64 r4 = a % 4;
    if (r4 == 2 || r4 == 3) return Rat128(0);
    Rat128 c(i128(eta(q, i64(a))) * i128(eta(q, i64(a) + 1)) * 6, i128_pow(i128(q), 3));
    for (auto [p, e] : factorize(q))
        c *= Rat128(i128(p) * i128(p), i128(p) * i128(p) - 1);
    return c;
}

inline double shifted_main_term(u64 x, u64 q, u64 a) {
    return shifted_main_coefficient(q, a).to_double() * double(x);
}

struct HyperbolaReport {
    i64 direct = 0;    // S_1(x;q,a) by the double sum
    i64 minus = 0;     // S_1^-
    i64 plus = 0;      // S_1^+
    bool pass = false; // direct == 4(minus + plus), exact
};

namespace detail {

inline int chi4(u64 m) { return m % 4 == 1 ? 1 : m % 4 == 3 ? -1 : 0; }

// sum of r(m+1) over m <= x, m = 1 (4), m = a (q), m = 0 (d); exact CRT walk
inline i64 progression_r_shift_sum(const std::vector<uint16_t>& rtab, u64 x, u64 q, u64 a, u64 d,
                                   u64 m_lower_excl = 0) {
    u64 a1, m1;
    if (!crt_pair(1 % 4, 4, a % q, q, a1, m1)) return 0;
    u64 a2, m2;
    if (!crt_pair(a1, m1, 0, d, a2, m2)) return 0;
    u64 start = a2 == 0 ? m2 : a2;
    i64 total = 0;
    for (u64 m = start; m <= x; m += m2)
        if (m > m_lower_excl) total += i64(rtab[m + 1]);
    return total;
}

} // namespace detail

// S_1(x;q,a) computed directly and through the Dirichlet hyperbola split
// S_1 = 4 S_1^- + 4 S_1^+; equality is exact in integers.
inline HyperbolaReport hyperbola_check(const std::vector<uint16_t>& rtab, u64 x, u64 q, u64 a) {
    if (q % 4 != 0) throw std::invalid_argument("hyperbola check needs 4 | q");
    if (x + 1 >= rtab.size()) throw BudgetExceeded("r table does not cover x + 1");
    HyperbolaReport rep;
    for (u64 m = 1; m <= x; ++m)
        if (m % 4 == 1 && m % q == a % q) rep.direct += i64(rtab[m]) * i64(rtab[m + 1]);

    // S_1^-: divisors d <= sqrt(x)
    for (u64 d = 1; d * d <= x; ++d) {
        int chi = detail::chi4(d);
        if (chi == 0) continue;
        if (u64 g = std::gcd(d, q); (a % q) % g != 0) continue;
        rep.minus += chi * detail::progression_r_shift_sum(rtab, x, q, a, d);
    }
    // S_1^+: complementary divisors e with m > e sqrt(x), i.e. m^2 > e^2 x
    for (u64 e = 1; e * e <= x; ++e) {
        int chi = detail::chi4(e);
        if (chi == 0) continue;
        if (u64 g = std::gcd(e, q); (a % q) % g != 0) continue;
        // exact threshold: smallest m with m^2 > e^2 x
        u64 thr = integer_kth_root(e * e * x, 2); // floor sqrt
        rep.plus += chi * detail::progression_r_shift_sum(rtab, x, q, a, e, thr);
    }
    rep.pass = rep.direct == 4 * (rep.minus + rep.plus);
    return rep;
}

struct GcdCharacterReport {
    i64 lhs = 0; // sum over d0 | gcd(a,q) of chi(d0)
    Rat128 rhs;
    bool pass = false;
};

// sum_{d0 | gcd(a,q)} chi(d0) = (1/2) (eta_q(a)/q) prod_{p|q} (1 - chi(p)/p)^{-1},
// exact in rationals; requires 4|q, a = 1 mod 4, v_p(a) < v_p(q) for p | q.
inline GcdCharacterReport gcd_character_identity(u64 q, u64 a) {
    if (q % 4 != 0 || a % 4 != 1)
        throw std::invalid_argument("gcd character identity needs 4 | q and a = 1 mod 4");
    for (auto [p, e] : factorize(q)) {
        if (p == 2) continue;
        u64 pr = a % u64_pow_checked(p, e);
        if (pr == 0 || valuation(pr, p) >= e)
            throw std::invalid_argument("gcd character identity needs v_p(a) < v_p(q) for all p | q");
    }
    GcdCharacterReport rep;
    for (u64 d0 : divisors(std::gcd(a, q))) rep.lhs += detail::chi4(d0);
    rep.rhs = Rat128(i128(eta(q, i64(a))), i128(q) * 2);
    for (auto [p, e] : factorize(q)) {
        int chi = detail::chi4(p);
        if (chi == 0) continue;
        // (1 - chi/p)^{-1} = p / (p - chi)
        rep.rhs *= Rat128(i128(p), i128(p) - chi);
    }
    rep.pass = Rat128(rep.lhs) == rep.rhs;
    return rep;
}

struct CharacterDensitySumReport {
    double m_direct = 0;   // the finite sum M
    double closed_form = 0;
    double diff = 0;
    double envelope = 0;   // tau(q) q^{3/2} (log x)^2 / sqrt(x)
    double fitted_constant = 0;
    bool pass = false;
};

// M = sum_{d <= sqrt x, gcd(d,q) | a} chi(d) N([d,q]) / [d,q]^2 against the
// closed form (pi/8) eta_q(a) eta_q(a+1) / q^3 * prod_{p !| q} (1 - p^-2),
// in the lemma's regime q >= sqrt(x).  (The q^3 is forced by consistency
// with the main theorem: S_1 ~ 8 pi x M.)
inline CharacterDensitySumReport character_density_sum_check(u64 x, u64 q, u64 a) {
    if (u128(q) * q < x) throw std::invalid_argument("character density sum regime needs q >= sqrt(x)");
    if (q % 4 != 0 || a % 4 != 1)
        throw std::invalid_argument("character density sum check needs 4 | q and a = 1 mod 4");
    CharacterDensitySumReport rep;
    auto qfac = factorize(q);
    for (u64 d = 1; d * d <= x; ++d) {
        int chi = detail::chi4(d);
        if (chi == 0) continue;
        u64 g = std::gcd(d, q);
        if ((a % q) % g != 0) continue;
        // N = #{y mod [d,q] : y1^2+y2^2 = a+1 (q), = 1 (d)} via per-prime eta
        u64 l = d / g * q;
        double count = 1;
        for (auto [p, e] : qfac) {
            // [d,q] component at p | q is p^e under the valuation conditions;
            // the mod-d constraint there is implied by p^{v_p(d)} | a
            u64 pl = u64_pow_checked(p, valuation(l, p));
            count *= double(eta(pl, i64((a + 1) % pl)));
        }
        for (auto [p, e] : factorize(d)) {
            if (q % p == 0) continue;
            u64 pl = u64_pow_checked(p, e);
            count *= double(eta(pl, 1));
        }
        rep.m_direct += chi * count / (double(l) * double(l));
    }
    double zeta_part = 6.0 / (std::numbers::pi * std::numbers::pi);
    for (auto [p, e] : qfac) zeta_part *= double(p) * double(p) / (double(p) * double(p) - 1.0);
    rep.closed_form = (std::numbers::pi / 8.0) * double(eta(q, i64(a))) *
                      double(eta(q, i64(a) + 1)) / (double(q) * double(q) * double(q)) * zeta_part;
    rep.diff = std::abs(rep.m_direct - rep.closed_form);
    double lx = std::log(double(x));
    double tau_q = double(divisors(q).size());
    rep.envelope = tau_q * std::pow(double(q), 1.5) * lx * lx / std::sqrt(double(x));
    rep.fitted_constant = rep.envelope > 0 ? rep.diff / rep.envelope : 0;
    rep.pass = rep.diff <= rep.envelope;
    return rep;
}

struct DivisibilityEnvelopeRow {
    u64 p;
    unsigned m;
    i64 sum;        // sum_{n<=x, p^m | n} r(n) r(n+1)
    double envelope; // (m / p^m) x
    double fitted;   // sum / envelope
};

// Upper-bound diagnostic: the sum restricted to p^m | n against (m/p^m) x.
inline DivisibilityEnvelopeRow divisibility_envelope(const std::vector<uint16_t>& rtab, u64 x, u64 p, unsigned m) {
    if (x + 1 >= rtab.size()) throw BudgetExceeded("r table does not cover x + 1");
    u64 pm = u64_pow_checked(p, m);
    DivisibilityEnvelopeRow row{p, m, 0, double(m) * double(x) / double(pm), 0};
    for (u64 n = pm; n <= x; n += pm) row.sum += i64(rtab[n]) * i64(rtab[n + 1]);
    row.fitted = row.envelope > 0 ? double(row.sum) / row.envelope : 0;
    return row;
}

} // namespace latsum
