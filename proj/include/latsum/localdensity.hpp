#pragma once

#include <complex>
#include <functional>
#include <map>
#include <vector>

#include "cramer.hpp"
#include "histogram.hpp"
#include "rational.hpp"

namespace latsum {

// c_r(a) = sum over primitive residues k mod r of e(ka/r), via the classical
// divisor form c_r(a) = sum_{d | gcd(|a|, r)} d mu(r/d).  c_r(0) = phi(r).
inline i64 ramanujan_sum(u64 r, i64 a) {
    if (r == 0) throw std::invalid_argument("ramanujan_sum needs r >= 1");
    u64 au = a == 0 ? 0 : u64(a < 0 ? -a : a);
    u64 g = au == 0 ? r : std::gcd(au, r);
    i64 total = 0;
    for (u64 d : divisors(g)) {
        u64 q = r / d;
        // mu(q) by factorization; q is tiny here
        int mu = 1;
        for (auto [p, e] : factorize(q)) {
            if (e >= 2) { mu = 0; break; }
            mu = -mu;
        }
        total += mu * i64(d);
    }
    return total;
}

// S_{a,q} = sum over t in (Z/q)^n of e(a f(t)/q), one histogram pass plus a
// q-entry root-of-unity table.
inline cplx exponential_sum(const ValueHistogram& hist, i64 a) {
    u64 q = hist.q;
    u64 am = u64(((a % i64(q)) + i64(q)) % i64(q));
    std::vector<cplx> roots(q);
    for (u64 j = 0; j < q; ++j) roots[j] = e_of(double(j) / double(q));
    cplx s = 0;
    for (u64 v = 0; v < q; ++v) {
        if (hist.counts[v] == 0) continue;
        s += double(hist.counts[v]) * roots[mulmod(am, v, q)];
    }
    return s;
}

inline cplx exponential_sum(const IntegerForm& form, i64 a, u64 q,
                            const HistogramOptions& opt = {}) {
    if (q == 0) throw std::invalid_argument("modulus must be positive");
    return exponential_sum(value_histogram_mod(form, q, opt), a);
}

// Birch's constant c = n 2^{-d} / (d-1) - 1; degree-1 forms have exact local
// counts and get an infinite sentinel.
inline double birch_exponent_c(const IntegerForm& form) {
    if (!form.admissible())
        throw std::domain_error("inadmissible form: n <= 2^d (d-1) makes c <= 0");
    if (form.degree() == 1) return std::numeric_limits<double>::infinity();
    return double(form.n()) * std::pow(2.0, -form.degree()) / double(form.degree() - 1) - 1.0;
}

struct LocalFactor {
    u64 p = 0;
    unsigned m = 0;
    Rat128 gamma;      // N(nu; p^m) / p^{m(n-1)}
    double tail_bound; // p^{-m(1+c)}, implied constant 1, heuristic
};

inline LocalFactor local_factor_from_hist(const ValueHistogram& hist, i64 nu, u64 p, unsigned m,
                                          int n, double c) {
    if (m < 1) throw std::invalid_argument("local factor needs m >= 1");
    u64 q = hist.q;
    u64 num = u64(((nu % i64(q)) + i64(q)) % i64(q));
    LocalFactor lf;
    lf.p = p;
    lf.m = m;
    lf.gamma = Rat128(hist.counts[num], i128_pow(i128(p), m * unsigned(n - 1)));
    lf.tail_bound = std::pow(double(p), -double(m) * (1.0 + c));
    return lf;
}

// Raw Birch exponent without the admissibility gate; the gated op above is
// the public contract, this one backs tail envelopes for arbitrary forms.
inline double birch_exponent_raw(const IntegerForm& form) {
    if (form.degree() == 1) return 1.0; // exact local counts; conservative positive envelope
    return double(form.n()) * std::pow(2.0, -form.degree()) / double(form.degree() - 1) - 1.0;
}

inline LocalFactor local_factor(const IntegerForm& form, i64 nu, u64 p, unsigned m,
                                const HistogramOptions& opt = {}) {
    if (m < 1) throw std::invalid_argument("local factor needs m >= 1");
    auto hist = value_histogram_mod(form, u64_pow_checked(p, m), opt);
    return local_factor_from_hist(hist, nu, p, m, form.n(), birch_exponent_raw(form));
}

struct IdentityReport {
    bool pass = false;
    Rat128 lhs, rhs;
    std::string label;
};

// Exact form of the finite-level identity
//   sum_{0<=r<=m} p^{-rn} sum_{a mod p^r, p !| a} S_{a,p^r} e(-a nu / p^r)
//     = N(nu; p^m) / p^{(n-1)m}.
// The inner complete sum over units is a Ramanujan sum of f(t) - nu, so both
// sides live in Q and the comparison is exact.
inline IdentityReport finite_level_identity_check(const IntegerForm& form, i64 nu, u64 p,
                                                unsigned m_p, const HistogramOptions& opt = {}) {
    IdentityReport rep;
    rep.label = "finite-level p=" + std::to_string(p) + " m=" + std::to_string(m_p);
    const int n = form.n();
    if (m_p == 0) {
        rep.lhs = Rat128(1);
        rep.rhs = Rat128(1); // N(nu;1)/1
        rep.pass = true;
        return rep;
    }
    u64 q_top = u64_pow_checked(p, m_p);
    auto hist = value_histogram_mod(form, q_top, opt);

    Rat128 lhs(0);
    for (unsigned r = 0; r <= m_p; ++r) {
        u64 pr = u64_pow_checked(p, r);
        auto hr = hist.reduced(pr);
        // counts at level p^r carry the (q_top/p^r)^n lift multiplicity
        i128 lift = i128_pow(i128(q_top / pr), n);
        i128 inner = 0; // sum_w counts_{p^r}(w) c_{p^r}(w - nu)
        for (u64 w = 0; w < pr; ++w) {
            if (hr.counts[w] == 0) continue;
            i64 shift = i64(w) - i64(u64(((nu % i64(pr)) + i64(pr)) % i64(pr)));
            inner += (hr.counts[w] / lift) * i128(ramanujan_sum(pr, shift));
        }
        lhs += Rat128(inner, i128_pow(i128(p), r * unsigned(n)));
    }
    u64 numod = u64(((nu % i64(q_top)) + i64(q_top)) % i64(q_top));
    rep.rhs = Rat128(hist.counts[numod], i128_pow(i128(p), m_p * unsigned(n - 1)));
    rep.lhs = lhs;
    rep.pass = lhs == rep.rhs;
    return rep;
}

// Exact form of the divisor identity chain: with Gamma_m = N(0;p^m)/p^{(n-1)m}
// and tau_{p^m}(l) = 1 + min(v_p(l), m),
//   sum_{0<=r<=m} p^{-r(n+1)} sum_{a mod p^r, p !| a} S_{a,p^r}
//     = (1 - 1/p) p^{-nm} sum_t tau_{p^m}(f(t)) + Gamma_m / p^{m+1}.
inline IdentityReport divisor_chain_check(const IntegerForm& form, u64 p, unsigned m,
                                          const HistogramOptions& opt = {}) {
    IdentityReport rep;
    rep.label = "divisor-chain p=" + std::to_string(p) + " m=" + std::to_string(m);
    const int n = form.n();
    u64 q_top = u64_pow_checked(p, m);
    auto hist = value_histogram_mod(form, q_top, opt);

    Rat128 lhs(0);
    for (unsigned r = 0; r <= m; ++r) {
        u64 pr = u64_pow_checked(p, r);
        auto hr = hist.reduced(pr);
        i128 lift = i128_pow(i128(q_top / pr), n);
        i128 inner = 0; // sum_w counts_{p^r}(w) c_{p^r}(w)
        for (u64 w = 0; w < pr; ++w) {
            if (hr.counts[w] == 0) continue;
            inner += (hr.counts[w] / lift) * i128(ramanujan_sum(pr, i64(w)));
        }
        lhs += Rat128(inner, i128_pow(i128(p), r * unsigned(n + 1)));
    }

    // tau side from the same histogram
    i128 tau_sum = 0;
    for (u64 v = 0; v < q_top; ++v) {
        if (hist.counts[v] == 0) continue;
        unsigned vp = v == 0 ? m : std::min(valuation(v, p), m);
        tau_sum += hist.counts[v] * i128(1 + vp);
    }
    Rat128 tau_term = Rat128(p - 1, p) * Rat128(tau_sum, i128_pow(i128(p), m * unsigned(n)));
    Rat128 gamma_m(hist.counts[0], i128_pow(i128(p), m * unsigned(n - 1)));
    rep.rhs = tau_term + gamma_m / Rat128(i128_pow(i128(p), m + 1), 1);
    rep.lhs = lhs;
    rep.pass = rep.lhs == rep.rhs;
    return rep;
}

struct SingularSeriesValue {
    double value = 1;
    double z = 0;
    double c = 0;               // Birch exponent
    double error_envelope = 0;  // eps_tilde(z) + z^{-c}, implied constant 1 (heuristic)
    std::map<u64, LocalFactor> per_prime;
};

// Truncated singular series prod_{p<=z} Gamma_{m_p}(nu).
inline SingularSeriesValue singular_series(const IntegerForm& form, i64 nu, const WzPlan& plan,
                                           const HistogramOptions& opt = {}) {
    if (!form.admissible())
        throw std::domain_error("singular series needs an admissible form (c > 0)");
    SingularSeriesValue out;
    out.z = plan.z;
    out.c = birch_exponent_c(form);
    for (auto [p, m] : plan.exponents) {
        auto lf = local_factor(form, nu, p, m, opt);
        out.value *= lf.gamma.to_double();
        out.per_prime.emplace(p, std::move(lf));
    }
    double zc = std::isinf(out.c) ? 0.0 : std::pow(plan.z, -out.c);
    out.error_envelope = plan.epsilon_tilde() + zc;
    return out;
}

struct WeylFit {
    double fitted_K = 0; // max over (r, a) of |S_{a,p^r}| / p^{r(n-c-2)}
    u64 argmax_pr = 1;
};

// Diagnostic for the Weyl-type envelope |S_{a,p^r}| <= K p^{r(n-c-2)}: the
// implied constant is unknown, so the fitted K is reported, never asserted.
inline WeylFit weyl_envelope_fit(const IntegerForm& form, u64 p, unsigned r_max,
                                 const HistogramOptions& opt = {}) {
    WeylFit fit;
    double c = birch_exponent_raw(form);
    auto top = value_histogram_mod(form, u64_pow_checked(p, r_max), opt);
    for (unsigned r = 1; r <= r_max; ++r) {
        u64 pr = u64_pow_checked(p, r);
        auto hist = top.reduced(pr);
        i128 lift = i128_pow(i128(top.q / pr), form.n());
        for (auto& ccount : hist.counts) ccount /= lift;
        double envelope = std::pow(double(p), double(r) * (form.n() - c - 2.0));
        for (u64 a = 1; a < pr; ++a) {
            if (a % p == 0) continue;
            double mag = std::abs(exponential_sum(hist, i64(a)));
            double k = mag / envelope;
            if (k > fit.fitted_K) {
                fit.fitted_K = k;
                fit.argmax_pr = pr;
            }
        }
    }
    return fit;
}

struct SigmaTraceRow {
    double z;
    double t_z;     // modulus actually used
    double value;   // T^{-n+1} sum_t rho(s f(t), T)
};

struct SigmaTrace {
    std::vector<SigmaTraceRow> rows;
    double value = 0;                // last row
    std::vector<double> differences; // successive |row_i - row_{i-1}|
};

// sigma(f) truncations along a z-sequence, evaluated as
//   sum_nu rho(s nu, T_z) counts_{T_z}(nu) / T_z^{n-1}
// with CRT-combined histograms (never by t-enumeration).
inline SigmaTrace sigma_f_limit(const IntegerForm& form,
                                const std::function<double(i64, u64)>& rho,
                                const std::vector<double>& z_sequence, int s = 1,
                                const std::string& schedule = "floor",
                                u64 t_budget = 10'000'000, const HistogramOptions& opt = {}) {
    for (size_t i = 1; i < z_sequence.size(); ++i)
        if (!(z_sequence[i] > z_sequence[i - 1]))
            throw std::invalid_argument("z sequence must be strictly increasing");
    SigmaTrace trace;
    const int n = form.n();
    for (double z : z_sequence) {
        WzPlan plan = make_plan(schedule, z);
        u128 t_check = 1;
        for (auto [p, m] : plan.exponents) {
            t_check *= u128(u64_pow_checked(p, m));
            if (t_check > t_budget)
                throw BudgetExceeded("T_z exceeds the dense sigma budget; use a smaller z");
        }
        u64 T = u64(t_check);
        // CRT-combine per-prime histograms
        ValueHistogram acc;
        bool first = true;
        for (auto [p, m] : plan.exponents) {
            auto hp = value_histogram_mod(form, u64_pow_checked(p, m), opt);
            if (first) {
                acc = std::move(hp);
                first = false;
            } else {
                acc = crt_combine(acc, hp);
            }
        }
        if (first) { // z < 2 never happens (plan requires z >= 2), but stay safe
            acc.q = 1;
            acc.counts.assign(1, 1);
            acc.n = n;
        }
        long double sum = 0;
        long double denom = powl((long double)T, (long double)(n - 1));
        for (u64 v = 0; v < T; ++v) {
            if (acc.counts[v] == 0) continue;
            u64 arg = s >= 0 ? v : (T - v) % T;
            double r = rho(i64(arg), T);
            if (r != 0) sum += (long double)double(acc.counts[v]) * r;
        }
        trace.rows.push_back({z, double(T), double(sum / denom)});
    }
    for (size_t i = 1; i < trace.rows.size(); ++i)
        trace.differences.push_back(std::abs(trace.rows[i].value - trace.rows[i - 1].value));
    if (!trace.rows.empty()) trace.value = trace.rows.back().value;
    return trace;
}

} // namespace latsum
