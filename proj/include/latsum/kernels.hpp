#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "localdensity.hpp"
#include "numtheory.hpp"
#include "quadrature.hpp"
#include "shiftedconv.hpp"

namespace latsum {

// tau_Delta(1..x_max) by expanding q prod (1-q^n)^24: the cube is Jacobi's
// sparse series, then five sparse multiplies give the 8th power.
inline std::vector<i128> ramanujan_tau_table(u64 x_max) {
    if (x_max < 1) throw std::invalid_argument("tau table needs x_max >= 1");
    if (x_max > 1'000'000) throw BudgetExceeded("tau table capped at 1e6 coefficients");
    const u64 N = x_max; // coefficients of eta-product up to q^{N-1}
    // J = prod (1-q^n)^3 = sum_k (-1)^k (2k+1) q^{k(k+1)/2}
    std::vector<std::pair<u64, i64>> J;
    for (u64 k = 0;; ++k) {
        u64 off = k * (k + 1) / 2;
        if (off >= N) break;
        J.push_back({off, (k % 2 ? -1 : 1) * i64(2 * k + 1)});
    }
    // J^2 by sparse x sparse, then six sparse multiplies up to J^8
    std::vector<i128> acc(N, 0);
    for (auto [o1, c1] : J)
        for (auto [o2, c2] : J) {
            if (o1 + o2 >= N) break;
            acc[o1 + o2] += i128(c1) * c2;
        }
    for (int rep = 0; rep < 6; ++rep) {
        std::vector<i128> next(N, 0);
        for (auto [o, c] : J) {
            for (u64 i = 0; i + o < N; ++i) {
                if (acc[i] == 0) continue;
                next[i + o] += acc[i] * c;
            }
        }
        acc = std::move(next);
    }
    // tau(m) is the coefficient of q^{m-1} in the eta-product
    std::vector<i128> tau(x_max + 1, 0);
    for (u64 m = 1; m <= x_max; ++m) tau[m] = acc[m - 1];
    return tau;
}

// (omega, rho) equidistribution model: rho is a partial function with an
// explicit validity predicate.
struct RhoModel {
    std::function<bool(i64, u64)> defined = [](i64, u64) { return true; };
    std::function<double(i64, u64)> value = [](i64, u64) { return 0.0; };
};

// An arithmetic function with its exact evaluator and distribution model.
struct Kernel {
    std::string name;
    bool integer_valued = true;
    u64 range = 0; // eval is valid on [1, range]
    std::function<i64(u64)> eval_int;
    std::function<double(u64)> eval_real;
    Omega omega;
    RhoModel rho;
    int sign_support = +1;

    double rho_at(i64 a, u64 q) const {
        if (!rho.defined(a, q))
            throw ModelDomainError(name + ": rho undefined at (a=" + std::to_string(a) +
                                   ", q=" + std::to_string(q) + ")");
        return rho.value(a, q);
    }

    // dense k(1..limit) for sweep tables
    std::vector<i64> table_int(u64 limit) const {
        if (!integer_valued) throw std::logic_error(name + " is not integer valued");
        if (limit > range) throw BudgetExceeded(name + ": range " + std::to_string(limit) +
                                                " exceeds sieve budget " + std::to_string(range));
        std::vector<i64> t(limit + 1, 0);
        for (u64 m = 1; m <= limit; ++m) t[m] = eval_int(m);
        return t;
    }
    std::vector<double> table_real(u64 limit) const {
        if (limit > range) throw BudgetExceeded(name + ": range exceeds sieve budget");
        std::vector<double> t(limit + 1, 0);
        for (u64 m = 1; m <= limit; ++m) t[m] = eval_real(m);
        return t;
    }
};

namespace detail {

inline void fill_real_from_int(Kernel& k) {
    auto f = k.eval_int;
    k.eval_real = [f](u64 m) { return double(f(m)); };
}

} // namespace detail

// k(m) = r(m) r(m+1), omega = pi^2, rho from eta tables (partial model).
inline Kernel kernel_two_squares_shifted(u64 x_max = 10'000'000) {
    Kernel k;
    k.name = "two_squares_shifted";
    k.range = x_max;
    auto rtab = std::make_shared<std::vector<uint16_t>>(sum_two_squares_sieve(x_max + 1));
    k.eval_int = [rtab, x_max](u64 m) -> i64 {
        if (m == 0 || m > x_max) throw std::out_of_range("two_squares_shifted range");
        return i64((*rtab)[m]) * i64((*rtab)[m + 1]);
    };
    detail::fill_real_from_int(k);
    k.omega = omega_const(std::numbers::pi * std::numbers::pi, "pi^2");
    k.rho.defined = [](i64 a, u64 q) {
        return q % 4 == 0 && shifted_model_defined(q, u64(((a % i64(q)) + i64(q)) % i64(q)));
    };
    // rho pairs with omega = pi^2: main term pi^2 x rho = x * coefficient
    k.rho.value = [](i64 a, u64 q) {
        u64 r = u64(((a % i64(q)) + i64(q)) % i64(q));
        return shifted_main_coefficient(q, r).to_double() /
               (std::numbers::pi * std::numbers::pi);
    };
    return k;
}

inline Kernel kernel_moebius(u64 x_max = 10'000'000) {
    Kernel k;
    k.name = "moebius";
    k.range = x_max;
    auto mu = std::make_shared<std::vector<int8_t>>(moebius_sieve(x_max));
    k.eval_int = [mu, x_max](u64 m) -> i64 {
        if (m == 0 || m > x_max) throw std::out_of_range("moebius range");
        return (*mu)[m];
    };
    detail::fill_real_from_int(k);
    k.omega = omega_one();
    k.rho = {}; // rho = 0 everywhere (Davenport-type cancellation)
    k.sign_support = 0;
    return k;
}

// lambda(m) = tau_Delta(m) / m^{11/2}; real valued, rho = 0.
inline Kernel kernel_delta_hecke(u64 x_max = 100'000) {
    Kernel k;
    k.name = "delta_hecke";
    k.integer_valued = false;
    k.range = x_max;
    auto tau = std::make_shared<std::vector<i128>>(ramanujan_tau_table(x_max));
    k.eval_real = [tau, x_max](u64 m) -> double {
        if (m == 0 || m > x_max) throw std::out_of_range("delta_hecke range");
        return double((*tau)[m]) / std::pow(double(m), 5.5);
    };
    k.eval_int = nullptr;
    k.omega = omega_one();
    k.rho = {};
    k.sign_support = 0;
    return k;
}

inline Rat128 divisor_rho_exact(i64 a, u64 q) {
    Rat128 total(0);
    for (u64 r : divisors(q)) total += Rat128(ramanujan_sum(r, a), i128(r));
    return total / Rat128(i128(q), 1);
}

inline Kernel kernel_divisor(u64 x_max = 10'000'000) {
    Kernel k;
    k.name = "divisor";
    k.range = x_max;
    auto tau = std::make_shared<std::vector<uint16_t>>(divisor_count_sieve(x_max));
    k.eval_int = [tau, x_max](u64 m) -> i64 {
        if (m == 0 || m > x_max) throw std::out_of_range("divisor range");
        return (*tau)[m];
    };
    detail::fill_real_from_int(k);
    k.omega = omega_log_2gamma();
    k.rho.value = [](i64 a, u64 q) { return divisor_rho_exact(a, q).to_double(); };
    return k;
}

inline Kernel kernel_kth_power(unsigned kk) {
    if (kk < 2) throw std::invalid_argument("k-th power kernel needs k >= 2");
    Kernel k;
    k.name = "kth_power:" + std::to_string(kk);
    k.range = UINT64_MAX; // direct root test, no sieve
    k.eval_int = [kk](u64 m) -> i64 { return is_perfect_kth_power(m, kk) ? 1 : 0; };
    detail::fill_real_from_int(k);
    k.omega = omega_power(kk);
    auto cache = std::make_shared<std::map<u64, std::vector<u64>>>();
    k.rho.value = [kk, cache](i64 a, u64 q) {
        auto it = cache->find(q);
        if (it == cache->end()) {
            std::vector<u64> counts(q, 0);
            for (u64 y = 0; y < q; ++y) ++counts[powmod(y, kk, q)];
            it = cache->emplace(q, std::move(counts)).first;
        }
        return double(it->second[u64(((a % i64(q)) + i64(q)) % i64(q))]) / double(q);
    };
    return k;
}

// conservative tail envelope for the truncated m-full series (terms decay
// like k^{-1-1/m})
inline double m_full_series_tail(unsigned m, u64 K) {
    return double(m) * std::pow(double(K), -1.0 / double(m));
}

// m-full indicator; rho is the truncated squarefree-tuple series.  Tuples are
// cut at product k_2...k_m <= K; the reported tail envelope is conservative.
inline Kernel kernel_m_full(unsigned mm, u64 series_cap = 10'000) {
    if (mm < 2) throw std::invalid_argument("m-full kernel needs m >= 2");
    Kernel k;
    k.name = "m_full:" + std::to_string(mm);
    k.range = UINT64_MAX;
    k.eval_int = [mm](u64 m) -> i64 { return is_m_full(m, mm) ? 1 : 0; };
    detail::fill_real_from_int(k);
    k.omega = omega_power(mm);
    auto mu = std::make_shared<std::vector<int8_t>>(moebius_sieve(series_cap));
    k.rho.value = [mm, series_cap, mu](i64 a, u64 q) {
        u64 r = u64(((a % i64(q)) + i64(q)) % i64(q));
        std::vector<u64> pw(q);
        for (u64 y = 0; y < q; ++y) pw[y] = powmod(y, mm, q);
        double total = 0;
        // tuples (k_2..k_m) with squarefree product <= series_cap; slot idx
        // holds k_{idx+2} with weight k^{-(1+(idx+1)/m)} and the root-count
        // constant c = prod k_{i}^{m+i-1}
        std::vector<u64> tuple(mm - 1, 1);
        std::function<void(unsigned, u64, double)> walk = [&](unsigned idx, u64 prod,
                                                              double weight) {
            if (idx == mm - 1) {
                u64 c = 1;
                for (unsigned i = 0; i < mm - 1; ++i) {
                    u64 base = tuple[i] % q;
                    for (unsigned e = 0; e < mm + i + 1; ++e) c = mulmod(c, base, q);
                }
                u64 cnt = 0;
                for (u64 y = 0; y < q; ++y)
                    if (mulmod(pw[y], c, q) == r) ++cnt;
                total += weight * double(cnt) / double(q);
                return;
            }
            for (u64 v = 1; prod * v <= series_cap; ++v) {
                u64 pv = prod * v;
                if (pv > 1 && (*mu)[pv] == 0) continue;
                tuple[idx] = v;
                double w = weight / std::pow(double(v), 1.0 + double(idx + 1) / double(mm));
                walk(idx + 1, pv, w);
            }
            tuple[idx] = 1;
        };
        walk(0, 1, 1.0);
        return total;
    };
    return k;
}

inline Kernel kernel_pow2() {
    Kernel k;
    k.name = "pow2";
    k.range = UINT64_MAX;
    k.eval_int = [](u64 m) -> i64 { return m >= 1 && (m & (m - 1)) == 0 ? 1 : 0; };
    detail::fill_real_from_int(k);
    k.omega = omega_pow2();
    k.rho.value = [](i64 a, u64 q) {
        u64 r = u64(((a % i64(q)) + i64(q)) % i64(q));
        unsigned v2q = valuation(q, 2);
        u64 q_odd = q >> v2q;
        // v_2(r) >= v_2(q), with r = 0 passing automatically
        if (r != 0) {
            if (valuation(r, 2) < v2q) return 0.0;
            r >>= v2q;
        }
        if (q_odd == 1) return 1.0; // g(q) = 1, condition met
        if (r % q_odd == 0) return 0.0; // 0 is never a power of 2 mod odd q > 1
        u64 g = multiplicative_order(2, q_odd);
        u64 x = 1 % q_odd;
        for (u64 j = 0; j < g; ++j) {
            if (x == r % q_odd) return 1.0 / double(g);
            x = mulmod(x, 2, q_odd);
        }
        return 0.0;
    };
    return k;
}

// rho-exact toy: k = 1, omega = 1, rho = 1/q.
inline Kernel kernel_unit() {
    Kernel k;
    k.name = "unit";
    k.range = UINT64_MAX;
    k.eval_int = [](u64) -> i64 { return 1; };
    detail::fill_real_from_int(k);
    k.omega = omega_one();
    k.rho.value = [](i64, u64 q) { return 1.0 / double(q); };
    return k;
}

// Optional prime-indicator kernel (Example-1.1 shape); no acceptance criteria
// attach to it.
inline Kernel kernel_primes(u64 x_max = 10'000'000) {
    Kernel k;
    k.name = "primes";
    k.range = x_max;
    auto is_p = std::make_shared<std::vector<bool>>(x_max + 1, true);
    auto& v = *is_p;
    v[0] = false;
    if (x_max >= 1) v[1] = false;
    for (u64 p = 2; p * p <= x_max; ++p)
        if (v[p])
            for (u64 j = p * p; j <= x_max; j += p) v[j] = false;
    k.eval_int = [is_p, x_max](u64 m) -> i64 {
        if (m == 0 || m > x_max) throw std::out_of_range("primes range");
        return (*is_p)[m] ? 1 : 0;
    };
    detail::fill_real_from_int(k);
    // omega = 1/log(t+1); the antiderivative has no closed form, integrate
    // numerically with fine Simpson panels (diagnostic use only)
    k.omega.name = "1/log(t+1)";
    k.omega.w = [](double t) { return 1.0 / std::log(t + 1.0); };
    k.omega.W = [](double x) {
        if (x <= 1) return 0.0;
        int N = 2000;
        double h = (x - 1) / N, s = 0;
        for (int i = 0; i < N; ++i) {
            double a = 1 + i * h;
            s += h / 6 *
                 (1 / std::log(a + 1) + 4 / std::log(a + h / 2 + 1) + 1 / std::log(a + h + 1));
        }
        return s;
    };
    k.rho.value = [](i64 a, u64 q) {
        u64 r = u64(((a % i64(q)) + i64(q)) % i64(q));
        return std::gcd(r, q) == 1 ? 1.0 / double(euler_phi(q)) : 0.0;
    };
    return k;
}

// Registry: names as exposed by the CLI and config files.
inline Kernel make_kernel(const std::string& spec, u64 sieve_budget = 0) {
    auto param = [&](const std::string& prefix) -> unsigned {
        return unsigned(std::stoul(spec.substr(prefix.size())));
    };
    if (spec == "two_squares_shifted")
        return kernel_two_squares_shifted(sieve_budget ? sieve_budget : 10'000'000);
    if (spec == "moebius") return kernel_moebius(sieve_budget ? sieve_budget : 10'000'000);
    if (spec == "delta_hecke") return kernel_delta_hecke(sieve_budget ? sieve_budget : 100'000);
    if (spec == "divisor") return kernel_divisor(sieve_budget ? sieve_budget : 10'000'000);
    if (spec.rfind("kth_power:", 0) == 0) return kernel_kth_power(param("kth_power:"));
    if (spec.rfind("m_full:", 0) == 0) return kernel_m_full(param("m_full:"));
    if (spec == "pow2") return kernel_pow2();
    if (spec == "unit") return kernel_unit();
    if (spec == "primes") return kernel_primes(sieve_budget ? sieve_budget : 10'000'000);
    throw std::invalid_argument(
        "unknown kernel '" + spec +
        "'; valid: two_squares_shifted, moebius, delta_hecke, divisor, kth_power:k, m_full:m, "
        "pow2, unit, primes");
}

// Exact partial sums of k over every residue class mod q up to x.
struct APWindow {
    u64 x = 0, q = 1;
    bool integer_valued = true;
    std::vector<i64> prefix_int;     // index m: sum over j <= m, j = m mod q
    std::vector<double> prefix_real;

    double partial(u64 a, u64 y) const {
        if (y > x) throw std::out_of_range("window query beyond x");
        if (y == 0) return 0;
        // largest m <= y with m = a (mod q)
        u64 offset = (y % q + q - a % q) % q;
        if (offset >= y) return 0;
        u64 m = y - offset;
        return integer_valued ? double(prefix_int[m]) : prefix_real[m];
    }

    double class_total(u64 a) const { return partial(a, x); }
};

inline APWindow ap_partial_sums(const Kernel& kernel, u64 x, u64 q,
                                u64 memory_budget = 200'000'000) {
    if (q == 0) throw std::invalid_argument("modulus must be positive");
    if (x > kernel.range) throw BudgetExceeded(kernel.name + ": x exceeds sieve budget");
    if (x * 8 > memory_budget) throw BudgetExceeded("AP window exceeds memory budget");
    APWindow w;
    w.x = x;
    w.q = q;
    w.integer_valued = kernel.integer_valued;
    if (kernel.integer_valued) {
        w.prefix_int.assign(x + 1, 0);
        for (u64 m = 1; m <= x; ++m)
            w.prefix_int[m] = kernel.eval_int(m) + (m > q ? w.prefix_int[m - q] : 0);
    } else {
        w.prefix_real.assign(x + 1, 0);
        for (u64 m = 1; m <= x; ++m)
            w.prefix_real[m] = kernel.eval_real(m) + (m > q ? w.prefix_real[m - q] : 0);
    }
    return w;
}

struct EmpiricalE {
    double E = 0;          // sup_y max_a |partial(a,y) - rho(a,q) W(y)|
    double normalized = 0; // E / |W(x)|
};

// E(x,q) for a kernel whose rho is defined on every residue class mod q.
// With rho >= 0 and omega >= 0 each class function decreases between its
// jumps, so the supremum is attained at integer points just before/after a
// jump; the sweep is O(x).
inline EmpiricalE empirical_E(const Kernel& kernel, u64 x, u64 q) {
    if (q == 0) throw std::invalid_argument("modulus must be positive");
    if (x > kernel.range) throw BudgetExceeded(kernel.name + ": x exceeds sieve budget");
    std::vector<double> rho(q);
    for (u64 a = 0; a < q; ++a) rho[a] = kernel.rho_at(i64(a), q); // throws when undefined
    std::vector<double> partial(q, 0.0);
    double E = 0;
    for (u64 m = 1; m <= x; ++m) {
        u64 cls = m % q;
        double Wm = kernel.omega.W(double(m));
        double before = std::abs(partial[cls] - rho[cls] * Wm);
        partial[cls] += kernel.integer_valued ? double(kernel.eval_int(m)) : kernel.eval_real(m);
        double after = std::abs(partial[cls] - rho[cls] * Wm);
        E = std::max({E, before, after});
    }
    double Wx = kernel.omega.W(double(x));
    for (u64 a = 0; a < q; ++a) E = std::max(E, std::abs(partial[a] - rho[a] * Wx));
    EmpiricalE out;
    out.E = E;
    out.normalized = std::abs(Wx) > 0 ? E / std::abs(Wx) : E;
    return out;
}

} // namespace latsum
