#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <span>
#include <thread>
#include <vector>

#include "bigint.hpp"
#include "forms.hpp"

namespace latsum {

struct LatticeDomain {
    std::vector<std::pair<i64, i64>> ranges; // [ceil(P a_j), floor(P a_j')]

    static LatticeDomain of(const Box& box, u64 P) {
        LatticeDomain d;
        for (int j = 0; j < box.dim(); ++j) d.ranges.push_back(box.lattice_range(j, P));
        return d;
    }

    u128 points() const {
        u128 n = 1;
        for (auto [lo, hi] : ranges) {
            if (hi < lo) return 0;
            n *= u128(hi - lo + 1);
        }
        return n;
    }
};

// Accumulator with overflow detection: sums land in a fixed-width chunk and
// spill into arbitrary precision only if the chunk ever overflows.
template <typename AccT>
struct SpillAccumulator {
    AccT chunk = 0;
    BigInt spill;
    bool spilled = false;

    void add(AccT v) {
        AccT next;
        if (__builtin_add_overflow(chunk, v, &next)) {
            spill += BigInt::from_i128(i128(chunk));
            spilled = true;
            chunk = v;
        } else {
            chunk = next;
        }
    }
    BigInt total() const { return spill + BigInt::from_i128(i128(chunk)); }
};

struct SweepOptions {
    int threads = 1;
    u64 budget = 1'000'000'000;        // lattice points
    u64 census_budget = 200'000'000;   // dense value-range entries
    bool force_enumeration = false;    // benchmarking / determinism checks
};

struct SweepResult {
    bool integer_kernel = true;
    BigInt total_int;
    bool accumulator_spilled = false;
    double total_real = 0;
    u64 points_visited = 0;
    u64 positive_values = 0, zero_values = 0, negative_values = 0;
    u64 max_abs_value = 0;
    double elapsed = 0;
    std::string method;

    double total_as_double() const {
        return integer_kernel ? total_int.to_double() : total_real;
    }
};

// Dense census of f(t) over the lattice box: counts[v - lo] = #{t : f(t) = v}.
struct ValueCensus {
    i64 lo = 0;
    std::vector<i64> counts;
    u64 points = 0;

    i64 at(i64 v) const {
        if (v < lo || v >= lo + i64(counts.size())) return 0;
        return counts[size_t(v - lo)];
    }
};

namespace detail {

// per-axis value multiset for a diagonal form: c * t^d over the axis range
inline std::vector<std::pair<i64, i64>> axis_values(i64 c, int d, i64 lo, i64 hi) {
    std::vector<std::pair<i64, i64>> vals;
    for (i64 t = lo; t <= hi; ++t) {
        i128 v = c;
        for (int e = 0; e < d; ++e) v *= t;
        vals.push_back({i64(v), 1});
    }
    std::sort(vals.begin(), vals.end());
    std::vector<std::pair<i64, i64>> out;
    for (auto [v, c1] : vals) {
        if (!out.empty() && out.back().first == v) out.back().second += c1;
        else out.push_back({v, c1});
    }
    return out;
}

struct InnerPoly {
    // f(prefix, x) = sum_e g[e] x^e along the last axis
    std::vector<std::vector<IntegerForm::Term>> by_last;
    int n, d;

    explicit InnerPoly(const IntegerForm& form) : n(form.n()), d(form.degree()) {
        by_last.resize(d + 1);
        for (auto& t : form.terms()) by_last[t.exps[n - 1]].push_back(t);
    }

    template <typename V>
    void coefficients(std::span<const i64> prefix, std::vector<V>& g) const {
        g.assign(d + 1, 0);
        for (int e = 0; e <= d; ++e)
            for (auto& t : by_last[e]) {
                i128 prod = t.coeff.to_i128();
                for (int j = 0; j + 1 < n; ++j)
                    for (int k = 0; k < t.exps[j]; ++k) prod *= prefix[j];
                g[e] += V(prod);
            }
    }
};

} // namespace detail

// Exact census of values over the lattice box.  Diagonal forms use per-axis
// value convolution; anything else enumerates (single worker: the census
// array is the shared state).
inline ValueCensus value_census(const IntegerForm& form, const Box& box, u64 P,
                                const SweepOptions& opts = {}) {
    if (box.dim() != form.n()) throw std::invalid_argument("box dimension mismatch");
    auto dom = LatticeDomain::of(box, P);
    u128 pts = dom.points();
    ValueCensus census;
    census.points = u64(pts);
    if (pts == 0) {
        census.counts.assign(1, 0);
        return census;
    }

    auto diag = form.diagonal_coeffs();
    if (diag && !opts.force_enumeration) {
        std::vector<i64> acc{0};
        i64 acc_lo = 0;
        bool first = true;
        for (int j = 0; j < form.n(); ++j) {
            auto [lo, hi] = dom.ranges[j];
            auto vals = detail::axis_values((*diag)[j], form.degree(), lo, hi);
            i64 vmin = vals.front().first, vmax = vals.back().first;
            if (first) {
                acc_lo = vmin;
                acc.assign(size_t(vmax - vmin + 1), 0);
                for (auto [v, c] : vals) acc[size_t(v - vmin)] += c;
                first = false;
                continue;
            }
            i64 new_lo = acc_lo + vmin;
            u64 new_len = u64(acc.size() - 1 + u64(vmax - vmin)) + 1;
            if (new_len > opts.census_budget)
                throw BudgetExceeded("census value range exceeds the configured budget");
            std::vector<i64> next(new_len, 0);
            for (size_t i = 0; i < acc.size(); ++i) {
                if (acc[i] == 0) continue;
                i64 base = acc[i];
                for (auto [v, c] : vals) next[i + size_t(v - vmin)] += base * c;
            }
            acc = std::move(next);
            acc_lo = new_lo;
        }
        census.lo = acc_lo;
        census.counts = std::move(acc);
        return census;
    }

    // general path: enumerate with last-axis finite differences
    if (pts > opts.budget) throw BudgetExceeded("lattice sweep exceeds the point budget");
    BigInt bound = form.coeff_sum_bound(); // 2 sum|c|; |f| <= (bound/2) P^d
    BigInt cap = bound * bigint_pow(BigInt(i64(P)), form.degree());
    unsigned guard_shift = std::min(form.degree() + 2, 40);
    if (!(cap.mul_small(u64(1) << guard_shift) < BigInt::from_i128(i128(1) << 62)))
        throw BudgetExceeded("value range too large for the census table");
    i64 vcap = i64(cap.to_i128());
    if (u64(2 * vcap + 1) > opts.census_budget)
        throw BudgetExceeded("census value range exceeds the configured budget");
    census.lo = -vcap;
    census.counts.assign(size_t(2 * vcap + 1), 0);

    const int n = form.n();
    const int d = form.degree();
    detail::InnerPoly inner(form);
    std::vector<i64> prefix(std::max(n - 1, 1));
    std::vector<i64> g, fd(d + 1);
    std::vector<i64> idx(std::max(n - 1, 1));
    for (int j = 0; j + 1 < n; ++j) idx[j] = dom.ranges[j].first;
    auto [ilo, ihi] = dom.ranges[n - 1];
    while (true) {
        for (int j = 0; j + 1 < n; ++j) prefix[j] = idx[j];
        inner.coefficients<i64>(prefix, g);
        auto poly_at = [&](i64 x) {
            i64 v = 0;
            for (int e = d; e >= 0; --e) v = v * x + g[e];
            return v;
        };
        if (ihi - ilo < d + 1) {
            for (i64 x = ilo; x <= ihi; ++x) ++census.counts[size_t(poly_at(x) + vcap)];
        } else {
            for (int i = 0; i <= d; ++i) fd[i] = poly_at(ilo + i);
            for (int level = 1; level <= d; ++level)
                for (int i = d; i >= level; --i) fd[i] -= fd[i - 1];
            for (i64 x = ilo; x <= ihi; ++x) {
                ++census.counts[size_t(fd[0] + vcap)];
                for (int i = 0; i < d; ++i) fd[i] += fd[i + 1];
            }
        }
        if (n == 1) break;
        int j = n - 2;
        while (j >= 0 && ++idx[j] > dom.ranges[j].second) {
            idx[j] = dom.ranges[j].first;
            --j;
        }
        if (j < 0) break;
    }
    return census;
}

namespace detail {

struct SlabResult {
    SpillAccumulator<i128> acc;
    double acc_real = 0;
    u64 positive = 0, zero = 0, negative = 0;
    i64 vmin = INT64_MAX, vmax = INT64_MIN;
};

// Enumerates one outermost-axis slab; kernel values come from ktable (index
// s*f(t) when positive).
template <bool kIsInt>
inline void run_slab(const IntegerForm& form, const LatticeDomain& dom, i64 t0, int s,
                     std::span<const i64> ktable, std::span<const double> ktable_real,
                     SlabResult& out) {
    const int n = form.n();
    const int d = form.degree();
    detail::InnerPoly inner(form);
    std::vector<i64> prefix(std::max(n - 1, 1));
    std::vector<i64> g, fd(d + 1);
    std::vector<i64> idx(std::max(n - 1, 1));
    bool has_middle = n >= 2;
    if (has_middle) {
        idx[0] = t0;
        for (int j = 1; j + 1 < n; ++j) idx[j] = dom.ranges[j].first;
    }
    auto [ilo, ihi] = dom.ranges[n - 1];

    auto consume = [&](i64 val) {
        if (val < out.vmin) out.vmin = val;
        if (val > out.vmax) out.vmax = val;
        if (val > 0) ++out.positive;
        else if (val < 0) ++out.negative;
        else ++out.zero;
        i64 sval = s > 0 ? val : -val;
        if (sval > 0) {
            if constexpr (kIsInt) out.acc.add(ktable[size_t(sval)]);
            else out.acc_real += ktable_real[size_t(sval)];
        }
    };

    while (true) {
        for (int j = 0; j + 1 < n; ++j) prefix[j] = idx[j];
        inner.coefficients<i64>(prefix, g);
        auto poly_at = [&](i64 x) {
            i64 v = 0;
            for (int e = d; e >= 0; --e) v = v * x + g[e];
            return v;
        };
        if (ihi - ilo < d + 1) {
            for (i64 x = ilo; x <= ihi; ++x) consume(poly_at(x));
        } else {
            for (int i = 0; i <= d; ++i) fd[i] = poly_at(ilo + i);
            for (int level = 1; level <= d; ++level)
                for (int i = d; i >= level; --i) fd[i] -= fd[i - 1];
            for (i64 x = ilo; x <= ihi; ++x) {
                consume(fd[0]);
                for (int i = 0; i < d; ++i) fd[i] += fd[i + 1];
            }
        }
        if (n <= 2) break; // a slab of an n<=2 problem is a single inner walk
        int j = n - 2;
        while (j >= 1 && ++idx[j] > dom.ranges[j].second) {
            idx[j] = dom.ranges[j].first;
            --j;
        }
        if (j < 1) break;
    }
}

} // namespace detail

// Census-side dot product: exact sum of k(s v) census(v) over s v > 0.
inline SweepResult sweep_from_census(const ValueCensus& census, std::span<const i64> ktable,
                                     int s) {
    SweepResult res;
    res.points_visited = census.points;
    res.method = "census";
    SpillAccumulator<i128> acc;
    for (size_t i = 0; i < census.counts.size(); ++i) {
        if (census.counts[i] == 0) continue;
        i64 v = census.lo + i64(i);
        u64 av = u64(v < 0 ? -v : v);
        if (av > res.max_abs_value) res.max_abs_value = av;
        if (v > 0) res.positive_values += u64(census.counts[i]);
        else if (v < 0) res.negative_values += u64(census.counts[i]);
        else res.zero_values += u64(census.counts[i]);
        i64 sval = s > 0 ? v : -v;
        if (sval > 0) {
            if (size_t(sval) >= ktable.size())
                throw std::invalid_argument("kernel table does not cover the census range");
            i128 term;
            if (__builtin_mul_overflow(i128(ktable[size_t(sval)]), i128(census.counts[i]),
                                       &term)) {
                acc.spill += BigInt::from_i128(ktable[size_t(sval)]) *
                             BigInt::from_i128(census.counts[i]);
                acc.spilled = true;
            } else {
                acc.add(term);
            }
        }
    }
    res.total_int = acc.total();
    res.accumulator_spilled = acc.spilled;
    return res;
}

// Exact sum of k(s f(t)) over lattice points of P*box with s f(t) > 0.
// ktable must cover [1, 2 sum|c| P^d].  Diagonal forms are answered from the
// value census unless force_enumeration asks for the threaded walk; the two
// paths agree exactly and the walk is deterministic across worker counts.
inline SweepResult lattice_sweep_int(const IntegerForm& form, const Box& box, u64 P,
                                     std::span<const i64> ktable, int s,
                                     const SweepOptions& opts = {}) {
    if (s != 1 && s != -1) throw std::invalid_argument("s must be +1 or -1");
    auto start = std::chrono::steady_clock::now();
    auto dom = LatticeDomain::of(box, P);
    u128 pts = dom.points();
    if (pts > opts.budget) throw BudgetExceeded("lattice sweep exceeds the point budget");

    BigInt cap = form.coeff_sum_bound() * bigint_pow(BigInt(i64(P)), form.degree());
    // forward differences amplify by up to 2^d; keep every intermediate in i64
    unsigned guard_shift = std::min(form.degree() + 2, 40);
    if (!(cap.mul_small(u64(1) << guard_shift) < BigInt::from_i128(i128(1) << 62)))
        throw BudgetExceeded("value range exceeds the 62-bit walking guarantee");
    u64 need = u64(cap.to_i128());
    if (ktable.size() <= need)
        throw std::invalid_argument("kernel table does not cover 2 sum|c| P^d = " +
                                    std::to_string(need));

    SweepResult res;
    res.points_visited = u64(pts);

    auto diag = form.diagonal_coeffs();
    if (diag && !opts.force_enumeration) {
        auto census = value_census(form, box, P, opts);
        res = sweep_from_census(census, ktable, s);
        res.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return res;
    }

    // threaded enumeration over outermost-axis slabs
    auto [olo, ohi] = dom.ranges[0];
    i64 slabs = form.n() >= 2 ? (ohi - olo + 1) : 1;
    if (slabs <= 0) slabs = pts == 0 ? 0 : 1;
    std::vector<detail::SlabResult> partial(size_t(std::max<i64>(slabs, 0)));
    std::atomic<i64> cursor{0};
    auto worker = [&] {
        for (;;) {
            i64 i = cursor.fetch_add(1);
            if (i >= slabs) break;
            detail::run_slab<true>(form, dom, olo + i, s, ktable, {}, partial[size_t(i)]);
        }
    };
    int nthreads = std::max(1, opts.threads);
    if (slabs > 0) {
        if (nthreads == 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
            for (auto& th : pool) th.join();
        }
    }
    SpillAccumulator<i128> acc;
    i64 vmin = 0, vmax = 0;
    for (auto& sl : partial) { // merge in slab order
        if (sl.acc.spilled) {
            acc.spill += sl.acc.total();
            acc.spilled = true;
        } else {
            acc.add(sl.acc.chunk);
        }
        res.positive_values += sl.positive;
        res.zero_values += sl.zero;
        res.negative_values += sl.negative;
        if (sl.vmin != INT64_MAX) vmin = std::min(vmin, sl.vmin);
        if (sl.vmax != INT64_MIN) vmax = std::max(vmax, sl.vmax);
    }
    res.max_abs_value = u64(std::max<i64>(std::abs(vmin), std::abs(vmax)));
    res.total_int = acc.total();
    res.accumulator_spilled = acc.spilled;
    res.method = "enumeration";
    res.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

// Real-valued kernels (e.g. Hecke eigenvalues): per-slab doubles merged in
// slab order, so results are identical for any worker count.
inline SweepResult lattice_sweep_real(const IntegerForm& form, const Box& box, u64 P,
                                      std::span<const double> ktable, int s,
                                      const SweepOptions& opts = {}) {
    if (s != 1 && s != -1) throw std::invalid_argument("s must be +1 or -1");
    auto start = std::chrono::steady_clock::now();
    auto dom = LatticeDomain::of(box, P);
    u128 pts = dom.points();
    if (pts > opts.budget) throw BudgetExceeded("lattice sweep exceeds the point budget");
    BigInt cap = form.coeff_sum_bound() * bigint_pow(BigInt(i64(P)), form.degree());
    u64 need = u64(cap.to_i128());
    if (ktable.size() <= need)
        throw std::invalid_argument("kernel table does not cover 2 sum|c| P^d");

    SweepResult res;
    res.integer_kernel = false;
    res.points_visited = u64(pts);

    auto diag = form.diagonal_coeffs();
    if (diag && !opts.force_enumeration) {
        auto census = value_census(form, box, P, opts);
        double total = 0;
        for (size_t i = 0; i < census.counts.size(); ++i) {
            if (census.counts[i] == 0) continue;
            i64 v = census.lo + i64(i);
            u64 av = u64(v < 0 ? -v : v);
            if (av > res.max_abs_value) res.max_abs_value = av;
            if (v > 0) res.positive_values += u64(census.counts[i]);
            else if (v < 0) res.negative_values += u64(census.counts[i]);
            else res.zero_values += u64(census.counts[i]);
            i64 sval = s > 0 ? v : -v;
            if (sval > 0) total += ktable[size_t(sval)] * double(census.counts[i]);
        }
        res.total_real = total;
        res.method = "census";
        res.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return res;
    }

    auto [olo, ohi] = dom.ranges[0];
    i64 slabs = form.n() >= 2 ? (ohi - olo + 1) : 1;
    std::vector<detail::SlabResult> partial(size_t(std::max<i64>(slabs, 0)));
    std::atomic<i64> cursor{0};
    auto worker = [&] {
        for (;;) {
            i64 i = cursor.fetch_add(1);
            if (i >= slabs) break;
            detail::run_slab<false>(form, dom, olo + i, s, {}, ktable, partial[size_t(i)]);
        }
    };
    int nthreads = std::max(1, opts.threads);
    if (slabs > 0) {
        if (nthreads == 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
            for (auto& th : pool) th.join();
        }
    }
    i64 vmin = 0, vmax = 0;
    for (auto& sl : partial) {
        res.total_real += sl.acc_real;
        res.positive_values += sl.positive;
        res.zero_values += sl.zero;
        res.negative_values += sl.negative;
        if (sl.vmin != INT64_MAX) vmin = std::min(vmin, sl.vmin);
        if (sl.vmax != INT64_MIN) vmax = std::max(vmax, sl.vmax);
    }
    res.max_abs_value = u64(std::max<i64>(std::abs(vmin), std::abs(vmax)));
    res.method = "enumeration";
    res.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

// #{t in Z^n cap P box : f(t) in A}, A given as a membership predicate over
// positive values.
inline u64 count_in_set(const IntegerForm& form, const Box& box, u64 P,
                        const std::function<bool(u64)>& member, const SweepOptions& opts = {}) {
    auto census = value_census(form, box, P, opts);
    u64 count = 0;
    for (size_t i = 0; i < census.counts.size(); ++i) {
        if (census.counts[i] == 0) continue;
        i64 v = census.lo + i64(i);
        if (v > 0 && member(u64(v))) count += u64(census.counts[i]);
    }
    return count;
}

// Throughput probe for the degree-2 diagonal benchmark: points per second of
// the enumeration path.
inline double sweep_throughput(const IntegerForm& form, const Box& box, u64 P, int threads) {
    BigInt cap = form.coeff_sum_bound() * bigint_pow(BigInt(i64(P)), form.degree());
    std::vector<i64> ktable(size_t(cap.to_i128()) + 1, 1);
    SweepOptions opts;
    opts.threads = threads;
    opts.force_enumeration = true;
    opts.budget = 4'000'000'000ull;
    auto res = lattice_sweep_int(form, box, P, ktable, 1, opts);
    return double(res.points_visited) / std::max(res.elapsed, 1e-9);
}

} // namespace latsum
