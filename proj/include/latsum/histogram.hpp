#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <unistd.h>
#include <vector>

#include <json.hpp>

#include "forms.hpp"

namespace latsum {

// Counts of f(t) = nu over t in (Z/qZ)^n, the single source of truth for
// exponential sums, local factors and sigma(f).
struct ValueHistogram {
    u64 q = 1;
    std::vector<i128> counts; // dense, index nu in [0, q)
    u64 form_digest = 0;
    int n = 0;

    i128 total() const {
        i128 s = 0;
        for (auto c : counts) s += c;
        return s;
    }

    // Reduce to counts modulo a divisor r of q.
    ValueHistogram reduced(u64 r) const {
        if (r == 0 || q % r != 0) throw std::invalid_argument("reduction modulus must divide q");
        ValueHistogram h;
        h.q = r;
        h.n = n;
        h.form_digest = form_digest;
        h.counts.assign(r, 0);
        for (u64 v = 0; v < q; ++v) h.counts[v % r] += counts[v];
        return h;
    }
};

// counts_{q1 q2}(nu) = counts_{q1}(nu mod q1) * counts_{q2}(nu mod q2)
inline ValueHistogram crt_combine(const ValueHistogram& a, const ValueHistogram& b) {
    if (std::gcd(a.q, b.q) != 1) throw std::invalid_argument("crt_combine needs coprime moduli");
    if (a.form_digest != b.form_digest) throw std::invalid_argument("histogram form mismatch");
    ValueHistogram h;
    h.q = a.q * b.q;
    h.n = a.n;
    h.form_digest = a.form_digest;
    h.counts.assign(h.q, 0);
    for (u64 v = 0; v < h.q; ++v) h.counts[v] = a.counts[v % a.q] * b.counts[v % b.q];
    return h;
}

class HistogramCache {
public:
    HistogramCache() = default;
    explicit HistogramCache(std::filesystem::path dir) : dir_(std::move(dir)), enabled_(true) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
    }

    bool enabled() const { return enabled_; }

    std::optional<ValueHistogram> load(const IntegerForm& form, u64 q) const {
        if (!enabled_) return std::nullopt;
        auto path = entry_path(form, q);
        std::ifstream in(path);
        if (!in) return std::nullopt;
        try {
            nlohmann::json j = nlohmann::json::parse(in);
            if (j.at("form").get<std::string>() != form.canonical_string()) return std::nullopt;
            if (j.at("q").get<u64>() != q) return std::nullopt;
            ValueHistogram h;
            h.q = q;
            h.n = form.n();
            h.form_digest = form.digest();
            h.counts.assign(q, 0);
            for (auto& [key, val] : j.at("counts").items()) {
                u64 nu = std::stoull(key);
                if (nu >= q) return std::nullopt;
                h.counts[nu] = i128_parse(val.get<std::string>());
            }
            // the mass must be q^n exactly or the entry is recomputed
            i128 expect = 1;
            for (int i = 0; i < h.n; ++i) expect *= i128(q);
            if (h.total() != expect) return std::nullopt;
            return h;
        } catch (...) {
            return std::nullopt; // corrupted entries are recomputed
        }
    }

    void store(const IntegerForm& form, const ValueHistogram& h) const {
        if (!enabled_) return;
        nlohmann::ordered_json j;
        j["form"] = form.canonical_string();
        j["q"] = h.q;
        nlohmann::ordered_json counts = nlohmann::ordered_json::object();
        for (u64 v = 0; v < h.q; ++v)
            if (h.counts[v] != 0) counts[std::to_string(v)] = i128_str(h.counts[v]);
        j["counts"] = std::move(counts);
        auto path = entry_path(form, h.q);
        auto tmp = path;
        tmp += ".tmp." + std::to_string(::getpid());
        {
            std::ofstream out(tmp);
            out << j.dump();
        }
        std::error_code ec;
        std::filesystem::rename(tmp, path, ec); // atomic publish
        if (ec) std::filesystem::remove(tmp, ec);
    }

private:
    std::filesystem::path dir_;
    bool enabled_ = false;

    std::filesystem::path entry_path(const IntegerForm& form, u64 q) const {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)form.digest());
        return dir_ / (std::string(buf) + "_" + std::to_string(q) + ".json");
    }
};

namespace detail {

// Histogram of c*x^d over x in Z/q as a dense vector.
inline std::vector<i128> single_variable_histogram(i64 c, int d, u64 q) {
    std::vector<i128> h(q, 0);
    u64 cm = u64(((c % i64(q)) + i64(q)) % i64(q));
    for (u64 x = 0; x < q; ++x) ++h[mulmod(cm, powmod(x, d, q), q)];
    return h;
}

inline std::vector<i128> cyclic_convolve(const std::vector<i128>& a, const std::vector<i128>& b,
                                         u64 q) {
    std::vector<i128> out(q, 0);
    for (u64 i = 0; i < q; ++i) {
        if (a[i] == 0) continue;
        i128 ai = a[i];
        for (u64 j = 0; j < q; ++j) {
            if (b[j] == 0) continue;
            u64 k = i + j;
            if (k >= q) k -= q;
            out[k] += ai * b[j];
        }
    }
    return out;
}

} // namespace detail

struct HistogramOptions {
    u64 work_budget = 100'000'000; // residue-vector evaluations for the general path
    u64 diagonal_q_max = 2'000'000;
    const HistogramCache* cache = nullptr;
};

// Exact counts of f(t) = nu (mod q).  Diagonal forms use the n-fold cyclic
// convolution of single-variable histograms at cost O(n q^2); everything else
// walks (Z/q)^n with an incremental last-axis evaluation, subject to the work
// budget.
inline ValueHistogram value_histogram_mod(const IntegerForm& form, u64 q,
                                          const HistogramOptions& opt = {}) {
    if (q == 0) throw std::invalid_argument("modulus must be positive");
    if (opt.cache) {
        if (auto hit = opt.cache->load(form, q)) return *hit;
    }
    ValueHistogram h;
    h.q = q;
    h.n = form.n();
    h.form_digest = form.digest();

    if (q == 1) {
        h.counts.assign(1, 1); // the single residue vector
        if (opt.cache) opt.cache->store(form, h);
        return h;
    }

    auto diag = form.diagonal_coeffs();
    if (diag && q <= opt.diagonal_q_max) {
        std::vector<i128> acc = detail::single_variable_histogram((*diag)[0], form.degree(), q);
        for (int j = 1; j < form.n(); ++j) {
            auto hj = detail::single_variable_histogram((*diag)[j], form.degree(), q);
            acc = detail::cyclic_convolve(acc, hj, q);
        }
        h.counts = std::move(acc);
        if (opt.cache) opt.cache->store(form, h);
        return h;
    }

    u128 pts = 1;
    for (int j = 0; j < form.n(); ++j) {
        pts *= q;
        if (pts > opt.work_budget)
            throw BudgetExceeded("q^n exceeds the histogram work budget for a non-diagonal form");
    }

    h.counts.assign(q, 0);
    const int n = form.n();
    const int d = form.degree();
    // polynomial in the last axis: f(prefix, x) = sum_e g_e(prefix) x^e
    std::vector<std::vector<IntegerForm::Term>> by_last(d + 1);
    for (auto& t : form.terms()) by_last[t.exps[n - 1]].push_back(t);

    std::vector<u64> prefix(std::max(n - 1, 1), 0);
    std::vector<u64> fd(d + 1, 0);
    while (true) {
        // g_e(prefix) mod q, so f(prefix, x) = sum_e g_e x^e
        std::vector<u64> g(d + 1, 0);
        for (int e = 0; e <= d; ++e)
            for (auto& t : by_last[e]) {
                u64 prod = t.coeff.mod_u64(q);
                for (int j = 0; j + 1 < n; ++j)
                    if (t.exps[j]) prod = mulmod(prod, powmod(prefix[j], t.exps[j], q), q);
                g[e] = (g[e] + prod) % q;
            }

        auto poly_at = [&](u64 x) {
            u64 v = 0;
            for (int e = d; e >= 0; --e) v = (mulmod(v, x % q, q) + g[e]) % q;
            return v;
        };
        // fd[i] = Delta^i P(0); stepping costs d additions mod q per point
        for (int i = 0; i <= d; ++i) fd[i] = poly_at(i);
        for (int level = 1; level <= d; ++level)
            for (int i = d; i >= level; --i) fd[i] = (fd[i] + q - fd[i - 1]) % q;

        for (u64 x = 0; x < q; ++x) {
            ++h.counts[fd[0]];
            for (int i = 0; i < d; ++i) {
                fd[i] += fd[i + 1];
                if (fd[i] >= q) fd[i] -= q;
            }
        }

        if (n == 1) break;
        int j = n - 2;
        while (j >= 0 && ++prefix[j] == q) prefix[j--] = 0;
        if (j < 0) break;
    }
    if (opt.cache) opt.cache->store(form, h);
    return h;
}

} // namespace latsum
