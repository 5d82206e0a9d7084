#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "bigint.hpp"
#include "common.hpp"
#include "numtheory.hpp"
#include "rational.hpp"

namespace latsum {

// A homogeneous integer form f in n variables of degree d, stored as a sorted
// term list.  Terms are keyed by exponent vectors in lexicographic order so
// equality, hashing and canonical printing are well defined.
class IntegerForm {
public:
    struct Term {
        std::vector<uint16_t> exps; // length n, entries sum to d
        BigInt coeff;               // nonzero
    };

    IntegerForm(int n, std::vector<Term> terms) : n_(n), terms_(std::move(terms)) {
        if (n_ < 1) throw std::invalid_argument("form needs at least one variable");
        if (terms_.empty()) throw std::invalid_argument("form needs at least one term");
        int deg = -1;
        for (auto& t : terms_) {
            if (int(t.exps.size()) != n_) throw std::invalid_argument("exponent vector length mismatch");
            if (t.coeff.is_zero()) throw std::invalid_argument("zero coefficient term");
            int s = 0;
            for (auto e : t.exps) s += e;
            if (deg < 0) deg = s;
            else if (s != deg) throw std::invalid_argument("form is not homogeneous");
        }
        if (deg < 1) throw std::invalid_argument("degree must be at least 1");
        d_ = deg;
        std::sort(terms_.begin(), terms_.end(),
                  [](const Term& a, const Term& b) { return a.exps > b.exps; });
        for (size_t i = 1; i < terms_.size(); ++i)
            if (terms_[i].exps == terms_[i - 1].exps)
                throw std::invalid_argument("duplicate exponent vector");
    }

    // Parses literals such as "x1^2 + x2^2" or "3*x1^3 - 2*x1*x2*x3".
    // Whitespace-insensitive; variables are x1..xn; n defaults to the highest
    // index that appears.
    static IntegerForm parse(const std::string& text, std::optional<int> n_hint = std::nullopt) {
        std::string s;
        for (char c : text)
            if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
        if (s.empty()) throw std::invalid_argument("empty form literal");

        struct RawTerm {
            BigInt coeff;
            std::map<int, int> pows;
        };
        std::vector<RawTerm> raw;
        size_t i = 0;
        int max_var = 0;
        while (i < s.size()) {
            int sign = 1;
            if (s[i] == '+' || s[i] == '-') {
                if (s[i] == '-') sign = -1;
                ++i;
            } else if (!raw.empty()) {
                throw std::invalid_argument("expected '+' or '-' in form literal");
            }
            RawTerm t;
            t.coeff = BigInt(1);
            bool saw_factor = false;
            bool expect_factor = true;
            while (i < s.size() && expect_factor) {
                if (std::isdigit(static_cast<unsigned char>(s[i]))) {
                    size_t j = i;
                    while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
                    t.coeff *= BigInt::parse(s.substr(i, j - i));
                    i = j;
                } else if (s[i] == 'x' || s[i] == 'X') {
                    size_t j = ++i;
                    while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
                    if (j == i) throw std::invalid_argument("variable needs an index, e.g. x1");
                    int var = std::stoi(s.substr(i, j - i));
                    if (var < 1) throw std::invalid_argument("variable index must be positive");
                    i = j;
                    int exp = 1;
                    if (i < s.size() && s[i] == '^') {
                        size_t k = ++i;
                        while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) ++k;
                        if (k == i) throw std::invalid_argument("'^' needs an exponent");
                        exp = std::stoi(s.substr(i, k - i));
                        i = k;
                    }
                    t.pows[var] += exp;
                    max_var = std::max(max_var, var);
                } else {
                    throw std::invalid_argument(std::string("unexpected character '") + s[i] +
                                                "' in form literal");
                }
                saw_factor = true;
                if (i < s.size() && s[i] == '*') {
                    ++i;
                } else {
                    expect_factor = false;
                }
            }
            if (!saw_factor) throw std::invalid_argument("empty term in form literal");
            if (sign < 0) t.coeff = -t.coeff;
            raw.push_back(std::move(t));
        }

        int n = n_hint.value_or(max_var);
        if (n < max_var) throw std::invalid_argument("variable index exceeds declared n");
        if (n < 1) throw std::invalid_argument("form needs at least one variable");

        // merge duplicate monomials
        std::map<std::vector<uint16_t>, BigInt> merged;
        for (auto& t : raw) {
            std::vector<uint16_t> ev(n, 0);
            for (auto [v, e] : t.pows) ev[v - 1] = uint16_t(e);
            auto it = merged.find(ev);
            if (it == merged.end()) merged.emplace(std::move(ev), t.coeff);
            else it->second += t.coeff;
        }
        std::vector<Term> terms;
        for (auto& [ev, c] : merged)
            if (!c.is_zero()) terms.push_back({ev, c});
        if (terms.empty()) throw std::invalid_argument("all terms cancelled in form literal");
        return IntegerForm(n, std::move(terms));
    }

    int n() const { return n_; }
    int degree() const { return d_; }
    const std::vector<Term>& terms() const { return terms_; }

    bool admissible() const {
        // n > 2^d (d-1)
        if (d_ >= 62) return false;
        return u128(n_) > (u128(1) << d_) * u128(d_ - 1);
    }

    BigInt evaluate(std::span<const i64> point) const {
        if (int(point.size()) != n_) throw std::invalid_argument("point dimension mismatch");
        BigInt total;
        for (auto& t : terms_) {
            BigInt prod = t.coeff;
            for (int j = 0; j < n_; ++j)
                for (int e = 0; e < t.exps[j]; ++e) prod *= BigInt(point[j]);
            total += prod;
        }
        return total;
    }

    // Same value for any lift of the residue vector.
    u64 evaluate_mod(std::span<const u64> point, u64 q) const {
        if (q == 0) throw std::invalid_argument("modulus must be positive");
        if (int(point.size()) != n_) throw std::invalid_argument("point dimension mismatch");
        if (q == 1) return 0;
        u64 total = 0;
        for (auto& t : terms_) {
            u64 prod = t.coeff.mod_u64(q);
            for (int j = 0; j < n_; ++j)
                if (t.exps[j]) prod = mulmod(prod, powmod(point[j] % q, t.exps[j], q), q);
            total = (total + prod) % q;
        }
        return total;
    }

    double evaluate_real(std::span<const double> point) const {
        double total = 0;
        for (auto& t : terms_) {
            double prod = t.coeff.to_double();
            for (int j = 0; j < n_; ++j)
                for (int e = 0; e < t.exps[j]; ++e) prod *= point[j];
            total += prod;
        }
        return total;
    }

    // c_j such that f = sum c_j x_j^d, when the form is diagonal.
    std::optional<std::vector<i64>> diagonal_coeffs() const {
        std::vector<i64> c(n_, 0);
        for (auto& t : terms_) {
            int var = -1;
            for (int j = 0; j < n_; ++j) {
                if (t.exps[j] == 0) continue;
                if (var >= 0 || t.exps[j] != d_) return std::nullopt;
                var = j;
            }
            if (var < 0) return std::nullopt;
            if (!t.coeff.fits_i128()) return std::nullopt;
            i128 v = t.coeff.to_i128();
            if (v > INT64_MAX || v < INT64_MIN) return std::nullopt;
            c[var] = i64(v);
        }
        return c;
    }

    std::string canonical_string() const {
        std::ostringstream os;
        bool first = true;
        for (auto& t : terms_) {
            BigInt c = t.coeff;
            if (first) {
                if (c.sign() < 0) { os << "-"; c = -c; }
            } else {
                os << (c.sign() < 0 ? " - " : " + ");
                if (c.sign() < 0) c = -c;
            }
            first = false;
            bool printed = false;
            if (!(c == BigInt(1))) { os << c.str(); printed = true; }
            for (int j = 0; j < n_; ++j) {
                if (!t.exps[j]) continue;
                if (printed) os << "*";
                os << "x" << (j + 1);
                if (t.exps[j] > 1) os << "^" << t.exps[j];
                printed = true;
            }
            if (!printed) os << c.str();
        }
        return os.str();
    }

    // FNV-1a of the canonical string plus n; stable across runs, used as the
    // histogram cache key.
    u64 digest() const {
        std::string key = std::to_string(n_) + "|" + canonical_string();
        u64 h = 1469598103934665603ull;
        for (unsigned char c : key) {
            h ^= c;
            h *= 1099511628211ull;
        }
        return h;
    }

    // 2 * sum |coefficients|; an upper bound for 2 max_B |f| on any box inside
    // [-1,1]^n.
    BigInt coeff_sum_bound() const {
        BigInt s;
        for (auto& t : terms_) s += t.coeff.abs();
        return s.mul_small(2);
    }

    friend bool operator==(const IntegerForm& a, const IntegerForm& b) {
        if (a.n_ != b.n_ || a.d_ != b.d_ || a.terms_.size() != b.terms_.size()) return false;
        for (size_t i = 0; i < a.terms_.size(); ++i)
            if (a.terms_[i].exps != b.terms_[i].exps || !(a.terms_[i].coeff == b.terms_[i].coeff))
                return false;
        return true;
    }

private:
    int n_;
    int d_ = 0;
    std::vector<Term> terms_;
};

// Product of rational intervals inside [-1,1]^n with widths at most 1.
class Box {
public:
    explicit Box(std::vector<std::pair<Rat128, Rat128>> intervals)
        : intervals_(std::move(intervals)) {
        Rat128 lo(-1), hi(1), one(1);
        for (auto& [a, b] : intervals_) {
            if (!(lo <= a) || !(a <= b) || !(b <= hi))
                throw std::invalid_argument("box interval must satisfy -1 <= a <= a' <= 1");
            if (!(b - a <= one))
                throw std::invalid_argument("box interval width must be at most 1");
        }
        if (intervals_.empty()) throw std::invalid_argument("box needs at least one axis");
    }

    static Box unit(int n) {
        std::vector<std::pair<Rat128, Rat128>> iv(n, {Rat128(0), Rat128(1)});
        return Box(std::move(iv));
    }

    int dim() const { return int(intervals_.size()); }
    const std::pair<Rat128, Rat128>& interval(int j) const { return intervals_[j]; }

    Rat128 volume() const {
        Rat128 v(1);
        for (auto& [a, b] : intervals_) v *= (b - a);
        return v;
    }

    double lo(int j) const { return intervals_[j].first.to_double(); }
    double hi(int j) const { return intervals_[j].second.to_double(); }

    // Integer range of the scaled axis: [ceil(P*a), floor(P*a')], exact.
    std::pair<i64, i64> lattice_range(int j, u64 P) const {
        auto scale = [&](const Rat128& r, bool ceil_mode) {
            i128 num = detail::mul_checked(r.num, i128(P));
            i128 q = num / r.den;
            i128 rem = num % r.den;
            if (ceil_mode && rem > 0) ++q;
            if (!ceil_mode && rem < 0) --q;
            return i64(q);
        };
        return {scale(intervals_[j].first, true), scale(intervals_[j].second, false)};
    }

private:
    std::vector<std::pair<Rat128, Rat128>> intervals_;
};

struct FormBound {
    double b_exact_lower; // 2 * max |f| over a grid sample
    BigInt b_upper;       // 2 * sum |coefficients|
    double b_upper_d() const { return b_upper.to_double(); }
};

// Grid estimate of b = 2 max_B |f| together with the coefficient-sum upper
// bound used by every downstream cutoff.  The grid includes the box corners,
// so doubling grid_per_axis refines monotonically.
inline FormBound compute_bound_b(const IntegerForm& form, const Box& box, int grid_per_axis,
                                 u64 eval_budget = 20'000'000) {
    if (grid_per_axis < 2) throw std::invalid_argument("grid_per_axis must be at least 2");
    if (box.dim() != form.n()) throw std::invalid_argument("box dimension mismatch");
    int n = form.n();
    u128 pts = 1;
    for (int j = 0; j < n; ++j) {
        pts *= u128(grid_per_axis + 1);
        if (pts > eval_budget) throw BudgetExceeded("bound grid exceeds evaluation budget");
    }
    std::vector<int> idx(n, 0);
    std::vector<double> t(n);
    double best = 0;
    while (true) {
        for (int j = 0; j < n; ++j) {
            double a = box.lo(j), b = box.hi(j);
            t[j] = a + (b - a) * idx[j] / grid_per_axis;
        }
        best = std::max(best, std::abs(form.evaluate_real(t)));
        int j = n - 1;
        while (j >= 0 && ++idx[j] > grid_per_axis) idx[j--] = 0;
        if (j < 0) break;
    }
    FormBound fb{2.0 * best, form.coeff_sum_bound()};
    return fb;
}

// Warn-only heuristic: looks for a common nonzero root of f and its gradient
// mod each p <= 19.  Smoothness itself is user-asserted.
inline std::vector<u64> smoothness_suspect_primes(const IntegerForm& form,
                                                  u64 enumeration_budget = 10'000'000) {
    std::vector<u64> suspects;
    int n = form.n();
    for (u64 p : {2, 3, 5, 7, 11, 13, 17, 19}) {
        u128 total = 1;
        bool skip = false;
        for (int j = 0; j < n; ++j) {
            total *= p;
            if (total > enumeration_budget) { skip = true; break; }
        }
        if (skip) continue;
        std::vector<u64> t(n, 0);
        bool singular = false;
        while (!singular) {
            bool zero_pt = std::all_of(t.begin(), t.end(), [](u64 v) { return v == 0; });
            if (!zero_pt && form.evaluate_mod(t, p) == 0) {
                bool grad_zero = true;
                for (int j = 0; j < n && grad_zero; ++j) {
                    // partial derivative mod p by term expansion
                    u64 dsum = 0;
                    for (auto& term : form.terms()) {
                        if (!term.exps[j]) continue;
                        u64 prod = mulmod(term.coeff.mod_u64(p), term.exps[j] % p, p);
                        for (int k = 0; k < n; ++k) {
                            unsigned e = term.exps[k] - (k == j ? 1 : 0);
                            if (e) prod = mulmod(prod, powmod(t[k], e, p), p);
                        }
                        dsum = (dsum + prod) % p;
                    }
                    if (dsum != 0) grad_zero = false;
                }
                if (grad_zero) singular = true;
            }
            int j = n - 1;
            while (j >= 0 && ++t[j] == p) t[j--] = 0;
            if (j < 0) break;
        }
        if (singular) suspects.push_back(p);
    }
    return suspects;
}

} // namespace latsum
