#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "forms.hpp"

namespace latsum {

struct QuadratureSpec {
    int grid_per_axis = 64;
    double gamma_cutoff = 64;   // Gamma: the gamma integral is truncated at [-Gamma, Gamma]
    double gamma_step = 1.0 / 64;
    double tolerance = 1e-3;
    u64 tensor_budget = 50'000'000;  // points for general tensor grids
    u64 mc_samples = 2'000'000;      // Monte Carlo fallback for n >= 6
    u64 seed = 1;

    void validate(double c_exponent) const {
        if (grid_per_axis < 2 || gamma_cutoff <= 0 || gamma_step <= 0 || tolerance <= 0)
            throw std::invalid_argument("quadrature spec fields must be positive");
        // truncation rationale: min(1, Gamma^{-c-2}) * Gamma < tolerance
        double decay = std::min(1.0, std::pow(gamma_cutoff, -c_exponent - 2.0));
        if (decay * gamma_cutoff >= tolerance * 1e3)
            throw std::invalid_argument("gamma cutoff too small for the requested tolerance");
    }
};

// Closed-form density omega with its exact antiderivative W(x) = int_1^x omega.
struct Omega {
    std::string name;
    std::function<double(double)> w;
    std::function<double(double)> W;
    bool is_const = false;
    double const_val = 0;
};

inline Omega omega_one() {
    return {"one", [](double) { return 1.0; }, [](double x) { return x - 1.0; }, true, 1.0};
}
inline Omega omega_zero() {
    return {"zero", [](double) { return 0.0; }, [](double) { return 0.0; }, true, 0.0};
}
inline Omega omega_const(double v, std::string name) {
    return {std::move(name), [v](double) { return v; }, [v](double x) { return v * (x - 1.0); },
            true, v};
}
inline Omega omega_log() {
    return {"log", [](double x) { return std::log(x); },
            [](double x) { return x * std::log(x) - x + 1.0; }};
}
// log t + 2 gamma: the Dirichlet second-order density (the divisor main term
// per progression is x (log x + 2 gamma - 1) / q * sum c_r / r, so pairing
// rho with plain log t would park a 2 gamma x / log x error in E(x,q))
inline Omega omega_log_2gamma() {
    const double tg = 2.0 * 0.57721566490153286;
    return {"log+2gamma", [tg](double x) { return std::log(x) + tg; },
            [tg](double x) { return x * std::log(x) - x + 1.0 + tg * (x - 1.0); }};
}
inline Omega omega_power(unsigned k) {
    if (k == 2)
        return {"power:2", [](double x) { return 0.5 / std::sqrt(x); },
                [](double x) { return std::sqrt(x) - 1.0; }};
    double ik = 1.0 / double(k);
    return {"power:" + std::to_string(k),
            [ik](double x) { return ik * std::pow(x, ik - 1.0); },
            [ik](double x) { return std::pow(x, ik) - 1.0; }};
}
inline Omega omega_pow2() {
    const double l2 = std::log(2.0);
    return {"pow2", [l2](double x) { return 1.0 / (x * l2); },
            [l2](double x) { return std::log(x) / l2; }};
}

namespace detail {

inline double ipow(double base, int e) {
    double r = 1;
    while (e-- > 0) r *= base;
    return r;
}

inline const double gl8_x[8] = {
    -0.9602898564975362, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975362};
inline const double gl8_w[8] = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

struct Node {
    double t, w;
};

inline std::vector<Node> gl_composite(double lo, double hi, int panels) {
    std::vector<Node> nodes;
    nodes.reserve(size_t(panels) * 8);
    double h = (hi - lo) / panels;
    for (int p = 0; p < panels; ++p) {
        double a = lo + p * h, mid = a + h / 2, half = h / 2;
        for (int i = 0; i < 8; ++i) nodes.push_back({mid + half * gl8_x[i], half * gl8_w[i]});
    }
    return nodes;
}

// Symmetric geometrically graded breakpoints of [0,1]; resolves endpoint
// layers (the P^{-d} shell, log singularities) without a substitution.
inline std::vector<double> graded_breaks(int levels) {
    std::vector<double> left{0.0};
    double w = std::pow(4.0, -levels);
    double x = 0;
    for (int i = 0; i < levels && x + w < 0.5; ++i) {
        x += w;
        left.push_back(x);
        w *= 4;
    }
    std::vector<double> out = left;
    out.push_back(0.5);
    for (size_t i = left.size(); i-- > 1;) out.push_back(1.0 - left[i]);
    out.push_back(1.0);
    return out;
}

inline std::vector<Node> graded_gl(double lo, double hi, int levels) {
    std::vector<Node> nodes;
    auto br = graded_breaks(levels);
    double len = hi - lo;
    for (size_t i = 0; i + 1 < br.size(); ++i) {
        double a = lo + len * br[i], b = lo + len * br[i + 1];
        if (!(b > a)) continue;
        double mid = (a + b) / 2, half = (b - a) / 2;
        for (int k = 0; k < 8; ++k) nodes.push_back({mid + half * gl8_x[k], half * gl8_w[k]});
    }
    return nodes;
}

} // namespace detail

struct IValue {
    cplx value;
    double self_error; // |I at G| vs |I at 2G| refinement difference
};

// I(B; gamma) = int_B e(gamma f(t)) dt by midpoint tensor quadrature.
// Diagonal forms factor into per-axis 1-D midpoint sums, which is the same
// quadrature evaluated in O(n G) instead of O(G^n).
inline IValue oscillatory_I(const IntegerForm& form, const Box& box, double gamma,
                            const QuadratureSpec& spec = {}) {
    if (box.dim() != form.n()) throw std::invalid_argument("box dimension mismatch");
    const int n = form.n();
    auto diag = form.diagonal_coeffs();

    auto eval_at = [&](int G) -> cplx {
        if (diag) {
            cplx prod = 1;
            for (int j = 0; j < n; ++j) {
                double lo = box.lo(j), hi = box.hi(j), h = (hi - lo) / G;
                cplx axis = 0;
                for (int i = 0; i < G; ++i) {
                    double t = lo + (i + 0.5) * h;
                    axis += e_of(gamma * double((*diag)[j]) * detail::ipow(t, form.degree()));
                }
                prod *= axis * h;
            }
            return prod;
        }
        u128 pts = 1;
        for (int j = 0; j < n; ++j) {
            pts *= u128(G);
            if (pts > spec.tensor_budget)
                throw BudgetExceeded("tensor grid exceeds quadrature budget");
        }
        std::vector<int> idx(n, 0);
        std::vector<double> t(n);
        cplx sum = 0;
        double cell = 1;
        for (int j = 0; j < n; ++j) cell *= (box.hi(j) - box.lo(j)) / G;
        while (true) {
            for (int j = 0; j < n; ++j)
                t[j] = box.lo(j) + (idx[j] + 0.5) * (box.hi(j) - box.lo(j)) / G;
            sum += e_of(gamma * form.evaluate_real(t));
            int j = n - 1;
            while (j >= 0 && ++idx[j] == G) idx[j--] = 0;
            if (j < 0) break;
        }
        return sum * cell;
    };

    cplx coarse = eval_at(spec.grid_per_axis);
    cplx fine = eval_at(2 * spec.grid_per_axis);
    return {fine, std::abs(fine - coarse)};
}

// I(B; gamma) sampled on the uniform grid gamma_k = (k - K) * step,
// k = 0..2K, K = Gamma/step.  Diagonal forms use per-axis Gauss-Legendre
// composite panels advanced by incremental rotation, one complex multiply
// per node per step; general forms use the tensor midpoint grid.
class OscillatoryTable {
public:
    OscillatoryTable(const IntegerForm& form, const Box& box, const QuadratureSpec& spec,
                     int axis_panels = 0) {
        step_ = spec.gamma_step;
        K_ = int(std::ceil(spec.gamma_cutoff / step_));
        const int total = 2 * K_ + 1;
        values_.assign(total, cplx(1, 0));
        const int n = form.n();
        const int d = form.degree();
        const double g0 = -double(K_) * step_;
        // keep the per-panel phase small enough for the 8-point Gauss rule
        if (axis_panels == 0) axis_panels = std::max(256, int(spec.gamma_cutoff * 3));

        auto diag = form.diagonal_coeffs();
        if (diag) {
            for (int j = 0; j < n; ++j) {
                auto nodes = detail::gl_composite(box.lo(j), box.hi(j), axis_panels);
                std::vector<cplx> state(nodes.size()), rot(nodes.size());
                for (size_t i = 0; i < nodes.size(); ++i) {
                    double fv = double((*diag)[j]) * detail::ipow(nodes[i].t, d);
                    state[i] = e_of(g0 * fv);
                    rot[i] = e_of(step_ * fv);
                }
                for (int k = 0; k < total; ++k) {
                    cplx axis = 0;
                    for (size_t i = 0; i < nodes.size(); ++i) {
                        axis += nodes[i].w * state[i];
                        state[i] *= rot[i];
                    }
                    values_[k] *= axis;
                }
            }
            return;
        }

        const int G = spec.grid_per_axis;
        // midpoint cells must resolve the oscillation: phase change per cell
        // stays below ~0.6 rad or the large-gamma values alias into noise
        double grad_bound = form.coeff_sum_bound().to_double() / 2.0 * d;
        if (2 * std::numbers::pi * spec.gamma_cutoff * grad_bound / G > 0.6)
            throw std::invalid_argument(
                "non-diagonal oscillatory table: grid too coarse for the gamma cutoff");
        u128 pts = 1;
        for (int j = 0; j < n; ++j) pts *= u128(G);
        if (pts * u128(total) > u128(8) * spec.tensor_budget)
            throw BudgetExceeded("oscillatory table too large for a non-diagonal form");
        std::vector<int> idx(n, 0);
        std::vector<double> t(n);
        double cell = 1;
        for (int j = 0; j < n; ++j) cell *= (box.hi(j) - box.lo(j)) / G;
        std::vector<cplx> state((size_t)pts), rot((size_t)pts);
        size_t m = 0;
        while (true) {
            for (int j = 0; j < n; ++j)
                t[j] = box.lo(j) + (idx[j] + 0.5) * (box.hi(j) - box.lo(j)) / G;
            double fv = form.evaluate_real(t);
            state[m] = e_of(g0 * fv);
            rot[m] = e_of(step_ * fv);
            ++m;
            int j = n - 1;
            while (j >= 0 && ++idx[j] == G) idx[j--] = 0;
            if (j < 0) break;
        }
        for (int k = 0; k < total; ++k) {
            cplx sum = 0;
            for (size_t i = 0; i < state.size(); ++i) {
                sum += state[i];
                state[i] *= rot[i];
            }
            values_[k] = sum * cell;
        }
    }

    double gamma_at(int k) const { return (k - K_) * step_; }
    int size() const { return 2 * K_ + 1; }
    int half() const { return K_; }
    double step() const { return step_; }
    const cplx& operator[](int k) const { return values_[k]; }

private:
    double step_;
    int K_;
    std::vector<cplx> values_;
};

struct JResult {
    double value;
    double imag_residue; // must sit below tolerance; reported as a self-check
};

// J(mu) = int_{-Gamma}^{Gamma} I(B;gamma) e(-gamma mu) dgamma, trapezoid in
// gamma as stated; spectrally accurate for these decaying analytic integrands.
inline JResult singular_J_from_table(const OscillatoryTable& tab, double mu) {
    cplx sum = 0;
    const int total = tab.size();
    for (int k = 0; k < total; ++k) {
        double wgt = (k == 0 || k == total - 1) ? 0.5 : 1.0;
        sum += wgt * tab[k] * e_of(-tab.gamma_at(k) * mu);
    }
    sum *= tab.step();
    return {sum.real(), std::abs(sum.imag())};
}

inline JResult singular_J(const IntegerForm& form, const Box& box, double mu,
                          const QuadratureSpec& spec = {}) {
    OscillatoryTable tab(form, box, spec);
    auto r = singular_J_from_table(tab, mu);
    if (r.imag_residue > spec.tolerance)
        throw std::runtime_error("singular_J imaginary residue exceeds tolerance");
    return r;
}

// sigma_infinity = J(0), the Hardy-Littlewood real density of f = 0 on B.
inline double sigma_infinity(const IntegerForm& form, const Box& box,
                             const QuadratureSpec& spec = {}) {
    return singular_J(form, box, 0.0, spec).value;
}

struct DensityResult {
    double value = 0;
    double self_error = 0;
    std::string method;
};

namespace detail {

// For one monotone piece [u,v] of t -> s*c*t^d, the sub-interval where
// s*c*t^d > w, found by bisection on the (weakly) monotone values.
inline std::pair<double, double> monotone_above(double u, double v, double sc, int d, double w) {
    auto h = [&](double t) { return sc * ipow(t, d); };
    double hu = h(u), hv = h(v);
    if (hu <= w && hv <= w) return {0, -1}; // empty
    if (hu > w && hv > w) return {u, v};
    bool rising = hv > hu;
    double lo = u, hi = v;
    for (int it = 0; it < 80; ++it) {
        double mid = 0.5 * (lo + hi);
        if ((h(mid) > w) == rising) hi = mid;
        else lo = mid;
    }
    double cut = 0.5 * (lo + hi);
    return rising ? std::make_pair(cut, v) : std::make_pair(u, cut);
}

} // namespace detail

// int over {t in B : s f(t) > P^{-d}} of omega(P^d s f(t)) dt.
//
// Diagonal forms slice along the last axis: the valid t_n set is computed
// exactly on each monotone piece and the 1-D integral uses geometrically
// graded Gauss panels, so the P^{-d} shell and log-type layers are resolved.
// Non-diagonal forms fall back to the constrained tensor midpoint rule
// (n <= 5) or seeded Monte Carlo streams (n >= 6).
inline DensityResult real_density(const IntegerForm& form, const Box& box, const Omega& omega,
                                  double P, int s, const QuadratureSpec& spec = {},
                                  bool force_midpoint = false) {
    if (box.dim() != form.n()) throw std::invalid_argument("box dimension mismatch");
    if (s != 1 && s != -1) throw std::invalid_argument("s must be +1 or -1");
    const int n = form.n();
    const int d = form.degree();
    const double Pd = std::pow(P, d);
    const double theta = 1.0 / Pd;
    auto diag = form.diagonal_coeffs();

    if (diag && !force_midpoint) {
        auto eval_at = [&](int G) -> double {
            const int last = n - 1;
            double lo_l = box.lo(last), hi_l = box.hi(last);
            i64 c_l = (*diag)[last];
            std::vector<int> idx(std::max(n - 1, 1), 0);
            std::vector<double> t(std::max(n - 1, 1));
            double cell = 1;
            for (int j = 0; j < n - 1; ++j) cell *= (box.hi(j) - box.lo(j)) / G;
            double total = 0;
            while (true) {
                double g = 0;
                for (int j = 0; j < n - 1; ++j) {
                    t[j] = box.lo(j) + (idx[j] + 0.5) * (box.hi(j) - box.lo(j)) / G;
                    g += double((*diag)[j]) * detail::ipow(t[j], d);
                }
                // pieces of [lo_l, hi_l] where t^d is monotone
                double pieces[2][2];
                int npieces = 0;
                if (d % 2 == 1 || lo_l >= 0 || hi_l <= 0) {
                    pieces[0][0] = lo_l;
                    pieces[0][1] = hi_l;
                    npieces = 1;
                } else {
                    pieces[0][0] = lo_l;
                    pieces[0][1] = 0;
                    pieces[1][0] = 0;
                    pieces[1][1] = hi_l;
                    npieces = 2;
                }
                double w = theta - s * g;
                for (int pc = 0; pc < npieces; ++pc) {
                    double u = pieces[pc][0], v = pieces[pc][1];
                    if (!(v > u)) continue;
                    std::pair<double, double> iv;
                    if (c_l == 0)
                        iv = (0 > w) ? std::make_pair(u, v) : std::make_pair(0.0, -1.0);
                    else
                        iv = detail::monotone_above(u, v, double(s) * double(c_l), d, w);
                    if (!(iv.second > iv.first)) continue;
                    if (omega.is_const) {
                        total += omega.const_val * (iv.second - iv.first);
                        continue;
                    }
                    double inner = 0;
                    for (auto& nd : detail::graded_gl(iv.first, iv.second, n >= 4 ? 6 : 10)) {
                        double fval = g + double(c_l) * detail::ipow(nd.t, d);
                        double arg = Pd * s * fval;
                        if (arg > 1.0) inner += nd.w * omega.w(arg);
                    }
                    total += inner;
                }
                if (n == 1) break;
                int j = n - 2;
                while (j >= 0 && ++idx[j] == G) idx[j--] = 0;
                if (j < 0) break;
            }
            return total * (n == 1 ? 1.0 : cell);
        };
        // the slice integrand has sqrt-type kinks where the constraint
        // boundary enters; a fine outer grid keeps that error harmless
        int G = spec.grid_per_axis;
        auto outer_pts = [&](int g) {
            u128 pts = 1;
            for (int j = 0; j + 1 < n; ++j) pts *= u128(g);
            return pts;
        };
        while (G < 4096 && outer_pts(4 * G) <= 4'000'000) G *= 2;
        while (G > 4 && outer_pts(2 * G) > 16'000'000) G /= 2;
        double coarse = eval_at(G);
        double fine = eval_at(2 * G);
        return {fine, std::abs(fine - coarse), "slicing"};
    }

    if (n <= 5) {
        auto eval_at = [&](int G) -> double {
            u128 pts = 1;
            for (int j = 0; j < n; ++j) {
                pts *= u128(G);
                if (pts > spec.tensor_budget)
                    throw BudgetExceeded("tensor grid exceeds quadrature budget");
            }
            std::vector<int> idx(n, 0);
            std::vector<double> t(n);
            double cell = 1;
            for (int j = 0; j < n; ++j) cell *= (box.hi(j) - box.lo(j)) / G;
            double sum = 0;
            while (true) {
                for (int j = 0; j < n; ++j)
                    t[j] = box.lo(j) + (idx[j] + 0.5) * (box.hi(j) - box.lo(j)) / G;
                double fval = s * form.evaluate_real(t);
                if (fval > theta) sum += omega.w(Pd * fval);
                int j = n - 1;
                while (j >= 0 && ++idx[j] == G) idx[j--] = 0;
                if (j < 0) break;
            }
            return sum * cell;
        };
        double coarse = eval_at(spec.grid_per_axis);
        double fine = eval_at(2 * spec.grid_per_axis);
        return {fine, std::abs(fine - coarse), "midpoint"};
    }

    // Monte Carlo fallback: fixed stream partition, merged in stream order.
    const int streams = 64;
    u64 per_stream = spec.mc_samples / streams;
    double vol = 1;
    for (int j = 0; j < n; ++j) vol *= box.hi(j) - box.lo(j);
    double sum = 0;
    u64 used = 0;
    std::vector<double> t(n);
    for (int sidx = 0; sidx < streams; ++sidx) {
        std::mt19937_64 rng(spec.seed + u64(sidx));
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        double part = 0;
        for (u64 i = 0; i < per_stream; ++i) {
            for (int j = 0; j < n; ++j) t[j] = box.lo(j) + (box.hi(j) - box.lo(j)) * uni(rng);
            double fval = s * form.evaluate_real(t);
            if (fval > theta) part += omega.w(Pd * fval);
        }
        sum += part;
        used += per_stream;
    }
    double mean = sum / double(used);
    return {mean * vol, std::abs(mean) * vol / std::sqrt(double(used)), "monte_carlo"};
}

namespace detail {

// Exact integral of the interpolating quadratic against e^{i w tau} on
// [-h, h]: Filon-Simpson panel.
inline cplx filon_panel(double w, double h, cplx f0, cplx f1, cplx f2) {
    cplx a = f1;
    cplx b = (f2 - f0) / (2 * h);
    cplx c = (f0 + f2 - 2.0 * f1) / (2 * h * h);
    long double x = (long double)w * h;
    long double M0, M2;
    long double M1i;
    if (std::abs((double)x) < 1e-4) {
        long double x2 = x * x;
        M0 = 2 * h * (1 - x2 / 6 + x2 * x2 / 120);
        M1i = 2 * h * h * (x / 3 - x * x2 / 30);
        M2 = 2 * h * h * h * (1.0L / 3 - x2 / 10);
    } else {
        long double sx = sinl(x), cx = cosl(x);
        long double wl = x / h;
        M0 = 2 * sx / wl;
        M1i = 2 * (sx / (wl * wl) - h * cx / wl);
        M2 = 2 * ((h * h / wl) * sx + 2 * h * cx / (wl * wl) - 2 * sx / (wl * wl * wl));
    }
    return a * double(M0) + b * cplx(0, double(M1i)) + c * double(M2);
}

} // namespace detail

// int_{-Gamma}^{Gamma} I(gamma) e(-s gamma mu) dgamma with the oscillation
// integrated exactly per panel (Filon); I is quadratically interpolated.
inline double separated_gamma_integral(const OscillatoryTable& tab, double mu, int s,
                                       double* imag_residue = nullptr) {
    const int total = tab.size();
    const double h = tab.step();
    const double w = -2.0 * std::numbers::pi * s * mu;
    cplx sum = 0;
    for (int k = 0; k + 2 < total; k += 2) {
        double gc = tab.gamma_at(k + 1);
        cplx panel = detail::filon_panel(w, h, tab[k], tab[k + 1], tab[k + 2]);
        sum += panel * e_of(-s * mu * gc);
    }
    if (imag_residue) *imag_residue = std::abs(sum.imag());
    return sum.real();
}

// Critical values of s*f on the closed box for diagonal forms: one endpoint
// (or interior zero) contribution per axis.  K(mu) = int I e(-s gamma mu)
// has kinks exactly at these levels, so the mu integral is split there.
inline std::vector<double> diagonal_level_breaks(const IntegerForm& form, const Box& box, int s) {
    auto diag = form.diagonal_coeffs();
    if (!diag) return {};
    std::vector<double> sums{0.0};
    for (int j = 0; j < form.n(); ++j) {
        std::vector<double> cand;
        double c = double((*diag)[j]);
        cand.push_back(c * std::pow(box.lo(j), form.degree()));
        cand.push_back(c * std::pow(box.hi(j), form.degree()));
        if (box.lo(j) < 0 && box.hi(j) > 0) cand.push_back(0.0);
        std::vector<double> next;
        next.reserve(sums.size() * cand.size());
        for (double base : sums)
            for (double v : cand) next.push_back(base + v);
        sums = std::move(next);
    }
    for (double& v : sums) v *= s;
    std::sort(sums.begin(), sums.end());
    sums.erase(std::unique(sums.begin(), sums.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-12; }),
               sums.end());
    return sums;
}

struct SeparatedIntegralReport {
    double lhs = 0;           // constrained omega integral over the box
    double rhs = 0;           // separated gamma/mu double integral
    double diff = 0;
    double lhs_self_error = 0;
    double rhs_truncation_error = 0; // Gamma vs Gamma/2 agreement
    double imag_residue = 0;
    bool pass = false;
};

// Both sides of the separated-integral identity: the omega-weighted
// constrained box integral must equal
//   int_gamma I(B;gamma) int_{P^{-d}}^{b} omega(P^d mu) e(-s gamma mu) dmu dgamma.
inline SeparatedIntegralReport separated_integral_check(const IntegerForm& form, const Box& box, const Omega& omega,
                                   double P, int s, const QuadratureSpec& spec = {},
                                   double b_upper = 0) {
    if (form.n() > 3) throw std::invalid_argument("separated check is limited to n <= 3");
    SeparatedIntegralReport rep;
    auto lhs = real_density(form, box, omega, P, s, spec);
    rep.lhs = lhs.value;
    rep.lhs_self_error = lhs.self_error;

    if (b_upper <= 0) b_upper = form.coeff_sum_bound().to_double();
    const double theta = std::pow(P, -double(form.degree()));
    const double Pd = std::pow(P, double(form.degree()));

    OscillatoryTable tab(form, box, spec);
    // mu-outer Gauss panels split at the critical levels of s*f (K(mu) has
    // kinks there) and graded toward the piece endpoints; the gamma-inner
    // Filon sweep integrates e(-s gamma mu) exactly.
    std::vector<double> breaks{theta, b_upper};
    for (double v : diagonal_level_breaks(form, box, s))
        if (v > theta + 1e-12 && v < b_upper - 1e-12) breaks.push_back(v);
    std::sort(breaks.begin(), breaks.end());

    auto gamma_integral = [&](double mu, int halving, double* resid) -> double {
        if (halving == 0) return separated_gamma_integral(tab, mu, s, resid);
        const int totaln = tab.size();
        const int quarter = ((totaln - 1) / 4) & ~1; // keep Simpson alignment
        cplx sum = 0;
        for (int k = quarter; k + 2 < totaln - quarter; k += 2) {
            double gc = tab.gamma_at(k + 1);
            cplx panel = detail::filon_panel(-2.0 * std::numbers::pi * s * mu, tab.step(), tab[k],
                                             tab[k + 1], tab[k + 2]);
            sum += panel * e_of(-s * mu * gc);
        }
        if (resid) *resid = std::abs(sum.imag());
        return sum.real();
    };

    auto rhs_at = [&](int gamma_halving) -> double {
        double resid_max = 0;
        double total = 0;
        for (size_t i = 0; i + 1 < breaks.size(); ++i) {
            for (auto& nd : detail::graded_gl(breaks[i], breaks[i + 1], 8)) {
                double resid = 0;
                double kmu = gamma_integral(nd.t, gamma_halving, &resid);
                total += nd.w * omega.w(Pd * nd.t) * kmu;
                resid_max = std::max(resid_max, resid);
            }
        }
        if (gamma_halving == 0) rep.imag_residue = resid_max;
        return total;
    };
    rep.rhs = rhs_at(0);
    rep.rhs_truncation_error = std::abs(rep.rhs - rhs_at(1));
    rep.diff = std::abs(rep.lhs - rep.rhs);
    rep.pass = rep.diff <= 10 * spec.tolerance;
    return rep;
}

} // namespace latsum
