#pragma once

#include <cmath>
#include <map>
#include <vector>

#include <json.hpp>

#include "bigint.hpp"
#include "numtheory.hpp"

namespace latsum {

// A truncation height z with exponents m_p(z) for every prime p <= z.
// W_z = prod p^{m_p} and eps_tilde(z) = sum p^{-1-m_p}.
struct WzPlan {
    double z = 2;
    std::string schedule; // "floor", "plus_one" or "custom"
    std::map<u64, unsigned> exponents;

    double epsilon_tilde() const {
        long double s = 0;
        for (auto [p, m] : exponents) s += powl((long double)p, -(long double)(1 + m));
        return double(s);
    }

    // The product is assembled on demand: decay tables reach z = 1e5 and
    // beyond, where W_z has tens of thousands of digits.
    BigInt wz() const {
        BigInt w(1);
        for (auto [p, m] : exponents)
            for (unsigned i = 0; i < m; ++i) w = w.mul_small(p);
        return w;
    }

    double log_wz() const {
        double s = 0;
        for (auto [p, m] : exponents) s += m * std::log(double(p));
        return s;
    }

    unsigned exponent(u64 p) const {
        auto it = exponents.find(p);
        return it == exponents.end() ? 0 : it->second;
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["z"] = z;
        j["schedule"] = schedule;
        nlohmann::ordered_json e = nlohmann::ordered_json::object();
        for (auto [p, m] : exponents) e[std::to_string(p)] = m;
        j["exponents"] = std::move(e);
        return j;
    }
};

// m_p = largest m with p^m <= z, decided by integer comparison only.
inline WzPlan plan_floor(double z) {
    if (z < 2) throw std::invalid_argument("plan needs z >= 2");
    WzPlan plan;
    plan.z = z;
    plan.schedule = "floor";
    u64 zi = u64(std::floor(z));
    for (u64 p : sieve_primes(zi)) {
        unsigned m = 0;
        u128 pw = 1;
        while (pw * p <= zi) {
            pw *= p;
            ++m;
        }
        plan.exponents[p] = m;
    }
    return plan;
}

// m_p = 1 + floor plan exponent; log W_z <= 3z for large z.
inline WzPlan plan_plus_one(double z) {
    WzPlan plan = plan_floor(z);
    plan.schedule = "plus_one";
    for (auto& [p, m] : plan.exponents) ++m;
    return plan;
}

inline WzPlan plan_custom(double z, std::map<u64, unsigned> exponents) {
    WzPlan plan;
    plan.z = z;
    plan.schedule = "custom";
    for (auto [p, m] : exponents) {
        if (m < 1) throw std::invalid_argument("custom plan exponents must be >= 1");
        if (!is_prime_u64(p)) throw std::invalid_argument("custom plan key is not prime");
        if (double(p) > z) throw std::invalid_argument("custom plan prime exceeds z");
    }
    plan.exponents = std::move(exponents);
    return plan;
}

inline WzPlan make_plan(const std::string& schedule, double z) {
    if (schedule == "floor") return plan_floor(z);
    if (schedule == "plus_one") return plan_plus_one(z);
    throw std::invalid_argument("unknown plan schedule: " + schedule);
}

struct EpsilonDecayRow {
    double z;
    double epsilon;
    double scaled; // eps * sqrt(z) / log(z)
};

// Decay table for eps_tilde under the floor schedule; the scaled column must
// stay bounded along any increasing list (envelope (log z)/sqrt(z)).
inline std::vector<EpsilonDecayRow> epsilon_decay_check(const std::vector<double>& z_list) {
    for (size_t i = 1; i < z_list.size(); ++i)
        if (!(z_list[i] > z_list[i - 1]))
            throw std::invalid_argument("z list must be strictly increasing");
    std::vector<EpsilonDecayRow> rows;
    for (double z : z_list) {
        double eps = plan_floor(z).epsilon_tilde();
        rows.push_back({z, eps, eps * std::sqrt(z) / std::log(z)});
    }
    return rows;
}

} // namespace latsum
